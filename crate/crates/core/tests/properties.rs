use proptest::prelude::*;
use qspai::mm::{read_matrix_market, write_matrix_market};
use qspai::{
    assemble, cg, compute_spai, direct_column_oracle, pcg, solve_exact, solve_sa, sparse_box_solve, BoxConfig,
    CgConfig, DenseSmallMatrix, ExactSolver, GridSpec, MaterialField, PoissonProblem, QuboProblem, SaConfig,
    SymSparseMatrix,
};

fn sym_sparse() -> impl Strategy<Value = SymSparseMatrix> {
    (1usize..12).prop_flat_map(|n| {
        let entry = (0..n, 0..n, -5.0f64..5.0);
        prop::collection::vec(entry, 0..3 * n).prop_map(move |raw| {
            let triplets = raw.into_iter().flat_map(|(i, j, v)| [(i, j, v), (j, i, v)]);
            SymSparseMatrix::from_triplets(n, triplets).unwrap()
        })
    })
}

fn spd(max_dim: usize) -> impl Strategy<Value = DenseSmallMatrix> {
    (1..=max_dim).prop_flat_map(|s| {
        (prop::collection::vec(-1.0f64..1.0, s * s), 0.5f64..2.0).prop_map(move |(b, shift)| {
            let mut data = vec![0.0; s * s];
            for r in 0..s {
                for c in 0..=r {
                    let v: f64 = (0..s).map(|k| b[r * s + k] * b[c * s + k]).sum();
                    data[r * s + c] = v;
                    data[c * s + r] = v;
                }
                data[r * s + r] += shift;
            }
            DenseSmallMatrix::new(s, data).unwrap()
        })
    })
}

fn material_grid() -> impl Strategy<Value = (GridSpec, MaterialField)> {
    (1usize..7, 1usize..7).prop_flat_map(|(gx, gy)| {
        prop::collection::vec(0.1f64..10.0, (gx + 1) * (gy + 1)).prop_map(move |cells| {
            let grid = GridSpec::unit(gx, gy).unwrap();
            let field = MaterialField::from_fn(&grid, |cx, cy| cells[cy * (gx + 1) + cx]).unwrap();
            (grid, field)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spmv_matches_dense_product(m in sym_sparse(), seed in any::<u64>()) {
        let x: Vec<f64> = (0..m.n()).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let dense = m.to_dense();
        let y = m.spmv(&x).unwrap();
        for (row, yi) in dense.iter().zip(&y) {
            let expect: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert!((expect - yi).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn column_support_matches_scan(m in sym_sparse()) {
        for j in 0..m.n() {
            let scanned: Vec<usize> = (0..m.n()).filter(|&i| m.contains(i, j)).collect();
            prop_assert_eq!(m.column_support(j).unwrap(), scanned);
        }
    }

    #[test]
    fn principal_submatrices_stay_symmetric(m in sym_sparse()) {
        for j in 0..m.n() {
            let support = m.column_support(j).unwrap();
            if support.is_empty() {
                continue;
            }
            prop_assert!(m.principal_submatrix(&support).unwrap().is_symmetric());
        }
    }

    #[test]
    fn matrix_market_preserves_bits(m in sym_sparse()) {
        let mut text = Vec::new();
        write_matrix_market(&m, &mut text).unwrap();
        let back = read_matrix_market(text.as_slice()).unwrap();
        prop_assert_eq!(back.n(), m.n());
        let bits = |s: &SymSparseMatrix| s.triplets().map(|(i, j, v)| (i, j, v.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn assembled_operator_is_a_symmetric_m_matrix((grid, field) in material_grid()) {
        let k = assemble(&grid, &field).unwrap();
        for (i, j, v) in k.triplets() {
            prop_assert_eq!(k.get(j, i).to_bits(), v.to_bits());
            if i == j { prop_assert!(v > 0.0) } else { prop_assert!(v < 0.0) }
        }
        for i in 0..k.n() {
            let (m, n) = grid.node_coords(i);
            let (_, vals) = k.row(i);
            let sum: f64 = vals.iter().sum();
            let interior = m > 0 && n > 0 && m + 1 < grid.gx && n + 1 < grid.gy;
            if interior {
                prop_assert!(sum.abs() <= 1e-12 * k.get(i, i));
            } else {
                prop_assert!(sum > 0.0);
            }
        }
        let problem = PoissonProblem::new(grid, &field, 1.0).unwrap();
        prop_assert!(problem.passes_spd_check(8, 1));
    }

    #[test]
    fn box_loop_bookkeeping(a in spd(4), i_seed in any::<usize>(), l0_exp in -1i32..3) {
        let i = i_seed % a.dim();
        let cfg = BoxConfig { initial_length: 10f64.powi(l0_exp), ..BoxConfig::default() };
        let (m_hat, st) = sparse_box_solve(&a, i, &cfg, &ExactSolver).unwrap();
        prop_assert_eq!(st.iters, st.contractions + st.translations);
        prop_assert_eq!(st.iters, st.history.len());
        prop_assert_eq!(st.length, cfg.initial_length * 0.5f64.powi(st.contractions as i32));
        prop_assert!(st.history.windows(2).all(|w| w[1].pi_min_before <= w[0].pi_min_before));
        if !st.hit_cap {
            prop_assert!(st.length < cfg.eps_box);
            let oracle = direct_column_oracle(&a, i).unwrap();
            for (x, y) in m_hat.iter().zip(&oracle) {
                prop_assert!((x - y).abs() <= 10.0 * cfg.eps_box, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn annealer_is_consistent_with_exhaustive_search(
        diag in prop::collection::vec(-2.0f64..2.0, 6),
        upper in prop::collection::vec(-2.0f64..2.0, 15),
        seed in any::<u64>(),
    ) {
        let couplings: Vec<_> =
            (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b))).zip(upper).map(|((a, b), v)| (a, b, v)).collect();
        let p = QuboProblem::from_terms(diag, &couplings, 0.5).unwrap();
        let cfg = SaConfig { num_samples: 8, sweeps: 100, ..SaConfig::with_seed(seed) };
        let sa = solve_sa(&p, &cfg).unwrap();
        prop_assert_eq!(sa.energy, qspai::energy(&p, &sa.bits).unwrap());
        prop_assert!(sa.energy >= solve_exact(&p).unwrap().energy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn family_cache_is_transparent((grid, field) in material_grid()) {
        let k = assemble(&grid, &field).unwrap();
        let cfg = BoxConfig { eps_box: 1e-4, ..BoxConfig::default() };
        let on = compute_spai(&k, &cfg, &ExactSolver, true).unwrap();
        let off = compute_spai(&k, &cfg, &ExactSolver, false).unwrap();
        let bits = |s: &SymSparseMatrix| s.triplets().map(|(i, j, v)| (i, j, v.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(bits(&on.m), bits(&off.m));
        prop_assert_eq!(on.stats.unique_families, off.stats.unique_families);
        prop_assert_eq!(on.stats.per_family_iters, off.stats.per_family_iters);
        prop_assert!(on.stats.total_qubo_solves <= off.stats.total_qubo_solves);
        prop_assert!(on.m.same_pattern(&k));
    }

    #[test]
    fn cg_and_pcg_reach_the_same_solution((grid, field) in material_grid()) {
        let problem = PoissonProblem::new(grid, &field, 1.0).unwrap();
        let m = compute_spai(&problem.k, &BoxConfig::default(), &ExactSolver, true).unwrap().m;
        let cfg = CgConfig::default();
        let (x, plain) = cg(&problem.k, &problem.b, &cfg).unwrap();
        prop_assert!(plain.converged);
        prop_assert!(plain.true_relative_residual <= 10.0 * cfg.tol);
        prop_assert!(plain.iterations <= problem.k.n());
        if let Ok((y, pre)) = pcg(&problem.k, &m, &problem.b, &cfg) {
            prop_assert!(pre.converged);
            let scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-7 * scale);
            }
        }
    }
}
