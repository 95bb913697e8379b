//! Sparse approximate inverse on the sparsity pattern of `K`, with every
//! column obtained by the sparse box algorithm.
//!
//! Column `j` of `M` is restricted to the support `s` of column `j` of `K`.
//! Its nonzeros `m̂` minimize `½ m̂ᵀ A m̂ − m̂[i]`, where `A = K[s, s]` and `i`
//! is the position of `j` inside `s`. The box algorithm searches for `m̂` in
//! the lattice `c + L(−2 q1 + q2)` using binary `q1, q2`. It recenters when a
//! QUBO minimizer strictly lowers the energy and halves `L` otherwise.
//!
//! Columns whose `(A, i)` pairs agree bit for bit have identical solutions,
//! so one solve serves the whole family.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubo::{box_displacement, build_box_qubo, QuboSolver};
use crate::sparse::{CsrMatrix, DenseSmallMatrix, SymSparseMatrix};

/// Box algorithm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxConfig {
    /// Stop once the box length drops below this.
    pub eps_box: f64,
    /// Initial box length.
    pub initial_length: f64,
    /// Cap on loop iterations (translations plus contractions).
    pub iter_max: usize,
}

impl Default for BoxConfig {
    fn default() -> Self {
        Self { eps_box: 1e-6, initial_length: 1.0, iter_max: 100 }
    }
}

impl BoxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_box > 0.0 && self.eps_box.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps_box must be positive, got {}", self.eps_box)));
        }
        if !(self.initial_length > 0.0 && self.initial_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial box length must be positive, got {}",
                self.initial_length
            )));
        }
        if self.iter_max == 0 {
            return Err(Error::InvalidParameter("iter_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// One pass of the box loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStep {
    /// Box length used to build this iteration's QUBO.
    pub length: f64,
    /// Best energy before the step.
    pub pi_min_before: f64,
    /// Minimum energy returned by the QUBO solver.
    pub pi_star: f64,
    pub translated: bool,
}

/// Final state of one box solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxState {
    pub center: Vec<f64>,
    pub length: f64,
    pub pi_min: f64,
    pub iters: usize,
    pub contractions: usize,
    pub translations: usize,
    /// The iteration cap stopped the loop before `length < eps_box`.
    pub hit_cap: bool,
    pub history: Vec<BoxStep>,
}

/// Runs the sparse box algorithm on the reduced system `A m̂ = e_i`.
///
/// Each QUBO is re-anchored so its all-zero state has energy exactly
/// `pi_min`; the solver's minimum can then never exceed the running best.
/// Non-SPD `A` is not detected; the loop simply runs to its cap or tolerance.
pub fn sparse_box_solve<S: QuboSolver + ?Sized>(
    a: &DenseSmallMatrix,
    i: usize,
    cfg: &BoxConfig,
    solver: &S,
) -> Result<(Vec<f64>, BoxState)> {
    cfg.validate()?;
    let s = a.dim();
    let mut state = BoxState {
        center: vec![0.0; s],
        length: cfg.initial_length,
        pi_min: 0.0,
        iters: 0,
        contractions: 0,
        translations: 0,
        hit_cap: false,
        history: Vec::new(),
    };
    loop {
        let mut qubo = build_box_qubo(a, i, &state.center, state.length)?;
        qubo.set_offset(state.pi_min);
        let best = solver.solve(&qubo)?;
        let translated = best.energy < state.pi_min;
        state.history.push(BoxStep {
            length: state.length,
            pi_min_before: state.pi_min,
            pi_star: best.energy,
            translated,
        });
        if translated {
            for (c, d) in state.center.iter_mut().zip(box_displacement(&best.bits)) {
                *c += state.length * d;
            }
            state.pi_min = best.energy;
            state.translations += 1;
        } else {
            state.length *= 0.5;
            state.contractions += 1;
        }
        state.iters += 1;
        if state.length < cfg.eps_box {
            break;
        }
        if state.iters >= cfg.iter_max {
            state.hit_cap = true;
            break;
        }
    }
    Ok((state.center.clone(), state))
}

/// Dense Gaussian elimination with partial pivoting for `A x = e_i`.
pub fn direct_column_oracle(a: &DenseSmallMatrix, i: usize) -> Result<Vec<f64>> {
    let s = a.dim();
    if i >= s {
        return Err(Error::IndexOutOfRange { index: i, len: s });
    }
    let mut m: Vec<Vec<f64>> = (0..s).map(|r| (0..s).map(|c| a.get(r, c)).collect()).collect();
    let mut rhs = vec![0.0; s];
    rhs[i] = 1.0;
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    for col in 0..s {
        let pivot = (col..s).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).expect("nonempty range");
        if m[pivot][col].abs() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..s {
            let factor = m[r][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            let (above, below) = m.split_at_mut(r);
            for (x, p) in below[0][col..].iter_mut().zip(&above[col][col..]) {
                *x -= factor * p;
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; s];
    for r in (0..s).rev() {
        let tail: f64 = (r + 1..s).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / m[r][r];
    }
    Ok(x)
}

/// Byte encoding of `(s, i, A_j)`; equal signatures mean equal reduced systems.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnFamilySignature(Vec<u8>);

impl ColumnFamilySignature {
    fn new(a: &DenseSmallMatrix, i: usize) -> Self {
        let mut bytes = Vec::with_capacity(16 + 8 * a.values().len());
        bytes.extend_from_slice(&(a.dim() as u64).to_le_bytes());
        bytes.extend_from_slice(&(i as u64).to_le_bytes());
        for v in a.values() {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Reduced system of column `j`: support, `A_j = K[s, s]`, and the position of `j` in `s`.
pub fn reduced_column_system(k: &SymSparseMatrix, j: usize) -> Result<(Vec<usize>, DenseSmallMatrix, usize)> {
    let support = k.column_support(j)?;
    let a = k.principal_submatrix(&support)?;
    let i = support
        .binary_search(&j)
        .map_err(|_| Error::InvalidParameter(format!("column {j} has no stored diagonal entry")))?;
    Ok((support, a, i))
}

pub fn column_signature(k: &SymSparseMatrix, j: usize) -> Result<ColumnFamilySignature> {
    let (_, a, i) = reduced_column_system(k, j)?;
    Ok(ColumnFamilySignature::new(&a, i))
}

/// Build statistics, serialized as the stats JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaiStats {
    pub unique_families: usize,
    /// Box iterations of each family, in first-encounter order.
    pub per_family_iters: Vec<usize>,
    pub total_qubo_solves: usize,
    /// Indices into `per_family_iters` of families stopped by the iteration cap.
    pub hit_cap_families: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SpaiPreconditioner {
    pub m: SymSparseMatrix,
    pub stats: SpaiStats,
    /// Column index that represents each family.
    pub family_representatives: Vec<usize>,
    pub wall_time: Duration,
}

/// Computes `M ≈ K⁻¹` on the pattern of `K`, then symmetrizes.
///
/// With `use_cache` each column family is solved once; without it every
/// column is solved independently. Both paths yield bit-identical matrices.
pub fn compute_spai<S: QuboSolver + ?Sized>(
    k: &SymSparseMatrix,
    cfg: &BoxConfig,
    solver: &S,
    use_cache: bool,
) -> Result<SpaiPreconditioner> {
    cfg.validate()?;
    let started = Instant::now();
    let n = k.n();

    let mut family_of_column = Vec::with_capacity(n);
    let mut representatives: Vec<usize> = Vec::new();
    let mut index: HashMap<ColumnFamilySignature, usize> = HashMap::new();
    for j in 0..n {
        let sig = column_signature(k, j)?;
        let next = representatives.len();
        let family = *index.entry(sig).or_insert(next);
        if family == next {
            representatives.push(j);
        }
        family_of_column.push(family);
    }

    let solve_column = |j: usize| -> Result<(Vec<f64>, BoxState)> {
        let (_, a, i) = reduced_column_system(k, j)?;
        sparse_box_solve(&a, i, cfg, solver)
    };

    let mut raw = CsrMatrix::zeros_with_pattern(k);
    let family_states: Vec<BoxState>;
    let total_qubo_solves;
    if use_cache {
        let solved: Vec<(Vec<f64>, BoxState)> =
            representatives.par_iter().map(|&j| solve_column(j)).collect::<Result<_>>()?;
        for (j, &family) in family_of_column.iter().enumerate() {
            write_column(&mut raw, k, j, &solved[family].0)?;
        }
        total_qubo_solves = solved.iter().map(|(_, st)| st.iters).sum();
        family_states = solved.into_iter().map(|(_, st)| st).collect();
    } else {
        let solved: Vec<(Vec<f64>, BoxState)> = (0..n).into_par_iter().map(solve_column).collect::<Result<_>>()?;
        for (j, (m_hat, _)) in solved.iter().enumerate() {
            write_column(&mut raw, k, j, m_hat)?;
        }
        total_qubo_solves = solved.iter().map(|(_, st)| st.iters).sum();
        family_states = representatives.iter().map(|&j| solved[j].1.clone()).collect();
    }

    let m = raw.symmetrize()?;
    let stats = SpaiStats {
        unique_families: representatives.len(),
        per_family_iters: family_states.iter().map(|st| st.iters).collect(),
        total_qubo_solves,
        hit_cap_families: family_states.iter().enumerate().filter_map(|(f, st)| st.hit_cap.then_some(f)).collect(),
    };
    Ok(SpaiPreconditioner { m, stats, family_representatives: representatives, wall_time: started.elapsed() })
}

fn write_column(raw: &mut CsrMatrix, k: &SymSparseMatrix, j: usize, m_hat: &[f64]) -> Result<()> {
    let support = k.column_support(j)?;
    for (&row, &v) in support.iter().zip(m_hat) {
        raw.set(row, j, v)?;
    }
    Ok(())
}
