//! Five-point finite-difference Poisson systems on a rectangle with zero
//! Dirichlet boundaries.
//!
//! The domain has `(gx + 2) × (gy + 2)` nodes; only the `gx × gy` interior
//! nodes are unknowns. Conductivity lives on the `(gx + 1) × (gy + 1)` cells
//! between nodes. A node coefficient is the mean over its four cells, an edge
//! coefficient the mean over the two cells sharing that edge.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SymSparseMatrix;

/// Interior grid dimensions and spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub gx: usize,
    pub gy: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn new(gx: usize, gy: usize, h: f64) -> Result<Self> {
        if gx == 0 || gy == 0 {
            return Err(Error::InvalidParameter(format!("grid {gx}x{gy} has no interior nodes")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { gx, gy, h })
    }

    /// Unit-spacing grid.
    pub fn unit(gx: usize, gy: usize) -> Result<Self> {
        Self::new(gx, gy, 1.0)
    }

    pub fn num_nodes(&self) -> usize {
        self.gx * self.gy
    }

    /// Row-major, x fastest: `n * gx + m`.
    pub fn node_index(&self, m: usize, n: usize) -> Result<usize> {
        if m >= self.gx {
            return Err(Error::IndexOutOfRange { index: m, len: self.gx });
        }
        if n >= self.gy {
            return Err(Error::IndexOutOfRange { index: n, len: self.gy });
        }
        Ok(n * self.gx + m)
    }

    /// Inverse of [`GridSpec::node_index`].
    pub fn node_coords(&self, index: usize) -> (usize, usize) {
        (index % self.gx, index / self.gx)
    }
}

/// Per-cell conductivity over the `(gx + 1) × (gy + 1)` cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    cols: usize,
    rows: usize,
    k: Vec<f64>,
}

impl MaterialField {
    pub fn uniform(grid: &GridSpec, k: f64) -> Result<Self> {
        check_conductivity(k)?;
        let (cols, rows) = (grid.gx + 1, grid.gy + 1);
        Ok(Self { cols, rows, k: vec![k; cols * rows] })
    }

    /// `k1` on the left half of the cell grid, `k2` on the right. With an odd
    /// number of cell columns the extra column goes to `k1`.
    pub fn vertical_split(grid: &GridSpec, k1: f64, k2: f64) -> Result<Self> {
        check_conductivity(k1)?;
        check_conductivity(k2)?;
        let (cols, rows) = (grid.gx + 1, grid.gy + 1);
        let split = cols.div_ceil(2);
        let k = (0..rows).flat_map(|_| (0..cols).map(move |cx| if cx < split { k1 } else { k2 })).collect();
        Ok(Self { cols, rows, k })
    }

    /// Arbitrary field from a per-cell function.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let (cols, rows) = (grid.gx + 1, grid.gy + 1);
        let mut k = Vec::with_capacity(cols * rows);
        for cy in 0..rows {
            for cx in 0..cols {
                let v = f(cx, cy);
                check_conductivity(v)?;
                k.push(v);
            }
        }
        Ok(Self { cols, rows, k })
    }

    /// Conductivity of cell `(cx, cy)`.
    pub fn cell(&self, cx: usize, cy: usize) -> f64 {
        self.k[cy * self.cols + cx]
    }

    /// `(columns, rows)` of the cell grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }
}

fn check_conductivity(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("conductivity must be positive, got {k}")))
    }
}

#[inline]
fn edge_mean(a: f64, b: f64) -> f64 {
    (a + b) * 0.5
}

/// Assembles the stiffness matrix `K` for the given material field.
pub fn assemble(grid: &GridSpec, mat: &MaterialField) -> Result<SymSparseMatrix> {
    let expected = (grid.gx + 1, grid.gy + 1);
    if mat.shape() != expected {
        return Err(Error::DimensionMismatch { expected: expected.0 * expected.1, found: mat.cols * mat.rows });
    }
    let (gx, gy) = (grid.gx, grid.gy);
    let mut triplets = Vec::with_capacity(5 * grid.num_nodes());
    for n in 0..gy {
        for m in 0..gx {
            let row = n * gx + m;
            // Interior node (m, n) touches cells (m, n), (m+1, n), (m, n+1), (m+1, n+1).
            let (c00, c10) = (mat.cell(m, n), mat.cell(m + 1, n));
            let (c01, c11) = (mat.cell(m, n + 1), mat.cell(m + 1, n + 1));
            if n > 0 {
                triplets.push((row, row - gx, -edge_mean(c00, c10)));
            }
            if m > 0 {
                triplets.push((row, row - 1, -edge_mean(c00, c01)));
            }
            let node_k = (c00 + c10 + c01 + c11) / 4.0;
            triplets.push((row, row, 4.0 * node_k));
            if m + 1 < gx {
                triplets.push((row, row + 1, -edge_mean(c10, c11)));
            }
            if n + 1 < gy {
                triplets.push((row, row + gx, -edge_mean(c01, c11)));
            }
        }
    }
    SymSparseMatrix::from_triplets(grid.num_nodes(), triplets)
}

/// Load vector `b[node] = f(m, n) · h²`.
pub fn assemble_rhs(grid: &GridSpec, f: impl Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let h2 = grid.h * grid.h;
    let mut b = Vec::with_capacity(grid.num_nodes());
    for n in 0..grid.gy {
        for m in 0..grid.gx {
            let v = f(m, n);
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("source is not finite at ({m}, {n})")));
            }
            b.push(v * h2);
        }
    }
    Ok(b)
}

/// Assembled system `K u = b` together with its grid.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub k: SymSparseMatrix,
    pub b: Vec<f64>,
    pub grid: GridSpec,
}

impl PoissonProblem {
    /// Assembles with a constant source `f`.
    pub fn new(grid: GridSpec, mat: &MaterialField, f: f64) -> Result<Self> {
        let k = assemble(&grid, mat)?;
        let b = assemble_rhs(&grid, |_, _| f)?;
        Ok(Self { k, b, grid })
    }

    /// Probabilistic SPD check: `xᵀKx > 0` for `trials` seeded random vectors.
    pub fn passes_spd_check(&self, trials: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.k.n();
        (0..trials).all(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let kx = self.k.spmv(&x).expect("length matches");
            x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>() > 0.0
        })
    }
}

/// Writes the solution field as CSV rows `m,n,u` in node order.
pub fn write_field_csv<W: Write>(grid: &GridSpec, u: &[f64], mut out: W) -> Result<()> {
    if u.len() != grid.num_nodes() {
        return Err(Error::DimensionMismatch { expected: grid.num_nodes(), found: u.len() });
    }
    writeln!(out, "m,n,u")?;
    for (idx, value) in u.iter().enumerate() {
        let (m, n) = grid.node_coords(idx);
        writeln!(out, "{m},{n},{value:e}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(gx: usize, gy: usize, k: f64) -> SymSparseMatrix {
        let grid = GridSpec::unit(gx, gy).unwrap();
        assemble(&grid, &MaterialField::uniform(&grid, k).unwrap()).unwrap()
    }

    #[test]
    fn node_index_examples() {
        let g = GridSpec::unit(5, 4).unwrap();
        assert_eq!(g.node_index(0, 0).unwrap(), 0);
        assert_eq!(g.node_index(4, 3).unwrap(), 19);
        let wide = GridSpec::unit(401, 301).unwrap();
        assert_eq!(wide.node_index(3, 2).unwrap(), 805);
        assert!(g.node_index(5, 0).is_err());
        assert!(g.node_index(0, 4).is_err());
        assert_eq!(wide.node_coords(805), (3, 2));
    }

    #[test]
    fn material_examples() {
        let g = GridSpec::unit(3, 2).unwrap();
        assert!(MaterialField::uniform(&g, 7.0).unwrap().k.iter().all(|&k| k == 7.0));
        assert!(MaterialField::uniform(&g, 0.0).is_err());
        assert!(MaterialField::vertical_split(&g, 1.0, -1.0).is_err());
        let split = MaterialField::vertical_split(&g, 1.0, 100.0).unwrap();
        for cy in 0..3 {
            let row: Vec<f64> = (0..4).map(|cx| split.cell(cx, cy)).collect();
            assert_eq!(row, vec![1.0, 1.0, 100.0, 100.0]);
        }
        // odd count: 5 columns, three on the left
        let g = GridSpec::unit(4, 1).unwrap();
        let split = MaterialField::vertical_split(&g, 1.0, 2.0).unwrap();
        assert_eq!((0..5).map(|cx| split.cell(cx, 0)).collect::<Vec<_>>(), vec![1.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn assemble_small_grids() {
        assert_eq!(uniform(1, 1, 1.0).to_dense(), vec![vec![4.0]]);
        assert_eq!(
            uniform(2, 2, 1.0).to_dense(),
            vec![
                vec![4.0, -1.0, -1.0, 0.0],
                vec![-1.0, 4.0, 0.0, -1.0],
                vec![-1.0, 0.0, 4.0, -1.0],
                vec![0.0, -1.0, -1.0, 4.0],
            ]
        );
    }

    #[test]
    fn default_grid_size() {
        assert_eq!(uniform(401, 301, 1.0).n(), 120_701);
    }

    #[test]
    fn row_counts_and_row_sums() {
        let (gx, gy) = (6, 5);
        let k = uniform(gx, gy, 3.0);
        let grid = GridSpec::unit(gx, gy).unwrap();
        for idx in 0..k.n() {
            let (m, n) = grid.node_coords(idx);
            let boundary_neighbours = [m == 0, m + 1 == gx, n == 0, n + 1 == gy].iter().filter(|&&b| b).count();
            let (cols, vals) = k.row(idx);
            assert_eq!(cols.len(), 5 - boundary_neighbours);
            let sum: f64 = vals.iter().sum();
            assert_eq!(sum, boundary_neighbours as f64 * 3.0);
        }
    }

    #[test]
    fn two_material_interface_coefficients() {
        let grid = GridSpec::unit(3, 1).unwrap();
        let mat = MaterialField::vertical_split(&grid, 1.0, 3.0).unwrap();
        let k = assemble(&grid, &mat).unwrap();
        // cells: columns {0,1} -> 1, {2,3} -> 3
        assert_eq!(k.get(0, 0), 4.0);
        assert_eq!(k.get(1, 1), 8.0);
        assert_eq!(k.get(2, 2), 12.0);
        assert_eq!(k.get(0, 1), -1.0);
        assert_eq!(k.get(1, 2), -3.0);
    }

    #[test]
    fn degenerate_split_matches_uniform() {
        let grid = GridSpec::unit(9, 7).unwrap();
        let a = assemble(&grid, &MaterialField::uniform(&grid, 2.5).unwrap()).unwrap();
        let b = assemble(&grid, &MaterialField::vertical_split(&grid, 2.5, 2.5).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rhs_examples() {
        let g = GridSpec::unit(3, 2).unwrap();
        assert_eq!(assemble_rhs(&g, |_, _| 1.0).unwrap(), vec![1.0; 6]);
        assert_eq!(assemble_rhs(&g, |_, _| 0.0).unwrap(), vec![0.0; 6]);
        let g = GridSpec::new(3, 2, 0.5).unwrap();
        assert_eq!(assemble_rhs(&g, |_, _| 2.0).unwrap(), vec![0.5; 6]);
        assert!(assemble_rhs(&g, |_, _| f64::NAN).is_err());
    }

    #[test]
    fn spd_check_on_grids() {
        for (gx, gy) in [(1, 1), (3, 7), (20, 20)] {
            let grid = GridSpec::unit(gx, gy).unwrap();
            let mat = MaterialField::vertical_split(&grid, 1.0, 50.0).unwrap();
            let p = PoissonProblem::new(grid, &mat, 1.0).unwrap();
            assert!(p.passes_spd_check(20, 7));
        }
    }

    #[test]
    fn field_csv_layout() {
        let g = GridSpec::unit(2, 1).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&g, &[0.5, 0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "m,n,u\n0,0,5e-1\n1,0,2.5e-1\n");
    }
}
