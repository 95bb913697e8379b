//! Compressed-row sparse matrices and the handful of kernels the solver needs.
//!
//! Symmetric matrices are stored in full (both triangles), so a matrix-vector
//! product is a plain row sweep with a fixed summation order.

use crate::error::{Error, Result};

/// Entries with magnitude below this are treated as structural zeros at build time.
pub const DROP_TOLERANCE: f64 = 1e-300;

/// Largest support size accepted by [`DenseSmallMatrix`].
pub const MAX_DENSE_DIM: usize = 64;

/// General square matrix in compressed-row form.
///
/// This is the raw accumulation target of the SPAI builder: it shares the
/// pattern of a symmetric matrix but its values need not be symmetric until
/// [`CsrMatrix::symmetrize`] is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed,
    /// then entries below [`DROP_TOLERANCE`] are dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, c, v) in triplets {
            if r >= n {
                return Err(Error::IndexOutOfRange { index: r, len: n });
            }
            if c >= n {
                return Err(Error::IndexOutOfRange { index: c, len: n });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite entry at ({r}, {c})")));
            }
            rows[r].push((c, v));
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == col {
                    sum += row[k].1;
                    k += 1;
                }
                if sum.abs() >= DROP_TOLERANCE {
                    col_idx.push(col);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// All-zero matrix carrying the structural pattern of `pattern`.
    pub fn zeros_with_pattern(pattern: &SymSparseMatrix) -> Self {
        let inner = &pattern.inner;
        Self {
            n: inner.n,
            row_ptr: inner.row_ptr.clone(),
            col_idx: inner.col_idx.clone(),
            values: vec![0.0; inner.values.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (cols, _) = self.row(row);
        cols.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    /// Stored value at `(row, col)`, or `None` if the position is not in the pattern.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.n || col >= self.n {
            return None;
        }
        self.position(row, col).map(|k| self.values[k])
    }

    /// Overwrites an existing pattern entry. The pattern itself never grows.
    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.n {
            return Err(Error::IndexOutOfRange { index: row, len: self.n });
        }
        if col >= self.n {
            return Err(Error::IndexOutOfRange { index: col, len: self.n });
        }
        let k = self
            .position(row, col)
            .ok_or_else(|| Error::InvalidParameter(format!("({row}, {col}) is not in the sparsity pattern")))?;
        self.values[k] = value;
        Ok(())
    }

    /// `(M + Mᵀ) / 2`. The pattern must already be symmetric; diagonal values
    /// pass through untouched.
    pub fn symmetrize(&self) -> Result<SymSparseMatrix> {
        let mut values = self.values.clone();
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            for (offset, &j) in cols.iter().enumerate() {
                if j == i {
                    continue;
                }
                let k = self.row_ptr[i] + offset;
                let kt = self.position(j, i).ok_or(Error::NotSymmetric { row: j, col: i })?;
                // a + b == b + a in IEEE arithmetic, so both halves come out bit-identical.
                values[k] = (self.values[k] + self.values[kt]) * 0.5;
            }
        }
        let triplets = (0..self.n).flat_map(|i| {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let cols = &self.col_idx;
            let vals = &values;
            range.map(move |k| (i, cols[k], vals[k]))
        });
        SymSparseMatrix::from_triplets(self.n, triplets)
    }
}

/// Symmetric sparse matrix with full (both-triangle) compressed-row storage.
///
/// Construction verifies that the pattern is symmetric and that mirrored
/// values agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix {
    inner: CsrMatrix,
}

impl SymSparseMatrix {
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::try_from(CsrMatrix::from_triplets(n, triplets)?)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    /// Builds from dense rows; intended for small matrices and tests.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        Self::from_triplets(n, triplets)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.inner.row(i)
    }

    /// Value at `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j).unwrap_or(0.0)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.inner.get(i, j).is_some()
    }

    pub fn as_csr(&self) -> &CsrMatrix {
        &self.inner
    }

    /// Iterates the stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// True when both matrices store exactly the same positions.
    pub fn same_pattern(&self, other: &SymSparseMatrix) -> bool {
        self.inner.n == other.inner.n
            && self.inner.row_ptr == other.inner.row_ptr
            && self.inner.col_idx == other.inner.col_idx
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n()).map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.len() });
        }
        let mut y = vec![0.0; self.n()];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation. Panics on length mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// Strictly ascending row indices of the nonzeros in column `j`
    /// (equal to the row-`j` support by symmetry).
    pub fn column_support(&self, j: usize) -> Result<Vec<usize>> {
        if j >= self.n() {
            return Err(Error::IndexOutOfRange { index: j, len: self.n() });
        }
        Ok(self.row(j).0.to_vec())
    }

    /// Dense `A[s, s]` for a strictly ascending index list `s`.
    pub fn principal_submatrix(&self, support: &[usize]) -> Result<DenseSmallMatrix> {
        for (pos, w) in support.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::UnsortedIndices { position: pos + 1 });
            }
        }
        if let Some(&bad) = support.iter().find(|&&r| r >= self.n()) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.n() });
        }
        let s = support.len();
        let mut data = vec![0.0; s * s];
        for (a, &ra) in support.iter().enumerate() {
            let (cols, vals) = self.row(ra);
            for (b, &rb) in support.iter().enumerate() {
                if let Ok(k) = cols.binary_search(&rb) {
                    data[a * s + b] = vals[k];
                }
            }
        }
        DenseSmallMatrix::new(s, data)
    }

    /// Dense copy; for small matrices only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut dense = vec![vec![0.0; n]; n];
        for (i, j, v) in self.triplets() {
            dense[i][j] = v;
        }
        dense
    }
}

impl TryFrom<CsrMatrix> for SymSparseMatrix {
    type Error = Error;

    fn try_from(m: CsrMatrix) -> Result<Self> {
        for i in 0..m.n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                match m.get(j, i) {
                    Some(vt) if vt.to_bits() == v.to_bits() => {}
                    _ => return Err(Error::NotSymmetric { row: i, col: j }),
                }
            }
        }
        Ok(Self { inner: m })
    }
}

/// Small dense square matrix, row-major. Holds the reduced systems `A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSmallMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseSmallMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DENSE_DIM {
            return Err(Error::InvalidParameter(format!("dense dimension {dim} outside 1..={MAX_DENSE_DIM}")));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|a| (0..a).all(|b| self.get(a, b).to_bits() == self.get(b, a).to_bits()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.dim).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.chunks(self.dim).map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}
