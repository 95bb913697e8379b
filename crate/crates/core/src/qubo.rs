//! QUBO problems, the box encoding of a reduced column system, and an
//! exhaustive ground-state solver.
//!
//! Energies follow the convention
//!
//! ```text
//! E(q) = Σ_i diag[i]·q_i + Σ_{i<j} off[i][j]·q_i·q_j + offset
//! ```
//!
//! with the state-dependent sum accumulated first and the offset added last,
//! so the all-zero state evaluates to `offset` exactly.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{solve_sa, SaConfig};
use crate::error::{Error, Result};
use crate::sparse::DenseSmallMatrix;

/// Largest problem [`solve_exact`] will enumerate.
pub const EXACT_MAX_VARS: usize = 24;

/// Quadratic unconstrained binary optimization problem with a constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n_vars: usize,
    diag: Vec<f64>,
    /// Dense `n_vars × n_vars`; only entries with `i < j` are used.
    off: Vec<f64>,
    offset: f64,
}

impl QuboProblem {
    /// Empty problem (all coefficients zero) over `n_vars` variables.
    pub fn zeros(n_vars: usize, offset: f64) -> Self {
        Self { n_vars, diag: vec![0.0; n_vars], off: vec![0.0; n_vars * n_vars], offset }
    }

    /// Builds from linear terms and `(i, j, value)` couplings. Couplings with
    /// `i > j` are folded onto `(j, i)`; `i == j` adds to the linear term.
    pub fn from_terms(diag: Vec<f64>, couplings: &[(usize, usize, f64)], offset: f64) -> Result<Self> {
        let mut p = Self::zeros(diag.len(), offset);
        p.diag = diag;
        for &(i, j, v) in couplings {
            let n = p.n_vars;
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), len: n });
            }
            if i == j {
                p.diag[i] += v;
            } else {
                p.off[i.min(j) * n + i.max(j)] += v;
            }
        }
        if !p.diag.iter().chain(&p.off).all(|v| v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidParameter("QUBO coefficients must be finite".into()));
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Replaces the constant term. The minimizing state is unaffected.
    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    /// Coupling between `i` and `j` (order-insensitive, zero on the diagonal).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Less => self.off[i * self.n_vars + j],
            Ordering::Greater => self.off[j * self.n_vars + i],
            Ordering::Equal => 0.0,
        }
    }

    /// Nonzero couplings as `(i, j, value)` with `i < j`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_vars;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = self.off[i * n + j];
                (v != 0.0).then_some((i, j, v))
            })
            .collect()
    }

    /// Largest and smallest nonzero coefficient magnitudes, if any coefficient is nonzero.
    pub fn coefficient_range(&self) -> Option<(f64, f64)> {
        let mags = self.diag.iter().chain(&self.off).map(|v| v.abs()).filter(|&v| v > 0.0);
        mags.fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((hi, lo)) => Some((hi.max(v), lo.min(v))),
        })
    }

    fn energy_of_mask(&self, mask: u64) -> f64 {
        let n = self.n_vars;
        let mut sum = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            sum += self.diag[i];
            let mut higher = rest;
            while higher != 0 {
                let j = higher.trailing_zeros() as usize;
                higher &= higher - 1;
                sum += self.off[i * n + j];
            }
        }
        sum + self.offset
    }

    /// Debug dump `{n_vars, diag, off: [[i, j, v], ...], offset}`.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let dump =
            QuboDump { n_vars: self.n_vars, diag: self.diag.clone(), off: self.couplings(), offset: self.offset };
        serde_json::to_writer_pretty(out, &dump)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: QuboDump = serde_json::from_str(text)?;
        if dump.diag.len() != dump.n_vars {
            return Err(Error::DimensionMismatch { expected: dump.n_vars, found: dump.diag.len() });
        }
        Self::from_terms(dump.diag, &dump.off, dump.offset)
    }
}

#[derive(Serialize, Deserialize)]
struct QuboDump {
    n_vars: usize,
    diag: Vec<f64>,
    off: Vec<(usize, usize, f64)>,
    offset: f64,
}

/// A binary assignment and its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboSolution {
    /// `q1[0..s]` followed by `q2[0..s]` for box problems.
    pub bits: Vec<bool>,
    pub energy: f64,
}

/// Evaluates the problem energy of `bits`.
pub fn energy(p: &QuboProblem, bits: &[bool]) -> Result<f64> {
    if bits.len() != p.n_vars {
        return Err(Error::DimensionMismatch { expected: p.n_vars, found: bits.len() });
    }
    let n = p.n_vars;
    let mut sum = 0.0;
    for i in (0..n).filter(|&i| bits[i]) {
        sum += p.diag[i];
        for j in (i + 1..n).filter(|&j| bits[j]) {
            sum += p.off[i * n + j];
        }
    }
    Ok(sum + p.offset)
}

/// Orders two bit vectors by their value as little-endian integers.
pub fn cmp_little_endian(a: &[bool], b: &[bool]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    a.iter().rev().cmp(b.iter().rev())
}

fn mask_to_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|t| (mask >> t) & 1 == 1).collect()
}

/// Exhaustive ground-state search. Ties go to the smallest little-endian
/// bit pattern, so an all-zero optimum always wins.
pub fn solve_exact(p: &QuboProblem) -> Result<QuboSolution> {
    let n = p.n_vars;
    if n > EXACT_MAX_VARS {
        return Err(Error::TooManyVariables { n_vars: n, cap: EXACT_MAX_VARS });
    }
    let total: u64 = 1 << n;
    let scan = |range: std::ops::Range<u64>| {
        let mut best = (f64::INFINITY, u64::MAX);
        for mask in range {
            let e = p.energy_of_mask(mask);
            if e < best.0 || best.1 == u64::MAX {
                best = (e, mask);
            }
        }
        best
    };
    const CHUNK: u64 = 1 << 14;
    let (energy, mask) = if total <= CHUNK {
        scan(0..total)
    } else {
        (0..total / CHUNK)
            .into_par_iter()
            .map(|c| scan(c * CHUNK..(c + 1) * CHUNK))
            .reduce(|| (f64::INFINITY, u64::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    };
    Ok(QuboSolution { bits: mask_to_bits(mask, n), energy })
}

/// Builds the QUBO whose energy over `(q1, q2)` equals
/// `½ m̂ᵀ A m̂ − m̂[i]` with `m̂ = c + L(−2 q1 + q2)`.
///
/// Variable `a` is `q1[a]` and variable `s + a` is `q2[a]`. The constant term
/// is the energy at the center, `½ cᵀAc − c[i]`.
pub fn build_box_qubo(a: &DenseSmallMatrix, i: usize, center: &[f64], length: f64) -> Result<QuboProblem> {
    let s = a.dim();
    if !a.is_symmetric() {
        return Err(Error::NotSymmetric { row: 0, col: 0 });
    }
    if i >= s {
        return Err(Error::IndexOutOfRange { index: i, len: s });
    }
    if center.len() != s {
        return Err(Error::DimensionMismatch { expected: s, found: center.len() });
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!("box length must be positive, got {length}")));
    }

    // Gradient of the energy at the center: A c - e_i.
    let mut grad = a.matvec(center);
    grad[i] -= 1.0;
    let energy_at_center = 0.5 * center.iter().zip(a.matvec(center)).map(|(c, ac)| c * ac).sum::<f64>() - center[i];

    let n = 2 * s;
    let l = length;
    let l2 = length * length;
    let mut p = QuboProblem::zeros(n, energy_at_center);
    for (r, &g) in grad.iter().enumerate() {
        let arr = a.get(r, r);
        p.diag[r] = -2.0 * l * g + 2.0 * l2 * arr;
        p.diag[s + r] = l * g + 0.5 * l2 * arr;
        p.off[r * n + s + r] = -2.0 * l2 * arr;
        for t in r + 1..s {
            let art = a.get(r, t);
            if art == 0.0 {
                continue;
            }
            p.off[r * n + t] = 4.0 * l2 * art;
            p.off[r * n + s + t] = -2.0 * l2 * art;
            p.off[t * n + s + r] = -2.0 * l2 * art;
            p.off[(s + r) * n + s + t] = l2 * art;
        }
    }
    Ok(p)
}

/// Maps box bits back to the displacement `−2 q1 + q2` per component.
pub fn box_displacement(bits: &[bool]) -> Vec<f64> {
    let s = bits.len() / 2;
    (0..s).map(|a| -2.0 * f64::from(u8::from(bits[a])) + f64::from(u8::from(bits[s + a]))).collect()
}

/// Anything that can minimize a QUBO.
pub trait QuboSolver: Sync {
    fn solve(&self, p: &QuboProblem) -> Result<QuboSolution>;
}

/// Exhaustive enumeration, see [`solve_exact`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSolver;

impl QuboSolver for ExactSolver {
    fn solve(&self, p: &QuboProblem) -> Result<QuboSolution> {
        solve_exact(p)
    }
}

/// Solver selection used by the builder and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Exact,
    Annealing(SaConfig),
}

impl QuboSolver for Backend {
    fn solve(&self, p: &QuboProblem) -> Result<QuboSolution> {
        match self {
            Backend::Exact => solve_exact(p),
            Backend::Annealing(cfg) => solve_sa(p, cfg),
        }
    }
}
