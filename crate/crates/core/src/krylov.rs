//! Conjugate gradient and preconditioned conjugate gradient with residual traces.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::SymSparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgConfig {
    /// Relative residual target `‖r‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50_000 }
    }
}

/// Residual history of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// Recurrence residual norms `‖r_t‖`, starting with `‖b‖` at t = 0.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_relative_residual: f64,
    /// `‖b − K x‖ / ‖b‖` recomputed from the returned solution.
    pub true_relative_residual: f64,
}

impl ConvergenceTrace {
    /// Writes `iteration,residual` CSV rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,residual")?;
        for (it, r) in self.residual_norms.iter().enumerate() {
            writeln!(out, "{it},{r:e}")?;
        }
        out.flush()?;
        Ok(())
    }
}

trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
    const CHECK_POSITIVITY: bool;
}

struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
    const CHECK_POSITIVITY: bool = false;
}

struct Explicit<'a>(&'a SymSparseMatrix);

impl Preconditioner for Explicit<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.0.spmv_into(r, z);
    }
    const CHECK_POSITIVITY: bool = true;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unpreconditioned CG from `x0 = 0`.
pub fn cg(k: &SymSparseMatrix, b: &[f64], cfg: &CgConfig) -> Result<(Vec<f64>, ConvergenceTrace)> {
    solve(k, b, &Identity, cfg)
}

/// PCG with the explicit approximate inverse `m` applied as `z = M r`.
/// Convergence is judged on the unpreconditioned residual.
pub fn pcg(
    k: &SymSparseMatrix,
    m: &SymSparseMatrix,
    b: &[f64],
    cfg: &CgConfig,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    if m.n() != k.n() {
        return Err(Error::DimensionMismatch { expected: k.n(), found: m.n() });
    }
    solve(k, b, &Explicit(m), cfg)
}

fn solve<P: Preconditioner>(
    k: &SymSparseMatrix,
    b: &[f64],
    precond: &P,
    cfg: &CgConfig,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    let n = k.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("CG needs tol > 0 and max_iter >= 1".into()));
    }

    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        let trace = ConvergenceTrace {
            residual_norms: vec![0.0],
            iterations: 0,
            converged: true,
            final_relative_residual: 0.0,
            true_relative_residual: 0.0,
        };
        return Ok((x, trace));
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut kp = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut rz = dot(&r, &z);
    if P::CHECK_POSITIVITY && rz <= 0.0 {
        return Err(Error::IndefinitePreconditioner { iteration: 0, value: rz });
    }
    let mut p = z.clone();
    let mut residual_norms = vec![b_norm];
    // The initial relative residual is exactly one.
    let mut converged = 1.0 <= cfg.tol;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iter {
        k.spmv_into(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if pkp <= 0.0 {
            return Err(Error::NotPositiveDefinite { iteration: iterations, value: pkp });
        }
        let alpha = rz / pkp;
        for ((xi, ri), (pi, kpi)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&kp)) {
            *xi += alpha * pi;
            *ri -= alpha * kpi;
        }
        iterations += 1;
        let r_norm = norm(&r);
        residual_norms.push(r_norm);
        if r_norm / b_norm <= cfg.tol {
            converged = true;
            break;
        }

        precond.apply(&r, &mut z);
        let rz_next = dot(&r, &z);
        if P::CHECK_POSITIVITY && rz_next <= 0.0 {
            return Err(Error::IndefinitePreconditioner { iteration: iterations, value: rz_next });
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    let kx = k.spmv(&x)?;
    let true_residual: Vec<f64> = b.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect();
    let trace = ConvergenceTrace {
        final_relative_residual: residual_norms.last().copied().unwrap_or(0.0) / b_norm,
        true_relative_residual: norm(&true_residual) / b_norm,
        residual_norms,
        iterations,
        converged,
    };
    Ok((x, trace))
}
