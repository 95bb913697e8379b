//! End-to-end experiments: assemble, build the SPAI, run CG and PCG, and
//! write traces, the solution field, stats, and a report.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::anneal::SaConfig;
use crate::error::{Error, Result};
use crate::krylov::{cg, pcg, CgConfig, ConvergenceTrace};
use crate::mm::save_matrix_market;
use crate::poisson::{write_field_csv, GridSpec, MaterialField, PoissonProblem};
use crate::qubo::Backend;
use crate::spai::{compute_spai, BoxConfig, SpaiStats};

/// Box tolerances swept by default.
pub const DEFAULT_EPS_SWEEP: [f64; 5] = [1e-8, 1e-6, 1e-4, 1e-2, 1e-1];
/// Initial box lengths swept by default.
pub const DEFAULT_LENGTH_SWEEP: [f64; 6] = [1e4, 1e2, 1e1, 1.0, 1e-1, 1e-2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Uniform { k: f64 },
    VerticalSplit { k1: f64, k2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Exact,
    Sa,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub gx: usize,
    pub gy: usize,
    pub h: f64,
    pub material: Material,
    pub source_f: f64,
    #[serde(rename = "box")]
    pub box_cfg: BoxConfig,
    pub cg: CgConfig,
    pub backend: BackendKind,
    pub sa_seed: u64,
    pub sa_samples: usize,
    pub sa_sweeps: usize,
    pub use_cache: bool,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip)]
    pub export_k: bool,
    #[serde(skip)]
    pub export_m: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sa = SaConfig::default();
        Self {
            gx: 401,
            gy: 301,
            h: 1.0,
            material: Material::Uniform { k: 1.0 },
            source_f: 1.0,
            box_cfg: BoxConfig::default(),
            cg: CgConfig::default(),
            backend: BackendKind::Exact,
            sa_seed: sa.seed,
            sa_samples: sa.num_samples,
            sa_sweeps: sa.sweeps,
            use_cache: true,
            out_dir: None,
            export_k: false,
            export_m: false,
        }
    }
}

impl ExperimentConfig {
    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Sa => Backend::Annealing(SaConfig {
                num_samples: self.sa_samples,
                sweeps: self.sa_sweeps,
                seed: self.sa_seed,
                ..SaConfig::default()
            }),
        }
    }

    pub fn problem(&self) -> Result<PoissonProblem> {
        let grid = GridSpec::new(self.gx, self.gy, self.h)?;
        let mat = match self.material {
            Material::Uniform { k } => MaterialField::uniform(&grid, k)?,
            Material::VerticalSplit { k1, k2 } => MaterialField::vertical_split(&grid, k1, k2)?,
        };
        PoissonProblem::new(grid, &mat, self.source_f)
    }
}

/// Outcome of one Krylov solve as recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_relative_residual: f64,
    /// Set when the solve stopped on a breakdown rather than by tolerance or cap.
    pub breakdown: Option<String>,
}

impl SolveSummary {
    fn from_trace(t: &ConvergenceTrace) -> Self {
        Self {
            converged: t.converged,
            iterations: t.iterations,
            final_relative_residual: t.final_relative_residual,
            breakdown: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub cg: SolveSummary,
    pub pcg: SolveSummary,
    pub spai: SpaiStats,
    /// `cg.iterations / pcg.iterations` when both converged.
    pub speedup: Option<f64>,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn all_converged(&self) -> bool {
        self.cg.converged && self.pcg.converged
    }

    pub fn cap_hit(&self) -> bool {
        !self.spai.hit_cap_families.is_empty()
    }
}

/// Assembles the problem, builds the preconditioner, and runs both solvers.
/// A PCG breakdown on an indefinite preconditioner is recorded as
/// non-convergence; other failures propagate.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let problem = cfg.problem()?;
    let spai = compute_spai(&problem.k, &cfg.box_cfg, &cfg.backend(), cfg.use_cache)?;

    let (cg_x, cg_trace) = cg(&problem.k, &problem.b, &cfg.cg)?;
    let (pcg_result, pcg_summary) = match pcg(&problem.k, &spai.m, &problem.b, &cfg.cg) {
        Ok((x, trace)) => {
            let summary = SolveSummary::from_trace(&trace);
            (Some((x, trace)), summary)
        }
        Err(e @ Error::IndefinitePreconditioner { iteration, .. }) => (
            None,
            SolveSummary {
                converged: false,
                iterations: iteration,
                final_relative_residual: f64::NAN,
                breakdown: Some(e.to_string()),
            },
        ),
        Err(e) => return Err(e),
    };
    let cg_summary = SolveSummary::from_trace(&cg_trace);
    let speedup = (cg_summary.converged && pcg_summary.converged && pcg_summary.iterations > 0)
        .then(|| cg_summary.iterations as f64 / pcg_summary.iterations as f64);

    let mut report = ExperimentReport {
        config: cfg.clone(),
        n: problem.k.n(),
        cg: cg_summary,
        pcg: pcg_summary,
        spai: spai.stats.clone(),
        speedup,
        artifacts: Vec::new(),
    };

    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        let mut artifacts = Vec::new();
        let mut emit = |name: &str, write: &mut dyn FnMut(&Path) -> Result<()>| -> Result<()> {
            let path = dir.join(name);
            write(&path)?;
            artifacts.push(name.to_string());
            Ok(())
        };
        emit("cg_trace.csv", &mut |p| cg_trace.write_csv(BufWriter::new(File::create(p)?)))?;
        if let Some((_, trace)) = &pcg_result {
            emit("pcg_trace.csv", &mut |p| trace.write_csv(BufWriter::new(File::create(p)?)))?;
        }
        let field = match &pcg_result {
            Some((x, trace)) if trace.converged => x,
            _ => &cg_x,
        };
        emit("field.csv", &mut |p| write_field_csv(&problem.grid, field, BufWriter::new(File::create(p)?)))?;
        emit("spai_stats.json", &mut |p| write_json(p, &spai.stats))?;
        if cfg.export_k {
            emit("K.mtx", &mut |p| save_matrix_market(&problem.k, p))?;
        }
        if cfg.export_m {
            emit("M.mtx", &mut |p| save_matrix_market(&spai.m, p))?;
        }
        artifacts.push("report.json".to_string());
        report.artifacts = artifacts;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    std::io::Write::write_all(&mut out, b"\n")?;
    Ok(())
}

fn sweep(
    cfg: &ExperimentConfig,
    values: &[f64],
    prefix: &str,
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<ExperimentReport>> {
    values
        .iter()
        .map(|&v| {
            let mut run = cfg.clone();
            apply(&mut run, v);
            run.out_dir = cfg.out_dir.as_ref().map(|d| d.join(format!("{prefix}_{v:e}")));
            run_single(&run)
        })
        .collect()
}

/// One run per box tolerance.
pub fn run_sweep_eps(cfg: &ExperimentConfig, eps: &[f64]) -> Result<Vec<ExperimentReport>> {
    sweep(cfg, eps, "eps", |c, v| c.box_cfg.eps_box = v)
}

/// One run per initial box length.
pub fn run_sweep_length(cfg: &ExperimentConfig, lengths: &[f64]) -> Result<Vec<ExperimentReport>> {
    sweep(cfg, lengths, "length", |c, v| c.box_cfg.initial_length = v)
}

/// Vertical two-material split with `k1` left and `k2` right.
pub fn run_two_material(cfg: &ExperimentConfig, k1: f64, k2: f64) -> Result<ExperimentReport> {
    let mut run = cfg.clone();
    run.material = Material::VerticalSplit { k1, k2 };
    run_single(&run)
}

/// Times a closure; used by the CLI for wall-clock reporting on stderr.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, std::time::Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
