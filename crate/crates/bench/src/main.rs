//! `qspai`: command-line harness for SPAI-preconditioned CG experiments.
//!
//! Exit codes: 0 when every solve converged, 2 when any run failed to
//! converge, 1 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qspai::experiment::{
    run_single, run_sweep_eps, run_sweep_length, run_two_material, timed, BackendKind, ExperimentConfig,
    ExperimentReport, Material, DEFAULT_EPS_SWEEP, DEFAULT_LENGTH_SWEEP,
};
use qspai::{BoxConfig, CgConfig};

#[derive(Parser)]
#[command(name = "qspai", version, about = "QUBO-computed sparse approximate inverse benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// One CG vs Q-PCG comparison (the default).
    Run,
    /// Sweep the box tolerance.
    SweepEps {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS_SWEEP.to_vec())]
        values: Vec<f64>,
    },
    /// Sweep the initial box length.
    SweepLength {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LENGTH_SWEEP.to_vec())]
        values: Vec<f64>,
    },
    /// Two-material vertical split using --k1/--k2.
    TwoMaterial,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Sa,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, global = true, default_value_t = 401)]
    gx: usize,
    #[arg(long, global = true, default_value_t = 301)]
    gy: usize,
    #[arg(long, global = true, default_value_t = 1.0)]
    h: f64,
    /// Uniform conductivity.
    #[arg(long, global = true, default_value_t = 1.0)]
    k: f64,
    /// Left conductivity for --split.
    #[arg(long, global = true, default_value_t = 1.0)]
    k1: f64,
    /// Right conductivity for --split.
    #[arg(long, global = true, default_value_t = 10.0)]
    k2: f64,
    /// Use the vertical two-material split instead of a uniform field.
    #[arg(long, global = true)]
    split: bool,
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps_box: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    box_length: f64,
    #[arg(long, global = true, default_value_t = 100)]
    max_box_iters: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    cg_tol: f64,
    #[arg(long, global = true, default_value_t = 50_000)]
    max_cg_iters: usize,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    sweeps: usize,
    /// Solve every column independently instead of once per family.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Constant source term f.
    #[arg(long, global = true, default_value_t = 1.0)]
    source_f: f64,
    /// Directory for traces, field, stats and report.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write K as Matrix Market.
    #[arg(long, global = true)]
    export_k: bool,
    /// Also write M as Matrix Market.
    #[arg(long, global = true)]
    export_m: bool,
}

impl CommonArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            gx: self.gx,
            gy: self.gy,
            h: self.h,
            material: if self.split {
                Material::VerticalSplit { k1: self.k1, k2: self.k2 }
            } else {
                Material::Uniform { k: self.k }
            },
            source_f: self.source_f,
            box_cfg: BoxConfig { eps_box: self.eps_box, initial_length: self.box_length, iter_max: self.max_box_iters },
            cg: CgConfig { tol: self.cg_tol, max_iter: self.max_cg_iters },
            backend: match self.backend {
                BackendArg::Exact => BackendKind::Exact,
                BackendArg::Sa => BackendKind::Sa,
            },
            sa_seed: self.seed,
            sa_samples: self.samples,
            sa_sweeps: self.sweeps,
            use_cache: !self.no_cache,
            out_dir: self.out.clone(),
            export_k: self.export_k,
            export_m: self.export_m,
        }
    }
}

fn summarize(label: &str, r: &ExperimentReport) {
    let pcg = if r.pcg.converged {
        r.pcg.iterations.to_string()
    } else {
        format!("- ({})", r.pcg.breakdown.as_deref().unwrap_or("not converged"))
    };
    let cap = if r.cap_hit() { "*" } else { "" };
    let speedup = r.speedup.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"));
    println!(
        "{label:<16} N={:<7} cg={:<6} pcg={:<8} families={:<3} box_iters={}{cap} speedup={speedup}",
        r.n, r.cg.iterations, pcg, r.spai.unique_families, r.spai.total_qubo_solves,
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.common.config();
    let (result, elapsed) = timed(|| -> qspai::Result<Vec<(String, ExperimentReport)>> {
        Ok(match cli.command.unwrap_or(Command::Run) {
            Command::Run => vec![("run".into(), run_single(&cfg)?)],
            Command::SweepEps { values } => {
                run_sweep_eps(&cfg, &values)?.into_iter().zip(&values).map(|(r, v)| (format!("eps={v:e}"), r)).collect()
            }
            Command::SweepLength { values } => run_sweep_length(&cfg, &values)?
                .into_iter()
                .zip(&values)
                .map(|(r, v)| (format!("L={v:e}"), r))
                .collect(),
            Command::TwoMaterial => {
                vec![("two-material".into(), run_two_material(&cfg, cli.common.k1, cli.common.k2)?)]
            }
        })
    });
    match result {
        Ok(reports) => {
            for (label, r) in &reports {
                summarize(label, r);
            }
            eprintln!("wall time: {:.2}s", elapsed.as_secs_f64());
            if reports.iter().all(|(_, r)| r.all_converged()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
