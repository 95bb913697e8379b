//! Seeded single-spin-flip simulated annealing for QUBO problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{cmp_little_endian, energy, QuboProblem, QuboSolution};

/// Sampler settings. Temperatures default to `max |coeff|` (hot) and
/// `1e-3 · min nonzero |coeff|` (cold) of the problem being solved.
#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    pub num_samples: usize,
    pub sweeps: usize,
    pub hot: Option<f64>,
    pub cold: Option<f64>,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self { num_samples: 100, sweeps: 1000, hot: None, cold: None, seed: 0 }
    }
}

impl SaConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.num_samples == 0 || self.sweeps == 0 {
            return Err(Error::InvalidParameter("annealer needs at least one sample and one sweep".into()));
        }
        if let (Some(hot), Some(cold)) = (self.hot, self.cold) {
            if !(hot > cold && cold > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "temperature schedule needs hot > cold > 0, got {hot} / {cold}"
                )));
            }
        }
        Ok(())
    }

    fn schedule(&self, p: &QuboProblem) -> Option<(f64, f64)> {
        let (max_mag, min_mag) = p.coefficient_range()?;
        let hot = self.hot.unwrap_or(max_mag);
        let cold = self.cold.unwrap_or(1e-3 * min_mag);
        let cold = if cold < hot { cold } else { 1e-3 * hot };
        Some((hot, cold))
    }
}

/// Runs `num_samples` independent annealing chains and returns the best
/// state found. Chain `c` draws from ChaCha stream `c` of `seed`, so the
/// result does not depend on thread scheduling.
pub fn solve_sa(p: &QuboProblem, cfg: &SaConfig) -> Result<QuboSolution> {
    cfg.validate()?;
    let n = p.n_vars();
    if n == 0 {
        return Err(Error::InvalidParameter("QUBO has no variables".into()));
    }
    let Some((hot, cold)) = cfg.schedule(p) else {
        // Flat landscape: every state has energy `offset`, the zero state is canonical.
        return Ok(QuboSolution { bits: vec![false; n], energy: p.offset() });
    };

    let couplings = dense_couplings(p);
    let candidates: Vec<Vec<bool>> = (0..cfg.num_samples)
        .into_par_iter()
        .flat_map_iter(|chain| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chain as u64);
            let (best, last) = anneal_chain(p, &couplings, hot, cold, cfg.sweeps, &mut rng);
            [best, last]
        })
        .collect();

    let mut best: Option<QuboSolution> = None;
    for bits in candidates {
        let e = energy(p, &bits)?;
        let better = match &best {
            None => true,
            Some(b) => e < b.energy || (e == b.energy && cmp_little_endian(&bits, &b.bits).is_lt()),
        };
        if better {
            best = Some(QuboSolution { bits, energy: e });
        }
    }
    Ok(best.expect("at least one sample"))
}

fn dense_couplings(p: &QuboProblem) -> Vec<f64> {
    let n = p.n_vars();
    let mut j = vec![0.0; n * n];
    for (a, b, v) in p.couplings() {
        j[a * n + b] = v;
        j[b * n + a] = v;
    }
    j
}

/// One chain over a geometric schedule. Returns the lowest-energy state seen
/// (by incremental bookkeeping) and the final state.
fn anneal_chain(
    p: &QuboProblem,
    couplings: &[f64],
    hot: f64,
    cold: f64,
    sweeps: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<bool>, Vec<bool>) {
    let n = p.n_vars();
    let mut state: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    // field[i] = energy change from setting bit i, given the other bits
    let mut field: Vec<f64> =
        (0..n).map(|i| p.diag()[i] + (0..n).filter(|&k| state[k]).map(|k| couplings[i * n + k]).sum::<f64>()).collect();
    let mut current = 0.0;
    let mut best_value = f64::INFINITY;
    let mut best = state.clone();

    let ratio = if sweeps > 1 { (cold / hot).powf(1.0 / (sweeps - 1) as f64) } else { 1.0 };
    let mut temperature = if sweeps > 1 { hot } else { cold };
    for _ in 0..sweeps {
        for i in 0..n {
            let delta = if state[i] { -field[i] } else { field[i] };
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if !accept {
                continue;
            }
            let sign = if state[i] { -1.0 } else { 1.0 };
            state[i] = !state[i];
            current += delta;
            for k in 0..n {
                field[k] += sign * couplings[k * n + i];
            }
            if current < best_value {
                best_value = current;
                best.clone_from(&state);
            }
        }
        temperature *= ratio;
    }
    (best, state)
}
