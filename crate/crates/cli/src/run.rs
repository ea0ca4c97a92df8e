//! Multi-chain orchestration and the step-size scaling experiment.

use std::collections::BTreeMap;

use gist_nuts_core::{
    run_chain, sampler::chain_rng, AdaptiveConfig, ChainRun, Mode, Model, SamplerConfig,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Runs `n_chains` independent chains from the same initial position.
///
/// Chain `j` uses RNG stream `j` of the seeded generator, so results do not
/// depend on scheduling.
pub fn run_chains<M: Model + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    initial: &[f64],
    n_draws: usize,
    n_chains: u64,
    seed: u64,
) -> Vec<ChainRun> {
    (0..n_chains)
        .into_par_iter()
        .map(|chain| run_chain(model, config, initial, n_draws, seed, chain))
        .collect()
}

/// Aggregate statistics of a sampling run, written next to the draws.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: String,
    pub dim: usize,
    pub mode: String,
    pub step_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<u32>,
    pub max_doublings: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_threshold: Option<f64>,
    pub draws_per_chain: usize,
    pub chains: u64,
    pub seed: u64,
    pub acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_k_used: Option<f64>,
    /// Draw counts keyed by orbit length.
    pub orbit_length_histogram: BTreeMap<u64, u64>,
    pub wall_time_seconds: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn summarize(
    model_name: &str,
    dim: usize,
    config: &SamplerConfig,
    runs: &[ChainRun],
    n_draws: usize,
    n_chains: u64,
    seed: u64,
    wall_time_seconds: f64,
) -> RunSummary {
    let mut accepted = 0u64;
    let mut total = 0u64;
    let mut k_sum = 0.0;
    let mut k_count = 0u64;
    let mut histogram = BTreeMap::new();
    for run in runs {
        for record in &run.records {
            total += 1;
            if record.accepted {
                accepted += 1;
            }
            if let Some(k) = record.k_used {
                k_sum += k as f64;
                k_count += 1;
            }
            *histogram.entry(record.orbit_len).or_insert(0) += 1;
        }
    }
    let (mode, refinement, accept_threshold) = match config.mode {
        Mode::Fixed { refinement } => ("fixed".to_string(), Some(refinement), None),
        Mode::Adaptive {
            accept_threshold, ..
        } => ("adaptive".to_string(), None, Some(accept_threshold)),
    };
    RunSummary {
        model: model_name.to_string(),
        dim,
        mode,
        step_size: config.step_size,
        refinement,
        max_doublings: config.max_doublings,
        accept_threshold,
        draws_per_chain: n_draws,
        chains: n_chains,
        seed,
        acceptance_rate: accepted as f64 / total as f64,
        mean_k_used: (k_count > 0).then(|| k_sum / k_count as f64),
        orbit_length_histogram: histogram,
        wall_time_seconds,
    }
}

/// How chains of the scaling experiment are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Start at the mode (the origin).
    Mode,
    /// Start from an exact draw of the standard normal target.
    Stationary,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Mode => "mode",
            Regime::Stationary => "stationary",
        }
    }
}

/// One aggregated measurement of the scaling experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingRow {
    pub dim: usize,
    pub regime: String,
    /// Mean over chains and transitions of the realized fine step
    /// `h * 2^-k`.
    pub mean_fine_step: f64,
    /// `h * 2^-mean(k)`, the alternative aggregation.
    pub fine_step_at_mean_k: f64,
    pub chains: u64,
    pub measured_transitions: usize,
}

/// Scaling experiment output: per-dimension rows plus fitted log-log slopes
/// of `mean_fine_step` against dimension (when at least two dimensions were
/// measured).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingOutcome {
    pub rows: Vec<ScalingRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_mode: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_stationary: Option<f64>,
    pub warmup_transitions: usize,
    pub seed: u64,
}

/// Parameters of the scaling experiment on the standard normal target.
#[derive(Clone, Copy, Debug)]
pub struct ScalingConfig {
    pub step_size: f64,
    pub max_doublings: u32,
    pub accept_threshold: f64,
    pub max_halvings: u32,
    pub chains: u64,
    /// Transitions whose sampled `k` enters the measurement.
    pub measured_transitions: usize,
    /// Transitions run before measuring (0 measures from the start).
    pub warmup_transitions: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            max_doublings: 10,
            accept_threshold: 0.7,
            max_halvings: 10,
            chains: 200,
            measured_transitions: 3,
            warmup_transitions: 0,
        }
    }
}

/// Runs short adaptive chains on standard normal targets of the given
/// dimensions, once from the mode and once from stationarity, and records
/// the realized fine step sizes.
///
/// Chain `j` of sub-run `i` (sub-runs enumerate `dims x regimes` in order)
/// uses RNG stream `i * chains + j`. Stationary chains draw their initial
/// position from the chain's own stream before the first transition.
pub fn scaling_experiment(dims: &[usize], cfg: &ScalingConfig, seed: u64) -> ScalingOutcome {
    assert!(!dims.is_empty(), "need at least one dimension");
    let mut rows = Vec::new();
    for (dim_idx, &dim) in dims.iter().enumerate() {
        for (regime_idx, regime) in [Regime::Mode, Regime::Stationary].into_iter().enumerate() {
            let sub_run = (dim_idx * 2 + regime_idx) as u64;
            let per_chain: Vec<(f64, f64)> = (0..cfg.chains)
                .into_par_iter()
                .map(|chain| measure_chain(dim, regime, cfg, seed, sub_run * cfg.chains + chain))
                .collect();
            let mean_fine_step =
                per_chain.iter().map(|(s, _)| s).sum::<f64>() / per_chain.len() as f64;
            let mean_k = per_chain.iter().map(|(_, k)| k).sum::<f64>() / per_chain.len() as f64;
            rows.push(ScalingRow {
                dim,
                regime: regime.label().to_string(),
                mean_fine_step,
                fine_step_at_mean_k: cfg.step_size * (-mean_k).exp2(),
                chains: cfg.chains,
                measured_transitions: cfg.measured_transitions,
            });
        }
    }
    let slope = |label: &str| fit_log_slope(&rows, label);
    ScalingOutcome {
        slope_mode: slope("mode"),
        slope_stationary: slope("stationary"),
        rows,
        warmup_transitions: cfg.warmup_transitions,
        seed,
    }
}

/// Per-chain mean fine step and mean exponent over the measured window.
fn measure_chain(
    dim: usize,
    regime: Regime,
    cfg: &ScalingConfig,
    seed: u64,
    stream: u64,
) -> (f64, f64) {
    let model = gist_nuts_core::StdNormal::new(dim);
    let adaptive = AdaptiveConfig {
        step_size: cfg.step_size,
        max_doublings: cfg.max_doublings,
        accept_threshold: cfg.accept_threshold,
        max_halvings: cfg.max_halvings,
    };
    let mut rng = chain_rng(seed, stream);
    let mut position = match regime {
        Regime::Mode => vec![0.0; dim],
        Regime::Stationary => (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect(),
    };
    for _ in 0..cfg.warmup_transitions {
        let record = gist_nuts_core::adapt_nuts_step(&model, &position, &adaptive, &mut rng);
        position.copy_from_slice(&record.position);
    }
    let mut step_sum = 0.0;
    let mut k_sum = 0.0;
    for _ in 0..cfg.measured_transitions {
        let record = gist_nuts_core::adapt_nuts_step(&model, &position, &adaptive, &mut rng);
        let k = record.k_used.expect("adaptive transitions record k") as f64;
        step_sum += cfg.step_size * (-k).exp2();
        k_sum += k;
        position.copy_from_slice(&record.position);
    }
    let n = cfg.measured_transitions as f64;
    (step_sum / n, k_sum / n)
}

/// Least-squares slope of `ln(mean_fine_step)` against `ln(dim)` for one
/// regime; `None` with fewer than two dimensions.
fn fit_log_slope(rows: &[ScalingRow], regime: &str) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.regime == regime)
        .map(|r| ((r.dim as f64).ln(), r.mean_fine_step.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = points
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    Some(sxy / sxx)
}

/// Convenience used by tests and the verify command: collects the enlarged
/// states visited by an adaptive chain.
pub fn collect_enlarged_states<M: Model + ?Sized>(
    model: &M,
    cfg: &AdaptiveConfig,
    initial: &[f64],
    n: usize,
    seed: u64,
) -> Vec<gist_nuts_core::EnlargedState> {
    let mut rng = chain_rng(seed, 0);
    let mut position = initial.to_vec();
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let outcome = gist_nuts_core::adapt_nuts_transition(model, &position, cfg, &mut rng);
        position.copy_from_slice(&outcome.record.position);
        states.push(outcome.state);
    }
    states
}

/// Exact standard normal draw helper used by stationary initializations.
pub fn exact_normal_draws(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = chain_rng(seed, u64::MAX);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gist_nuts_core::Funnel;

    #[test]
    fn parallel_chains_match_sequential_reruns() {
        let model = Funnel::new(2);
        let config = SamplerConfig {
            step_size: 0.5,
            max_doublings: 5,
            mode: Mode::Adaptive {
                accept_threshold: 0.7,
                max_halvings: 10,
            },
        };
        let runs = run_chains(&model, &config, &[0.0; 3], 20, 4, 7);
        for (chain, run) in runs.iter().enumerate() {
            let redo = run_chain(&model, &config, &[0.0; 3], 20, 7, chain as u64);
            for (a, b) in run.records.iter().zip(&redo.records) {
                assert_eq!(a.position, b.position);
            }
        }
    }

    #[test]
    fn slope_fit_recovers_known_exponent() {
        let rows: Vec<ScalingRow> = [64usize, 256, 1024]
            .iter()
            .map(|&dim| ScalingRow {
                dim,
                regime: "mode".to_string(),
                mean_fine_step: (dim as f64).powf(-0.5),
                fine_step_at_mean_k: 0.0,
                chains: 1,
                measured_transitions: 1,
            })
            .collect();
        let slope = fit_log_slope(&rows, "mode").unwrap();
        assert!((slope + 0.5).abs() < 1e-12);
        assert!(fit_log_slope(&rows, "stationary").is_none());
    }
}
