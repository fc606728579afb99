//! Named configurations for the standard experiments.
//!
//! Every preset shares the base geometry θ_M = 0.5·1₅ (so ‖θ_M‖² = 1.25)
//! with σ_M² = σ² = 1 unless stated otherwise.

use crate::error::{LabError, Result};
use crate::harness::config::{ConvergenceConfig, ExperimentConfig, MeanReversionConfig, QueryLaw};
use crate::model::{PretrainPrior, TaskSpec};

pub const PRESET_NAMES: [&str; 8] = [
    "matched",
    "contradict",
    "gap",
    "imbalance",
    "noise",
    "mean-reversion",
    "convergence",
    "unequal-variance",
];

const SEED: u64 = 20_240_601;

fn theta_m() -> Vec<f64> {
    vec![0.5; 5]
}

fn matched_task(spread: f64) -> TaskSpec {
    let th = theta_m();
    TaskSpec {
        theta_minus_e: th.iter().map(|v| -v).collect(),
        theta_plus_e: th,
        sigma_eplus_sq: spread,
        sigma_eminus_sq: spread,
        p_plus_e: 1.0,
        p_minus_e: 1.0,
        pi: 0.5,
    }
}

fn base(name: &str, sigma_m_sq: f64, spread: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        prior: PretrainPrior {
            theta_m: theta_m(),
            sigma_m_sq,
            sigma_plus_sq: 1.0,
            sigma_minus_sq: 1.0,
        },
        task: matched_task(spread),
        k_values: vec![10, 20, 50, 100],
        n_trials: 20_000,
        seed: SEED,
        query_var: None,
        query_law: QueryLaw::SharedRealization,
        pi_grid: vec![],
        noise_grid: vec![],
        mean_reversion: MeanReversionConfig::default(),
        convergence: ConvergenceConfig::default(),
        output_dir: None,
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        // accuracy versus k with matched knowledge and unit center spread
        "matched" => base(name, 1.0, 1.0),
        // matched versus contradicting knowledge over a wide k range
        "contradict" => ExperimentConfig {
            k_values: vec![1, 2, 5, 10, 20, 50, 100, 200],
            ..base(name, 1.0, 1.0)
        },
        // strong, narrow prior: small k is dominated by θ_M
        "gap" => ExperimentConfig {
            k_values: vec![1, 10_000],
            n_trials: 4_000,
            ..base(name, 0.01, 1e-6)
        },
        "imbalance" => ExperimentConfig {
            k_values: vec![100],
            pi_grid: vec![0.0, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 1.0],
            ..base(name, 1.0, 1.0)
        },
        // label noise with a sharp query (σ² = 0.01 at test time only)
        "noise" => ExperimentConfig {
            k_values: vec![100],
            query_var: Some(0.01),
            noise_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            ..base(name, 1.0, 1.0)
        },
        "mean-reversion" => ExperimentConfig {
            k_values: vec![99],
            n_trials: 2_000,
            ..base(name, 1.0, 0.0)
        },
        "convergence" => base(name, 1.0, 0.0),
        // σ₋² = 4σ₊² in one dimension: spherical boundary, no closed form
        "unequal-variance" => {
            let mut c = base(name, 1.0, 0.0);
            c.prior = PretrainPrior {
                theta_m: vec![1.0],
                sigma_m_sq: 1.0,
                sigma_plus_sq: 1.0,
                sigma_minus_sq: 4.0,
            };
            c.task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
            c.k_values = vec![100];
            c.n_trials = 100_000;
            c
        }
        _ => {
            return Err(LabError::config(
                "preset",
                format!("unknown preset `{name}`; expected one of {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(cfg)
}
