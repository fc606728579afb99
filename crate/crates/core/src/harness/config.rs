//! Experiment configuration: a JSON document, dotted `key=value`
//! overrides, and one validation pass before anything runs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::model::{PretrainPrior, TaskSpec};
use crate::predictor::FracPrior;

/// How the query's class center relates to the centers behind the examples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryLaw {
    /// Query and examples share one (θ₊, θ₋) draw.
    #[default]
    SharedRealization,
    /// The query's center is a fresh draw from N(θ_yᵉ, σ_{e,y}² I).
    IndependentCenters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanReversionConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Examples per prompt.
    pub k: usize,
    /// True positive-feature fractions to sweep.
    pub fractions: Vec<f64>,
    /// Prior centers for the flip-threshold sweep.
    pub threshold_centers: Vec<f64>,
    /// α + β for the threshold sweep priors.
    pub threshold_concentration: f64,
}

impl Default for MeanReversionConfig {
    fn default() -> Self {
        MeanReversionConfig {
            alpha: 5000.0,
            beta: 5000.0,
            k: 99,
            fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            threshold_centers: vec![0.2, 0.5, 0.8],
            threshold_concentration: 10_000.0,
        }
    }
}

impl MeanReversionConfig {
    pub fn frac_prior(&self) -> Result<FracPrior> {
        FracPrior::new(self.alpha, self.beta, self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub k_values: Vec<usize>,
    /// Independent example sets per k.
    pub redraws: usize,
    /// Queries scored against each example set.
    pub queries_per_redraw: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            k_values: vec![16, 32, 64, 128, 256, 512, 1024],
            redraws: 800,
            queries_per_redraw: 10_000,
        }
    }
}

fn default_name() -> String {
    "custom".into()
}

fn default_k_values() -> Vec<usize> {
    vec![10, 20, 50, 100]
}

fn default_trials() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub prior: PretrainPrior,
    pub task: TaskSpec,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Variance of the query around its class center; the class data
    /// variance when absent.
    #[serde(default)]
    pub query_var: Option<f64>,
    #[serde(default)]
    pub query_law: QueryLaw,
    #[serde(default)]
    pub pi_grid: Vec<f64>,
    /// Values used for both axes of the (p_plus_e, p_minus_e) grid.
    #[serde(default)]
    pub noise_grid: Vec<f64>,
    #[serde(default)]
    pub mean_reversion: MeanReversionConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn probs(field: &str, v: &[f64]) -> Result<()> {
    for (i, p) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(LabError::config(format!("{field}.{i}"), format!("must be a probability in [0,1], got {p}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| LabError::config("<document>", e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Applies `a.b.c=value` overrides. The value is read as JSON when it
    /// parses (numbers, arrays, `null`), otherwise as a string. Array
    /// elements are addressed by index, e.g. `prior.theta_m.0=1.5`.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| LabError::config(o, "override must have the form key=value"))?;
            let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut doc;
            let parts: Vec<&str> = key.split('.').collect();
            for (depth, part) in parts.iter().enumerate() {
                let last = depth + 1 == parts.len();
                node = match node {
                    Value::Object(map) => {
                        if !map.contains_key(*part) {
                            if last {
                                // new optional keys (e.g. a null field) are allowed at the leaf
                                map.insert(part.to_string(), Value::Null);
                            } else {
                                return Err(LabError::config(key, "unknown configuration key"));
                            }
                        }
                        map.get_mut(*part).unwrap()
                    }
                    Value::Array(items) => {
                        let idx: usize = part
                            .parse()
                            .map_err(|_| LabError::config(key, format!("`{part}` is not an array index")))?;
                        let len = items.len();
                        items
                            .get_mut(idx)
                            .ok_or_else(|| LabError::config(key, format!("index {idx} out of range (length {len})")))?
                    }
                    Value::Null if !last => {
                        *node = Value::Object(Default::default());
                        match node {
                            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
                            _ => unreachable!(),
                        }
                    }
                    _ => return Err(LabError::config(key, "path descends into a scalar")),
                };
            }
            *node = value;
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(|e| LabError::config("<override>", e.to_string()))?;
        Ok(cfg)
    }

    /// Checks every type invariant. Errors name the dotted field path.
    pub fn validate(&self) -> Result<()> {
        self.prior.validate("prior")?;
        self.task.validate("task", self.prior.dim())?;
        if self.k_values.is_empty() {
            return Err(LabError::config("k_values", "must not be empty"));
        }
        if self.n_trials == 0 {
            return Err(LabError::config("n_trials", "must be >= 1"));
        }
        if let Some(q) = self.query_var {
            if !(q > 0.0 && q.is_finite()) {
                return Err(LabError::config("query_var", format!("must be a finite variance > 0, got {q}")));
            }
        }
        probs("pi_grid", &self.pi_grid)?;
        probs("noise_grid", &self.noise_grid)?;
        let mr = &self.mean_reversion;
        FracPrior::new(mr.alpha, mr.beta, mr.k).map_err(|e| match e {
            LabError::InvalidConfig { field, reason } => {
                LabError::config(field.replace("frac_prior", "mean_reversion"), reason)
            }
            other => other,
        })?;
        probs("mean_reversion.fractions", &mr.fractions)?;
        for (i, c) in mr.threshold_centers.iter().enumerate() {
            if !(*c > 0.0 && *c < 1.0) {
                return Err(LabError::config(format!("mean_reversion.threshold_centers.{i}"), format!("must lie in (0,1), got {c}")));
            }
        }
        if !(mr.threshold_concentration > 0.0 && mr.threshold_concentration.is_finite()) {
            return Err(LabError::config("mean_reversion.threshold_concentration", "must be finite and > 0"));
        }
        let cv = &self.convergence;
        if cv.k_values.len() < 4 {
            return Err(LabError::config("convergence.k_values", "needs at least 4 values"));
        }
        if cv.k_values.windows(2).any(|w| w[1] <= w[0]) || cv.k_values[0] == 0 {
            return Err(LabError::config("convergence.k_values", "must be positive and strictly increasing"));
        }
        if cv.redraws < 2 {
            return Err(LabError::config("convergence.redraws", "must be >= 2"));
        }
        if cv.queries_per_redraw == 0 {
            return Err(LabError::config("convergence.queries_per_redraw", "must be >= 1"));
        }
        Ok(())
    }
}
