//! The generative side: pre-training prior, inference-time task, and the
//! samplers that turn them into prompts.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{sample_gaussian_vector, RngStream};

/// What the model learned in pre-training: θ_M, σ_M² and the per-class
/// data variances σ₊², σ₋². The dimension is `theta_m.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainPrior {
    pub theta_m: Vec<f64>,
    pub sigma_m_sq: f64,
    pub sigma_plus_sq: f64,
    pub sigma_minus_sq: f64,
}

impl PretrainPrior {
    pub fn new(theta_m: Vec<f64>, sigma_m_sq: f64, sigma_plus_sq: f64, sigma_minus_sq: f64) -> Result<Self> {
        let p = PretrainPrior {
            theta_m,
            sigma_m_sq,
            sigma_plus_sq,
            sigma_minus_sq,
        };
        p.validate("prior")?;
        Ok(p)
    }

    /// Equal class variances σ₊² = σ₋² = σ².
    pub fn isotropic(theta_m: Vec<f64>, sigma_m_sq: f64, sigma_sq: f64) -> Result<Self> {
        Self::new(theta_m, sigma_m_sq, sigma_sq, sigma_sq)
    }

    pub fn dim(&self) -> usize {
        self.theta_m.len()
    }

    pub fn data_var(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.sigma_plus_sq,
            Label::Neg => self.sigma_minus_sq,
        }
    }

    /// Checks the type invariants; `path` prefixes field names in errors.
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.theta_m.is_empty() {
            return Err(LabError::config(format!("{path}.theta_m"), "must have dimension >= 1"));
        }
        if self.theta_m.iter().any(|v| !v.is_finite()) {
            return Err(LabError::config(format!("{path}.theta_m"), "must be finite"));
        }
        for (name, v) in [
            ("sigma_m_sq", self.sigma_m_sq),
            ("sigma_plus_sq", self.sigma_plus_sq),
            ("sigma_minus_sq", self.sigma_minus_sq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::config(format!("{path}.{name}"), format!("must be a finite variance > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// The inference-time distribution the prompt examples come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub theta_plus_e: Vec<f64>,
    pub theta_minus_e: Vec<f64>,
    pub sigma_eplus_sq: f64,
    pub sigma_eminus_sq: f64,
    /// Probability that a +1-labeled example's feature comes from the θ₊ cluster.
    pub p_plus_e: f64,
    /// Probability that a −1-labeled example's feature comes from the θ₋ cluster.
    pub p_minus_e: f64,
    pub pi: f64,
}

impl TaskSpec {
    /// Noise-free task with point-mass centers.
    pub fn clean(theta_plus_e: Vec<f64>, theta_minus_e: Vec<f64>, pi: f64) -> Self {
        TaskSpec {
            theta_plus_e,
            theta_minus_e,
            sigma_eplus_sq: 0.0,
            sigma_eminus_sq: 0.0,
            p_plus_e: 1.0,
            p_minus_e: 1.0,
            pi,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta_plus_e.len()
    }

    pub fn center(&self, y: Label) -> &[f64] {
        match y {
            Label::Pos => &self.theta_plus_e,
            Label::Neg => &self.theta_minus_e,
        }
    }

    pub fn spread(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.sigma_eplus_sq,
            Label::Neg => self.sigma_eminus_sq,
        }
    }

    pub fn fidelity(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.p_plus_e,
            Label::Neg => self.p_minus_e,
        }
    }

    pub fn validate(&self, path: &str, dim: usize) -> Result<()> {
        for (name, v) in [("theta_plus_e", &self.theta_plus_e), ("theta_minus_e", &self.theta_minus_e)] {
            if v.len() != dim {
                return Err(LabError::config(
                    format!("{path}.{name}"),
                    format!("has dimension {} but the prior has dimension {dim}", v.len()),
                ));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(LabError::config(format!("{path}.{name}"), "must be finite"));
            }
        }
        for (name, v) in [("sigma_eplus_sq", self.sigma_eplus_sq), ("sigma_eminus_sq", self.sigma_eminus_sq)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LabError::config(format!("{path}.{name}"), format!("must be a finite spread >= 0, got {v}")));
            }
        }
        for (name, v) in [("p_plus_e", self.p_plus_e), ("p_minus_e", self.p_minus_e), ("pi", self.pi)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LabError::config(format!("{path}.{name}"), format!("must be a probability in [0,1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Pos, Label::Neg];

    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pos => "+1",
            Label::Neg => "-1",
        })
    }
}

impl FromStr for Label {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+1" | "1" => Ok(Label::Pos),
            "-1" => Ok(Label::Neg),
            _ => Err(LabError::Argument(format!("label must be +1 or -1, got `{s}`"))),
        }
    }
}

/// Which class the query is drawn from. `Random` picks each with probability 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryClass {
    Positive,
    Negative,
    Random,
}

impl QueryClass {
    pub fn resolve(self, rng: &mut RngStream) -> Label {
        match self {
            QueryClass::Positive => Label::Pos,
            QueryClass::Negative => Label::Neg,
            QueryClass::Random => {
                if rng.bernoulli(0.5) {
                    Label::Pos
                } else {
                    Label::Neg
                }
            }
        }
    }
}

impl From<Label> for QueryClass {
    fn from(y: Label) -> Self {
        match y {
            Label::Pos => QueryClass::Positive,
            Label::Neg => QueryClass::Negative,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prompt {
    pub examples: Vec<LabeledExample>,
    pub query_x: Vec<f64>,
    pub query_y: Label,
    pub realized_theta_plus: Vec<f64>,
    pub realized_theta_minus: Vec<f64>,
}

impl Prompt {
    pub fn k(&self) -> usize {
        self.examples.len()
    }

    pub fn n_pos(&self) -> usize {
        self.examples.iter().filter(|e| e.y == Label::Pos).count()
    }
}

/// One realization θ₊ ~ N(θ₊ᵉ, σ_{e+}²I), then θ₋ ~ N(θ₋ᵉ, σ_{e−}²I).
pub fn sample_task_means(task: &TaskSpec, rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
    let tp = sample_gaussian_vector(&task.theta_plus_e, task.sigma_eplus_sq, rng)?;
    let tn = sample_gaussian_vector(&task.theta_minus_e, task.sigma_eminus_sq, rng)?;
    Ok((tp, tn))
}

/// Draws y ~ Bernoulli(π); the feature comes from y's own cluster with
/// probability p_yᵉ, otherwise from the other one. The label is kept
/// either way.
pub fn sample_example(
    theta_plus: &[f64],
    theta_minus: &[f64],
    task: &TaskSpec,
    data_var_plus: f64,
    data_var_minus: f64,
    rng: &mut RngStream,
) -> Result<LabeledExample> {
    let y = if rng.bernoulli(task.pi) { Label::Pos } else { Label::Neg };
    let own = rng.bernoulli(task.fidelity(y));
    let cluster = if own { y } else { y.flip() };
    let x = match cluster {
        Label::Pos => sample_gaussian_vector(theta_plus, data_var_plus, rng)?,
        Label::Neg => sample_gaussian_vector(theta_minus, data_var_minus, rng)?,
    };
    Ok(LabeledExample { x, y })
}

/// A clean draw from the `class` cluster with the given per-class variances.
pub fn sample_query(
    theta_plus: &[f64],
    theta_minus: &[f64],
    class: Label,
    var_plus: f64,
    var_minus: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    match class {
        Label::Pos => sample_gaussian_vector(theta_plus, var_plus, rng),
        Label::Neg => sample_gaussian_vector(theta_minus, var_minus, rng),
    }
}

fn check_dims(task: &TaskSpec, prior: &PretrainPrior) -> Result<()> {
    if task.dim() != prior.dim() || task.theta_minus_e.len() != prior.dim() {
        return Err(LabError::Argument(format!(
            "task dimension {} does not match prior dimension {}",
            task.dim(),
            prior.dim()
        )));
    }
    Ok(())
}

/// k i.i.d. examples and one clean query sharing a single (θ₊, θ₋) draw.
pub fn sample_prompt_iid(
    task: &TaskSpec,
    prior: &PretrainPrior,
    k: usize,
    query_class: QueryClass,
    rng: &mut RngStream,
) -> Result<Prompt> {
    check_dims(task, prior)?;
    let (tp, tn) = sample_task_means(task, rng)?;
    let mut examples = Vec::with_capacity(k);
    for _ in 0..k {
        examples.push(sample_example(&tp, &tn, task, prior.sigma_plus_sq, prior.sigma_minus_sq, rng)?);
    }
    let query_y = query_class.resolve(rng);
    let query_x = sample_query(&tp, &tn, query_y, prior.sigma_plus_sq, prior.sigma_minus_sq, rng)?;
    Ok(Prompt {
        examples,
        query_x,
        query_y,
        realized_theta_plus: tp,
        realized_theta_minus: tn,
    })
}

/// Exactly `n_pos_labels` examples labeled +1 (the first ones), the rest
/// −1. Each feature comes from the θ₊ cluster with probability
/// `true_pos_feature_frac` regardless of its label. The query class is
/// drawn with probability 1/2.
pub fn sample_prompt_fixed_fraction(
    task: &TaskSpec,
    prior: &PretrainPrior,
    k: usize,
    n_pos_labels: usize,
    true_pos_feature_frac: f64,
    rng: &mut RngStream,
) -> Result<Prompt> {
    if n_pos_labels > k {
        return Err(LabError::Argument(format!("n_pos_labels = {n_pos_labels} exceeds k = {k}")));
    }
    if !(0.0..=1.0).contains(&true_pos_feature_frac) {
        return Err(LabError::Argument(format!(
            "true_pos_feature_frac must lie in [0,1], got {true_pos_feature_frac}"
        )));
    }
    check_dims(task, prior)?;
    let (tp, tn) = sample_task_means(task, rng)?;
    let mut examples = Vec::with_capacity(k);
    for i in 0..k {
        let y = if i < n_pos_labels { Label::Pos } else { Label::Neg };
        let cluster = if rng.bernoulli(true_pos_feature_frac) { Label::Pos } else { Label::Neg };
        let x = sample_query(&tp, &tn, cluster, prior.sigma_plus_sq, prior.sigma_minus_sq, rng)?;
        examples.push(LabeledExample { x, y });
    }
    let query_y = QueryClass::Random.resolve(rng);
    let query_x = sample_query(&tp, &tn, query_y, prior.sigma_plus_sq, prior.sigma_minus_sq, rng)?;
    Ok(Prompt {
        examples,
        query_x,
        query_y,
        realized_theta_plus: tp,
        realized_theta_minus: tn,
    })
}

// ---------------------------------------------------------------------------
// Text format
//
//   # prompt k=2 m=2
//   theta_plus 0.5 0.5
//   theta_minus -0.5 -0.5
//   0.41 0.73 +1
//   -0.2 -1.1 -1
//   query 0.3 0.4 +1
//
// One block per prompt, blocks separated by blank lines. Floats use the
// shortest representation that round-trips.

fn push_values(out: &mut String, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{x:?}").unwrap();
    }
}

impl Prompt {
    pub fn to_text(&self) -> String {
        let m = self.query_x.len();
        let mut out = String::new();
        writeln!(out, "# prompt k={} m={m}", self.k()).unwrap();
        out.push_str("theta_plus ");
        push_values(&mut out, &self.realized_theta_plus);
        out.push_str("\ntheta_minus ");
        push_values(&mut out, &self.realized_theta_minus);
        out.push('\n');
        for e in &self.examples {
            push_values(&mut out, &e.x);
            writeln!(out, " {}", e.y).unwrap();
        }
        out.push_str("query ");
        push_values(&mut out, &self.query_x);
        writeln!(out, " {}", self.query_y).unwrap();
        out
    }
}

fn parse_floats(tokens: &[&str], line_no: usize) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| LabError::Argument(format!("line {line_no}: `{t}` is not a finite number")))
        })
        .collect()
}

/// Parses every prompt block in `text`.
pub fn parse_prompts(text: &str) -> Result<Vec<Prompt>> {
    let mut prompts = Vec::new();
    let mut tp: Option<Vec<f64>> = None;
    let mut tn: Option<Vec<f64>> = None;
    let mut examples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "theta_plus" => tp = Some(parse_floats(&tokens[1..], line_no)?),
            "theta_minus" => tn = Some(parse_floats(&tokens[1..], line_no)?),
            "query" => {
                if tokens.len() < 3 {
                    return Err(LabError::Argument(format!("line {line_no}: query needs features and a label")));
                }
                let query_x = parse_floats(&tokens[1..tokens.len() - 1], line_no)?;
                let query_y: Label = tokens[tokens.len() - 1].parse()?;
                let m = query_x.len();
                let realized_theta_plus = tp.take().unwrap_or_else(|| vec![f64::NAN; m]);
                let realized_theta_minus = tn.take().unwrap_or_else(|| vec![f64::NAN; m]);
                let examples: Vec<LabeledExample> = std::mem::take(&mut examples);
                if examples.iter().any(|e| e.x.len() != m)
                    || realized_theta_plus.len() != m
                    || realized_theta_minus.len() != m
                {
                    return Err(LabError::Argument(format!("line {line_no}: inconsistent dimensions in prompt")));
                }
                prompts.push(Prompt {
                    examples,
                    query_x,
                    query_y,
                    realized_theta_plus,
                    realized_theta_minus,
                });
            }
            _ => {
                if tokens.len() < 2 {
                    return Err(LabError::Argument(format!("line {line_no}: example needs features and a label")));
                }
                let x = parse_floats(&tokens[..tokens.len() - 1], line_no)?;
                let y: Label = tokens[tokens.len() - 1].parse()?;
                examples.push(LabeledExample { x, y });
            }
        }
    }
    if !examples.is_empty() {
        return Err(LabError::Argument("trailing examples without a query line".into()));
    }
    Ok(prompts)
}
