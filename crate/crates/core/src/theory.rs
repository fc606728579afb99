//! Closed-form accuracy predictions for the equal-variance model.
//!
//! With σ₊² = σ₋² = σ² and the posterior-variance terms dropped from the
//! quadratic parts, the decision region is the half-space
//! {x : wᵀ(x − mid) ≥ m_k} with w = θ̂₊ − θ̂₋ and mid = (θ̂₊ + θ̂₋)/2, so
//! the probability of a correct answer for a Gaussian query is one Φ.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{Label, PretrainPrior, TaskSpec};
use crate::numerics::normal_cdf;
use crate::numerics::vector::{dot, lincomb, midpoint, norm, sub};
use crate::posterior::PosteriorState;

pub const DEFAULT_DEGENERATE_EPS: f64 = 1e-9;

/// Distribution of the query's class center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conditioning {
    /// Center drawn from N(θ_yᵉ, σ_{e,y}² I): query variance σ² + σ_{e,y}².
    MarginalOverCenters,
    /// Center fixed at the realized draw: query variance σ².
    ConditionalOnRealized { theta_plus: Vec<f64>, theta_minus: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct AccuracyInputs<'a> {
    pub post: &'a PosteriorState,
    pub task: &'a TaskSpec,
    pub prior: &'a PretrainPrior,
    pub conditioning: Conditioning,
    /// Variance of the query around its class center; defaults to σ².
    pub query_var: Option<f64>,
    pub degenerate_eps: f64,
}

impl<'a> AccuracyInputs<'a> {
    pub fn marginal(post: &'a PosteriorState, task: &'a TaskSpec, prior: &'a PretrainPrior) -> Self {
        AccuracyInputs {
            post,
            task,
            prior,
            conditioning: Conditioning::MarginalOverCenters,
            query_var: None,
            degenerate_eps: DEFAULT_DEGENERATE_EPS,
        }
    }

    pub fn conditional(
        post: &'a PosteriorState,
        task: &'a TaskSpec,
        prior: &'a PretrainPrior,
        theta_plus: Vec<f64>,
        theta_minus: Vec<f64>,
    ) -> Self {
        AccuracyInputs {
            conditioning: Conditioning::ConditionalOnRealized { theta_plus, theta_minus },
            ..Self::marginal(post, task, prior)
        }
    }

    pub fn with_query_var(mut self, v: Option<f64>) -> Self {
        self.query_var = v;
        self
    }

    fn sigma_sq(&self) -> Result<f64> {
        let p = self.prior;
        if p.sigma_plus_sq != p.sigma_minus_sq {
            return Err(LabError::Argument(format!(
                "closed-form accuracy needs equal class variances, got {} and {}",
                p.sigma_plus_sq, p.sigma_minus_sq
            )));
        }
        Ok(p.sigma_plus_sq)
    }

    /// z_k = log((n_neg+1)/(n_pos+1)), written as a difference of logs so
    /// that swapping the classes negates it exactly.
    pub fn z_k(&self) -> f64 {
        (self.post.n_neg as f64 + 1.0).ln() - (self.post.n_pos as f64 + 1.0).ln()
    }

    /// m_k = σ²(z_k − (m/2)·log((σ²+σ_{θ₋}²)/(σ²+σ_{θ₊}²))).
    pub fn m_k(&self) -> Result<f64> {
        let s2 = self.sigma_sq()?;
        let m = self.prior.dim() as f64;
        let var_term = (s2 + self.post.var_theta_minus).ln() - (s2 + self.post.var_theta_plus).ln();
        Ok(s2 * (self.z_k() - 0.5 * m * var_term))
    }
}

/// Accuracies when the direction vanishes and only the sign of the
/// offset decides: (0 or 1, 1 or 0), or (0.5, 0.5) when the offset is 0.
fn count_only_fallback(offset: f64) -> LabError {
    let (fallback_pos, fallback_neg) = if offset > 0.0 {
        (0.0, 1.0)
    } else if offset < 0.0 {
        (1.0, 0.0)
    } else {
        (0.5, 0.5)
    };
    LabError::DegenerateBoundary { fallback_pos, fallback_neg }
}

// P(correct) for the half-space {wᵀ(x − mid) ≥ offset} against
// x ~ N(center, s² I).
fn half_space_accuracy(w: &[f64], mid: &[f64], offset: f64, center: &[f64], sd: f64, class: Label) -> f64 {
    let proj = dot(w, &sub(center, mid));
    let a = (proj - offset) / (norm(w) * sd);
    match class {
        Label::Pos => normal_cdf(a),
        Label::Neg => normal_cdf(-a),
    }
}

/// The dominant term of the per-class accuracy: the exact Gaussian
/// half-space probability of the hyperplane decision region.
pub fn dominant_accuracy(inputs: &AccuracyInputs<'_>, true_class: Label) -> Result<f64> {
    let s2 = inputs.sigma_sq()?;
    let m_k = inputs.m_k()?;
    let w = sub(&inputs.post.theta_hat_plus, &inputs.post.theta_hat_minus);
    if norm(&w) <= inputs.degenerate_eps {
        return Err(count_only_fallback(m_k));
    }
    let mid = midpoint(&inputs.post.theta_hat_plus, &inputs.post.theta_hat_minus);
    let q = inputs.query_var.unwrap_or(s2);
    let (center, var) = match &inputs.conditioning {
        Conditioning::MarginalOverCenters => (inputs.task.center(true_class), q + inputs.task.spread(true_class)),
        Conditioning::ConditionalOnRealized { theta_plus, theta_minus } => match true_class {
            Label::Pos => (theta_plus.as_slice(), q),
            Label::Neg => (theta_minus.as_slice(), q),
        },
    };
    if center.len() != w.len() {
        return Err(LabError::Argument("class center dimension does not match the posterior".into()));
    }
    if !(var > 0.0) {
        return Err(LabError::Domain(format!("query variance must be > 0, got {var}")));
    }
    Ok(half_space_accuracy(&w, &mid, m_k, center, var.sqrt(), true_class))
}

/// Both classes, (P(correct | +1), P(correct | −1)).
pub fn dominant_accuracy_pair(inputs: &AccuracyInputs<'_>) -> Result<(f64, f64)> {
    Ok((dominant_accuracy(inputs, Label::Pos)?, dominant_accuracy(inputs, Label::Neg)?))
}

/// The explicit hyperplane {x : normalᵀx = offset}; +1 is predicted on the
/// side where normalᵀx ≥ offset.
pub fn decision_hyperplane(post: &PosteriorState, task: &TaskSpec, prior: &PretrainPrior) -> Result<(Vec<f64>, f64)> {
    let inputs = AccuracyInputs::marginal(post, task, prior);
    let m_k = inputs.m_k()?;
    let w = sub(&post.theta_hat_plus, &post.theta_hat_minus);
    if norm(&w) <= inputs.degenerate_eps {
        return Err(count_only_fallback(m_k));
    }
    let mid = midpoint(&post.theta_hat_plus, &post.theta_hat_minus);
    let offset = m_k + dot(&w, &mid);
    Ok((w, offset))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCenters {
    pub theta_tilde_plus: Vec<f64>,
    pub theta_tilde_minus: Vec<f64>,
}

/// Where θ̂₊, θ̂₋ settle under label noise: θ̃₊ = p₊ᵉθ₊ᵉ + (1−p₊ᵉ)θ₋ᵉ and
/// θ̃₋ = p₋ᵉθ₋ᵉ + (1−p₋ᵉ)θ₊ᵉ.
pub fn effective_centers(task: &TaskSpec) -> EffectiveCenters {
    EffectiveCenters {
        theta_tilde_plus: lincomb(task.p_plus_e, &task.theta_plus_e, 1.0 - task.p_plus_e, &task.theta_minus_e),
        theta_tilde_minus: lincomb(task.p_minus_e, &task.theta_minus_e, 1.0 - task.p_minus_e, &task.theta_plus_e),
    }
}

/// Large-k limits (P₊*, P₋*) with the query variance equal to σ².
pub fn asymptotic_accuracy(task: &TaskSpec, sigma_sq: f64) -> Result<(f64, f64)> {
    asymptotic_accuracy_with_query_var(task, sigma_sq, sigma_sq)
}

/// Large-k limits with counts at their expectations and posterior centers
/// at the effective centers; `query_var` is the query's spread around its
/// class center before the center spread σ_{e±}² is added.
pub fn asymptotic_accuracy_with_query_var(task: &TaskSpec, sigma_sq: f64, query_var: f64) -> Result<(f64, f64)> {
    if !(sigma_sq > 0.0) || !(query_var > 0.0) {
        return Err(LabError::Domain(format!("variances must be > 0, got σ² = {sigma_sq}, query {query_var}")));
    }
    let ec = effective_centers(task);
    let w = sub(&ec.theta_tilde_plus, &ec.theta_tilde_minus);
    // log((1−π)/π); ±∞ at the endpoints pushes Φ to 0 or 1
    let z = (1.0 - task.pi).ln() - task.pi.ln();
    let offset = sigma_sq * z;
    if norm(&w) <= DEFAULT_DEGENERATE_EPS {
        return Err(count_only_fallback(offset));
    }
    let mid = midpoint(&ec.theta_tilde_plus, &ec.theta_tilde_minus);
    let pos = half_space_accuracy(&w, &mid, offset, &task.theta_plus_e, (query_var + task.sigma_eplus_sq).sqrt(), Label::Pos);
    let neg = half_space_accuracy(&w, &mid, offset, &task.theta_minus_e, (query_var + task.sigma_eminus_sq).sqrt(), Label::Neg);
    Ok((pos, neg))
}

/// Φ(‖θ_M‖/σ) − Φ(−‖θ_M‖/σ): how much better matched knowledge does than
/// contradicting knowledge before the examples outweigh the prior.
pub fn contradict_gap(theta_m_norm: f64, sigma_sq: f64) -> Result<f64> {
    if !(theta_m_norm >= 0.0 && theta_m_norm.is_finite()) || !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(LabError::Domain(format!(
            "contradict_gap needs ‖θ_M‖ >= 0 and σ² > 0, got ({theta_m_norm}, {sigma_sq})"
        )));
    }
    let r = theta_m_norm / sigma_sq.sqrt();
    Ok(normal_cdf(r) - normal_cdf(-r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoiseRegime {
    /// 1 − p₊ᵉ − p₋ᵉ < 0: most labels are right.
    CleanDominant,
    /// 1 − p₊ᵉ − p₋ᵉ = 0: the effective centers coincide.
    Degenerate,
    /// 1 − p₊ᵉ − p₋ᵉ > 0: most labels are flipped.
    NoiseDominant,
}

impl NoiseRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseRegime::CleanDominant => "CLEAN_DOMINANT",
            NoiseRegime::Degenerate => "DEGENERATE",
            NoiseRegime::NoiseDominant => "NOISE_DOMINANT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRegimeReport {
    pub regime: NoiseRegime,
    /// Some(true) when positive-class accuracy is known to increase in p₊ᵉ.
    pub pos_increasing_in_p_plus: Option<bool>,
    pub neg_increasing_in_p_minus: Option<bool>,
    /// Admissible (positive, negative) accuracy pairs in the degenerate regime.
    pub admissible_pairs: Vec<(f64, f64)>,
    pub note: String,
}

const REGIME_TOL: f64 = 1e-12;

pub fn noise_regime(p_plus_e: f64, p_minus_e: f64) -> Result<NoiseRegimeReport> {
    for v in [p_plus_e, p_minus_e] {
        if !(0.0..=1.0).contains(&v) {
            return Err(LabError::Domain(format!("noise fidelity {v} outside [0,1]")));
        }
    }
    let d = 1.0 - p_plus_e - p_minus_e;
    Ok(if d.abs() <= REGIME_TOL {
        NoiseRegimeReport {
            regime: NoiseRegime::Degenerate,
            pos_increasing_in_p_plus: None,
            neg_increasing_in_p_minus: None,
            admissible_pairs: vec![(0.0, 1.0), (1.0, 0.0), (0.5, 0.5)],
            note: "effective centers coincide; the decision region is empty or the whole space".into(),
        }
    } else if d < 0.0 {
        NoiseRegimeReport {
            regime: NoiseRegime::CleanDominant,
            pos_increasing_in_p_plus: Some(true),
            neg_increasing_in_p_minus: Some(true),
            admissible_pairs: vec![],
            note: "positive accuracy increases in p_plus_e, negative accuracy in p_minus_e".into(),
        }
    } else {
        NoiseRegimeReport {
            regime: NoiseRegime::NoiseDominant,
            pos_increasing_in_p_plus: None,
            neg_increasing_in_p_minus: None,
            admissible_pairs: vec![],
            note: "direction depends on the specific (p_plus_e, p_minus_e)".into(),
        }
    })
}

/// Least-squares slope of ln(deviation) on ln(k).
pub fn convergence_rate_estimate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return Err(LabError::Argument(format!("need at least 4 points, got {}", points.len())));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(LabError::Argument("k values must be strictly increasing".into()));
        }
    }
    if points.iter().any(|&(k, d)| !(k > 0.0 && d > 0.0 && d.is_finite())) {
        return Err(LabError::Argument("k and deviations must be positive and finite".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::predict;
    use crate::numerics::RngStream;

    const PHI_1: f64 = 0.84134474606854294859;
    const PHI_SQRT_1_25: f64 = 0.86822376135851363481;

    fn sym_post(theta: &[f64], n: usize, var: f64) -> PosteriorState {
        PosteriorState {
            theta_hat_plus: theta.to_vec(),
            theta_hat_minus: theta.iter().map(|v| -v).collect(),
            var_theta_plus: var,
            var_theta_minus: var,
            n_pos: n,
            n_neg: n,
            pi_alpha: n as f64 + 1.0,
            pi_beta: n as f64 + 1.0,
        }
    }

    #[test]
    fn fully_symmetric_half_space() {
        let theta = [0.6, 0.8];
        let prior = PretrainPrior::isotropic(theta.to_vec(), 1.0, 0.5).unwrap();
        let mut task = TaskSpec::clean(theta.to_vec(), vec![-0.6, -0.8], 0.5);
        task.sigma_eplus_sq = 0.5;
        task.sigma_eminus_sq = 0.5;
        let post = sym_post(&theta, 7, 0.1);
        let inputs = AccuracyInputs::marginal(&post, &task, &prior);
        assert_eq!(inputs.m_k().unwrap(), 0.0);
        let (p, n) = dominant_accuracy_pair(&inputs).unwrap();
        assert!((p - PHI_1).abs() < 1e-12, "{p}");
        assert!((n - PHI_1).abs() < 1e-12);
    }

    #[test]
    fn accuracy_vanishes_as_m_k_grows() {
        let theta = [1.0];
        let prior = PretrainPrior::isotropic(theta.to_vec(), 1.0, 1.0).unwrap();
        let task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
        let mut prev = 1.0;
        for n_neg in [0usize, 10, 100, 1000, 100_000, 10_000_000] {
            let mut post = sym_post(&theta, 0, 0.5);
            post.n_neg = n_neg;
            let acc = dominant_accuracy(&AccuracyInputs::marginal(&post, &task, &prior), Label::Pos).unwrap();
            assert!(acc <= prev);
            prev = acc;
        }
        assert!(prev < 1e-6, "{prev}");
    }

    #[test]
    fn degenerate_direction_reports_count_only_fallback() {
        let prior = PretrainPrior::isotropic(vec![0.0], 1.0, 1.0).unwrap();
        let task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
        let mut post = sym_post(&[0.0], 3, 0.5);
        match dominant_accuracy(&AccuracyInputs::marginal(&post, &task, &prior), Label::Pos) {
            Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => {
                assert_eq!((fallback_pos, fallback_neg), (0.5, 0.5))
            }
            other => panic!("{other:?}"),
        }
        post.n_neg = 10;
        post.var_theta_minus = 0.5;
        match dominant_accuracy(&AccuracyInputs::marginal(&post, &task, &prior), Label::Pos) {
            Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => {
                assert_eq!((fallback_pos, fallback_neg), (0.0, 1.0))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unequal_variances_rejected() {
        let prior = PretrainPrior::new(vec![0.0], 1.0, 1.0, 2.0).unwrap();
        let task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
        let post = sym_post(&[1.0], 3, 0.5);
        assert!(matches!(
            dominant_accuracy(&AccuracyInputs::marginal(&post, &task, &prior), Label::Pos),
            Err(LabError::Argument(_))
        ));
    }

    #[test]
    fn conditional_mode_uses_realized_centers() {
        let prior = PretrainPrior::isotropic(vec![1.0], 1.0, 1.0).unwrap();
        let mut task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
        task.sigma_eplus_sq = 3.0;
        let post = sym_post(&[1.0], 4, 0.2);
        let c = AccuracyInputs::conditional(&post, &task, &prior, vec![1.0], vec![-1.0]);
        // realized centers at the task centers and query variance 1 give Φ(1)·…:
        // projection 2·1 = 2, ‖w‖ = 2, sd = 1 → Φ(1)
        assert!((dominant_accuracy(&c, Label::Pos).unwrap() - PHI_1).abs() < 1e-12);
        let m = AccuracyInputs::marginal(&post, &task, &prior);
        assert!((dominant_accuracy(&m, Label::Pos).unwrap() - normal_cdf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn label_swap_is_exact() {
        let prior = PretrainPrior::isotropic(vec![0.4, -0.3, 0.2], 0.8, 1.3).unwrap();
        let mut task = TaskSpec::clean(vec![0.5, 0.1, -0.2], vec![-0.6, 0.3, 0.0], 0.3);
        task.sigma_eplus_sq = 0.4;
        task.sigma_eminus_sq = 0.9;
        task.p_plus_e = 0.8;
        task.p_minus_e = 0.95;
        let post = PosteriorState::from_sums(&prior, &[1.0, 2.0, -0.5], 4, &[-2.0, 0.1, 0.3], 9).unwrap();

        let sprior = PretrainPrior::isotropic(prior.theta_m.iter().map(|v| -v).collect(), 0.8, 1.3).unwrap();
        let stask = TaskSpec {
            theta_plus_e: task.theta_minus_e.clone(),
            theta_minus_e: task.theta_plus_e.clone(),
            sigma_eplus_sq: task.sigma_eminus_sq,
            sigma_eminus_sq: task.sigma_eplus_sq,
            p_plus_e: task.p_minus_e,
            p_minus_e: task.p_plus_e,
            pi: 1.0 - task.pi,
        };
        let spost = PosteriorState::from_sums(&sprior, &[-2.0, 0.1, 0.3], 9, &[1.0, 2.0, -0.5], 4).unwrap();
        let a = dominant_accuracy_pair(&AccuracyInputs::marginal(&post, &task, &prior)).unwrap();
        let b = dominant_accuracy_pair(&AccuracyInputs::marginal(&spost, &stask, &sprior)).unwrap();
        assert_eq!(a.0, b.1);
        assert_eq!(a.1, b.0);
    }

    #[test]
    fn translation_of_the_geometry() {
        let prior = PretrainPrior::isotropic(vec![0.4, -0.3], 0.8, 1.3).unwrap();
        let task = TaskSpec::clean(vec![0.5, 0.1], vec![-0.6, 0.3], 0.5);
        let post = PosteriorState::from_sums(&prior, &[1.0, 2.0], 4, &[-2.0, 0.1], 9).unwrap();
        let t = [3.0, -7.0];
        let shift = |v: &[f64]| -> Vec<f64> { v.iter().zip(&t).map(|(a, b)| a + b).collect() };
        let mut tpost = post.clone();
        tpost.theta_hat_plus = shift(&post.theta_hat_plus);
        tpost.theta_hat_minus = shift(&post.theta_hat_minus);
        let ttask = TaskSpec::clean(shift(&task.theta_plus_e), shift(&task.theta_minus_e), 0.5);
        let a = dominant_accuracy(&AccuracyInputs::marginal(&post, &task, &prior), Label::Pos).unwrap();
        let b = dominant_accuracy(&AccuracyInputs::marginal(&tpost, &ttask, &prior), Label::Pos).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn hyperplane_matches_predict_with_equal_counts() {
        let prior = PretrainPrior::isotropic(vec![0.5; 4], 1.0, 1.0).unwrap();
        let task = TaskSpec::clean(vec![0.5; 4], vec![-0.5; 4], 0.5);
        let post = PosteriorState::from_sums(&prior, &[3.0, 1.0, 2.5, -0.4], 6, &[-2.0, -1.0, 0.4, -3.0], 6).unwrap();
        let (normal, offset) = decision_hyperplane(&post, &task, &prior).unwrap();
        let mut rng = RngStream::new(21, 0);
        let (mut above, mut below) = (0, 0);
        while above < 1000 || below < 1000 {
            let x: Vec<f64> = (0..4).map(|_| 2.0 * rng.std_normal()).collect();
            let side = dot(&normal, &x) - offset;
            if side.abs() < 1e-9 {
                continue;
            }
            let label = predict(&x, &post, &prior).unwrap().label;
            if side > 0.0 {
                above += 1;
                assert_eq!(label, Label::Pos);
            } else {
                below += 1;
                assert_eq!(label, Label::Neg);
            }
        }
    }

    #[test]
    fn asymptotic_values() {
        let th = vec![0.5; 5];
        let task = TaskSpec::clean(th.clone(), th.iter().map(|v| -v).collect(), 0.5);
        let (p, n) = asymptotic_accuracy(&task, 1.0).unwrap();
        assert!((p - PHI_SQRT_1_25).abs() < 1e-12, "{p}");
        assert!((n - PHI_SQRT_1_25).abs() < 1e-12);
        let mut prev = 1.0;
        for pi in [0.1, 0.01, 1e-4, 1e-8, 0.0] {
            let mut t = task.clone();
            t.pi = pi;
            let (p, _) = asymptotic_accuracy(&t, 1.0).unwrap();
            assert!(p <= prev);
            prev = p;
        }
        assert_eq!(prev, 0.0);
        let mut t = task.clone();
        t.p_plus_e = 0.5;
        t.p_minus_e = 0.5;
        assert!(matches!(asymptotic_accuracy(&t, 1.0), Err(LabError::DegenerateBoundary { .. })));
    }

    #[test]
    fn effective_center_identities() {
        let th = vec![0.5, -1.0, 2.0];
        let neg: Vec<f64> = th.iter().map(|v| -v).collect();
        let task = TaskSpec::clean(th.clone(), neg.clone(), 0.5);
        let ec = effective_centers(&task);
        assert_eq!((ec.theta_tilde_plus, ec.theta_tilde_minus), (th.clone(), neg.clone()));
        let mut t = task.clone();
        t.p_plus_e = 0.8;
        t.p_minus_e = 0.35;
        let ec = effective_centers(&t);
        for j in 0..3 {
            let diff = ec.theta_tilde_minus[j] - ec.theta_tilde_plus[j];
            let sum = ec.theta_tilde_plus[j] + ec.theta_tilde_minus[j];
            assert!((diff - 2.0 * (1.0 - 0.8 - 0.35) * th[j]).abs() < 1e-14);
            assert!((sum - 2.0 * (0.8 - 0.35) * th[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn gap_values() {
        assert_eq!(contradict_gap(0.0, 1.0).unwrap(), 0.0);
        assert!((contradict_gap(1.25f64.sqrt(), 1.0).unwrap() - 0.73644752271702726963).abs() < 1e-12);
        let mut prev = -1.0;
        for i in 0..50 {
            let g = contradict_gap(i as f64 * 0.1, 1.0).unwrap();
            assert!(g > prev);
            prev = g;
        }
        assert!(contradict_gap(1.0, 0.0).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(noise_regime(1.0, 1.0).unwrap().regime, NoiseRegime::CleanDominant);
        let d = noise_regime(0.5, 0.5).unwrap();
        assert_eq!(d.regime, NoiseRegime::Degenerate);
        assert_eq!(d.admissible_pairs, vec![(0.0, 1.0), (1.0, 0.0), (0.5, 0.5)]);
        assert_eq!(noise_regime(0.3, 0.7).unwrap().regime, NoiseRegime::Degenerate);
        let n = noise_regime(0.2, 0.3).unwrap();
        assert_eq!(n.regime, NoiseRegime::NoiseDominant);
        assert!(n.note.contains("depends on the specific"));
        assert!(noise_regime(1.2, 0.0).is_err());
    }

    #[test]
    fn power_law_slopes() {
        let ks = [16.0, 32.0, 64.0, 128.0, 256.0];
        let half: Vec<(f64, f64)> = ks.iter().map(|&k| (k, 3.0 / f64::sqrt(k))).collect();
        assert!((convergence_rate_estimate(&half).unwrap() + 0.5).abs() < 1e-6);
        let one: Vec<(f64, f64)> = ks.iter().map(|&k| (k, 0.2 / k)).collect();
        assert!((convergence_rate_estimate(&one).unwrap() + 1.0).abs() < 1e-6);
        assert!(convergence_rate_estimate(&half[..3]).is_err());
        let mut bad = half.clone();
        bad[2].1 = 0.0;
        assert!(convergence_rate_estimate(&bad).is_err());
        bad = half.clone();
        bad.swap(0, 1);
        assert!(convergence_rate_estimate(&bad).is_err());
    }
}
