//! The in-context decision rule and the fixed-fraction (mean-reversion)
//! predictor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{Label, PretrainPrior};
use crate::numerics::beta::ln_beta_interval;
use crate::numerics::vector::dist_sq;
use crate::posterior::PosteriorState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// log N(x), the class-conditional log likelihood ratio.
    pub log_n: f64,
    /// (n_neg + 1)/(n_pos + 1).
    pub count_ratio: f64,
    pub prob_pos: f64,
    pub prob_neg: f64,
    pub label: Label,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_dim(x: &[f64], post: &PosteriorState, prior: &PretrainPrior) -> Result<()> {
    let m = prior.dim();
    if x.len() != m || post.theta_hat_plus.len() != m || post.theta_hat_minus.len() != m {
        return Err(LabError::Argument(format!(
            "query dimension {} / posterior dimension {} do not match prior dimension {m}",
            x.len(),
            post.theta_hat_plus.len()
        )));
    }
    Ok(())
}

/// ln P(x | y, examples, M): the Gaussian predictive density of class `y`,
/// N(θ̂_y, (σ_y² + σ_{θ,y}²) I).
pub fn class_log_density(x: &[f64], y: Label, post: &PosteriorState, prior: &PretrainPrior) -> Result<f64> {
    check_dim(x, post, prior)?;
    let v = prior.data_var(y) + post.var_theta(y);
    let m = x.len() as f64;
    Ok(-0.5 * m * (2.0 * PI * v).ln() - dist_sq(x, post.center(y)) / (2.0 * v))
}

// Shared by the checked entry point and the Monte Carlo hot loop.
pub(crate) fn log_n_unchecked(x: &[f64], post: &PosteriorState, prior: &PretrainPrior) -> f64 {
    let vp = prior.sigma_plus_sq + post.var_theta_plus;
    let vn = prior.sigma_minus_sq + post.var_theta_minus;
    let (a, b) = (&post.theta_hat_plus, &post.theta_hat_minus);
    let m = x.len() as f64;
    // ‖x−b‖²/(2vn) − ‖x−a‖²/(2vp), split into the affine difference
    // (a−b)ᵀ(2x−a−b)/(2vp) and a quadratic part that vanishes when vp = vn;
    // subtracting the two squared distances directly cancels catastrophically
    // for large ‖x‖
    let affine: f64 = a.iter().zip(b).zip(x).map(|((ai, bi), xi)| (ai - bi) * (2.0 * xi - ai - bi)).sum();
    let quad = if vp == vn { 0.0 } else { dist_sq(x, b) * (vp - vn) / (2.0 * vp * vn) };
    0.5 * m * (vn / vp).ln() + affine / (2.0 * vp) + quad
}

/// log N(x). With unequal effective variances the zero set is a sphere,
/// with equal ones a hyperplane.
pub fn log_likelihood_ratio(x: &[f64], post: &PosteriorState, prior: &PretrainPrior) -> Result<f64> {
    check_dim(x, post, prior)?;
    Ok(log_n_unchecked(x, post, prior))
}

/// f_ICL(x) = log N(x) − log((n_neg+1)/(n_pos+1)); predict +1 iff f ≥ 0.
pub fn decision_function(x: &[f64], post: &PosteriorState, prior: &PretrainPrior) -> Result<f64> {
    Ok(log_likelihood_ratio(x, post, prior)? - ln_count_ratio(post.n_pos, post.n_neg))
}

pub(crate) fn ln_count_ratio(n_pos: usize, n_neg: usize) -> f64 {
    ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln()
}

/// Decision from a given log N(x) and label counts.
pub fn decide(log_n: f64, n_pos: usize, n_neg: usize) -> Decision {
    let count_ratio = (n_neg as f64 + 1.0) / (n_pos as f64 + 1.0);
    let log_odds = log_n - count_ratio.ln();
    Decision {
        log_n,
        count_ratio,
        prob_pos: sigmoid(log_odds),
        prob_neg: sigmoid(-log_odds),
        label: if log_odds >= 0.0 { Label::Pos } else { Label::Neg },
    }
}

pub fn predict(x: &[f64], post: &PosteriorState, prior: &PretrainPrior) -> Result<Decision> {
    let log_n = log_likelihood_ratio(x, post, prior)?;
    Ok(decide(log_n, post.n_pos, post.n_neg))
}

// ---------------------------------------------------------------------------
// Fixed-fraction prior

/// Discretized Beta(α, β) prior on the fraction of positive labels among
/// the k examples plus the query, supported on i/(k+1), i = 0..=k+1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracPrior {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
}

impl FracPrior {
    pub fn new(alpha: f64, beta: f64, k: usize) -> Result<Self> {
        let fp = FracPrior { alpha, beta, k };
        fp.validate("frac_prior")?;
        Ok(fp)
    }

    /// α + β = `concentration`, mean α/(α+β) = `center`.
    pub fn centered(center: f64, concentration: f64, k: usize) -> Result<Self> {
        Self::new(center * concentration, (1.0 - center) * concentration, k)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::config(format!("{path}.{name}"), format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn grid_len(&self) -> usize {
        self.k + 2
    }

    /// Bin of grid point i: half a step either side, clipped to [0, 1].
    pub fn bin(&self, i: usize) -> (f64, f64) {
        let d = 2.0 * (self.k as f64 + 1.0);
        let lo = if i == 0 { 0.0 } else { (2 * i - 1) as f64 / d };
        let hi = if i == self.k + 1 { 1.0 } else { (2 * i + 1) as f64 / d };
        (lo, hi)
    }

    pub fn ln_pmf(&self, i: usize) -> Result<f64> {
        if i > self.k + 1 {
            return Err(LabError::Argument(format!("grid index {i} outside 0..={}", self.k + 1)));
        }
        let (lo, hi) = self.bin(i);
        ln_beta_interval(self.alpha, self.beta, lo, hi)
    }

    /// True when k + 1 is even, a case for which the bin scheme was not
    /// originally laid out; results are still well defined.
    pub fn even_parity(&self) -> bool {
        (self.k + 1) % 2 == 0
    }
}

pub fn mean_reversion_frac_pmf(fp: &FracPrior, i: usize) -> Result<f64> {
    Ok(fp.ln_pmf(i)?.exp())
}

/// ln of the posterior odds shift r with W₊ = 1/(1 + eʳ):
/// r = ln pmf(n) − ln pmf(n+1) + ln((k − n + 1)/(n + 1)).
pub fn mean_reversion_log_shift(n_pos: usize, fp: &FracPrior) -> Result<f64> {
    if n_pos > fp.k {
        return Err(LabError::Argument(format!("n_pos = {n_pos} exceeds k = {}", fp.k)));
    }
    let a = fp.ln_pmf(n_pos)?;
    let b = fp.ln_pmf(n_pos + 1)?;
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return Err(LabError::DegeneratePrior(format!(
            "both grid points {n_pos} and {} carry zero mass",
            n_pos + 1
        )));
    }
    let comb = ((fp.k - n_pos + 1) as f64 / (n_pos as f64 + 1.0)).ln();
    Ok(a - b + comb)
}

/// Predicted-positive probability from log class densities.
pub fn mean_reversion_predict_ln(ln_lik_pos: f64, ln_lik_neg: f64, n_pos: usize, fp: &FracPrior) -> Result<f64> {
    if ln_lik_pos.is_nan() || ln_lik_neg.is_nan() || ln_lik_pos == f64::INFINITY || ln_lik_neg == f64::INFINITY {
        return Err(LabError::Domain("log likelihoods must be < +inf and not NaN".into()));
    }
    let r = mean_reversion_log_shift(n_pos, fp)?;
    let t = ln_lik_pos - ln_lik_neg - r;
    if t.is_nan() {
        return Err(LabError::Domain("likelihoods and fraction weights are both degenerate".into()));
    }
    Ok(sigmoid(t))
}

/// lik_pos·W₊ / (lik_pos·W₊ + lik_neg·W₋) with the fraction-posterior weight
/// W₊ = 1/(1 + [pmf(n)/pmf(n+1)]·(k−n+1)/(1+n)), evaluated in log space.
pub fn mean_reversion_predict(lik_pos: f64, lik_neg: f64, n_pos: usize, fp: &FracPrior) -> Result<f64> {
    if !(lik_pos > 0.0 && lik_neg > 0.0 && lik_pos.is_finite() && lik_neg.is_finite()) {
        return Err(LabError::Domain(format!(
            "likelihoods must be positive and finite, got ({lik_pos}, {lik_neg})"
        )));
    }
    mean_reversion_predict_ln(lik_pos.ln(), lik_neg.ln(), n_pos, fp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeanReversionLimit {
    PosCertain,
    NegCertain,
    Indeterminate,
}

impl MeanReversionLimit {
    pub fn as_str(self) -> &'static str {
        match self {
            MeanReversionLimit::PosCertain => "POS_CERTAIN",
            MeanReversionLimit::NegCertain => "NEG_CERTAIN",
            MeanReversionLimit::Indeterminate => "INDETERMINATE",
        }
    }
}

/// Limit of the fixed-fraction prediction as the fraction prior
/// concentrates at π: the observed count is compared with the band
/// [⌊π(k+1)⌋ − 1, ⌈π(k+1)⌉ + 1].
pub fn mean_reversion_limit(n_pos: usize, k: usize, pi: f64) -> MeanReversionLimit {
    let mut target = pi * (k as f64 + 1.0);
    let nearest = target.round();
    if (target - nearest).abs() < 1e-9 {
        target = nearest;
    }
    let n = n_pos as f64;
    if n < target.floor() - 1.0 {
        MeanReversionLimit::PosCertain
    } else if n > target.ceil() + 1.0 {
        MeanReversionLimit::NegCertain
    } else {
        MeanReversionLimit::Indeterminate
    }
}
