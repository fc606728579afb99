//! Conjugate posterior of the class centers and the positive fraction.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{Label, LabeledExample, PretrainPrior};
use crate::numerics::CompensatedVecSum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub theta_hat_plus: Vec<f64>,
    pub theta_hat_minus: Vec<f64>,
    pub var_theta_plus: f64,
    pub var_theta_minus: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Beta posterior of π: (n_pos + 1, n_neg + 1).
    pub pi_alpha: f64,
    pub pi_beta: f64,
}

impl PosteriorState {
    pub fn k(&self) -> usize {
        self.n_pos + self.n_neg
    }

    pub fn center(&self, y: Label) -> &[f64] {
        match y {
            Label::Pos => &self.theta_hat_plus,
            Label::Neg => &self.theta_hat_minus,
        }
    }

    pub fn var_theta(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.var_theta_plus,
            Label::Neg => self.var_theta_minus,
        }
    }

    pub fn count(&self, y: Label) -> usize {
        match y {
            Label::Pos => self.n_pos,
            Label::Neg => self.n_neg,
        }
    }

    /// Builds a posterior from per-class feature sums and counts.
    ///
    /// The prior mean is θ_M for the positive center and −θ_M for the
    /// negative one.
    pub fn from_sums(
        prior: &PretrainPrior,
        sum_pos: &[f64],
        n_pos: usize,
        sum_neg: &[f64],
        n_neg: usize,
    ) -> Result<Self> {
        let m = prior.dim();
        if sum_pos.len() != m || sum_neg.len() != m {
            return Err(LabError::Argument(format!(
                "feature sums have dimensions ({}, {}), prior has {m}",
                sum_pos.len(),
                sum_neg.len()
            )));
        }
        let sm = prior.sigma_m_sq;
        let (sp, sn) = (prior.sigma_plus_sq, prior.sigma_minus_sq);
        let dp = sp + n_pos as f64 * sm;
        let dn = sn + n_neg as f64 * sm;
        let theta_hat_plus = prior
            .theta_m
            .iter()
            .zip(sum_pos)
            .map(|(t, s)| (sp * t + sm * s) / dp)
            .collect();
        let theta_hat_minus = prior
            .theta_m
            .iter()
            .zip(sum_neg)
            .map(|(t, s)| (sm * s - sn * t) / dn)
            .collect();
        Ok(PosteriorState {
            theta_hat_plus,
            theta_hat_minus,
            var_theta_plus: sp * sm / dp,
            var_theta_minus: sn * sm / dn,
            n_pos,
            n_neg,
            pi_alpha: n_pos as f64 + 1.0,
            pi_beta: n_neg as f64 + 1.0,
        })
    }
}

/// Posterior after observing `examples` under `prior`.
///
/// Feature sums are compensated, so the result does not depend on the
/// order of the examples beyond rounding of the final division.
pub fn compute_posterior(examples: &[LabeledExample], prior: &PretrainPrior) -> Result<PosteriorState> {
    let m = prior.dim();
    let mut sum_pos = CompensatedVecSum::new(m);
    let mut sum_neg = CompensatedVecSum::new(m);
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for (i, e) in examples.iter().enumerate() {
        if e.x.len() != m {
            return Err(LabError::Argument(format!(
                "example {i} has dimension {} but the prior has dimension {m}",
                e.x.len()
            )));
        }
        match e.y {
            Label::Pos => {
                sum_pos.add(&e.x);
                n_pos += 1;
            }
            Label::Neg => {
                sum_neg.add(&e.x);
                n_neg += 1;
            }
        }
    }
    PosteriorState::from_sums(prior, &sum_pos.value(), n_pos, &sum_neg.value(), n_neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_prompt_iid, QueryClass, TaskSpec};
    use crate::numerics::RngStream;

    fn ex(x: &[f64], y: Label) -> LabeledExample {
        LabeledExample { x: x.to_vec(), y }
    }

    #[test]
    fn empty_examples_return_the_prior() {
        let prior = PretrainPrior::new(vec![0.3, -1.0], 2.0, 1.0, 3.0).unwrap();
        let p = compute_posterior(&[], &prior).unwrap();
        assert_eq!(p.theta_hat_plus, vec![0.3, -1.0]);
        assert_eq!(p.theta_hat_minus, vec![-0.3, 1.0]);
        assert_eq!((p.var_theta_plus, p.var_theta_minus), (2.0, 2.0));
        assert_eq!((p.pi_alpha, p.pi_beta), (1.0, 1.0));
    }

    #[test]
    fn hand_substituted_values() {
        let prior = PretrainPrior::isotropic(vec![0.5], 1.0, 1.0).unwrap();
        let p = compute_posterior(&[ex(&[1.5], Label::Pos)], &prior).unwrap();
        assert!((p.theta_hat_plus[0] - 1.0).abs() < 1e-15);
        assert!((p.var_theta_plus - 0.5).abs() < 1e-15);
        let q = compute_posterior(&[ex(&[-2.0], Label::Neg)], &prior).unwrap();
        assert!((q.theta_hat_minus[0] + 1.25).abs() < 1e-15);
        assert_eq!((q.n_pos, q.n_neg, q.pi_alpha, q.pi_beta), (0, 1, 1.0, 2.0));
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let prior = PretrainPrior::isotropic(vec![0.5, 0.5], 1.0, 1.0).unwrap();
        assert!(matches!(
            compute_posterior(&[ex(&[1.0], Label::Pos)], &prior),
            Err(LabError::Argument(_))
        ));
    }

    #[test]
    fn convex_combination_weight() {
        let prior = PretrainPrior::isotropic(vec![1.0, -2.0], 0.7, 1.3).unwrap();
        let mut prev_w = -1.0;
        let mut prev_var = f64::INFINITY;
        for n in 1..40 {
            let xs: Vec<LabeledExample> = (0..n).map(|i| ex(&[i as f64, 0.5 * i as f64], Label::Pos)).collect();
            let mean: Vec<f64> = (0..2)
                .map(|j| xs.iter().map(|e| e.x[j]).sum::<f64>() / n as f64)
                .collect();
            let p = compute_posterior(&xs, &prior).unwrap();
            let w = n as f64 * 0.7 / (1.3 + n as f64 * 0.7);
            for j in 0..2 {
                let want = (1.0 - w) * prior.theta_m[j] + w * mean[j];
                assert!((p.theta_hat_plus[j] - want).abs() < 1e-12);
            }
            assert!(w > prev_w);
            assert!(p.var_theta_plus < prev_var);
            prev_w = w;
            prev_var = p.var_theta_plus;
        }
        let big = PosteriorState::from_sums(&prior, &[0.0, 0.0], 1_000_000_000, &[0.0, 0.0], 0).unwrap();
        assert!(big.var_theta_plus < 1e-8);
    }

    #[test]
    fn permutation_invariance_at_ten_thousand() {
        let th = vec![0.5; 5];
        let mut task = TaskSpec::clean(th.clone(), th.iter().map(|v| -v).collect(), 0.5);
        task.sigma_eplus_sq = 1.0;
        let prior = PretrainPrior::isotropic(th, 1.0, 1.0).unwrap();
        let mut rng = RngStream::new(31, 0);
        let prompt = sample_prompt_iid(&task, &prior, 10_000, QueryClass::Random, &mut rng).unwrap();
        let base = compute_posterior(&prompt.examples, &prior).unwrap();
        let mut rev = prompt.examples.clone();
        rev.reverse();
        let mut shuffled = prompt.examples.clone();
        // deterministic interleave
        shuffled.sort_by(|a, b| a.x[2].total_cmp(&b.x[2]));
        for perm in [rev, shuffled] {
            let p = compute_posterior(&perm, &prior).unwrap();
            for j in 0..5 {
                assert!((p.theta_hat_plus[j] - base.theta_hat_plus[j]).abs() <= 1e-12);
                assert!((p.theta_hat_minus[j] - base.theta_hat_minus[j]).abs() <= 1e-12);
            }
            assert_eq!((p.n_pos, p.n_neg), (base.n_pos, base.n_neg));
        }
    }

    #[test]
    fn consistency_median_error_shrinks() {
        let theta = vec![0.9, -0.3, 0.4];
        let prior = PretrainPrior::isotropic(vec![0.0; 3], 1.0, 1.0).unwrap();
        let task = TaskSpec::clean(theta.clone(), vec![0.0; 3], 1.0);
        let mut medians = Vec::new();
        for n in [10usize, 100, 1000] {
            let mut errs: Vec<f64> = (0..200)
                .map(|r| {
                    let mut rng = RngStream::new(n as u64, r);
                    let p = sample_prompt_iid(&task, &prior, n, QueryClass::Positive, &mut rng).unwrap();
                    let post = compute_posterior(&p.examples, &prior).unwrap();
                    crate::numerics::vector::dist_sq(&post.theta_hat_plus, &theta).sqrt()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            medians.push(errs[100]);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
    }
}
