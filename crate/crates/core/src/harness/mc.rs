//! Monte Carlo accuracy estimation.
//!
//! Trial t of every cell draws from `RngStream(seed, t)` and nothing else,
//! so cells share random numbers, and results are reduced in trial order
//! so the worker count never changes a single bit of the output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harness::config::QueryLaw;
use crate::model::{sample_example, sample_task_means, Label, PretrainPrior, TaskSpec};
use crate::numerics::{sample_gaussian_vector, CompensatedSum, CompensatedVecSum, RngStream};
use crate::posterior::PosteriorState;
use crate::predictor::{decide, log_n_unchecked};
use crate::theory::{dominant_accuracy_pair, AccuracyInputs};

/// Maps `f` over `0..n` on a pool of `workers` threads, keeping index order.
pub fn par_map_indexed<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Argument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// One cell of an accuracy table.
#[derive(Clone, Debug)]
pub struct AccuracyCell<'a> {
    pub prior: &'a PretrainPrior,
    pub task: &'a TaskSpec,
    pub k: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub query_var: Option<f64>,
    pub query_law: QueryLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimate {
    pub k: usize,
    pub pi: f64,
    pub p_plus_e: f64,
    pub p_minus_e: f64,
    pub n_trials: usize,
    pub acc_pos: f64,
    pub se_pos: f64,
    pub acc_neg: f64,
    pub se_neg: f64,
    /// Mean of the two per-class accuracies and its standard error over trials.
    pub acc_overall: f64,
    pub se_overall: f64,
    /// Dominant term given the realized centers, averaged over trials.
    pub theory_conditional: Option<(f64, f64)>,
    /// Dominant term marginal over the centers, averaged over trials.
    pub theory_marginal: Option<(f64, f64)>,
    /// Trials whose decision direction vanished (count-ratio fallback used).
    pub degenerate_trials: usize,
}

impl AccuracyEstimate {
    /// The theory column whose query law matches the simulation.
    pub fn theory_for(&self, law: QueryLaw) -> Option<(f64, f64)> {
        match law {
            QueryLaw::SharedRealization => self.theory_conditional,
            QueryLaw::IndependentCenters => self.theory_marginal,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct TrialOutcome {
    correct: [bool; 2],
    conditional: Option<(f64, f64)>,
    marginal: Option<(f64, f64)>,
    degenerate: bool,
}

fn theory_or_fallback(inputs: &AccuracyInputs<'_>) -> Result<((f64, f64), bool)> {
    match dominant_accuracy_pair(inputs) {
        Ok(p) => Ok((p, false)),
        Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => Ok(((fallback_pos, fallback_neg), true)),
        Err(e) => Err(e),
    }
}

/// Examples of one trial reduced to the posterior, plus the realized centers.
pub(crate) fn draw_posterior(
    prior: &PretrainPrior,
    task: &TaskSpec,
    k: usize,
    rng: &mut RngStream,
) -> Result<(PosteriorState, Vec<f64>, Vec<f64>)> {
    let (tp, tn) = sample_task_means(task, rng)?;
    let m = prior.dim();
    let mut sp = CompensatedVecSum::new(m);
    let mut sn = CompensatedVecSum::new(m);
    let (mut np, mut nn) = (0usize, 0usize);
    for _ in 0..k {
        let e = sample_example(&tp, &tn, task, prior.sigma_plus_sq, prior.sigma_minus_sq, rng)?;
        match e.y {
            Label::Pos => {
                sp.add(&e.x);
                np += 1;
            }
            Label::Neg => {
                sn.add(&e.x);
                nn += 1;
            }
        }
    }
    let post = PosteriorState::from_sums(prior, &sp.value(), np, &sn.value(), nn)?;
    Ok((post, tp, tn))
}

fn run_trial(cell: &AccuracyCell<'_>, t: usize) -> Result<TrialOutcome> {
    let mut rng = RngStream::new(cell.seed, t as u64);
    let (post, tp, tn) = draw_posterior(cell.prior, cell.task, cell.k, &mut rng)?;
    let mut correct = [false; 2];
    for (i, class) in Label::BOTH.into_iter().enumerate() {
        let center = match cell.query_law {
            QueryLaw::SharedRealization => match class {
                Label::Pos => tp.clone(),
                Label::Neg => tn.clone(),
            },
            QueryLaw::IndependentCenters => {
                sample_gaussian_vector(cell.task.center(class), cell.task.spread(class), &mut rng)?
            }
        };
        let qv = cell.query_var.unwrap_or(cell.prior.data_var(class));
        let x = sample_gaussian_vector(&center, qv, &mut rng)?;
        correct[i] = decide(log_n_unchecked(&x, &post, cell.prior), post.n_pos, post.n_neg).label == class;
    }
    let (mut conditional, mut marginal, mut degenerate) = (None, None, false);
    if cell.prior.sigma_plus_sq == cell.prior.sigma_minus_sq {
        let c = AccuracyInputs::conditional(&post, cell.task, cell.prior, tp, tn).with_query_var(cell.query_var);
        let (cv, d) = theory_or_fallback(&c)?;
        let m = AccuracyInputs::marginal(&post, cell.task, cell.prior).with_query_var(cell.query_var);
        let (mv, _) = theory_or_fallback(&m)?;
        conditional = Some(cv);
        marginal = Some(mv);
        degenerate = d;
    }
    Ok(TrialOutcome {
        correct,
        conditional,
        marginal,
        degenerate,
    })
}

/// Standard error of a proportion, √(p(1−p)/n).
pub fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Per-class accuracy of the Bayes predictor with forced query classes:
/// every trial draws one (θ₊, θ₋) realization and one prompt, then scores
/// one +1 query and one −1 query against the same posterior.
pub fn estimate_accuracy(cell: &AccuracyCell<'_>, workers: usize) -> Result<AccuracyEstimate> {
    if cell.n_trials == 0 {
        return Err(LabError::Argument("n_trials must be >= 1".into()));
    }
    let outcomes = par_map_indexed(workers, cell.n_trials, |t| run_trial(cell, t))?;
    let n = cell.n_trials;
    let (mut hits, mut both, mut degenerate) = ([0usize; 2], 0usize, 0usize);
    let mut cond = [CompensatedSum::new(), CompensatedSum::new()];
    let mut marg = [CompensatedSum::new(), CompensatedSum::new()];
    let mut have_theory = true;
    for o in &outcomes {
        for i in 0..2 {
            hits[i] += o.correct[i] as usize;
        }
        both += (o.correct[0] && o.correct[1]) as usize;
        degenerate += o.degenerate as usize;
        match (o.conditional, o.marginal) {
            (Some(c), Some(m)) => {
                cond[0].add(c.0);
                cond[1].add(c.1);
                marg[0].add(m.0);
                marg[1].add(m.1);
            }
            _ => have_theory = false,
        }
    }
    let nf = n as f64;
    let acc_pos = hits[0] as f64 / nf;
    let acc_neg = hits[1] as f64 / nf;
    // per-trial score (c₊ + c₋)/2 takes values 0, 1/2, 1
    let acc_overall = 0.5 * (acc_pos + acc_neg);
    let second_moment = (both as f64 + 0.25 * (hits[0] + hits[1] - 2 * both) as f64) / nf;
    let se_overall = ((second_moment - acc_overall * acc_overall).max(0.0) / nf).sqrt();
    let avg = |s: &[CompensatedSum; 2]| (s[0].value() / nf, s[1].value() / nf);
    Ok(AccuracyEstimate {
        k: cell.k,
        pi: cell.task.pi,
        p_plus_e: cell.task.p_plus_e,
        p_minus_e: cell.task.p_minus_e,
        n_trials: n,
        acc_pos,
        se_pos: proportion_se(acc_pos, n),
        acc_neg,
        se_neg: proportion_se(acc_neg, n),
        acc_overall,
        se_overall,
        theory_conditional: have_theory.then(|| avg(&cond)),
        theory_marginal: have_theory.then(|| avg(&marg)),
        degenerate_trials: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matched() -> (PretrainPrior, TaskSpec) {
        let th = vec![0.5; 5];
        let prior = PretrainPrior::isotropic(th.clone(), 1.0, 1.0).unwrap();
        let mut task = TaskSpec::clean(th.clone(), th.iter().map(|v| -v).collect(), 0.5);
        task.sigma_eplus_sq = 1.0;
        task.sigma_eminus_sq = 1.0;
        (prior, task)
    }

    fn cell<'a>(prior: &'a PretrainPrior, task: &'a TaskSpec, k: usize, n: usize) -> AccuracyCell<'a> {
        AccuracyCell {
            prior,
            task,
            k,
            n_trials: n,
            seed: 99,
            query_var: None,
            query_law: QueryLaw::SharedRealization,
        }
    }

    #[test]
    fn single_trial_is_a_bernoulli() {
        let (prior, task) = matched();
        let e = estimate_accuracy(&cell(&prior, &task, 10, 1), 1).unwrap();
        assert!(e.acc_pos == 0.0 || e.acc_pos == 1.0);
        assert!(e.acc_neg == 0.0 || e.acc_neg == 1.0);
        assert_eq!(e.se_pos, 0.0);
    }

    #[test]
    fn pi_one_starves_the_negative_class() {
        // fixed centers, so the prior-only negative posterior is the only
        // thing the −1 query can match; the count term ln(1/(k+1)) wins as k grows
        let (prior, mut task) = matched();
        task.pi = 1.0;
        task.sigma_eplus_sq = 0.0;
        task.sigma_eminus_sq = 0.0;
        let at = |k| estimate_accuracy(&cell(&prior, &task, k, 2000), 1).unwrap().acc_neg;
        let (a100, a1000) = (at(100), at(1000));
        assert!(a100 < 0.2 && a1000 < 0.1 && a1000 < a100, "{a100} {a1000}");
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (prior, task) = matched();
        let a = estimate_accuracy(&cell(&prior, &task, 20, 3000), 1).unwrap();
        let b = estimate_accuracy(&cell(&prior, &task, 20, 3000), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overall_standard_error_matches_direct_formula() {
        let (prior, task) = matched();
        let c = cell(&prior, &task, 5, 500);
        let e = estimate_accuracy(&c, 1).unwrap();
        let scores: Vec<f64> = (0..500)
            .map(|t| {
                let o = run_trial(&c, t).unwrap();
                0.5 * (o.correct[0] as u8 as f64 + o.correct[1] as u8 as f64)
            })
            .collect();
        let mean = scores.iter().sum::<f64>() / 500.0;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 500.0;
        assert!((mean - e.acc_overall).abs() < 1e-12);
        assert!(((var / 500.0).sqrt() - e.se_overall).abs() < 1e-12);
    }

    #[test]
    fn unequal_variances_have_no_closed_form_column() {
        let prior = PretrainPrior::new(vec![1.0], 1.0, 1.0, 4.0).unwrap();
        let task = TaskSpec::clean(vec![1.0], vec![-1.0], 0.5);
        let e = estimate_accuracy(&cell(&prior, &task, 10, 50), 1).unwrap();
        assert!(e.theory_conditional.is_none() && e.theory_marginal.is_none());
    }
}
