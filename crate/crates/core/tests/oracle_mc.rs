//! Monte Carlo against the quadrature oracle, evaluated on the very
//! posteriors the simulation scored.

use icl_lab::harness::config::QueryLaw;
use icl_lab::harness::mc::{estimate_accuracy, AccuracyCell};
use icl_lab::harness::presets::preset;
use icl_lab::harness::scenarios::oracle_average;
use icl_lab::model::{PretrainPrior, TaskSpec};

fn within_3se(cell: &AccuracyCell<'_>) {
    let e = estimate_accuracy(cell, 1).unwrap();
    let (op, on) = oracle_average(cell, 1).unwrap();
    assert!((e.acc_pos - op).abs() <= 3.0 * e.se_pos, "+1: MC {} vs oracle {op} (se {})", e.acc_pos, e.se_pos);
    assert!((e.acc_neg - on).abs() <= 3.0 * e.se_neg, "-1: MC {} vs oracle {on} (se {})", e.acc_neg, e.se_neg);
}

#[test]
fn unequal_variances_match_the_oracle() {
    let cfg = preset("unequal-variance").unwrap();
    within_3se(&AccuracyCell {
        prior: &cfg.prior,
        task: &cfg.task,
        k: 100,
        n_trials: cfg.n_trials,
        seed: cfg.seed,
        query_var: None,
        query_law: cfg.query_law,
    });
}

#[test]
fn one_dimensional_matched_knowledge_matches_the_oracle() {
    let prior = PretrainPrior::isotropic(vec![0.5], 1.0, 1.0).unwrap();
    let mut task = TaskSpec::clean(vec![0.5], vec![-0.5], 0.5);
    task.sigma_eplus_sq = 1.0;
    task.sigma_eminus_sq = 1.0;
    for law in [QueryLaw::SharedRealization, QueryLaw::IndependentCenters] {
        within_3se(&AccuracyCell {
            prior: &prior,
            task: &task,
            k: 100,
            n_trials: 100_000,
            seed: 5,
            query_var: None,
            query_law: law,
        });
    }
}

#[test]
fn oracle_agrees_with_dominant_term_when_counts_are_large() {
    // the closed form drops terms of order log k / k; at k = 4000 they are
    // far below the Monte Carlo resolution, so oracle and theory coincide
    let prior = PretrainPrior::isotropic(vec![0.3, -0.2], 1.0, 1.0).unwrap();
    let mut task = TaskSpec::clean(vec![0.3, -0.2], vec![-0.3, 0.2], 0.5);
    task.sigma_eplus_sq = 0.5;
    task.sigma_eminus_sq = 0.5;
    let cell = AccuracyCell {
        prior: &prior,
        task: &task,
        k: 4000,
        n_trials: 200,
        seed: 9,
        query_var: None,
        query_law: QueryLaw::SharedRealization,
    };
    let e = estimate_accuracy(&cell, 1).unwrap();
    let (op, on) = oracle_average(&cell, 1).unwrap();
    let (tp, tn) = e.theory_conditional.unwrap();
    assert!((op - tp).abs() < 1e-3 && (on - tn).abs() < 1e-3, "oracle ({op}, {on}) theory ({tp}, {tn})");
}
