//! Scenario runners. Each returns its typed results together with the
//! [`ExperimentReport`] the CLI writes to disk.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::harness::config::{ExperimentConfig, QueryLaw};
use crate::harness::mc::{draw_posterior, estimate_accuracy, par_map_indexed, AccuracyCell, AccuracyEstimate};
use crate::harness::quadrature::{oracle_accuracy_at, quadrature_oracle_accuracy};
use crate::harness::report::{
    accuracy_table, spearman, Comparison, ExperimentReport, ReportMeta, Table, CONVERGENCE_HEADER,
    MEAN_REVERSION_HEADER, NOISE_HEADER,
};
use crate::model::{sample_prompt_fixed_fraction, sample_prompt_iid, Label, PretrainPrior, QueryClass, TaskSpec};
use crate::numerics::vector::{norm, scale};
use crate::numerics::{sample_gaussian_vector, RngStream};
use crate::posterior::{compute_posterior, PosteriorState};
use crate::predictor::{
    class_log_density, decide, log_n_unchecked, mean_reversion_limit, mean_reversion_predict_ln, FracPrior,
    MeanReversionLimit,
};
use crate::theory::{
    asymptotic_accuracy_with_query_var, contradict_gap, convergence_rate_estimate, dominant_accuracy_pair,
    effective_centers, noise_regime, AccuracyInputs,
};

fn cell<'a>(cfg: &'a ExperimentConfig, task: &'a TaskSpec, k: usize) -> AccuracyCell<'a> {
    AccuracyCell {
        prior: &cfg.prior,
        task,
        k,
        n_trials: cfg.n_trials,
        seed: cfg.seed,
        query_var: cfg.query_var,
        query_law: cfg.query_law,
    }
}

fn config_value(cfg: &ExperimentConfig) -> Result<Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn equal_variances(prior: &PretrainPrior) -> Result<f64> {
    if prior.sigma_plus_sq != prior.sigma_minus_sq {
        return Err(LabError::Argument(format!(
            "this scenario needs equal class variances, got {} and {}",
            prior.sigma_plus_sq, prior.sigma_minus_sq
        )));
    }
    Ok(prior.sigma_plus_sq)
}

/// True when each value exceeds the previous one by more than `nsig`
/// combined standard errors.
pub fn increasing_beyond(values: &[(f64, f64)], nsig: f64) -> bool {
    values
        .windows(2)
        .all(|w| w[1].0 - w[0].0 > nsig * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt())
}

/// Distance from `p` to the nearest of {0, 1/2, 1}.
pub fn distance_to_degenerate_levels(p: f64) -> f64 {
    [0.0, 0.5, 1.0].iter().map(|l| (p - l).abs()).fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateOutcome {
    pub estimates: Vec<AccuracyEstimate>,
    /// Oracle accuracy averaged over realized posteriors (m ≤ 3 only).
    pub oracle: Vec<Option<(f64, f64)>>,
    pub report: ExperimentReport,
}

/// Mean over trials of the quadrature accuracy given each trial's posterior,
/// with the query law of `cell`. Uses the same trial streams as
/// [`estimate_accuracy`], so the posteriors are the very ones the Monte
/// Carlo scored.
pub fn oracle_average(cell: &AccuracyCell<'_>, workers: usize) -> Result<(f64, f64)> {
    let per_trial = par_map_indexed(workers, cell.n_trials, |t| {
        let mut rng = RngStream::new(cell.seed, t as u64);
        let (post, tp, tn) = draw_posterior(cell.prior, cell.task, cell.k, &mut rng)?;
        let mut out = [0.0; 2];
        for (i, class) in Label::BOTH.into_iter().enumerate() {
            let q = cell.query_var.unwrap_or(cell.prior.data_var(class));
            out[i] = match cell.query_law {
                QueryLaw::SharedRealization => {
                    let c = if class == Label::Pos { &tp } else { &tn };
                    oracle_accuracy_at(&post, cell.prior, class, c, q)?
                }
                QueryLaw::IndependentCenters => {
                    oracle_accuracy_at(&post, cell.prior, class, cell.task.center(class), q + cell.task.spread(class))?
                }
            };
        }
        Ok(out)
    })?;
    let n = per_trial.len() as f64;
    let (mut p, mut q) = (0.0, 0.0);
    for v in &per_trial {
        p += v[0];
        q += v[1];
    }
    Ok((p / n, q / n))
}

/// Accuracy versus k for the configured task.
pub fn run_simulate(cfg: &ExperimentConfig, workers: usize) -> Result<SimulateOutcome> {
    cfg.validate()?;
    let mut estimates = Vec::new();
    let mut oracle = Vec::new();
    let mut comparisons = Vec::new();
    for &k in &cfg.k_values {
        let c = cell(cfg, &cfg.task, k);
        let e = estimate_accuracy(&c, workers)?;
        if let Some(th) = e.theory_for(cfg.query_law) {
            comparisons.extend(Comparison::pair(&format!("k={k} dominant"), &e, th));
        }
        let o = if cfg.prior.dim() <= crate::harness::quadrature::MAX_ORACLE_DIM {
            let o = oracle_average(&c, workers)?;
            comparisons.extend(Comparison::pair(&format!("k={k} quadrature"), &e, o));
            Some(o)
        } else {
            None
        };
        oracle.push(o);
        estimates.push(e);
    }
    let table = accuracy_table(estimates.iter().map(|e| (e, e.theory_for(cfg.query_law))));
    let summary = json!({
        "query_law": cfg.query_law,
        "degenerate_trials": estimates.iter().map(|e| e.degenerate_trials).collect::<Vec<_>>(),
        "overall": estimates.iter().map(|e| json!({"k": e.k, "acc": e.acc_overall, "se": e.se_overall})).collect::<Vec<_>>(),
        "oracle": oracle.iter().map(|o| o.map(|(p, n)| json!([p, n]))).collect::<Vec<_>>(),
    });
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "simulate", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![("accuracy.csv".into(), table)],
        summary,
        comparisons,
    };
    Ok(SimulateOutcome {
        estimates,
        oracle,
        report,
    })
}

/// Text dump of the first `count` prompts for each k (positive queries).
///
/// With the shared query law and the default query variance these are
/// exactly the examples and +1 query scored by trial t of the simulation.
pub fn dump_prompts(cfg: &ExperimentConfig, count: usize) -> Result<String> {
    let mut out = String::new();
    for &k in &cfg.k_values {
        for t in 0..count.min(cfg.n_trials) {
            let mut rng = RngStream::new(cfg.seed, t as u64);
            let p = sample_prompt_iid(&cfg.task, &cfg.prior, k, QueryClass::Positive, &mut rng)?;
            out.push_str(&p.to_text());
            out.push('\n');
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// contradicting knowledge

pub struct ContradictOutcome {
    pub matched: Vec<AccuracyEstimate>,
    pub contradicting: Vec<AccuracyEstimate>,
    pub predicted_gap: f64,
    /// k at which k·σ_M²/σ² = 1.
    pub crossover_k: f64,
    /// Spearman ρ of the contradicting overall accuracy against k.
    pub spearman_contradicting: Option<f64>,
    pub report: ExperimentReport,
}

/// Matched (θ₊ᵉ = θ_M = −θ₋ᵉ) versus contradicting (θ₊ᵉ = −θ_M = −θ₋ᵉ)
/// tasks; spreads, noise and π come from the configured task.
pub fn contradict_tasks(cfg: &ExperimentConfig) -> (TaskSpec, TaskSpec) {
    let th = cfg.prior.theta_m.clone();
    let neg = scale(&th, -1.0);
    let matched = TaskSpec {
        theta_plus_e: th.clone(),
        theta_minus_e: neg.clone(),
        ..cfg.task.clone()
    };
    let contradicting = TaskSpec {
        theta_plus_e: neg,
        theta_minus_e: th,
        ..cfg.task.clone()
    };
    (matched, contradicting)
}

pub fn run_contradict_scenario(cfg: &ExperimentConfig, workers: usize) -> Result<ContradictOutcome> {
    cfg.validate()?;
    let s2 = equal_variances(&cfg.prior)?;
    let (mt, ct) = contradict_tasks(cfg);
    let predicted_gap = contradict_gap(norm(&cfg.prior.theta_m), s2)?;
    let crossover_k = s2 / cfg.prior.sigma_m_sq;
    let mut matched = Vec::new();
    let mut contradicting = Vec::new();
    let mut comparisons = Vec::new();
    let mut gap = Table::new("k,k_ratio,gap_pos,gap_neg,predicted_gap");
    for &k in &cfg.k_values {
        let m = estimate_accuracy(&cell(cfg, &mt, k), workers)?;
        let c = estimate_accuracy(&cell(cfg, &ct, k), workers)?;
        for (tag, e) in [("matched", &m), ("contradicting", &c)] {
            if let Some(th) = e.theory_for(cfg.query_law) {
                comparisons.extend(Comparison::pair(&format!("{tag} k={k}"), e, th));
            }
        }
        gap.push([
            k.to_string(),
            (k as f64 * cfg.prior.sigma_m_sq / s2).to_string(),
            (m.acc_pos - c.acc_pos).to_string(),
            (m.acc_neg - c.acc_neg).to_string(),
            predicted_gap.to_string(),
        ]);
        matched.push(m);
        contradicting.push(c);
    }
    let ks: Vec<f64> = cfg.k_values.iter().map(|&k| k as f64).collect();
    let overall: Vec<f64> = contradicting.iter().map(|e| e.acc_overall).collect();
    let spearman_contradicting = spearman(&ks, &overall);
    let summary = json!({
        "predicted_gap": predicted_gap,
        "crossover_k": crossover_k,
        "spearman_contradicting": spearman_contradicting,
        // the transformer's empirical accuracy at k = 20, shown for reference only
        "reference_transformer_acc_k20": 0.87,
    });
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "contradict", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![
            (
                "contradict_matched.csv".into(),
                accuracy_table(matched.iter().map(|e| (e, e.theory_for(cfg.query_law)))),
            ),
            (
                "contradict_contradicting.csv".into(),
                accuracy_table(contradicting.iter().map(|e| (e, e.theory_for(cfg.query_law)))),
            ),
            ("contradict_gap.csv".into(), gap),
        ],
        summary,
        comparisons,
    };
    Ok(ContradictOutcome {
        matched,
        contradicting,
        predicted_gap,
        crossover_k,
        spearman_contradicting,
        report,
    })
}

// ---------------------------------------------------------------------------
// class imbalance

pub struct ImbalanceOutcome {
    /// One entry per (k, π), k outer.
    pub estimates: Vec<AccuracyEstimate>,
    pub report: ExperimentReport,
}

impl ImbalanceOutcome {
    pub fn at(&self, k: usize, pi: f64) -> Option<&AccuracyEstimate> {
        self.estimates.iter().find(|e| e.k == k && e.pi == pi)
    }
}

pub fn run_imbalance_scenario(cfg: &ExperimentConfig, workers: usize) -> Result<ImbalanceOutcome> {
    cfg.validate()?;
    if cfg.pi_grid.is_empty() {
        return Err(LabError::config("pi_grid", "must not be empty for the imbalance scenario"));
    }
    let s2 = cfg.prior.sigma_plus_sq;
    let mut estimates = Vec::new();
    let mut comparisons = Vec::new();
    let mut limits = Vec::new();
    for &k in &cfg.k_values {
        for &pi in &cfg.pi_grid {
            let task = TaskSpec { pi, ..cfg.task.clone() };
            let e = estimate_accuracy(&cell(cfg, &task, k), workers)?;
            if let Some(th) = e.theory_for(cfg.query_law) {
                comparisons.extend(Comparison::pair(&format!("k={k} pi={pi}"), &e, th));
            }
            estimates.push(e);
        }
    }
    if cfg.prior.sigma_plus_sq == cfg.prior.sigma_minus_sq {
        for &pi in &cfg.pi_grid {
            let task = TaskSpec { pi, ..cfg.task.clone() };
            let q = cfg.query_var.unwrap_or(s2);
            let lim = match asymptotic_accuracy_with_query_var(&task, s2, q) {
                Ok((p, n)) => json!({"pi": pi, "p_star_pos": p, "p_star_neg": n}),
                Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => {
                    json!({"pi": pi, "p_star_pos": fallback_pos, "p_star_neg": fallback_neg, "degenerate": true})
                }
                Err(e) => return Err(e),
            };
            limits.push(lim);
        }
    }
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "imbalance", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![(
            "imbalance.csv".into(),
            accuracy_table(estimates.iter().map(|e| (e, e.theory_for(cfg.query_law)))),
        )],
        summary: json!({ "asymptotic": limits }),
        comparisons,
    };
    Ok(ImbalanceOutcome { estimates, report })
}

// ---------------------------------------------------------------------------
// label noise

pub struct NoiseOutcome {
    /// Row-major over the grid: p_plus_e outer, p_minus_e inner.
    pub cells: Vec<AccuracyEstimate>,
    pub grid: Vec<f64>,
    pub k: usize,
    pub report: ExperimentReport,
}

impl NoiseOutcome {
    pub fn at(&self, i_plus: usize, i_minus: usize) -> &AccuracyEstimate {
        &self.cells[i_plus * self.grid.len() + i_minus]
    }

    /// Cells with p₊ᵉ + p₋ᵉ = 1 (within 1e-12).
    pub fn anti_diagonal(&self) -> Vec<&AccuracyEstimate> {
        self.cells
            .iter()
            .filter(|e| (e.p_plus_e + e.p_minus_e - 1.0).abs() <= 1e-12)
            .collect()
    }
}

fn matrix_table(grid: &[f64], value: impl Fn(usize, usize) -> f64) -> Table {
    let mut header = String::from("p_minus_e\\p_plus_e");
    for p in grid {
        header.push(',');
        header.push_str(&p.to_string());
    }
    let mut t = Table::new(&header);
    for (j, pm) in grid.iter().enumerate() {
        let mut row = vec![pm.to_string()];
        row.extend((0..grid.len()).map(|i| value(i, j).to_string()));
        t.push(row);
    }
    t
}

/// 2-D sweep over (p₊ᵉ, p₋ᵉ) at the first configured k.
pub fn run_noise_heatmap(cfg: &ExperimentConfig, workers: usize) -> Result<NoiseOutcome> {
    cfg.validate()?;
    if cfg.noise_grid.is_empty() {
        return Err(LabError::config("noise_grid", "must not be empty for the noise scenario"));
    }
    let k = cfg.k_values[0];
    let grid = cfg.noise_grid.clone();
    let mut cells = Vec::with_capacity(grid.len() * grid.len());
    let mut comparisons = Vec::new();
    let mut regimes = Vec::new();
    for &pp in &grid {
        for &pm in &grid {
            let task = TaskSpec {
                p_plus_e: pp,
                p_minus_e: pm,
                ..cfg.task.clone()
            };
            let e = estimate_accuracy(&cell(cfg, &task, k), workers)?;
            if let Some(th) = e.theory_for(cfg.query_law) {
                comparisons.extend(Comparison::pair(&format!("p_plus_e={pp} p_minus_e={pm}"), &e, th));
            }
            regimes.push(json!({"p_plus_e": pp, "p_minus_e": pm, "regime": noise_regime(pp, pm)?.regime.as_str()}));
            cells.push(e);
        }
    }
    let n = grid.len();
    let mut long = Table::new(NOISE_HEADER);
    for e in &cells {
        long.push([e.p_plus_e, e.p_minus_e, e.acc_pos, e.acc_neg, e.acc_overall, e.se_overall]);
    }
    let pos = matrix_table(&grid, |i, j| cells[i * n + j].acc_pos);
    let neg = matrix_table(&grid, |i, j| cells[i * n + j].acc_neg);
    let all = matrix_table(&grid, |i, j| cells[i * n + j].acc_overall);
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "noise", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![
            ("noise.csv".into(), long),
            ("noise_acc_pos.csv".into(), pos),
            ("noise_acc_neg.csv".into(), neg),
            ("noise_acc_overall.csv".into(), all),
        ],
        summary: json!({ "k": k, "regimes": regimes }),
        comparisons,
    };
    Ok(NoiseOutcome { cells, grid, k, report })
}

// ---------------------------------------------------------------------------
// mean reversion

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanReversionRow {
    pub label_mode: String,
    pub n_pos: usize,
    pub true_pos_feature_frac: f64,
    pub prob_pred_pos: f64,
    pub min_prob: f64,
    pub max_prob: f64,
    pub limit_class: MeanReversionLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub center: f64,
    pub alpha: f64,
    pub beta: f64,
    /// First n whose equal-likelihood prediction drops below 1/2.
    pub flip_n: Option<usize>,
    pub expected_n: f64,
}

impl ThresholdRow {
    /// |flip_n − center·(k+1)| in grid steps.
    pub fn offset_steps(&self) -> Option<f64> {
        self.flip_n.map(|n| (n as f64 - self.expected_n).abs())
    }
}

pub struct MeanReversionOutcome {
    pub rows: Vec<MeanReversionRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub report: ExperimentReport,
}

/// Predicted-positive probability for every n_pos = 0..=k with equal class
/// likelihoods, i.e. the fraction prior acting alone.
pub fn mean_reversion_curve(fp: &FracPrior) -> Result<Vec<f64>> {
    (0..=fp.k).map(|n| mean_reversion_predict_ln(0.0, 0.0, n, fp)).collect()
}

pub fn flip_index(fp: &FracPrior) -> Result<Option<usize>> {
    Ok(mean_reversion_curve(fp)?.iter().position(|&p| p < 0.5))
}

pub fn run_mean_reversion_scenario(cfg: &ExperimentConfig, workers: usize) -> Result<MeanReversionOutcome> {
    cfg.validate()?;
    let mr = &cfg.mean_reversion;
    let fp = mr.frac_prior()?;
    let k = mr.k;
    let pi_prior = mr.alpha / (mr.alpha + mr.beta);
    let mut rows = Vec::new();
    let modes = [("all_positive", k), ("all_negative", 0usize)];
    let mut cell_id = 0u64;
    for (mode, n_pos) in modes {
        for &frac in &mr.fractions {
            let id = cell_id;
            cell_id += 1;
            let probs = par_map_indexed(workers, cfg.n_trials, |t| {
                let mut rng = RngStream::new(cfg.seed, (id << 32) | t as u64);
                let p = sample_prompt_fixed_fraction(&cfg.task, &cfg.prior, k, n_pos, frac, &mut rng)?;
                let post = compute_posterior(&p.examples, &cfg.prior)?;
                let lp = class_log_density(&p.query_x, Label::Pos, &post, &cfg.prior)?;
                let ln = class_log_density(&p.query_x, Label::Neg, &post, &cfg.prior)?;
                mean_reversion_predict_ln(lp, ln, n_pos, &fp)
            })?;
            let mean = probs.iter().sum::<f64>() / probs.len() as f64;
            rows.push(MeanReversionRow {
                label_mode: mode.into(),
                n_pos,
                true_pos_feature_frac: frac,
                prob_pred_pos: mean,
                min_prob: probs.iter().copied().fold(f64::INFINITY, f64::min),
                max_prob: probs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                limit_class: mean_reversion_limit(n_pos, k, pi_prior),
            });
        }
    }
    let mut thresholds = Vec::new();
    for &c in &mr.threshold_centers {
        let tp = FracPrior::centered(c, mr.threshold_concentration, k)?;
        thresholds.push(ThresholdRow {
            center: c,
            alpha: tp.alpha,
            beta: tp.beta,
            flip_n: flip_index(&tp)?,
            expected_n: c * (k as f64 + 1.0),
        });
    }
    let mut table = Table::new(MEAN_REVERSION_HEADER);
    for r in &rows {
        table.push([
            r.label_mode.clone(),
            r.true_pos_feature_frac.to_string(),
            r.prob_pred_pos.to_string(),
            r.limit_class.as_str().to_string(),
        ]);
    }
    let mut tt = Table::new("center,alpha,beta,flip_n,expected_n,offset_steps");
    for t in &thresholds {
        tt.push([
            t.center.to_string(),
            t.alpha.to_string(),
            t.beta.to_string(),
            t.flip_n.map_or("NA".into(), |n| n.to_string()),
            t.expected_n.to_string(),
            crate::harness::report::fmt_opt(t.offset_steps()),
        ]);
    }
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "mean-reversion", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![
            ("mean_reversion.csv".into(), table),
            ("mean_reversion_thresholds.csv".into(), tt),
        ],
        summary: json!({ "rows": rows, "thresholds": thresholds, "even_parity": fp.even_parity() }),
        comparisons: vec![],
    };
    Ok(MeanReversionOutcome {
        rows,
        thresholds,
        report,
    })
}

// ---------------------------------------------------------------------------
// convergence rate

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub k: usize,
    pub mean_abs_dev: f64,
    pub se: f64,
}

pub struct ConvergenceOutcome {
    pub p_star: f64,
    pub points: Vec<ConvergencePoint>,
    pub slope: f64,
    pub report: ExperimentReport,
}

/// Mean |accuracy − P₊*| over `redraws` example sets per k, each scored
/// on `queries` fresh +1 queries. Redraw r uses stream r for every k.
pub fn convergence_points(
    cfg: &ExperimentConfig,
    redraws: usize,
    queries: usize,
    workers: usize,
) -> Result<(f64, Vec<ConvergencePoint>)> {
    let s2 = equal_variances(&cfg.prior)?;
    let q = cfg.query_var.unwrap_or(s2);
    let (p_star, _) = asymptotic_accuracy_with_query_var(&cfg.task, s2, q)?;
    let mut points = Vec::new();
    for &k in &cfg.convergence.k_values {
        let devs = par_map_indexed(workers, redraws, |r| {
            let mut rng = RngStream::new(cfg.seed, r as u64);
            let (post, tp, _) = draw_posterior(&cfg.prior, &cfg.task, k, &mut rng)?;
            let mut hits = 0usize;
            for _ in 0..queries {
                let x = sample_gaussian_vector(&tp, q, &mut rng)?;
                hits += (decide(log_n_unchecked(&x, &post, &cfg.prior), post.n_pos, post.n_neg).label == Label::Pos)
                    as usize;
            }
            Ok((hits as f64 / queries as f64 - p_star).abs())
        })?;
        let n = devs.len() as f64;
        let mean = devs.iter().sum::<f64>() / n;
        let var = devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        points.push(ConvergencePoint {
            k,
            mean_abs_dev: mean,
            se: (var / n).sqrt(),
        });
    }
    Ok((p_star, points))
}

pub fn run_convergence_study(cfg: &ExperimentConfig, workers: usize) -> Result<ConvergenceOutcome> {
    cfg.validate()?;
    let cv = &cfg.convergence;
    let (p_star, points) = convergence_points(cfg, cv.redraws, cv.queries_per_redraw, workers)?;
    let slope = convergence_rate_estimate(&points.iter().map(|p| (p.k as f64, p.mean_abs_dev)).collect::<Vec<_>>())?;
    let mut t = Table::new(CONVERGENCE_HEADER);
    for p in &points {
        t.push([p.k.to_string(), p.mean_abs_dev.to_string(), p.se.to_string(), p_star.to_string()]);
    }
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "convergence", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![("convergence.csv".into(), t)],
        summary: json!({ "p_star": p_star, "slope": slope }),
        comparisons: vec![],
    };
    Ok(ConvergenceOutcome {
        p_star,
        points,
        slope,
        report,
    })
}

// ---------------------------------------------------------------------------
// closed-form theory

pub struct TheoryOutcome {
    pub p_star: (f64, f64),
    pub report: ExperimentReport,
}

/// Posterior with counts and class sums at their expectations:
/// n₊ = round(πk), Σ₊x = n₊θ̃₊, Σ₋x = n₋θ̃₋.
pub fn expected_posterior(prior: &PretrainPrior, task: &TaskSpec, k: usize) -> Result<PosteriorState> {
    let ec = effective_centers(task);
    let n_pos = ((task.pi * k as f64).round() as usize).min(k);
    let n_neg = k - n_pos;
    PosteriorState::from_sums(
        prior,
        &scale(&ec.theta_tilde_plus, n_pos as f64),
        n_pos,
        &scale(&ec.theta_tilde_minus, n_neg as f64),
        n_neg,
    )
}

/// Closed-form predictions for the configured task: P±*, the contradicting
/// gap, the noise regime and the dominant term at the expected posterior.
/// A degenerate limit is an error here since P* has no finite answer then.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryOutcome> {
    cfg.validate()?;
    let s2 = equal_variances(&cfg.prior)?;
    let q = cfg.query_var.unwrap_or(s2);
    let p_star = asymptotic_accuracy_with_query_var(&cfg.task, s2, q)?;
    let regime = noise_regime(cfg.task.p_plus_e, cfg.task.p_minus_e)?;
    let mut t = Table::new("k,n_pos,n_neg,theory_pos,theory_neg,degenerate");
    for &k in &cfg.k_values {
        let post = expected_posterior(&cfg.prior, &cfg.task, k)?;
        let inputs = AccuracyInputs::marginal(&post, &cfg.task, &cfg.prior).with_query_var(cfg.query_var);
        let (p, n, d) = match dominant_accuracy_pair(&inputs) {
            Ok((p, n)) => (p, n, false),
            Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => (fallback_pos, fallback_neg, true),
            Err(e) => return Err(e),
        };
        t.push([k.to_string(), post.n_pos.to_string(), post.n_neg.to_string(), p.to_string(), n.to_string(), d.to_string()]);
    }
    let summary = json!({
        "p_star_pos": p_star.0,
        "p_star_neg": p_star.1,
        "effective_centers": effective_centers(&cfg.task),
        "contradict_gap": contradict_gap(norm(&cfg.prior.theta_m), s2)?,
        "crossover_k": s2 / cfg.prior.sigma_m_sq,
        "noise_regime": regime,
    });
    let report = ExperimentReport {
        meta: ReportMeta::new(&cfg.name, "theory", cfg.seed),
        config: config_value(cfg)?,
        tables: vec![("theory.csv".into(), t)],
        summary,
        comparisons: vec![],
    };
    Ok(TheoryOutcome { p_star, report })
}

// ---------------------------------------------------------------------------
// oracle check

/// One randomly drawn one-dimensional configuration with a large-count
/// posterior built from sufficient statistics.
#[derive(Clone, Debug)]
pub struct StressCase {
    pub prior: PretrainPrior,
    pub task: TaskSpec,
    pub post: PosteriorState,
}

fn pick(rng: &mut RngStream, options: &[f64]) -> f64 {
    options[((rng.uniform() * options.len() as f64) as usize).min(options.len() - 1)]
}

/// The m = 1 stress grid: random θ_M, variances, centers and spreads, with
/// 5000 ≤ n± < 20000 so the closed form's dropped terms stay small.
pub fn stress_grid(seed: u64, n: usize) -> Result<Vec<StressCase>> {
    (0..n)
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let theta_m = -1.5 + 3.0 * rng.uniform();
            let s2 = pick(&mut rng, &[0.25, 0.5, 1.0, 2.0]);
            let sm = pick(&mut rng, &[0.1, 0.5, 1.0, 2.0]);
            let tpe = -2.0 + 4.0 * rng.uniform();
            let mut tne = -2.0 + 4.0 * rng.uniform();
            if (tpe - tne).abs() < 0.5 {
                tne = tpe - 1.0;
            }
            let se = pick(&mut rng, &[0.0, 0.1, 0.5, 1.0]);
            let a = 5000 + (rng.uniform() * 15000.0) as usize;
            let b = 5000 + (rng.uniform() * 15000.0) as usize;
            let mp = tpe + rng.std_normal() * (s2 / a as f64 + se).sqrt();
            let mn = tne + rng.std_normal() * (s2 / b as f64 + se).sqrt();
            let prior = PretrainPrior::isotropic(vec![theta_m], sm, s2)?;
            let task = TaskSpec {
                theta_plus_e: vec![tpe],
                theta_minus_e: vec![tne],
                sigma_eplus_sq: se,
                sigma_eminus_sq: se,
                p_plus_e: 1.0,
                p_minus_e: 1.0,
                pi: 0.5,
            };
            let post = PosteriorState::from_sums(&prior, &[a as f64 * mp], a, &[b as f64 * mn], b)?;
            Ok(StressCase { prior, task, post })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub case: usize,
    pub class: Label,
    pub dominant: f64,
    pub oracle: f64,
    pub abs_diff: f64,
}

pub struct OracleCheckOutcome {
    pub rows: Vec<OracleRow>,
    pub max_abs_diff: f64,
    pub report: ExperimentReport,
}

pub const ORACLE_TOLERANCE: f64 = 1e-3;
pub const STRESS_GRID_SIZE: usize = 50;

/// Dominant term (marginal over centers) against the quadrature oracle on
/// every case of the stress grid.
pub fn run_oracle_check(seed: u64, n_cases: usize, workers: usize) -> Result<OracleCheckOutcome> {
    let cases = stress_grid(seed, n_cases)?;
    let per_case = par_map_indexed(workers, cases.len(), |i| {
        let c = &cases[i];
        let inputs = AccuracyInputs::marginal(&c.post, &c.task, &c.prior);
        let dom = match dominant_accuracy_pair(&inputs) {
            Ok(p) => p,
            Err(LabError::DegenerateBoundary { fallback_pos, fallback_neg }) => (fallback_pos, fallback_neg),
            Err(e) => return Err(e),
        };
        let mut rows = Vec::with_capacity(2);
        for (class, d) in [(Label::Pos, dom.0), (Label::Neg, dom.1)] {
            let o = quadrature_oracle_accuracy(&c.post, &c.task, &c.prior, class)?;
            rows.push(OracleRow {
                case: i,
                class,
                dominant: d,
                oracle: o,
                abs_diff: (d - o).abs(),
            });
        }
        Ok(rows)
    })?;
    let rows: Vec<OracleRow> = per_case.into_iter().flatten().collect();
    let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let mut t = Table::new("case,class,dominant,oracle,abs_diff");
    for r in &rows {
        t.push([r.case.to_string(), r.class.to_string(), r.dominant.to_string(), r.oracle.to_string(), r.abs_diff.to_string()]);
    }
    let report = ExperimentReport {
        meta: ReportMeta::new("oracle-check", "oracle-check", seed),
        config: json!({ "cases": n_cases, "tolerance": ORACLE_TOLERANCE }),
        tables: vec![("oracle_check.csv".into(), t)],
        summary: json!({ "max_abs_diff": max_abs_diff, "pass": max_abs_diff <= ORACLE_TOLERANCE }),
        comparisons: vec![],
    };
    Ok(OracleCheckOutcome {
        rows,
        max_abs_diff,
        report,
    })
}
