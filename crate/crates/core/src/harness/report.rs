//! Report files: CSV tables with fixed schemas plus a JSON summary.
//!
//! Everything written here is a function of the configuration alone, so two
//! runs with the same config and seed produce byte-identical files. Wall
//! time lives in a separate `timing.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::harness::mc::AccuracyEstimate;

pub const ACCURACY_HEADER: &str = "k,pi,p_plus_e,p_minus_e,n_trials,acc_pos,se_pos,acc_neg,se_neg,theory_pos,theory_neg";
pub const NOISE_HEADER: &str = "p_plus_e,p_minus_e,acc_pos,acc_neg,acc_overall,se_overall";
pub const MEAN_REVERSION_HEADER: &str = "label_mode,true_pos_feature_frac,prob_pred_pos,limit_class";
pub const CONVERGENCE_HEADER: &str = "k,mean_abs_dev,se,p_star";

pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".into(),
    }
}

/// A CSV table assembled in memory; cells are pre-formatted strings.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Table {
            header: header.into(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// The accuracy schema; the theory columns come from `theory`.
pub fn accuracy_table<'a, I>(rows: I) -> Table
where
    I: IntoIterator<Item = (&'a AccuracyEstimate, Option<(f64, f64)>)>,
{
    let mut t = Table::new(ACCURACY_HEADER);
    for (e, theory) in rows {
        t.push([
            e.k.to_string(),
            e.pi.to_string(),
            e.p_plus_e.to_string(),
            e.p_minus_e.to_string(),
            e.n_trials.to_string(),
            e.acc_pos.to_string(),
            e.se_pos.to_string(),
            e.acc_neg.to_string(),
            e.se_neg.to_string(),
            fmt_opt(theory.map(|t| t.0)),
            fmt_opt(theory.map(|t| t.1)),
        ]);
    }
    t
}

/// |MC − theory| in standard errors, stated for every theory comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub cell: String,
    pub class: String,
    pub mc: f64,
    pub se: f64,
    pub theory: f64,
    pub abs_diff: f64,
    /// `None` when se = 0 and the values differ (infinite z).
    pub z: Option<f64>,
}

impl Comparison {
    pub fn new(cell: impl Into<String>, class: &str, mc: f64, se: f64, theory: f64) -> Self {
        let d = (mc - theory).abs();
        let z = if se > 0.0 {
            Some(d / se)
        } else if d == 0.0 {
            Some(0.0)
        } else {
            None
        };
        Comparison {
            cell: cell.into(),
            class: class.into(),
            mc,
            se,
            theory,
            abs_diff: d,
            z,
        }
    }

    pub fn pair(cell: &str, e: &AccuracyEstimate, theory: (f64, f64)) -> [Comparison; 2] {
        [
            Comparison::new(cell, "+1", e.acc_pos, e.se_pos, theory.0),
            Comparison::new(cell, "-1", e.acc_neg, e.se_neg, theory.1),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    pub name: String,
    pub scenario: String,
    pub seed: u64,
    pub version: String,
}

impl ReportMeta {
    pub fn new(name: &str, scenario: &str, seed: u64) -> Self {
        ReportMeta {
            name: name.into(),
            scenario: scenario.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Everything a scenario produces: named tables plus a JSON summary.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub config: Value,
    pub tables: Vec<(String, Table)>,
    pub summary: Value,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn table(&self, file_name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == file_name).map(|(_, t)| t)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            meta: &'a ReportMeta,
            config: &'a Value,
            summary: &'a Value,
            comparisons: &'a [Comparison],
            files: Vec<&'a str>,
        }
        let doc = Doc {
            meta: &self.meta,
            config: &self.config,
            summary: &self.summary,
            comparisons: &self.comparisons,
            files: self.tables.iter().map(|(n, _)| n.as_str()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes every table, `report.json`, and (if given) `timing.json`.
    /// Returns the paths written, in order.
    pub fn write_to(&self, dir: &Path, wall_seconds: Option<f64>) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, t) in &self.tables {
            let p = dir.join(name);
            fs::write(&p, t.to_csv())?;
            written.push(p);
        }
        let p = dir.join("report.json");
        fs::write(&p, self.to_json()?)?;
        written.push(p);
        if let Some(s) = wall_seconds {
            let p = dir.join("timing.json");
            let mut body = String::new();
            writeln!(body, "{{\"wall_seconds\": {s}}}").unwrap();
            fs::write(&p, body)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks. `None` when either
/// side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
