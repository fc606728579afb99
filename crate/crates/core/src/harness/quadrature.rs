//! Brute-force accuracy oracle: integrate the query density over the exact
//! decision region {f_ICL ≥ 0} (or its complement) numerically.
//!
//! Nothing here goes through the half-space formula. The decision function
//! is evaluated from the two Gaussian predictive densities directly, so it
//! keeps the quadratic terms the closed form drops and works for unequal
//! class variances. Coordinates are integrated one at a time in the
//! standardized frame x = c + s·u; the last coordinate is handled exactly by
//! locating the roots of f along the line and integrating φ between them.

use crate::error::{LabError, Result};
use crate::model::{Label, PretrainPrior, TaskSpec};
use crate::numerics::normal_pdf;
use crate::numerics::quad::integrate;
use crate::posterior::PosteriorState;

/// Highest dimension the oracle integrates.
pub const MAX_ORACLE_DIM: usize = 3;

const U_MAX: f64 = 12.0;
const SCAN_POINTS: usize = 240;

/// Absolute tolerance handed to the outer adaptive rules; the total error
/// stays well under 1e-4.
const OUTER_TOL: f64 = 1e-8;
const SEGMENT_TOL: f64 = 1e-13;

struct ExactRule<'a> {
    a: &'a [f64],
    b: &'a [f64],
    vp: f64,
    vn: f64,
    // ln((n_neg+1)/(n_pos+1)) − (m/2) ln(vn/vp)
    threshold: f64,
}

impl ExactRule<'_> {
    fn new<'a>(post: &'a PosteriorState, prior: &PretrainPrior) -> ExactRule<'a> {
        let vp = prior.sigma_plus_sq + post.var_theta_plus;
        let vn = prior.sigma_minus_sq + post.var_theta_minus;
        let m = prior.dim() as f64;
        let count = (post.n_neg as f64 + 1.0).ln() - (post.n_pos as f64 + 1.0).ln();
        ExactRule {
            a: &post.theta_hat_plus,
            b: &post.theta_hat_minus,
            vp,
            vn,
            threshold: count - 0.5 * m * (vn / vp).ln(),
        }
    }

    // ln P(x|+) − ln P(x|−) − ln count ratio
    fn f(&self, x: &[f64]) -> f64 {
        let mut dp = 0.0;
        let mut dn = 0.0;
        for i in 0..x.len() {
            dp += (x[i] - self.a[i]).powi(2);
            dn += (x[i] - self.b[i]).powi(2);
        }
        dn / (2.0 * self.vn) - dp / (2.0 * self.vp) - self.threshold
    }
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo) >= 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) >= 0.0) == glo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mass of N(0,1) on {u ∈ [−U_MAX, U_MAX] : (g(u) ≥ 0) == want_pos}.
///
/// The scan grid is augmented with the stationary points of g found from
/// sign changes of its increments, so each cell is monotone and holds at
/// most one root.
fn line_mass<G: Fn(f64) -> f64>(g: G, want_pos: bool) -> f64 {
    let step = 2.0 * U_MAX / SCAN_POINTS as f64;
    let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| -U_MAX + i as f64 * step).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    let mut knots = grid.clone();
    for i in 1..SCAN_POINTS {
        let (d0, d1) = (vals[i] - vals[i - 1], vals[i + 1] - vals[i]);
        if d0 * d1 < 0.0 {
            // golden-section search for the extremum on [u_{i-1}, u_{i+1}]
            let sign = if d0 > 0.0 { -1.0 } else { 1.0 };
            let h = |u: f64| sign * g(u);
            let (mut lo, mut hi) = (grid[i - 1], grid[i + 1]);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let c = hi - r * (hi - lo);
                let d = lo + r * (hi - lo);
                if h(c) < h(d) {
                    hi = d;
                } else {
                    lo = c;
                }
            }
            knots.push(0.5 * (lo + hi));
        }
    }
    knots.sort_by(|x, y| x.total_cmp(y));
    let mut cuts = vec![-U_MAX];
    for w in knots.windows(2) {
        let (g0, g1) = (g(w[0]) >= 0.0, g(w[1]) >= 0.0);
        if g0 != g1 {
            cuts.push(bisect(&g, w[0], w[1]));
        }
    }
    cuts.push(U_MAX);
    let mut mass = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if (g(0.5 * (w[0] + w[1])) >= 0.0) == want_pos {
            mass += integrate(normal_pdf, w[0], w[1], SEGMENT_TOL).value;
        }
    }
    mass
}

fn region_mass(rule: &ExactRule<'_>, center: &[f64], sd: f64, want_pos: bool, prefix: &mut Vec<f64>) -> f64 {
    let depth = prefix.len();
    let m = center.len();
    if depth + 1 == m {
        let mut x = prefix.clone();
        x.push(0.0);
        return line_mass(
            |u| {
                let mut x = x.clone();
                x[depth] = center[depth] + sd * u;
                rule.f(&x)
            },
            want_pos,
        );
    }
    integrate(
        |u| {
            let w = normal_pdf(u);
            if w == 0.0 {
                return 0.0;
            }
            prefix.push(center[depth] + sd * u);
            let inner = region_mass(rule, center, sd, want_pos, prefix);
            prefix.pop();
            w * inner
        },
        -U_MAX,
        U_MAX,
        OUTER_TOL,
    )
    .value
}

/// P(predicted label = `true_class`) for a query x ~ N(center, var·I),
/// computed by quadrature over the exact decision region.
pub fn oracle_accuracy_at(
    post: &PosteriorState,
    prior: &PretrainPrior,
    true_class: Label,
    center: &[f64],
    var: f64,
) -> Result<f64> {
    let m = prior.dim();
    if m > MAX_ORACLE_DIM {
        return Err(LabError::Unsupported(format!(
            "quadrature oracle integrates at most {MAX_ORACLE_DIM} dimensions, got {m}"
        )));
    }
    if center.len() != m || post.theta_hat_plus.len() != m {
        return Err(LabError::Argument("dimension mismatch between prior, posterior and query center".into()));
    }
    if !(var > 0.0 && var.is_finite()) {
        return Err(LabError::Domain(format!("query variance must be finite and > 0, got {var}")));
    }
    let rule = ExactRule::new(post, prior);
    let p = region_mass(&rule, center, var.sqrt(), true_class == Label::Pos, &mut Vec::with_capacity(m));
    Ok(p.clamp(0.0, 1.0))
}

/// Accuracy for a noise-free query of class `true_class` whose center is
/// drawn from the task, x ~ N(θ_yᵉ, (σ_y² + σ_{e,y}²) I).
pub fn quadrature_oracle_accuracy(
    post: &PosteriorState,
    task: &TaskSpec,
    prior: &PretrainPrior,
    true_class: Label,
) -> Result<f64> {
    quadrature_oracle_accuracy_with_query_var(post, task, prior, true_class, None)
}

/// As [`quadrature_oracle_accuracy`] with the query's own variance replaced.
pub fn quadrature_oracle_accuracy_with_query_var(
    post: &PosteriorState,
    task: &TaskSpec,
    prior: &PretrainPrior,
    true_class: Label,
    query_var: Option<f64>,
) -> Result<f64> {
    let q = query_var.unwrap_or(prior.data_var(true_class));
    oracle_accuracy_at(post, prior, true_class, task.center(true_class), q + task.spread(true_class))
}
