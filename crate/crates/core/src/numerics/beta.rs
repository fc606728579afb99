//! Regularized incomplete beta function in log space.
//!
//! Fraction priors with α, β in the thousands put tail masses far below
//! the smallest double, and the mean-reversion predictor needs their
//! ratios. Everything here therefore returns logarithms.

use statrs::function::beta::ln_beta;

use crate::error::{LabError, Result};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

/// ln(1 − eᵗ) for t ≤ 0.
pub fn ln_1m_exp(t: f64) -> f64 {
    if t > -std::f64::consts::LN_2 {
        (-t.exp_m1()).ln()
    } else {
        (-t.exp()).ln_1p()
    }
}

/// ln(eᵃ + eᵇ).
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// Continued fraction for I_x(a,b) by the modified Lentz method. Converges
// fast for x < (a+1)/(a+b+2); the number of terms grows like √max(a,b).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

fn check(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(LabError::Domain(format!("beta parameters must be positive and finite, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(LabError::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    Ok(())
}

// ln of x^a (1-x)^b / (a B(a,b)) times the continued fraction, i.e. the
// lower tail evaluated where the fraction converges.
fn ln_lower_direct(a: f64, b: f64, x: f64, y: f64) -> f64 {
    a * x.ln() + b * y.ln() - ln_beta(a, b) - a.ln() + beta_cf(a, b, x).ln()
}

/// ln I_x(a, b), the log of the Beta(a, b) distribution function.
pub fn ln_beta_cdf(a: f64, b: f64, x: f64) -> Result<f64> {
    check(a, b, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    let y = 1.0 - x;
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_lower_direct(a, b, x, y))
    } else {
        Ok(ln_1m_exp(ln_lower_direct(b, a, y, x)))
    }
}

/// ln(1 − I_x(a, b)), the log of the Beta(a, b) survival function.
pub fn ln_beta_sf(a: f64, b: f64, x: f64) -> Result<f64> {
    check(a, b, x)?;
    ln_beta_cdf(b, a, 1.0 - x)
}

/// ln of the Beta(a, b) probability of [lo, hi].
///
/// Bins entirely below the mean are differenced on the lower tail, bins
/// above it on the upper tail, so neither loses its relative precision.
pub fn ln_beta_interval(a: f64, b: f64, lo: f64, hi: f64) -> Result<f64> {
    check(a, b, lo)?;
    check(a, b, hi)?;
    if hi <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    let mean = a / (a + b);
    if hi <= mean {
        let l_hi = ln_beta_cdf(a, b, hi)?;
        let l_lo = ln_beta_cdf(a, b, lo)?;
        if l_hi == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(l_hi + ln_1m_exp(l_lo - l_hi))
    } else if lo >= mean {
        let s_lo = ln_beta_sf(a, b, lo)?;
        let s_hi = ln_beta_sf(a, b, hi)?;
        if s_lo == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(s_lo + ln_1m_exp(s_hi - s_lo))
    } else {
        let outside = ln_add_exp(ln_beta_cdf(a, b, lo)?, ln_beta_sf(a, b, hi)?);
        Ok(ln_1m_exp(outside))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta_reg;

    // I_x(a, b) for integer a, b as a binomial tail, independent of the
    // continued fraction.
    fn int_beta_cdf(a: u32, b: u32, x: f64) -> f64 {
        let n = a + b - 1;
        let mut total = 0.0;
        for j in a..=n {
            let mut c = 1.0;
            for t in 0..j {
                c = c * (n - t) as f64 / (t + 1) as f64;
            }
            total += c * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
        }
        total
    }

    #[test]
    fn matches_binomial_tail_for_integer_parameters() {
        for &(a, b) in &[(1u32, 1u32), (2, 3), (5, 5), (7, 2), (12, 9)] {
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let got = ln_beta_cdf(a as f64, b as f64, x).unwrap().exp();
                let want = int_beta_cdf(a, b, x);
                assert!((got - want).abs() < 1e-13, "I_{x}({a},{b}) = {got} vs {want}");
                let sf = ln_beta_sf(a as f64, b as f64, x).unwrap().exp();
                assert!((sf - (1.0 - want)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matches_statrs_on_non_integer_parameters() {
        for &(a, b) in &[(0.5, 0.5), (2.5, 0.7), (30.2, 11.9), (400.0, 1600.0)] {
            for i in 1..50 {
                let x = i as f64 / 50.0;
                let got = ln_beta_cdf(a, b, x).unwrap().exp();
                let want = beta_reg(a, b, x);
                assert!((got - want).abs() < 1e-12, "I_{x}({a},{b}) = {got} vs {want}");
            }
        }
    }

    #[test]
    fn deep_tails_stay_finite() {
        // Beta(5000, 5000) at 0.3: the mass is about e^-880, far below f64::MIN_POSITIVE
        let l = ln_beta_cdf(5000.0, 5000.0, 0.3).unwrap();
        assert!(l.is_finite() && l < -800.0, "{l}");
        let s = ln_beta_sf(5000.0, 5000.0, 0.7).unwrap();
        assert!((l - s).abs() < 1e-9 * l.abs());
        // bins below the mean keep relative precision
        let m1 = ln_beta_interval(5000.0, 5000.0, 0.29, 0.3).unwrap();
        assert!(m1.is_finite() && m1 <= l && l - m1 < 1e-12, "{m1} vs {l}");
    }

    #[test]
    fn tail_log_matches_leading_asymptotics() {
        // ln I_x(a,b) = a ln x + b ln(1-x) - ln B(a,b) - ln a + ln cf, and for
        // x far below the mean cf → 1/(1 - (a+b)x/(a+1)) approximately
        let (a, b, x) = (5000.0f64, 5000.0f64, 0.1f64);
        let l = ln_beta_cdf(a, b, x).unwrap();
        let lead = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b) - a.ln();
        let approx = lead - (1.0 - (a + b) * x / (a + 1.0)).abs().ln();
        assert!((l - approx).abs() < 1e-2, "{l} vs {approx}");
    }

    #[test]
    fn intervals_partition_the_unit_interval() {
        for &(a, b) in &[(1.0, 1.0), (3.0, 9.0), (2500.0, 7500.0)] {
            let edges: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
            let total: f64 = edges
                .windows(2)
                .map(|w| ln_beta_interval(a, b, w[0], w[1]).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "({a},{b}) total {total}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(ln_beta_cdf(0.0, 1.0, 0.5).is_err());
        assert!(ln_beta_cdf(1.0, 1.0, 1.5).is_err());
        assert!(ln_beta_cdf(1.0, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn log_helpers() {
        assert!((ln_1m_exp(-1e-20) - (1e-20f64).ln()).abs() < 1e-12);
        assert!((ln_1m_exp(-50.0) + (-50.0f64).exp()).abs() < 1e-30);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((ln_add_exp(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
