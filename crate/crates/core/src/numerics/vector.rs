//! Small dense-vector helpers. Dimensions are single digits, so plain
//! slices beat pulling in a linear-algebra crate.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `wa·a + wb·b`
pub fn lincomb(wa: f64, a: &[f64], wb: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

pub fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    lincomb(0.5, a, 0.5, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let a = [3.0, 4.0];
        let b = [1.0, -1.0];
        assert_eq!(norm(&a), 5.0);
        assert_eq!(dot(&a, &b), -1.0);
        assert_eq!(dist_sq(&a, &b), 29.0);
        assert_eq!(sub(&a, &b), vec![2.0, 5.0]);
        assert_eq!(add(&a, &b), vec![4.0, 3.0]);
        assert_eq!(scale(&b, -2.0), vec![-2.0, 2.0]);
        assert_eq!(midpoint(&a, &b), vec![2.0, 1.5]);
    }
}
