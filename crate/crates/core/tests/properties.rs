use icl_lab::model::{Label, LabeledExample, PretrainPrior};
use icl_lab::numerics::{std_normal_cdf, RngStream};
use icl_lab::posterior::compute_posterior;
use icl_lab::predictor::{mean_reversion_predict, predict, FracPrior};
use proptest::prelude::*;

fn examples(seed: u64, k: usize, m: usize) -> Vec<LabeledExample> {
    let mut rng = RngStream::new(seed, 0);
    (0..k)
        .map(|_| LabeledExample {
            x: (0..m).map(|_| 2.0 * rng.std_normal()).collect(),
            y: if rng.bernoulli(0.5) { Label::Pos } else { Label::Neg },
        })
        .collect()
}

proptest! {
    #[test]
    fn probabilities_are_complementary(seed in 0u64..1000, k in 0usize..40, scale in 0.1f64..50.0) {
        let prior = PretrainPrior::new(vec![0.5, -1.0, 0.25], 0.7, 1.3, 0.4).unwrap();
        let post = compute_posterior(&examples(seed, k, 3), &prior).unwrap();
        let x = [scale, -0.5 * scale, 0.1];
        let d = predict(&x, &post, &prior).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.prob_pos));
        prop_assert!((d.prob_pos + d.prob_neg - 1.0).abs() <= 1e-15);
        prop_assert_eq!(d.label == Label::Pos, d.prob_pos >= 0.5);
    }

    #[test]
    fn posterior_mean_is_a_convex_combination(seed in 0u64..1000, k in 1usize..60, sm in 0.05f64..5.0, s2 in 0.05f64..5.0) {
        let prior = PretrainPrior::isotropic(vec![1.0, -2.0], sm, s2).unwrap();
        let ex = examples(seed, k, 2);
        let post = compute_posterior(&ex, &prior).unwrap();
        let pos: Vec<&LabeledExample> = ex.iter().filter(|e| e.y == Label::Pos).collect();
        if !pos.is_empty() {
            let n = pos.len() as f64;
            let w = n * sm / (s2 + n * sm);
            for i in 0..2 {
                let mean = pos.iter().map(|e| e.x[i]).sum::<f64>() / n;
                let want = (1.0 - w) * prior.theta_m[i] + w * mean;
                prop_assert!((post.theta_hat_plus[i] - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
        }
        prop_assert!(post.var_theta_plus <= sm && post.var_theta_plus > 0.0);
    }

    #[test]
    fn normal_cdf_is_monotone_and_symmetric(a in -9.0f64..9.0, d in 0.0f64..3.0) {
        let (pa, pb) = (std_normal_cdf(a).unwrap(), std_normal_cdf(a + d).unwrap());
        prop_assert!(pa <= pb);
        prop_assert!((pa + std_normal_cdf(-a).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mean_reversion_is_monotone_in_the_likelihood_ratio(
        lp in 1e-3f64..10.0, ratio in 1.0f64..100.0, k in 1usize..30, alpha in 0.5f64..20.0, beta in 0.5f64..20.0,
    ) {
        let fp = FracPrior::new(alpha, beta, k).unwrap();
        for n in [0, k / 2, k] {
            let lo = mean_reversion_predict(lp, lp * ratio, n, &fp).unwrap();
            let hi = mean_reversion_predict(lp * ratio, lp, n, &fp).unwrap();
            prop_assert!(lo <= hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }
}
