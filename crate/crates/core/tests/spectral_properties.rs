use dicke_core::spectral::{
    ratios_of_levels, surrogate_mixed_sample, MixtureSpec, RatioSample, GOE_MEAN, POISSON_MEAN,
};
use proptest::prelude::*;

fn ascending_levels() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..3.0, 3..200).prop_map(|gaps| {
        gaps.iter()
            .scan(0.0, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratios_are_affine_invariant(levels in ascending_levels(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let base = ratios_of_levels(&levels, 0).unwrap();
        let mapped: Vec<f64> = levels.iter().map(|e| a * e + b).collect();
        let moved = ratios_of_levels(&mapped, 0).unwrap();
        prop_assert_eq!(base.len(), moved.len());
        for (x, y) in base.values.iter().zip(&moved.values) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn dyadic_scaling_is_bitwise_invariant(levels in ascending_levels(), k in -8i32..8) {
        let a = 2f64.powi(k);
        let scaled: Vec<f64> = levels.iter().map(|e| a * e).collect();
        prop_assert_eq!(ratios_of_levels(&levels, 0).unwrap().values, ratios_of_levels(&scaled, 0).unwrap().values);
    }

    #[test]
    fn ratios_lie_in_unit_interval(levels in ascending_levels()) {
        let r = ratios_of_levels(&levels, 3).unwrap();
        prop_assert!(r.values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(r.len(), levels.len() - 2);
    }

    #[test]
    fn pooling_keeps_each_sequence_separate(a in ascending_levels(), b in ascending_levels()) {
        let ra = ratios_of_levels(&a, 0).unwrap();
        let rb = ratios_of_levels(&b, 1).unwrap();
        let pooled = RatioSample::pool(&[ra.clone(), rb.clone()]);
        prop_assert_eq!(pooled.len(), ra.len() + rb.len());
        let from_a: Vec<f64> = pooled.values.iter().zip(&pooled.tags).filter(|(_, &t)| t == 0).map(|(v, _)| *v).collect();
        let from_b: Vec<f64> = pooled.values.iter().zip(&pooled.tags).filter(|(_, &t)| t == 1).map(|(v, _)| *v).collect();
        prop_assert_eq!(from_a, ra.values);
        prop_assert_eq!(from_b, rb.values);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Standard error of the mean at 2·10⁴ ratios is about 0.002; the bound is five of those.
    #[test]
    fn single_component_surrogates_match_pure_ensembles(seed in any::<u64>()) {
        let poisson = surrogate_mixed_sample(&MixtureSpec::new(1.0, vec![]).unwrap(), 20_000, seed).unwrap();
        prop_assert!((poisson.mean() - POISSON_MEAN).abs() < 0.01, "{}", poisson.mean());
        let goe = surrogate_mixed_sample(&MixtureSpec::single(1.0).unwrap(), 20_000, seed).unwrap();
        prop_assert!((goe.mean() - GOE_MEAN).abs() < 0.01, "{}", goe.mean());
    }

    #[test]
    fn surrogate_is_deterministic_per_seed(seed in any::<u64>(), mu in 0.0f64..=1.0) {
        let spec = MixtureSpec::single(mu).unwrap();
        prop_assert_eq!(
            surrogate_mixed_sample(&spec, 2_000, seed).unwrap(),
            surrogate_mixed_sample(&spec, 2_000, seed).unwrap()
        );
    }
}
