use plancycle::rlcheck::*;
use proptest::prelude::*;
use rand::Rng;

fn shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=MAX_VOCAB, 1usize..=MAX_HORIZON, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reinforce_equals_scaled_sft((v, t, m) in shape(), n in 1usize..=64, p in 0.05f64..0.95, seed in any::<u64>()) {
        let mut rng = plancycle::seed::rng(seed);
        let pol = ToyPolicy::random(v, t, m, 3.0, &mut rng).unwrap();
        let val = TableValidator::random(v, t, m, p, false, &mut rng);
        let data = RewardedDataset::sample(&pol, n, &val, &mut rng);
        let rep = check_prop1(&pol, &data, 1e-9);
        prop_assert!(rep.pass, "residual {}", rep.max_abs_residual);
        if data.n_valid() == 0 {
            prop_assert!(rep.reinforce_grad.iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn mixture_sft_equals_importance_weighted((v, t, m) in shape(), lambda in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = plancycle::seed::rng(seed);
        let th = ToyPolicy::random(v, t, m, 3.0, &mut rng).unwrap();
        let be = ToyPolicy::random(v, t, m, 3.0, &mut rng).unwrap();
        let val = TableValidator::random(v, t, m, rng.random_range(0.1..0.9), true, &mut rng);
        let rep = check_prop2(&th, &be, lambda, &val, 1e-9).unwrap();
        prop_assert!(rep.pass, "residual {}", rep.max_abs_residual);
        for pol in [&th, &be] {
            for s in total_probability(pol) {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    /// The weights of the on-policy form are the normalised effective rewards.
    #[test]
    fn effective_reward_is_the_unnormalised_weight((v, t) in (2usize..=4, 1usize..=2), lambda in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = plancycle::seed::rng(seed);
        let th = ToyPolicy::random(v, t, 1, 2.0, &mut rng).unwrap();
        let be = ToyPolicy::random(v, t, 1, 2.0, &mut rng).unwrap();
        let val = TableValidator::random(v, t, 1, 0.5, true, &mut rng);
        for y in th.traces() {
            let r = effective_reward(&th, &be, lambda, 0, &y, &val);
            if val.valid(0, &y) {
                let ratio = (logprob(&be, 0, &y) - logprob(&th, 0, &y)).exp();
                prop_assert!((r - ((1.0 - lambda) + lambda * ratio)).abs() < 1e-12);
            } else {
                prop_assert_eq!(r, 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn analytic_gradient_matches_finite_differences((v, t, m) in shape(), seed in any::<u64>()) {
        let mut rng = plancycle::seed::rng(seed);
        let pol = ToyPolicy::random(v, t, m, 2.0, &mut rng).unwrap();
        let x = rng.random_range(0..m);
        let y: Vec<usize> = (0..t).map(|_| rng.random_range(0..v)).collect();
        let err = finite_difference_error(&pol, x, &y, 1e-5);
        prop_assert!(err < 1e-6, "relative error {}", err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sgd_paths_agree_and_exact_ascent_improves((v, t, m) in shape(), seed in any::<u64>()) {
        let mut rng = plancycle::seed::rng(seed);
        let pol = ToyPolicy::random(v, t, m, 1.0, &mut rng).unwrap();
        let val = TableValidator::random(v, t, m, 0.3, true, &mut rng);
        let tr = sgd_sanity(&pol, &val, &SgdConfig { seed, ..SgdConfig::default() });
        prop_assert!(tr.pass, "gap {} monotone {}", tr.max_gap, tr.monotone);
    }
}
