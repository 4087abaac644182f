use ebseg::model::{
    block_stats, conditional_posterior_params, fitted_vector, log_config_prior, log_marginal_posterior_unnorm,
    log_sum_exp, BlockConfig, Hyperparams, SequenceData,
};
use ebseg::oracle::{enumerate_exact_posterior, exact_mean_from, mc_log_marginal};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config_strategy(max_n: usize) -> impl Strategy<Value = BlockConfig> {
    (1..=max_n).prop_flat_map(|n| {
        let slots = if n > 1 { (1u64 << (n - 1)) - 1 } else { 0 };
        (Just(n), 0..=slots).prop_map(|(n, mask)| BlockConfig::from_mask(n, mask).unwrap())
    })
}

fn data_for(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

fn hp_strategy() -> impl Strategy<Value = Hyperparams> {
    (0.05..0.999f64, 0.1..5.0f64, 0.2..3.0f64, 0.1..4.0f64)
        .prop_map(|(a, v, l, s2)| Hyperparams::new(a, v, l, s2).unwrap())
}

fn case() -> impl Strategy<Value = (BlockConfig, SequenceData, Hyperparams)> {
    config_strategy(14).prop_flat_map(|c| {
        let n = c.n();
        (Just(c), data_for(n), hp_strategy())
            .prop_map(|(c, y, hp)| (c, SequenceData::new(y, None).unwrap(), hp))
    })
}

proptest! {
    #[test]
    fn config_prior_is_normalized(n in 1usize..=12, lambda in 0.1..4.0f64) {
        let logs: Vec<f64> = (0..1u64 << (n - 1))
            .map(|m| log_config_prior(&BlockConfig::from_mask(n, m).unwrap(), lambda).unwrap())
            .collect();
        prop_assert!(log_sum_exp(&logs).abs() < 1e-12);
    }

    #[test]
    fn score_is_shift_invariant((c, d, hp) in case(), shift in -100.0..100.0f64) {
        let a = log_marginal_posterior_unnorm(&c, &d, &hp).unwrap();
        let b = log_marginal_posterior_unnorm(&c, &d.shifted(shift).unwrap(), &hp).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
    }

    #[test]
    fn rss_matches_residual_norm((c, d, _hp) in case()) {
        let stats = block_stats(&d, &c).unwrap();
        let fit = fitted_vector(&c, &stats.means()).unwrap();
        let direct: f64 = d.y().iter().zip(&fit).map(|(y, f)| (y - f) * (y - f)).sum();
        prop_assert!((stats.total_rss() - direct).abs() < 1e-10 * (1.0 + direct));
    }

    #[test]
    fn blocks_round_trip(c in config_strategy(40)) {
        let values: Vec<f64> = (0..c.num_blocks()).map(|s| s as f64).collect();
        let theta = fitted_vector(&c, &values).unwrap();
        prop_assert_eq!(BlockConfig::of_vector(&theta).unwrap(), c.clone());
        let ranges = c.blocks();
        prop_assert_eq!(ranges.first().unwrap().start, 0);
        prop_assert_eq!(ranges.last().unwrap().end, c.n());
        for (s, r) in ranges.iter().enumerate() {
            for i in r.clone() {
                prop_assert_eq!(c.block_of(i), s);
            }
        }
    }

    /// Fractional likelihood times the block prior, as a function of the
    /// block mean, differs from the claimed conditional normal log density by
    /// a constant.
    #[test]
    fn conditional_is_conjugate((c, d, hp) in case()) {
        let params = conditional_posterior_params(&c, &d, &hp).unwrap();
        for (r, p) in c.blocks().into_iter().zip(params) {
            let ys = &d.y()[r.clone()];
            let m = ys.len() as f64;
            let ybar = ys.iter().sum::<f64>() / m;
            let unnorm = |t: f64| {
                let ll: f64 = ys.iter().map(|y| -(y - t) * (y - t)).sum::<f64>() * hp.alpha / (2.0 * hp.sigma2);
                ll - (t - ybar) * (t - ybar) * m / (2.0 * hp.v)
            };
            let normal = |t: f64| -(t - p.mean) * (t - p.mean) / (2.0 * p.var);
            let grid: Vec<f64> = (-10..=10).map(|k| p.mean + 0.3 * k as f64 * p.var.sqrt()).collect();
            let base = unnorm(grid[0]) - normal(grid[0]);
            for t in grid {
                let diff = unnorm(t) - normal(t) - base;
                prop_assert!(diff.abs() < 1e-10 * (1.0 + base.abs()), "diff {}", diff);
            }
        }
    }

    #[test]
    fn exact_mean_is_shift_equivariant(y in data_for(7), shift in -20.0..20.0f64, s2 in 0.2..3.0f64) {
        let hp = Hyperparams::with_defaults(s2).unwrap();
        let d = SequenceData::new(y, None).unwrap();
        let ds = d.shifted(shift).unwrap();
        let a = exact_mean_from(&enumerate_exact_posterior(&d, &hp).unwrap(), &d).unwrap();
        let b = exact_mean_from(&enumerate_exact_posterior(&ds, &hp).unwrap(), &ds).unwrap();
        for (x, z) in a.iter().zip(&b) {
            prop_assert!((x + shift - z).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_mc_integration(
        c in config_strategy(8),
        s2 in 0.25..4.0f64,
        seed in any::<u64>(),
        ys in data_for(8),
    ) {
        let d = SequenceData::new(ys[..c.n()].to_vec(), None).unwrap();
        let hp = Hyperparams::with_defaults(s2).unwrap();
        let closed = log_marginal_posterior_unnorm(&c, &d, &hp).unwrap() - log_config_prior(&c, hp.lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mc = mc_log_marginal(&c, &d, &hp, 200_000, &mut rng).unwrap();
        // 24 cases at 4.5 SE keeps the family-wise false alarm rate negligible
        prop_assert!((closed - mc.estimate).abs() < 4.5 * mc.std_error + 1e-12,
            "closed {} mc {} se {}", closed, mc.estimate, mc.std_error);
    }
}
