use ksec_core::asymptotic::{cr_single_ref_asym, dominating_asym_profile, p_dom_asym};
use ksec_core::exact::{dominating_accept_prob, dominating_accept_prob_exact, single_ref_prob_table, to_f64};
use ksec_core::montecarlo::mc_estimate;
use ksec_core::policies::{run_optimistic, run_single_ref};
use ksec_core::types::random_arrival_order;
use ksec_core::{PolicyKind, PolicyParams};
use proptest::prelude::*;

/// Valid `(n, k, t, r)` with `n ≤ n_max`.
fn params(n_max: usize) -> impl Strategy<Value = PolicyParams> {
    (3..=n_max)
        .prop_flat_map(|n| (Just(n), 1..=(n - 1) / 2))
        .prop_flat_map(|(n, k)| (Just(n), Just(k), (k + 1)..=(n - k), 1..=k))
        .prop_map(|(n, k, t, r)| PolicyParams::new(n, k, t, r).unwrap())
}

proptest! {
    #[test]
    fn random_orders_are_bijections(n in 1usize..400, seed: u64) {
        let a = random_arrival_order(n, seed);
        prop_assert!(a.is_bijection());
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(a, random_arrival_order(n, seed));
    }

    #[test]
    fn runs_respect_budget_and_window(p in params(60), seed: u64) {
        let order = random_arrival_order(p.n(), seed);
        let sr = run_single_ref(p, &order);
        let op = run_optimistic(p, &order);
        for rec in [&sr, &op] {
            prop_assert!(rec.accepts.len() <= p.k());
            prop_assert!(rec.accepts.iter().all(|a| a.position >= p.t() && a.position <= p.n()));
            prop_assert!(rec.accepts.windows(2).all(|w| w[0].position < w[1].position));
            for a in &rec.accepts {
                prop_assert_eq!(order.position_of(a.rank), Some(a.position));
            }
        }
        prop_assert!(sr.accepts.iter().all(|a| a.rank.beats(sr.reference_ranks[0])));
        // every OPTIMISTIC accept beats the weakest sampling reference
        prop_assert!(op.accepts.iter().all(|a| a.rank.beats(op.reference_ranks[p.k() - 1])));
    }

    #[test]
    fn float_dominating_prob_tracks_rational(p in params(48), slot_pick: usize) {
        let slot = slot_pick % p.k();
        let e = to_f64(&dominating_accept_prob_exact(p, slot).unwrap());
        let f = dominating_accept_prob(p, slot).unwrap();
        prop_assert!((e - f).abs() <= 1e-12 * e.max(1e-300));
    }

    #[test]
    fn exact_tables_are_valid(p in params(40)) {
        let t = single_ref_prob_table(p);
        prop_assert!(t.check_invariants().is_ok());
        prop_assert!(t.expected_accepts() <= p.k() as f64 + 1e-9);
    }

    #[test]
    fn asymptotic_profile_is_decreasing_probability(r in 1usize..30, c in 0.01f64..0.99, len in 1usize..60) {
        let prof = dominating_asym_profile(r, c, len).unwrap();
        prop_assert!(prof.iter().all(|&q| (0.0..=1.0).contains(&q)));
        prop_assert!(prof.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        let j = len - 1;
        let direct = p_dom_asym(r, c, j).unwrap();
        prop_assert!((prof[j] - direct).abs() <= 1e-11 * direct, "{} vs {}", prof[j], direct);
    }

    #[test]
    fn asymptotic_ratio_in_unit_interval(k in 1usize..80, r_pick: usize, c in 0.01f64..0.99) {
        let r = 1 + r_pick % k;
        let v = cr_single_ref_asym(k, r, c).unwrap();
        prop_assert!(v > 0.0 && v < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_is_reproducible(p in params(300), seed: u64, optimistic: bool) {
        let kind = if optimistic { PolicyKind::Optimistic } else { PolicyKind::SingleRef };
        let a = mc_estimate(p, kind, 700, seed).unwrap();
        prop_assert_eq!(&a, &mc_estimate(p, kind, 700, seed).unwrap());
        prop_assert!(a.slot_probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!(a.ratio >= 0.0 && a.ratio <= 1.0);
    }
}
