use ksec_core::exact::to_f64;
use ksec_core::montecarlo::{mc_estimate, mc_estimate_with, McEstimate, Sampler};
use ksec_core::oracle::{oracle_table, OracleTable};
use ksec_core::{Policy, PolicyKind, PolicyParams};

fn within(est: &McEstimate, oracle: &OracleTable, z: f64) -> bool {
    let k = est.k();
    let ratio_ok = (est.ratio - to_f64(&oracle.ratio())).abs() <= z * est.ratio_se;
    ratio_ok
        && (1..=k).all(|i| {
            (1..=k).all(|j| (est.prob(i, j) - to_f64(&oracle.prob(i, j))).abs() <= z * est.se(i, j))
        })
}

#[test]
fn classical_n4_point_estimate() {
    let p = PolicyParams::new(4, 1, 2, 1).unwrap();
    let e = mc_estimate(p, PolicyKind::SingleRef, 1_000_000, 2024).unwrap();
    let target = 11.0 / 24.0;
    assert!((e.prob(1, 1) - target).abs() <= 3.0 * e.se(1, 1), "{} vs {target}", e.prob(1, 1));
    assert!((e.ratio - e.prob(1, 1)).abs() < 1e-15);
}

#[test]
fn estimates_cover_oracle_over_50_seeds() {
    let configs: Vec<(PolicyKind, PolicyParams)> = [(6, 1, 3, 1), (7, 2, 3, 1), (7, 2, 4, 2), (8, 3, 4, 2), (8, 2, 5, 1)]
        .into_iter()
        .flat_map(|(n, k, t, r)| {
            let p = PolicyParams::new(n, k, t, r).unwrap();
            [(PolicyKind::SingleRef, p), (PolicyKind::Optimistic, p)]
        })
        .collect();
    for (kind, p) in configs {
        let oracle = oracle_table(Policy::new(kind, p)).unwrap();
        let hits = (0..50u64)
            .filter(|&seed| within(&mc_estimate(p, kind, 20_000, seed).unwrap(), &oracle, 4.0))
            .count();
        // 99% of 50 seeds
        assert!(hits as f64 >= 0.99 * 50.0, "{kind:?} {p}: {hits}/50");
    }
}

#[test]
fn sparse_sampler_is_exact_in_distribution() {
    for (kind, (n, k, t, r)) in [(PolicyKind::SingleRef, (8, 3, 4, 2)), (PolicyKind::Optimistic, (8, 3, 4, 1))] {
        let p = PolicyParams::new(n, k, t, r).unwrap();
        let oracle = oracle_table(Policy::new(kind, p)).unwrap();
        let hits = (0..20u64)
            .filter(|&seed| within(&mc_estimate_with(p, kind, 20_000, seed, Sampler::TopRanks).unwrap(), &oracle, 4.0))
            .count();
        assert!(hits >= 19, "{kind:?}: {hits}/20");
    }
}

#[test]
fn large_n_single_ref_k2() {
    let p = PolicyParams::new(10_000, 2, 2546, 1).unwrap();
    let e = mc_estimate(p, PolicyKind::SingleRef, 200_000, 7).unwrap();
    assert!((e.ratio - 0.4119).abs() < 0.01, "{}", e.ratio);
}
