//! Closed forms against brute-force enumeration for every configuration
//! with n ≤ 8.

use ksec_core::exact::*;
use ksec_core::oracle::{oracle_table, verify_identities, Identity};
use ksec_core::{Policy, PolicyParams};

const N_MAX: usize = 8;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn single_ref_matches_oracle() {
    let mut configs = 0;
    for n in 2..=N_MAX {
        for p in PolicyParams::all_for_n(n) {
            configs += 1;
            let o = oracle_table(Policy::single_ref(p)).unwrap();
            for j in 1..=p.k() {
                let dom = dominating_accept_prob_exact(p, j - 1).unwrap();
                assert_eq!(dom, o.prob(1, j), "{p} slot {j}");
                assert!(rel_close(dominating_accept_prob(p, j - 1).unwrap(), to_f64(&dom)));
                for i in 1..=p.k() {
                    let exact = item_slot_prob_exact(p, i, j).unwrap();
                    assert_eq!(exact, o.prob(i, j), "{p} item {i} slot {j}");
                    assert!(rel_close(item_slot_prob(p, i, j).unwrap(), to_f64(&exact)));
                }
            }
            let ratio = single_ref_ratio_exact(p);
            assert_eq!(ratio, o.ratio(), "{p}");
            assert_eq!(single_ref_ratio_by_items_exact(p), ratio);
            assert!(rel_close(single_ref_ratio(p), to_f64(&ratio)));
        }
    }
    // k < t <= n-k leaves exactly 50 parameter sets for n <= 8
    assert_eq!(configs, 50);
}

#[test]
fn optimistic_k2_matches_oracle() {
    for n in 5..=N_MAX {
        for t in 3..=n - 2 {
            let p = PolicyParams::without_reference(n, 2, t).unwrap();
            let o = oracle_table(Policy::optimistic(p)).unwrap();
            let rep = optimistic_k2_report_exact(n, t).unwrap();
            assert_eq!(rep.p2, o.accept_prob(2), "n={n} t={t}");
            assert_eq!(rep.p1, o.accept_prob(1));
            assert_eq!(rep.delta, o.accept_prob(1) - o.accept_prob(2));
            assert_eq!(rep.ratio, o.ratio());
            assert_eq!(optimistic_k2_ratio_exact(n, t).unwrap(), o.ratio());

            let f = optimistic_k2_report(n, t).unwrap();
            assert!(rel_close(f.p2, to_f64(&rep.p2)));
            assert!(rel_close(f.delta, to_f64(&rep.delta)));
            assert!(rel_close(f.ratio, to_f64(&rep.ratio)));
        }
    }
}

#[test]
fn oracle_tables_satisfy_invariants() {
    for p in PolicyParams::all_for_n(7) {
        for policy in [Policy::single_ref(p), Policy::optimistic(p)] {
            let o = oracle_table(policy).unwrap();
            let table = o.prob_table();
            table.check_invariants().unwrap();
            for i in 1..=o.n {
                assert!(table.row_sum(i) <= 1.0 + 1e-12);
            }
            assert!(table.expected_accepts() <= p.k() as f64 + 1e-12);
        }
    }
}

#[test]
fn identity_suite_n7() {
    let rep = verify_identities(7).unwrap();
    let failures: Vec<_> = rep.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
    for id in [
        Identity::MonotoneAcceptance,
        Identity::DominatingSymmetry,
        Identity::SlotShift,
        Identity::NonDominatingReduction,
        Identity::OptimisticSecondBest,
        Identity::OptimisticSwapCardinality,
        Identity::DominatingClosedForm,
        Identity::OptimisticDeltaClosedForm,
    ] {
        assert!(rep.checks.iter().any(|c| c.identity == id), "{id} never checked");
    }
}

#[test]
fn identity_suite_counts() {
    let rep = verify_identities(6).unwrap();
    assert!(rep.checks.len() >= 50, "{}", rep.checks.len());
    assert!(rep.configurations() < rep.checks.len());
    assert!(verify_identities(2).unwrap().all_passed());
}
