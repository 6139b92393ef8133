//! Exhaustive ground truth: run a policy on all `n!` arrival orders and
//! count, exactly, how often each item is taken in each accept slot.
//!
//! Enumeration is split into `n` lexicographic chunks (one per leading
//! rank). Each chunk fills a private count matrix; the matrices are merged
//! by addition, so results do not depend on the worker count.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::policies::{Policy, PolicyKind};
use crate::types::{check_enumerable, next_permutation, AcceptanceRecord, PolicyParams, ProbTable, Rank};

/// Largest `n_max` accepted by [`verify_identities`].
pub const MAX_VERIFY_N: usize = 10;

/// Visits every permutation of `1..=n` chunk by chunk. `visit` receives the
/// chunk-local accumulator and the ranks by position.
fn fold_orders<A, I, V>(n: usize, init: I, visit: V) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u32]) + Sync,
{
    if n == 0 {
        let mut acc = init();
        visit(&mut acc, &[]);
        return vec![acc];
    }
    (1..=n as u32)
        .into_par_iter()
        .map(|first| {
            let mut acc = init();
            let mut perm: Vec<u32> = std::iter::once(first)
                .chain((1..=n as u32).filter(|&x| x != first))
                .collect();
            loop {
                visit(&mut acc, &perm);
                if !next_permutation(&mut perm[1..]) {
                    break;
                }
            }
            acc
        })
        .collect()
}

fn arrivals(perm: &[u32]) -> impl Iterator<Item = (usize, Rank)> + '_ {
    perm.iter().enumerate().map(|(p, &r)| (p + 1, Rank(r)))
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Exact acceptance counts over all `n!` orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTable {
    pub n: usize,
    pub k: usize,
    /// Row-major `n × k`: entry `(i, j)` counts orders where the item of
    /// rank `i` is the `j`-th accept.
    pub counts: Vec<u64>,
    /// `n!`
    pub total: u64,
}

impl OracleTable {
    pub fn count(&self, item: usize, slot: usize) -> u64 {
        assert!(item >= 1 && item <= self.n && slot >= 1 && slot <= self.k);
        self.counts[(item - 1) * self.k + slot - 1]
    }

    /// Orders in which the item is accepted at all, `|P_i|`.
    pub fn accepted_count(&self, item: usize) -> u64 {
        (1..=self.k).map(|j| self.count(item, j)).sum()
    }

    pub fn prob(&self, item: usize, slot: usize) -> BigRational {
        BigRational::new(BigInt::from(self.count(item, slot)), BigInt::from(self.total))
    }

    pub fn accept_prob(&self, item: usize) -> BigRational {
        BigRational::new(BigInt::from(self.accepted_count(item)), BigInt::from(self.total))
    }

    /// `(1/k) Σ_{i≤k} p_i`, the competitive ratio of a monotone policy.
    pub fn ratio(&self) -> BigRational {
        let hits: u64 = (1..=self.k.min(self.n)).map(|i| self.accepted_count(i)).sum();
        BigRational::new(BigInt::from(hits), BigInt::from(self.total) * BigInt::from(self.k))
    }

    pub fn prob_table(&self) -> ProbTable {
        ProbTable::from_counts(self.n, self.k, self.counts.clone(), self.total)
    }

    /// Items (by rank) whose acceptance count exceeds that of the next
    /// better item; empty for a monotone policy.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        (2..=self.n)
            .filter(|&i| self.accepted_count(i) > self.accepted_count(i - 1))
            .collect()
    }
}

/// Runs `policy` on every arrival order of `policy.params().n() ≤ 12` items.
pub fn oracle_table(policy: Policy) -> Result<OracleTable> {
    let params = policy.params();
    let (n, k) = (params.n(), params.k());
    check_enumerable(n)?;
    let parts = fold_orders(
        n,
        || (vec![0u64; n * k], AcceptanceRecord::default()),
        |(counts, rec), perm| {
            policy.run_into(arrivals(perm), rec);
            for (slot, a) in rec.accepts.iter().enumerate() {
                counts[(a.rank.get() as usize - 1) * k + slot] += 1;
            }
        },
    );
    let mut counts = vec![0u64; n * k];
    for (part, _) in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(OracleTable { n, k, counts, total: factorial(n) })
}

/// Number of orders in which OPTIMISTIC with k = 2 accepts the best item
/// second while the second-best item sits in the sampling phase. Accepts
/// any `3 ≤ t ≤ n`, including windows too late for two accepts.
pub fn count_p1_minus_p1prime(n: usize, t: usize) -> Result<u64> {
    check_enumerable(n)?;
    let params = PolicyParams::with_open_window(n, 2, t, 1)?;
    if t < 3 {
        return Err(Error::Range(format!("t must be at least 3 (got {t})")));
    }
    let policy = Policy::optimistic(params);
    let parts = fold_orders(
        n,
        || (0u64, AcceptanceRecord::default()),
        |(count, rec), perm| {
            let v2_sampled = perm[..t - 1].contains(&2);
            if !v2_sampled {
                return;
            }
            policy.run_into(arrivals(perm), rec);
            if rec.slot_of(Rank(1)) == Some(2) {
                *count += 1;
            }
        },
    );
    Ok(parts.into_iter().map(|(c, _)| c).sum())
}

/// `|P_1'|`: orders where OPTIMISTIC (k = 2) accepts the best item and, if
/// the second-best item is in the sampling phase, takes the best item first.
pub fn count_p1prime(n: usize, t: usize) -> Result<u64> {
    check_enumerable(n)?;
    let policy = Policy::optimistic(PolicyParams::without_reference(n, 2, t)?);
    let parts = fold_orders(
        n,
        || (0u64, AcceptanceRecord::default()),
        |(count, rec), perm| {
            policy.run_into(arrivals(perm), rec);
            match rec.slot_of(Rank(1)) {
                Some(1) => *count += 1,
                Some(_) if !perm[..t - 1].contains(&2) => *count += 1,
                _ => {}
            }
        },
    );
    Ok(parts.into_iter().map(|(c, _)| c).sum())
}

/// The combinatorial facts checked by [`verify_identities`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// Acceptance counts are non-increasing in the item rank (both policies).
    MonotoneAcceptance,
    /// All dominating items share each slot count.
    DominatingSymmetry,
    /// Item `r+i` is equally likely to be accept `1..=i` and accept `i+1`.
    SlotShift,
    /// Item `r+i` as accept `i+j` matches a dominating item as accept `i+j`.
    NonDominatingReduction,
    /// OPTIMISTIC (k=2) takes the second-best item exactly as often as the
    /// classical rule takes the best.
    OptimisticSecondBest,
    /// `|P_1'| = |P_2|` for OPTIMISTIC (k=2).
    OptimisticSwapCardinality,
    /// The dominating-slot closed form equals the enumerated probability.
    DominatingClosedForm,
    /// The δ closed form equals the enumerated `|P_1 \ P_1'| / n!`.
    OptimisticDeltaClosedForm,
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::MonotoneAcceptance => "monotone-acceptance",
            Identity::DominatingSymmetry => "dominating-symmetry",
            Identity::SlotShift => "slot-shift",
            Identity::NonDominatingReduction => "non-dominating-reduction",
            Identity::OptimisticSecondBest => "optimistic-second-best",
            Identity::OptimisticSwapCardinality => "optimistic-swap-cardinality",
            Identity::DominatingClosedForm => "dominating-closed-form",
            Identity::OptimisticDeltaClosedForm => "optimistic-delta-closed-form",
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One identity checked on one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: Identity,
    pub policy: PolicyKind,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    /// Reference rank, for SINGLE-REF checks.
    pub r: Option<usize>,
    pub passed: bool,
    /// Empty on success; otherwise the mismatching counts.
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n_max: usize,
    pub checks: Vec<IdentityCheck>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Distinct `(policy, n, k, t, r)` configurations touched.
    pub fn configurations(&self) -> usize {
        let mut seen: Vec<_> = self.checks.iter().map(|c| (c.policy, c.n, c.k, c.t, c.r)).collect();
        seen.sort_by_key(|&(p, n, k, t, r)| (p == PolicyKind::Optimistic, n, k, t, r));
        seen.dedup();
        seen.len()
    }
}

struct Recorder<'a> {
    report: &'a mut VerificationReport,
    policy: PolicyKind,
    params: PolicyParams,
}

impl Recorder<'_> {
    fn push(&mut self, identity: Identity, mismatches: Vec<String>) {
        let p = self.params;
        self.report.checks.push(IdentityCheck {
            identity,
            policy: self.policy,
            n: p.n(),
            k: p.k(),
            t: p.t(),
            r: (self.policy == PolicyKind::SingleRef).then_some(p.r()),
            passed: mismatches.is_empty(),
            detail: mismatches.join("; "),
        });
    }
}

fn single_ref_checks(table: &OracleTable, params: PolicyParams, rec: &mut Recorder<'_>) -> Result<()> {
    let (k, r) = (params.k(), params.r());

    let bad = table.monotonicity_violations();
    rec.push(
        Identity::MonotoneAcceptance,
        bad.iter()
            .map(|&i| format!("|P_{i}|={} > |P_{}|={}", table.accepted_count(i), i - 1, table.accepted_count(i - 1)))
            .collect(),
    );

    let mut bad = Vec::new();
    for d in 2..=r {
        for j in 1..=k {
            if table.count(d, j) != table.count(1, j) {
                bad.push(format!("slot {j}: item {d} {} vs item 1 {}", table.count(d, j), table.count(1, j)));
            }
        }
    }
    rec.push(Identity::DominatingSymmetry, bad);

    if r < k {
        let mut bad = Vec::new();
        for i in 1..=(k - r) {
            let target = table.count(r + i, i + 1);
            for j in 1..=i {
                if table.count(r + i, j) != target {
                    bad.push(format!("item {}: slot {j} {} vs slot {} {target}", r + i, table.count(r + i, j), i + 1));
                }
            }
        }
        rec.push(Identity::SlotShift, bad);

        let mut bad = Vec::new();
        for i in 1..=(k - r) {
            for j in 1..=(k - i) {
                for d in 1..=r {
                    let (lhs, rhs) = (table.count(r + i, i + j), table.count(d, i + j));
                    if lhs != rhs {
                        bad.push(format!("slot {}: item {} {lhs} vs item {d} {rhs}", i + j, r + i));
                    }
                }
            }
        }
        rec.push(Identity::NonDominatingReduction, bad);
    }

    let mut bad = Vec::new();
    for j in 1..=k {
        let closed = exact::dominating_accept_prob_exact(params, j - 1)?;
        if closed != table.prob(1, j) {
            bad.push(format!("slot {j}: closed form {closed} vs enumerated {}", table.prob(1, j)));
        }
    }
    rec.push(Identity::DominatingClosedForm, bad);
    Ok(())
}

fn optimistic_checks(table: &OracleTable, params: PolicyParams, rec: &mut Recorder<'_>) -> Result<()> {
    let bad = table.monotonicity_violations();
    rec.push(
        Identity::MonotoneAcceptance,
        bad.iter().map(|&i| format!("|P_{i}| > |P_{}|", i - 1)).collect(),
    );
    if params.k() != 2 {
        return Ok(());
    }
    let (n, t) = (params.n(), params.t());

    let classical = oracle_table(Policy::single_ref(PolicyParams::new(n, 1, t, 1)?))?;
    let (lhs, rhs) = (table.accepted_count(2), classical.accepted_count(1));
    rec.push(
        Identity::OptimisticSecondBest,
        if lhs == rhs { vec![] } else { vec![format!("|P_2|={lhs} vs classical |Q_1|={rhs}")] },
    );

    let p1prime = count_p1prime(n, t)?;
    let p2 = table.accepted_count(2);
    rec.push(
        Identity::OptimisticSwapCardinality,
        if p1prime == p2 { vec![] } else { vec![format!("|P_1'|={p1prime} vs |P_2|={p2}")] },
    );

    let excess = count_p1_minus_p1prime(n, t)?;
    let mut bad = Vec::new();
    if excess + p1prime != table.accepted_count(1) {
        bad.push(format!("|P_1 \\ P_1'|={excess} + |P_1'|={p1prime} != |P_1|={}", table.accepted_count(1)));
    }
    let enumerated = BigRational::new(BigInt::from(excess), BigInt::from(table.total));
    let closed = exact::optimistic_k2_delta_exact(n, t)?;
    if closed != enumerated {
        bad.push(format!("closed form {closed} vs enumerated {enumerated}"));
    }
    rec.push(Identity::OptimisticDeltaClosedForm, bad);
    Ok(())
}

/// Checks every identity on every valid configuration with `n ≤ n_max`,
/// as exact integer-count equalities.
pub fn verify_identities(n_max: usize) -> Result<VerificationReport> {
    if n_max > MAX_VERIFY_N {
        return Err(Error::Size(format!("n_max = {n_max} exceeds the verification limit of {MAX_VERIFY_N}")));
    }
    let mut report = VerificationReport { n_max, checks: Vec::new() };
    for n in 2..=n_max {
        for params in PolicyParams::all_for_n(n) {
            let table = oracle_table(Policy::single_ref(params))?;
            let mut rec = Recorder { report: &mut report, policy: PolicyKind::SingleRef, params };
            single_ref_checks(&table, params, &mut rec)?;
            if params.r() == 1 {
                let table = oracle_table(Policy::optimistic(params))?;
                let mut rec = Recorder { report: &mut report, policy: PolicyKind::Optimistic, params };
                optimistic_checks(&table, params, &mut rec)?;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{classical_secretary_prob_exact, to_f64};
    use crate::types::enumerate_arrival_orders;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn chunked_enumeration_matches_lexicographic_stream() {
        for n in 0..=6 {
            let chunks = fold_orders(n, Vec::new, |acc: &mut Vec<Vec<u32>>, p| acc.push(p.to_vec()));
            let flat: Vec<Vec<u32>> = chunks.into_iter().flatten().collect();
            let stream: Vec<Vec<u32>> = enumerate_arrival_orders(n)
                .unwrap()
                .map(|o| o.ranks().iter().map(|r| r.get()).collect())
                .collect();
            assert_eq!(flat, stream);
        }
    }

    #[test]
    fn classical_rule_small_n() {
        // three items, skip one: (1/3)(1 + 1/2) = 1/2
        let t = oracle_table(Policy::single_ref(PolicyParams::new(3, 1, 2, 1).unwrap())).unwrap();
        assert_eq!(t.total, 6);
        assert_eq!(t.prob(1, 1), q(1, 2));
        assert_eq!(t.prob(1, 1), classical_secretary_prob_exact(3, 2).unwrap());

        let t = oracle_table(Policy::single_ref(PolicyParams::new(4, 1, 2, 1).unwrap())).unwrap();
        assert_eq!(t.prob(1, 1), q(11, 24));
    }

    #[test]
    fn hand_listed_table_n5_k2() {
        // n=5, k=2, t=3, r=1 — spot-check against a brute-force recount
        let params = PolicyParams::new(5, 2, 3, 1).unwrap();
        let table = oracle_table(Policy::single_ref(params)).unwrap();
        let mut manual = vec![0u64; 10];
        for o in enumerate_arrival_orders(5).unwrap() {
            let rec = Policy::single_ref(params).run(&o);
            for (s, a) in rec.accepts.iter().enumerate() {
                manual[(a.rank.get() as usize - 1) * 2 + s] += 1;
            }
        }
        assert_eq!(table.counts, manual);
        assert!(table.prob_table().check_invariants().is_ok());
    }

    #[test]
    fn delta_count_matches_closed_form() {
        for (n, t) in [(5, 3), (6, 3), (6, 4), (7, 4)] {
            let c = count_p1_minus_p1prime(n, t).unwrap();
            let fact = factorial(n) as i64;
            assert_eq!(q(c as i64, fact), exact::optimistic_k2_delta_exact(n, t).unwrap(), "n={n} t={t}");
        }
    }

    #[test]
    fn delta_count_degenerate_windows() {
        // sampling ends at n-1: no room for two accepts
        assert_eq!(count_p1_minus_p1prime(6, 6).unwrap(), 0);
        // t = n-1: the single remaining term of the sum
        let c = count_p1_minus_p1prime(7, 6).unwrap() as f64 / 5040.0;
        let single = (5.0 * 4.0) / (7.0 * 6.0) / (4.0 * 5.0);
        assert!((c - single).abs() < 1e-15);
        assert!(count_p1_minus_p1prime(6, 2).is_err());
        assert!(matches!(count_p1_minus_p1prime(13, 4), Err(Error::Size(_))));
    }

    #[test]
    fn policy_agnostic_for_k1() {
        for n in 3..=7 {
            for t in 2..n {
                let p = PolicyParams::new(n, 1, t, 1).unwrap();
                assert_eq!(oracle_table(Policy::single_ref(p)).unwrap(), oracle_table(Policy::optimistic(p)).unwrap());
            }
        }
    }

    #[test]
    fn optimistic_split_of_best_item() {
        // the exact engine only knows p1 in aggregate; the oracle reports the split
        let t = oracle_table(Policy::optimistic(PolicyParams::without_reference(7, 2, 3).unwrap())).unwrap();
        let p1 = to_f64(&t.accept_prob(1));
        let split = to_f64(&t.prob(1, 1)) + to_f64(&t.prob(1, 2));
        assert!((p1 - split).abs() < 1e-15);
        assert!(t.count(1, 1) > 0 && t.count(1, 2) > 0);
    }

    #[test]
    fn size_guards() {
        let p = PolicyParams::new(13, 1, 5, 1).unwrap();
        assert!(matches!(oracle_table(Policy::single_ref(p)), Err(Error::Size(_))));
        assert!(matches!(verify_identities(11), Err(Error::Size(_))));
    }

    #[test]
    fn verify_small_ranges() {
        let empty = verify_identities(2).unwrap();
        assert!(empty.all_passed());
        let rep = verify_identities(6).unwrap();
        assert!(rep.all_passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(rep.checks.len() >= 50, "{}", rep.checks.len());
        for id in [Identity::SlotShift, Identity::OptimisticSwapCardinality, Identity::OptimisticSecondBest] {
            assert!(rep.checks.iter().any(|c| c.identity == id));
        }
    }

    #[test]
    fn monotone_rows_n7_k3() {
        let t = oracle_table(Policy::single_ref(PolicyParams::new(7, 3, 4, 2).unwrap())).unwrap();
        assert!(t.monotonicity_violations().is_empty());
        let rows: Vec<u64> = (1..=7).map(|i| t.accepted_count(i)).collect();
        assert!(rows.windows(2).all(|w| w[0] >= w[1]), "{rows:?}");
    }
}
