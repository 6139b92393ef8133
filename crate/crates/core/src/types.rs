//! Domain types shared by every engine.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{range, Error, Result};

/// Largest n for which all n! arrival orders may be enumerated.
pub const MAX_ENUMERATION_N: usize = 12;

/// Rank of an item: 1 is the best item, n the worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rank(pub u32);

impl Rank {
    pub fn get(self) -> u32 {
        self.0
    }

    /// Strict rank comparison; ranks are distinct so there are no ties.
    pub fn beats(self, other: Rank) -> bool {
        self.0 < other.0
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// One input sequence: `seq[p]` is the rank arriving at position `p + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArrivalOrder {
    seq: Vec<Rank>,
}

impl ArrivalOrder {
    /// Builds an order from raw ranks, checking that they form a bijection
    /// on `1..=n`.
    pub fn new(ranks: Vec<u32>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            let idx = r as usize;
            if idx == 0 || idx > n {
                return range(format!("rank {r} outside 1..={n}"));
            }
            if std::mem::replace(&mut seen[idx - 1], true) {
                return range(format!("rank {r} appears twice"));
            }
        }
        Ok(Self::from_ranks_unchecked(ranks))
    }

    pub(crate) fn from_ranks_unchecked(ranks: Vec<u32>) -> Self {
        ArrivalOrder { seq: ranks.into_iter().map(Rank).collect() }
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn ranks(&self) -> &[Rank] {
        &self.seq
    }

    /// 1-based position of the item with the given rank.
    pub fn position_of(&self, rank: Rank) -> Option<usize> {
        self.seq.iter().position(|&r| r == rank).map(|p| p + 1)
    }

    /// `(position, rank)` pairs in arrival order, positions 1-based.
    pub fn arrivals(&self) -> impl Iterator<Item = (usize, Rank)> + '_ {
        self.seq.iter().enumerate().map(|(p, &r)| (p + 1, r))
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.seq.len();
        let mut seen = vec![false; n];
        self.seq.iter().all(|r| {
            let idx = r.0 as usize;
            idx >= 1 && idx <= n && !std::mem::replace(&mut seen[idx - 1], true)
        })
    }
}

/// Draws a uniformly random arrival order of `n` items. The same `(n, seed)`
/// always yields the same order.
pub fn random_arrival_order(n: usize, seed: u64) -> ArrivalOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled_order(n, &mut rng)
}

pub(crate) fn shuffled_order<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ArrivalOrder {
    let mut ranks: Vec<u32> = (1..=n as u32).collect();
    ranks.shuffle(rng);
    ArrivalOrder::from_ranks_unchecked(ranks)
}

/// Advances `xs` to the next lexicographic permutation; returns `false`
/// (leaving `xs` sorted descending) once the last permutation is passed.
pub(crate) fn next_permutation(xs: &mut [u32]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

pub(crate) fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_N {
        Err(Error::Size(format!(
            "n = {n} exceeds the enumeration limit of {MAX_ENUMERATION_N} (n! orders)"
        )))
    } else {
        Ok(())
    }
}

/// Lexicographic stream over all `n!` arrival orders.
pub struct ArrivalOrders {
    current: Vec<u32>,
    done: bool,
}

impl Iterator for ArrivalOrders {
    type Item = ArrivalOrder;

    fn next(&mut self) -> Option<ArrivalOrder> {
        if self.done {
            return None;
        }
        let out = ArrivalOrder::from_ranks_unchecked(self.current.clone());
        self.done = !next_permutation(&mut self.current);
        Some(out)
    }
}

/// Enumerates every arrival order of `n ≤ 12` items exactly once, in
/// lexicographic order.
pub fn enumerate_arrival_orders(n: usize) -> Result<ArrivalOrders> {
    check_enumerable(n)?;
    Ok(ArrivalOrders { current: (1..=n as u32).collect(), done: false })
}

/// Validated `(n, k, t, r)` configuration. Items at positions `1..t` form
/// the sampling phase; `r` is the reference rank used by SINGLE-REF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyParams {
    n: usize,
    k: usize,
    t: usize,
    r: usize,
}

impl PolicyParams {
    /// Checks `n ≥ 2`, `k ≥ 1`, `k < t ≤ n − k` and `1 ≤ r ≤ k`.
    pub fn new(n: usize, k: usize, t: usize, r: usize) -> Result<Self> {
        if n < 2 {
            return range(format!("n must be at least 2 (got n={n})"));
        }
        if k < 1 {
            return range("k must be at least 1 (got k=0)");
        }
        if t <= k {
            return range(format!("t must exceed k (got t={t}, k={k})"));
        }
        if k >= n || t > n - k {
            return range(format!(
                "t must be at most n-k={} (got t={t})",
                n as i64 - k as i64
            ));
        }
        if r < 1 || r > k {
            return range(format!("r must lie in 1..=k={k} (got r={r})"));
        }
        Ok(PolicyParams { n, k, t, r })
    }

    /// Only checks `1 ≤ r ≤ k < t ≤ n`, letting the sampling window run past
    /// `n − k`. Used by counting routines probing degenerate windows.
    pub(crate) fn with_open_window(n: usize, k: usize, t: usize, r: usize) -> Result<Self> {
        if !(1 <= r && r <= k && k < t && t <= n) {
            return range(format!("need 1 <= r <= k < t <= n (got n={n}, k={k}, t={t}, r={r})"));
        }
        Ok(PolicyParams { n, k, t, r })
    }

    /// Parameters for policies that take no reference rank; `r` is set to 1.
    pub fn without_reference(n: usize, k: usize, t: usize) -> Result<Self> {
        Self::new(n, k, t, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn r(&self) -> usize {
        self.r
    }

    /// Length of the sampling phase, `t − 1`.
    pub fn sample_len(&self) -> usize {
        self.t - 1
    }

    /// Same parameters with a different reference rank.
    pub fn with_reference(&self, r: usize) -> Result<Self> {
        Self::new(self.n, self.k, self.t, r)
    }

    /// Every valid configuration with exactly `n` items, ordered by `(k, t, r)`.
    pub fn all_for_n(n: usize) -> Vec<PolicyParams> {
        let mut out = Vec::new();
        for k in 1..n {
            for t in (k + 1)..=n.saturating_sub(k) {
                for r in 1..=k {
                    if let Ok(p) = Self::new(n, k, t, r) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for PolicyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} k={} t={} r={}", self.n, self.k, self.t, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accept {
    pub position: usize,
    pub rank: Rank,
}

/// What a policy did on one arrival order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    /// Accepted items in arrival order.
    pub accepts: Vec<Accept>,
    /// Reference ranks taken from the sampling phase: `s_r` alone for
    /// SINGLE-REF, `s_1..s_k` (best first) for OPTIMISTIC.
    pub reference_ranks: Vec<Rank>,
}

impl AcceptanceRecord {
    /// 1-based slot in which `rank` was accepted, if it was.
    pub fn slot_of(&self, rank: Rank) -> Option<usize> {
        self.accepts.iter().position(|a| a.rank == rank).map(|s| s + 1)
    }

    pub fn accepted(&self, rank: Rank) -> bool {
        self.slot_of(rank).is_some()
    }

    pub(crate) fn clear(&mut self) {
        self.accepts.clear();
        self.reference_ranks.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ProbEntries {
    /// Exact counts over a common denominator (n! for the oracle).
    Counts { counts: Vec<u64>, total: u64 },
    Float(Vec<f64>),
}

/// Matrix of per-item, per-slot acceptance probabilities. Row `i` is the
/// item of rank `i`, column `j` the `j`-th accept (both 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    items: usize,
    slots: usize,
    entries: ProbEntries,
}

impl ProbTable {
    pub fn from_counts(items: usize, slots: usize, counts: Vec<u64>, total: u64) -> Self {
        assert_eq!(counts.len(), items * slots, "count matrix shape");
        assert!(total > 0, "empty denominator");
        ProbTable { items, slots, entries: ProbEntries::Counts { counts, total } }
    }

    pub fn from_floats(items: usize, slots: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), items * slots, "probability matrix shape");
        ProbTable { items, slots, entries: ProbEntries::Float(probs) }
    }

    pub fn items(&self) -> usize {
        self.items
    }
    pub fn slots(&self) -> usize {
        self.slots
    }
    pub fn is_exact(&self) -> bool {
        matches!(self.entries, ProbEntries::Counts { .. })
    }

    fn idx(&self, item: usize, slot: usize) -> usize {
        assert!(item >= 1 && item <= self.items, "item {item} out of range");
        assert!(slot >= 1 && slot <= self.slots, "slot {slot} out of range");
        (item - 1) * self.slots + (slot - 1)
    }

    pub fn get(&self, item: usize, slot: usize) -> f64 {
        let i = self.idx(item, slot);
        match &self.entries {
            ProbEntries::Counts { counts, total } => counts[i] as f64 / *total as f64,
            ProbEntries::Float(p) => p[i],
        }
    }

    /// Lowest-terms rational entry; `None` for float tables.
    pub fn exact(&self, item: usize, slot: usize) -> Option<BigRational> {
        let i = self.idx(item, slot);
        match &self.entries {
            ProbEntries::Counts { counts, total } => {
                Some(BigRational::new(BigInt::from(counts[i]), BigInt::from(*total)))
            }
            ProbEntries::Float(_) => None,
        }
    }

    pub fn row_sum(&self, item: usize) -> f64 {
        (1..=self.slots).map(|j| self.get(item, j)).sum()
    }

    pub fn row_sum_exact(&self, item: usize) -> Option<BigRational> {
        (1..=self.slots).map(|j| self.exact(item, j)).sum()
    }

    /// Expected number of accepts, Σ over all entries.
    pub fn expected_accepts(&self) -> f64 {
        (1..=self.items).map(|i| self.row_sum(i)).sum()
    }

    /// Checks the table invariants: entries and row sums in [0, 1], total
    /// mass at most k, and row sums non-increasing in the item rank.
    pub fn check_invariants(&self) -> Result<()> {
        const SLACK: f64 = 1e-12;
        for i in 1..=self.items {
            for j in 1..=self.slots {
                let p = self.get(i, j);
                if !(-SLACK..=1.0 + SLACK).contains(&p) {
                    return range(format!("entry ({i},{j}) = {p} outside [0,1]"));
                }
            }
            let s = self.row_sum(i);
            if s > 1.0 + SLACK {
                return range(format!("row {i} sums to {s} > 1"));
            }
            if i > 1 && s > self.row_sum(i - 1) + SLACK {
                return range(format!("row sums increase from item {} to {i}", i - 1));
            }
        }
        if self.expected_accepts() > self.slots as f64 + SLACK {
            return range("expected accepts exceed k");
        }
        Ok(())
    }
}
