//! Online execution of SINGLE-REF and OPTIMISTIC.
//!
//! Both policies reject the first `t − 1` arrivals and remember the best
//! sampling ranks. SINGLE-REF then accepts the first `k` items beating
//! `s_r`; OPTIMISTIC accepts, as its `j`-th item, the first item beating
//! `s_{k−j+1}`, walking the ladder from its weakest reference to its
//! strongest regardless of how good the accepted items were.
//!
//! The scanner consumes `(position, rank)` pairs in increasing position
//! order. A full arrival order supplies every pair; a sparse stream may omit
//! items whose rank is worse than every reference the policy will use, since
//! such items can neither enter the top sampling ranks nor be accepted.

use serde::{Deserialize, Serialize};

use crate::types::{Accept, AcceptanceRecord, ArrivalOrder, PolicyParams, Rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    SingleRef,
    Optimistic,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::SingleRef => "single-ref",
            PolicyKind::Optimistic => "optimistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Policy {
    kind: PolicyKind,
    params: PolicyParams,
}

impl Policy {
    pub fn new(kind: PolicyKind, params: PolicyParams) -> Self {
        Policy { kind, params }
    }

    pub fn single_ref(params: PolicyParams) -> Self {
        Self::new(PolicyKind::SingleRef, params)
    }

    /// OPTIMISTIC ignores `params.r()`.
    pub fn optimistic(params: PolicyParams) -> Self {
        Self::new(PolicyKind::Optimistic, params)
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn params(&self) -> PolicyParams {
        self.params
    }

    /// How many of the best sampling ranks the policy has to remember.
    pub fn references_needed(&self) -> usize {
        match self.kind {
            PolicyKind::SingleRef => self.params.r(),
            PolicyKind::Optimistic => self.params.k(),
        }
    }

    pub fn run(&self, order: &ArrivalOrder) -> AcceptanceRecord {
        debug_assert_eq!(order.len(), self.params.n());
        let mut rec = AcceptanceRecord::default();
        self.run_into(order.arrivals(), &mut rec);
        rec
    }

    /// Runs the policy on `(position, rank)` pairs (1-based positions,
    /// strictly increasing), overwriting `rec`. Reusing `rec` across calls
    /// avoids allocation in enumeration loops.
    pub fn run_into<I>(&self, arrivals: I, rec: &mut AcceptanceRecord)
    where
        I: IntoIterator<Item = (usize, Rank)>,
    {
        rec.clear();
        let k = self.params.k();
        let t = self.params.t();
        let keep = self.references_needed();
        // best sampling ranks, best first, at most `keep` of them
        let top = &mut rec.reference_ranks;
        let mut selecting = false;
        let mut threshold = Rank(u32::MAX);

        for (pos, rank) in arrivals {
            if pos < t {
                if top.len() < keep || rank.beats(top[top.len() - 1]) {
                    let at = top.partition_point(|&x| x.beats(rank));
                    top.insert(at, rank);
                    top.truncate(keep);
                }
                continue;
            }
            if !selecting {
                selecting = true;
                threshold = self.finish_sampling(top);
            }
            let target = match self.kind {
                PolicyKind::SingleRef => threshold,
                PolicyKind::Optimistic => {
                    // j-th accept (1-based) must beat s_{k-j+1}
                    let j = rec.accepts.len() + 1;
                    top.get(k - j).copied().unwrap_or(Rank(u32::MAX))
                }
            };
            if rank.beats(target) {
                rec.accepts.push(Accept { position: pos, rank });
                if rec.accepts.len() == k {
                    break;
                }
            }
        }
        if !selecting {
            self.finish_sampling(top);
        }
    }

    fn finish_sampling(&self, top: &mut Vec<Rank>) -> Rank {
        match self.kind {
            PolicyKind::SingleRef => {
                let r = self.params.r();
                debug_assert!(top.len() >= r, "sampling shorter than r");
                let s_r = top.get(r - 1).copied().unwrap_or(Rank(u32::MAX));
                top.clear();
                top.push(s_r);
                s_r
            }
            PolicyKind::Optimistic => Rank(u32::MAX),
        }
    }
}

pub fn run_single_ref(params: PolicyParams, order: &ArrivalOrder) -> AcceptanceRecord {
    Policy::single_ref(params).run(order)
}

pub fn run_optimistic(params: PolicyParams, order: &ArrivalOrder) -> AcceptanceRecord {
    Policy::optimistic(params).run(order)
}

/// Fraction of the top-`k` items that were accepted. Under near-equal top-k
/// values and negligible other values this is exactly ALG / OPT.
pub fn payoff_topk(record: &AcceptanceRecord, k: usize) -> f64 {
    top_k_hits(record, k) as f64 / k as f64
}

pub(crate) fn top_k_hits(record: &AcceptanceRecord, k: usize) -> usize {
    record.accepts.iter().filter(|a| a.rank.get() as usize <= k).count()
}
