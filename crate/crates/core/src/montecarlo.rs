//! Seeded Monte Carlo estimates of slot probabilities and the competitive
//! ratio, for `n` far beyond enumeration range.
//!
//! Trial `i` draws its order from ChaCha8 seeded with `seed` on stream `i`,
//! so every trial is a pure function of `(seed, i)`. Trials are grouped into
//! fixed-size blocks whose integer counters are merged by addition; the
//! result is bit-identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{range, Result};
use crate::policies::{top_k_hits, Policy, PolicyKind};
use crate::types::{shuffled_order, AcceptanceRecord, PolicyParams, Rank};

const BLOCK: u64 = 4096;
/// `Sampler::Auto` switches to sparse sampling above this many items.
pub const FULL_ORDER_MAX_N: usize = 256;

/// How each trial's arrival order is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Shuffle all `n` ranks.
    FullOrder,
    /// Place ranks 1, 2, … at uniformly random free positions until as many
    /// of them fall in the sampling phase as the policy has references. Every
    /// omitted item is worse than each reference, so the policy cannot
    /// notice the difference.
    TopRanks,
    #[default]
    Auto,
}

impl Sampler {
    fn resolve(self, n: usize) -> Sampler {
        match self {
            Sampler::Auto if n <= FULL_ORDER_MAX_N => Sampler::FullOrder,
            Sampler::Auto => Sampler::TopRanks,
            s => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub policy: PolicyKind,
    pub params: PolicyParams,
    pub trials: u64,
    pub seed: u64,
    /// Row-major `k × k`: item `i ≤ k` taken as accept `j`.
    pub slot_counts: Vec<u64>,
    pub slot_probs: Vec<f64>,
    /// Bernoulli standard errors `sqrt(p̂(1−p̂)/trials)` of `slot_probs`.
    pub standard_errors: Vec<f64>,
    /// Mean top-`k` payoff, the competitive-ratio estimate.
    pub ratio: f64,
    pub ratio_se: f64,
}

impl McEstimate {
    pub fn k(&self) -> usize {
        self.params.k()
    }

    /// Estimate of `p_i^{(j)}` (1-based, `i, j ≤ k`).
    pub fn prob(&self, item: usize, slot: usize) -> f64 {
        self.slot_probs[(item - 1) * self.k() + slot - 1]
    }

    pub fn se(&self, item: usize, slot: usize) -> f64 {
        self.standard_errors[(item - 1) * self.k() + slot - 1]
    }

    /// Estimate of `p_i`, summed over slots, with its Bernoulli SE.
    pub fn accept_prob(&self, item: usize) -> (f64, f64) {
        let k = self.k();
        let hits: u64 = self.slot_counts[(item - 1) * k..item * k].iter().sum();
        bernoulli(hits, self.trials)
    }
}

fn bernoulli(hits: u64, trials: u64) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

struct Trial {
    rec: AcceptanceRecord,
    sparse: Vec<(usize, Rank)>,
}

impl Trial {
    fn new() -> Self {
        Trial { rec: AcceptanceRecord::default(), sparse: Vec::new() }
    }

    fn run(&mut self, policy: &Policy, sampler: Sampler, seed: u64, index: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let params = policy.params();
        match sampler {
            Sampler::TopRanks => {
                top_rank_arrivals(params.n(), params.t(), policy.references_needed(), &mut rng, &mut self.sparse);
                policy.run_into(self.sparse.iter().copied(), &mut self.rec);
            }
            _ => {
                let order = shuffled_order(params.n(), &mut rng);
                policy.run_into(order.arrivals(), &mut self.rec);
            }
        }
    }
}

fn top_rank_arrivals(n: usize, t: usize, need: usize, rng: &mut ChaCha8Rng, out: &mut Vec<(usize, Rank)>) {
    out.clear();
    let mut sampled = 0;
    let mut rank = 1u32;
    while sampled < need {
        let pos = loop {
            let p = rng.random_range(1..=n);
            if !out.iter().any(|&(q, _)| q == p) {
                break p;
            }
        };
        out.push((pos, Rank(rank)));
        if pos < t {
            sampled += 1;
        }
        rank += 1;
    }
    out.sort_unstable_by_key(|&(p, _)| p);
}

fn block_ranges(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(BLOCK)).map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(trials))).collect()
}

#[derive(Clone)]
struct Tally {
    slots: Vec<u64>,
    hits: u64,
    hits_sq: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.slots.iter_mut().zip(other.slots) {
            *a += b;
        }
        self.hits += other.hits;
        self.hits_sq += other.hits_sq;
        self
    }
}

/// Estimates with the default [`Sampler::Auto`].
pub fn mc_estimate(params: PolicyParams, kind: PolicyKind, trials: u64, seed: u64) -> Result<McEstimate> {
    mc_estimate_with(params, kind, trials, seed, Sampler::Auto)
}

pub fn mc_estimate_with(
    params: PolicyParams,
    kind: PolicyKind,
    trials: u64,
    seed: u64,
    sampler: Sampler,
) -> Result<McEstimate> {
    if trials < 1 {
        return range("trials must be at least 1");
    }
    let policy = Policy::new(kind, params);
    let sampler = sampler.resolve(params.n());
    let k = params.k();
    let empty = Tally { slots: vec![0; k * k], hits: 0, hits_sq: 0 };

    let tallies: Vec<Tally> = block_ranges(trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut tally = empty.clone();
            let mut trial = Trial::new();
            for i in lo..hi {
                trial.run(&policy, sampler, seed, i);
                for (slot, a) in trial.rec.accepts.iter().enumerate() {
                    let item = a.rank.get() as usize;
                    if item <= k {
                        tally.slots[(item - 1) * k + slot] += 1;
                    }
                }
                let h = top_k_hits(&trial.rec, k) as u64;
                tally.hits += h;
                tally.hits_sq += h * h;
            }
            tally
        })
        .collect();
    let total = tallies.into_iter().fold(empty, Tally::merge);

    let (slot_probs, standard_errors) = total.slots.iter().map(|&c| bernoulli(c, trials)).unzip();
    let nt = trials as f64;
    let mean_h = total.hits as f64 / nt;
    let var_h = (total.hits_sq as f64 / nt - mean_h * mean_h).max(0.0);
    Ok(McEstimate {
        policy: kind,
        params,
        trials,
        seed,
        slot_counts: total.slots,
        slot_probs,
        standard_errors,
        ratio: mean_h / k as f64,
        ratio_se: (var_h / nt).sqrt() / k as f64,
    })
}

/// Value-based measurement: mean of ALG/OPT where the item of rank `i`
/// carries `values[i-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub trials: u64,
    pub seed: u64,
    pub ratio: f64,
    pub ratio_se: f64,
}

/// `values` lists the item values best first (non-increasing, non-negative,
/// with a positive top-`k` sum). Uses the same per-trial orders as
/// [`mc_estimate`] for the same seed.
pub fn mc_value_ratio(
    params: PolicyParams,
    kind: PolicyKind,
    values: &[f64],
    trials: u64,
    seed: u64,
) -> Result<ValueEstimate> {
    if trials < 1 {
        return range("trials must be at least 1");
    }
    if values.len() != params.n() {
        return range(format!("expected {} values, got {}", params.n(), values.len()));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) || values.windows(2).any(|w| w[0] < w[1]) {
        return range("values must be finite, non-negative and sorted best first");
    }
    let opt: f64 = values[..params.k()].iter().sum();
    if opt <= 0.0 {
        return range("the top-k values must have a positive sum");
    }
    let policy = Policy::new(kind, params);
    let sampler = Sampler::Auto.resolve(params.n());

    // per-block (sum, sum of squares); blocks are merged in index order
    let parts: Vec<(f64, f64)> = block_ranges(trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut trial = Trial::new();
            let (mut s, mut s2) = (0.0, 0.0);
            for i in lo..hi {
                trial.run(&policy, sampler, seed, i);
                let alg: f64 = trial.rec.accepts.iter().map(|a| values[a.rank.get() as usize - 1]).sum();
                let x = alg / opt;
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nt = trials as f64;
    let mean = s / nt;
    let var = (s2 / nt - mean * mean).max(0.0);
    Ok(ValueEstimate { trials, seed, ratio: mean, ratio_se: (var / nt).sqrt() })
}
