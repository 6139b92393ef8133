//! Closed-form finite-n acceptance probabilities.
//!
//! Every quantity comes in two arithmetic flavours: an exact rational
//! (`*_exact`, arbitrary precision, intended for small n and oracle
//! comparisons) and an `f64` evaluation that scales to n in the millions.
//! For dominating items the float path never forms the falling factorials;
//! it walks the summand with a ratio recurrence and compensated summation.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{range, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::types::{PolicyParams, ProbTable};

/// Falling factorial `n (n−1) ⋯ (n−k+1)`; the empty product is 1.
pub fn falling_factorial(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return range(format!("falling factorial needs k <= n (got n={n}, k={k})"));
    }
    Ok(falling(n, k))
}

fn falling(n: u64, k: u64) -> BigUint {
    ((n - k + 1)..=n).fold(BigUint::one(), |acc, x| acc * x)
}

/// Binomial coefficient, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn big(x: BigUint) -> BigInt {
    BigInt::from(x)
}

/// Probability that `draws` balls taken without replacement from an urn of
/// `total` balls, `blue` of them blue, are all blue: `C(blue, draws) / C(total, draws)`.
pub fn hypergeo_all_blue(total: u64, blue: u64, draws: u64) -> Result<BigRational> {
    if draws > total || blue > total {
        return range(format!(
            "urn needs draws <= total and blue <= total (got total={total}, blue={blue}, draws={draws})"
        ));
    }
    Ok(BigRational::new(big(binomial(blue, draws)), big(binomial(total, draws))))
}

/// A dominating item (rank ≤ r) and a 0-based accept slot, with the two
/// counting prefactors of its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominatingSlot {
    pub params: PolicyParams,
    /// 0-based: `slot = j` means the item is the `(j+1)`-th accept.
    pub slot: usize,
}

impl DominatingSlot {
    pub fn new(params: PolicyParams, slot: usize) -> Result<Self> {
        if slot >= params.k() {
            return range(format!("slot must lie in 0..k={} (got {slot})", params.k()));
        }
        Ok(DominatingSlot { params, slot })
    }

    /// Orderings of the accepted items ahead of the dominating one:
    /// `(r−1+j)_j`.
    pub fn kappa(&self) -> BigUint {
        let j = self.slot as u64;
        falling(self.params.r() as u64 - 1 + j, j)
    }

    /// Placements of the top `r` sampling items: `(t−1)_r`.
    pub fn tau(&self) -> BigUint {
        falling(self.params.sample_len() as u64, self.params.r() as u64)
    }
}

/// Exact probability that a given dominating item is the `(slot+1)`-th
/// accept of SINGLE-REF:
/// `κτ/n · Σ_{i=t+j}^{n} C(i−t, j) / (i−1)_{r+j}`.
pub fn dominating_accept_prob_exact(params: PolicyParams, slot: usize) -> Result<BigRational> {
    let spec = DominatingSlot::new(params, slot)?;
    let (n, t, r, j) = (params.n() as u64, params.t() as u64, params.r() as u64, slot as u64);
    let mut sum = BigRational::zero();
    for i in (t + j)..=n {
        sum += ratio(big(binomial(i - t, j)), big(falling(i - 1, r + j)));
    }
    Ok(sum * ratio(big(spec.kappa() * spec.tau()), n))
}

/// Float evaluation of [`dominating_accept_prob_exact`], valid for large n.
///
/// The first summand (`i = t+j`) folded with the prefactor is
/// `κ / (n (t+j−1)_j)`; successive summands follow
/// `a_{i+1} = a_i · (i−t+1)/(i−t+1−j) · (i−r−j)/i`.
pub fn dominating_accept_prob(params: PolicyParams, slot: usize) -> Result<f64> {
    DominatingSlot::new(params, slot)?;
    let (n, t, r, j) = (params.n(), params.t(), params.r(), slot);
    let mut term = 1.0 / n as f64;
    for m in 0..j {
        term *= (r + j - 1 - m) as f64 / (t + j - 1 - m) as f64;
    }
    let mut acc = CompensatedSum::new();
    for i in (t + j)..=n {
        acc.add(term);
        let d = (i - t + 1) as f64;
        term *= d / (d - j as f64) * ((i - r - j) as f64 / i as f64);
    }
    Ok(acc.value())
}

fn check_item_slot(params: PolicyParams, item: usize, slot: usize) -> Result<usize> {
    let k = params.k();
    if item < 1 || item > k {
        return range(format!("item rank must lie in 1..=k={k} (got {item}); ranks beyond k are unsupported"));
    }
    if slot < 1 || slot > k {
        return range(format!("slot must lie in 1..=k={k} (got {slot})"));
    }
    let r = params.r();
    // 0-based dominating slot carrying the same probability
    Ok(if item <= r {
        slot - 1
    } else {
        let m = item - r;
        if slot <= m { m } else { slot - 1 }
    })
}

/// Exact probability that the item of rank `item ≤ k` is the `slot`-th
/// accept (both 1-based). Non-dominating items reduce to dominating slots:
/// for `item = r+m`, slots `1..=m` all equal dominating slot `m+1`, later
/// slots equal the dominating probability of the same slot.
pub fn item_slot_prob_exact(params: PolicyParams, item: usize, slot: usize) -> Result<BigRational> {
    let j = check_item_slot(params, item, slot)?;
    dominating_accept_prob_exact(params, j)
}

pub fn item_slot_prob(params: PolicyParams, item: usize, slot: usize) -> Result<f64> {
    let j = check_item_slot(params, item, slot)?;
    dominating_accept_prob(params, j)
}

/// Weight of the `j`-th (1-based) dominating slot probability in the
/// competitive ratio: `r + 2(j−1)` for `j ≤ k−r+1`, else `k`.
pub fn gamma_weight(k: usize, r: usize, j: usize) -> usize {
    if j + r <= k + 1 { r + 2 * (j - 1) } else { k }
}

/// `(1/k) Σ_j γ_j · p_dom(j)`, exactly.
pub fn single_ref_ratio_exact(params: PolicyParams) -> BigRational {
    let (k, r) = (params.k(), params.r());
    let mut sum = BigRational::zero();
    for j in 1..=k {
        let p = dominating_accept_prob_exact(params, j - 1).expect("slot in range");
        sum += p * ratio(gamma_weight(k, r, j) as u64, 1u64);
    }
    sum / ratio(k as u64, 1u64)
}

pub fn single_ref_ratio(params: PolicyParams) -> f64 {
    let (k, r) = (params.k(), params.r());
    let s = compensated_sum((1..=k).map(|j| {
        gamma_weight(k, r, j) as f64 * dominating_accept_prob(params, j - 1).expect("slot in range")
    }));
    s / k as f64
}

/// The direct average `(1/k) Σ_{i≤k} Σ_j p_i^(j)`, which must equal
/// [`single_ref_ratio_exact`].
pub fn single_ref_ratio_by_items_exact(params: PolicyParams) -> BigRational {
    let k = params.k();
    let mut sum = BigRational::zero();
    for i in 1..=k {
        for j in 1..=k {
            sum += item_slot_prob_exact(params, i, j).expect("in range");
        }
    }
    sum / ratio(k as u64, 1u64)
}

/// Float table of `p_i^(j)` for the top-k items.
pub fn single_ref_prob_table(params: PolicyParams) -> ProbTable {
    let k = params.k();
    let dom: Vec<f64> = (0..k).map(|j| dominating_accept_prob(params, j).expect("slot in range")).collect();
    let mut probs = Vec::with_capacity(k * k);
    for i in 1..=k {
        for s in 1..=k {
            probs.push(dom[check_item_slot(params, i, s).expect("in range")]);
        }
    }
    ProbTable::from_floats(k, k, probs)
}

fn check_classical(n: usize, t: usize) -> Result<()> {
    if t < 2 || t > n {
        return range(format!("classical rule needs 1 < t <= n (got n={n}, t={t})"));
    }
    Ok(())
}

/// Probability that the classical rule (skip `t−1`, take the first item
/// beating the whole sample) picks the best item: `(t−1)/n Σ_{i=t}^{n} 1/(i−1)`.
pub fn classical_secretary_prob_exact(n: usize, t: usize) -> Result<BigRational> {
    check_classical(n, t)?;
    let mut sum = BigRational::zero();
    for i in t..=n {
        sum += ratio(1u64, (i - 1) as u64);
    }
    Ok(sum * ratio((t - 1) as u64, n as u64))
}

pub fn classical_secretary_prob(n: usize, t: usize) -> Result<f64> {
    check_classical(n, t)?;
    let s = compensated_sum((t..=n).map(|i| 1.0 / (i - 1) as f64));
    Ok(s * (t - 1) as f64 / n as f64)
}

fn check_k2(n: usize, t: usize) -> Result<()> {
    PolicyParams::without_reference(n, 2, t).map(|_| ())
}

/// OPTIMISTIC with k = 2 accepts the second-best item exactly as often as
/// the classical rule with the same threshold accepts the best one.
pub fn optimistic_k2_p2_exact(n: usize, t: usize) -> Result<BigRational> {
    check_k2(n, t)?;
    classical_secretary_prob_exact(n, t)
}

pub fn optimistic_k2_p2(n: usize, t: usize) -> Result<f64> {
    check_k2(n, t)?;
    classical_secretary_prob(n, t)
}

/// Excess acceptance probability of the best item over the second best:
/// `(t−1)/n · (t−2)/(n−1) · Σ_{i=t}^{n−1} (n−i)/((i−2)(i−1))`.
pub fn optimistic_k2_delta_exact(n: usize, t: usize) -> Result<BigRational> {
    check_k2(n, t)?;
    let mut sum = BigRational::zero();
    for i in t..n {
        sum += ratio((n - i) as u64, ((i - 2) * (i - 1)) as u64);
    }
    Ok(sum * ratio(((t - 1) * (t - 2)) as u64, (n * (n - 1)) as u64))
}

pub fn optimistic_k2_delta(n: usize, t: usize) -> Result<f64> {
    check_k2(n, t)?;
    Ok(optimistic_tail_sum(n, t) * ((t - 1) as f64 / n as f64) * ((t - 2) as f64 / (n - 1) as f64))
}

/// `Σ_{i=t}^{n−1} (n−i)/((i−2)(i−1))`, the finite sum inside δ.
pub fn optimistic_tail_sum(n: usize, t: usize) -> f64 {
    compensated_sum((t..n).map(|i| (n - i) as f64 / ((i - 2) as f64 * (i - 1) as f64)))
}

/// Acceptance probabilities and ratio of OPTIMISTIC for k = 2.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticK2Report<P> {
    pub n: usize,
    pub t: usize,
    pub p2: P,
    pub delta: P,
    /// `p2 + delta`
    pub p1: P,
    /// `(p1 + p2) / 2 = p2 + delta / 2`
    pub ratio: P,
}

pub fn optimistic_k2_report_exact(n: usize, t: usize) -> Result<OptimisticK2Report<BigRational>> {
    let p2 = optimistic_k2_p2_exact(n, t)?;
    let delta = optimistic_k2_delta_exact(n, t)?;
    let p1 = &p2 + &delta;
    let ratio_ = (&p1 + &p2) / ratio(2u64, 1u64);
    Ok(OptimisticK2Report { n, t, p2, delta, p1, ratio: ratio_ })
}

pub fn optimistic_k2_report(n: usize, t: usize) -> Result<OptimisticK2Report<f64>> {
    let p2 = optimistic_k2_p2(n, t)?;
    let delta = optimistic_k2_delta(n, t)?;
    Ok(OptimisticK2Report { n, t, p2, delta, p1: p2 + delta, ratio: p2 + 0.5 * delta })
}

pub fn optimistic_k2_ratio_exact(n: usize, t: usize) -> Result<BigRational> {
    optimistic_k2_report_exact(n, t).map(|r| r.ratio)
}

pub fn optimistic_k2_ratio(n: usize, t: usize) -> Result<f64> {
    optimistic_k2_report(n, t).map(|r| r.ratio)
}

/// Lossy conversion used when reporting rationals as decimals.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
