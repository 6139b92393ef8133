//! Large-n formulas with the sampling phase a constant fraction `c` of the
//! input (`t − 1 = c·n`), plus the calculus objects behind them.
//!
//! For a dominating item in slot `j+1` the lower bound is
//!
//! ```text
//! r = 1:  c · (ln(1/c) − Σ_{ℓ=1}^{j} β_ℓ (c^ℓ − 1)/ℓ),        β_ℓ = (−1)^ℓ C(j, ℓ)
//! r ≥ 2:  c/(r−1) · (1 − c^{r−1} Σ_{ℓ=0}^{j} α_ℓ (1−c)^{j−ℓ} c^ℓ),  α_ℓ = C(j+r−1, ℓ+r−1)
//! ```
//!
//! The alternating β-sum cancels catastrophically once `j` reaches a few
//! dozen. It equals `Σ_{m=1}^{j} (1−c)^m / m`, and since that partial sum
//! converges to `ln(1/c)` the r = 1 bound is the positive tail
//! `c · Σ_{m>j} (1−c)^m / m`, which is what gets evaluated. The literal
//! β-sum remains available as [`beta_series`] for cross-checks at small `j`.
//! Likewise the r ≥ 2 bracket is `P[Bin(j+r−1, c) ≤ r−2]` and is summed
//! term by term rather than as `1 − (…)`.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{range, Result};
use crate::exact::binomial;
use crate::numeric::compensated_sum;

fn check_fraction(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return range(format!("c must lie in the open interval (0,1) (got {c})"));
    }
    Ok(())
}

/// Coefficients of the asymptotic bound for slot `j` and reference rank `r`,
/// taken from exact binomials.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCoeffs {
    pub j: usize,
    pub r: usize,
    /// `β_ℓ` for `ℓ = 1..=j` (index 0 holds `β_1`).
    pub beta: Vec<f64>,
    /// `α_ℓ` for `ℓ = 0..=j`.
    pub alpha: Vec<f64>,
}

impl AsymptoticCoeffs {
    pub fn new(j: usize, r: usize) -> Result<Self> {
        if r < 1 {
            return range("reference rank r must be at least 1");
        }
        let (j64, r64) = (j as u64, r as u64);
        let beta = (1..=j64)
            .map(|l| {
                let b = binomial(j64, l).to_f64().unwrap_or(f64::INFINITY);
                if l % 2 == 0 { b } else { -b }
            })
            .collect();
        let alpha = (0..=j64)
            .map(|l| binomial(j64 + r64 - 1, l + r64 - 1).to_f64().unwrap_or(f64::INFINITY))
            .collect();
        Ok(AsymptoticCoeffs { j, r, beta, alpha })
    }
}

/// The literal alternating sum `Σ_{ℓ=1}^{j} β_ℓ (c^ℓ − 1)/ℓ`. Accurate only
/// for small `j`.
pub fn beta_series(j: usize, c: f64) -> f64 {
    let coeffs = AsymptoticCoeffs::new(j, 1).expect("r = 1 is valid");
    compensated_sum(
        coeffs.beta.iter().enumerate().map(|(i, b)| {
            let l = (i + 1) as i32;
            b * (c.powi(l) - 1.0) / l as f64
        }),
    )
}

/// `Σ_{m=1}^{j} (1−c)^m / m`, equal to [`beta_series`] for every `j`.
#[cfg(test)]
fn positive_series(j: usize, c: f64) -> f64 {
    let q = 1.0 - c;
    let mut pow = 1.0;
    compensated_sum((1..=j).map(|m| {
        pow *= q;
        pow / m as f64
    }))
}

/// `Σ_{m>j} (1−c)^m / m`, summed until the terms stop mattering.
fn series_tail(j: usize, c: f64) -> f64 {
    let q = 1.0 - c;
    let mut pow = q.powi(j as i32);
    let mut sum = crate::numeric::CompensatedSum::new();
    for m in j + 1.. {
        pow *= q;
        let term = pow / m as f64;
        sum.add(term);
        if term <= 1e-18 * sum.value() || pow == 0.0 {
            break;
        }
    }
    sum.value()
}

/// `P[Bin(trials, c) ≤ m]` as a sum of point masses (log-space steps, so
/// nothing overflows for large `trials`).
fn binomial_lower_tail(trials: usize, m: usize, c: f64) -> f64 {
    let step = (c / (1.0 - c)).ln();
    let mut log_pmf = trials as f64 * (-c).ln_1p();
    compensated_sum((0..=m.min(trials)).map(|i| {
        if i > 0 {
            log_pmf += ((trials - i + 1) as f64 / i as f64).ln() + step;
        }
        log_pmf.exp()
    }))
}

/// Asymptotic lower bound on the probability that a dominating item is the
/// `(j+1)`-th accept, o(1) terms dropped. Accurate to a few ulps relative.
pub fn p_dom_asym(r: usize, c: f64, j: usize) -> Result<f64> {
    check_fraction(c)?;
    if r < 1 {
        return range("reference rank r must be at least 1");
    }
    if r == 1 {
        return Ok(c * series_tail(j, c));
    }
    Ok(c / (r - 1) as f64 * binomial_lower_tail(j + r - 1, r - 2, c))
}

/// `p_dom_asym(r, c, j)` for `j = 0..len`, computed in O(len + r).
///
/// For r = 1 the series tail is found once at `j = len − 1` and walked
/// back by adding terms. For r ≥ 2 each point mass of `Bin(N, c)` below
/// `r − 1` is stepped in `N` by `P_{N+1}(i) = P_N(i)·(1−c)(N+1)/(N+1−i)`,
/// and the bracket is their sum. Neither path subtracts, so every entry
/// keeps full relative accuracy (cost O(len·r)).
pub fn dominating_asym_profile(r: usize, c: f64, len: usize) -> Result<Vec<f64>> {
    check_fraction(c)?;
    if r < 1 {
        return range("reference rank r must be at least 1");
    }
    let mut out = Vec::with_capacity(len);
    if r == 1 {
        if len == 0 {
            return Ok(out);
        }
        out.resize(len, 0.0);
        let q = 1.0 - c;
        let mut tail = series_tail(len - 1, c);
        for j in (0..len).rev() {
            out[j] = c * tail;
            // tail_{j-1} = tail_j + q^j / j
            if j > 0 {
                tail += q.powi(j as i32) / j as f64;
            }
        }
        return Ok(out);
    }
    let m = r - 2;
    let scale = c / (r - 1) as f64;
    let q = 1.0 - c;
    // point masses of Bin(r−1, c) at 0..=m
    let mut big_n = r - 1;
    let mut masses = Vec::with_capacity(m + 1);
    let step = (c / q).ln();
    let mut log_pmf = big_n as f64 * (-c).ln_1p();
    for i in 0..=m {
        if i > 0 {
            log_pmf += ((big_n - i + 1) as f64 / i as f64).ln() + step;
        }
        masses.push(log_pmf.exp());
    }
    for _ in 0..len {
        out.push(scale * masses.iter().sum::<f64>());
        for (i, p) in masses.iter_mut().enumerate() {
            *p *= q * (big_n + 1) as f64 / (big_n + 1 - i) as f64;
        }
        big_n += 1;
    }
    Ok(out)
}

/// Weighted recombination `(1/k) Σ_{j=1}^{k} γ_j q_{j−1}` of a profile.
pub(crate) fn weighted_ratio(k: usize, r: usize, profile: &[f64]) -> f64 {
    debug_assert!(profile.len() >= k);
    let s = compensated_sum(
        (1..=k).map(|j| crate::exact::gamma_weight(k, r, j) as f64 * profile[j - 1]),
    );
    s / k as f64
}

/// Asymptotic competitive ratio of SINGLE-REF with reference rank `r` and
/// sampling fraction `c`.
pub fn cr_single_ref_asym(k: usize, r: usize, c: f64) -> Result<f64> {
    if k < 1 || r < 1 || r > k {
        return range(format!("need 1 <= r <= k (got k={k}, r={r})"));
    }
    let profile = dominating_asym_profile(r, c, k)?;
    Ok(weighted_ratio(k, r, &profile))
}

/// Asymptotic competitive ratio of OPTIMISTIC for k = 2:
/// `c ln(1/c) + (c²/2)(1/c − ln(1/c) − 1)`.
pub fn cr_optimistic_k2_asym(c: f64) -> Result<f64> {
    check_fraction(c)?;
    let l = -c.ln();
    Ok(c * l + 0.5 * c * c * (1.0 / c - l - 1.0))
}

/// Kleinberg's guarantee `1 − 5/√k`; `None` where it is vacuous (k ≤ 24).
pub fn kleinberg_bound(k: usize) -> Option<f64> {
    if k <= 24 {
        None
    } else {
        Some(1.0 - 5.0 / (k as f64).sqrt())
    }
}

/// Parameters of the kernel `f(i) = i^j / (i+y)^{r+j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub j: usize,
    pub r: usize,
    pub y: f64,
}

impl KernelSpec {
    pub fn new(j: usize, r: usize, y: f64) -> Result<Self> {
        if r < 1 {
            return range("kernel needs r >= 1");
        }
        if !(y > 0.0 && y.is_finite()) {
            return range(format!("kernel needs y > 0 (got {y})"));
        }
        Ok(KernelSpec { j, r, y })
    }

    /// The unique maximum point `j·y/r`; zero for `j = 0`.
    pub fn peak(&self) -> f64 {
        self.j as f64 * self.y / self.r as f64
    }
}

pub fn kernel_f(spec: &KernelSpec, i: f64) -> f64 {
    let s = i + spec.y;
    (i / s).powi(spec.j as i32) / s.powi(spec.r as i32)
}

/// An antiderivative of [`kernel_f`].
///
/// r = 1: `ln(i+y) − Σ_{ℓ=1}^{j} (β_ℓ/ℓ) (y/(i+y))^ℓ`, evaluated through
/// the positive form `ln(i+y) + Σ_{m=1}^{j} (1 − (i/(i+y))^m)/m`.
///
/// r ≥ 2: `−Σ_{ℓ=0}^{j} α_ℓ i^{j−ℓ} y^ℓ / (α_0 (r−1) (i+y)^{r+j−1})`, with
/// numerator and denominator both scaled by `(i+y)^{−j}`.
pub fn antiderivative_f(spec: &KernelSpec, i: f64) -> f64 {
    let s = i + spec.y;
    let u = i / s;
    let w = spec.y / s;
    if spec.r == 1 {
        let mut pow = 1.0;
        let tail = compensated_sum((1..=spec.j).map(|m| {
            pow *= u;
            (1.0 - pow) / m as f64
        }));
        return s.ln() + tail;
    }
    let coeffs = AsymptoticCoeffs::new(spec.j, spec.r).expect("validated kernel");
    let num = compensated_sum(
        coeffs
            .alpha
            .iter()
            .enumerate()
            .map(|(l, a)| a * u.powi((spec.j - l) as i32) * w.powi(l as i32)),
    );
    -num / (coeffs.alpha[0] * (spec.r - 1) as f64 * s.powi(spec.r as i32 - 1))
}

/// `1/c − ln(1/c) − 1`, the limit of `Σ_{i=t}^{n−1} (n−i)/((i−2)(i−1))`.
pub fn optimistic_sum_limit(c: f64) -> Result<f64> {
    check_fraction(c)?;
    Ok(1.0 / c + c.ln() - 1.0)
}

/// Concrete finite-n sandwich around the OPTIMISTIC tail sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumSandwich {
    pub n: usize,
    pub t: usize,
    /// `(t − 1)/n`, the sampling fraction actually realised by `t`.
    pub c_eff: f64,
    pub asymptotic: f64,
    /// `1/(c·t)`
    pub lower_slack: f64,
    /// `ξ = (n−t+2)/(t−2)² + (n−t+1)/(t−1)²`
    pub upper_slack: f64,
}

impl SumSandwich {
    pub fn lower(&self) -> f64 {
        self.asymptotic - self.lower_slack
    }
    pub fn upper(&self) -> f64 {
        self.asymptotic + self.upper_slack
    }
}

/// Bounds for the tail sum at `n` items with threshold `t = ⌈c n⌉ + 1`.
/// The limit is taken at the realised fraction `(t−1)/n`, for which both
/// slack terms are rigorous.
pub fn optimistic_sum_bounds(c: f64, n: usize) -> Result<SumSandwich> {
    check_fraction(c)?;
    let t = threshold_for_fraction(c, n);
    if t < 3 || t > n {
        return range(format!("n={n} too small for c={c} (t={t})"));
    }
    let c_eff = (t - 1) as f64 / n as f64;
    let (nf, tf) = (n as f64, t as f64);
    Ok(SumSandwich {
        n,
        t,
        c_eff,
        asymptotic: optimistic_sum_limit(c_eff)?,
        lower_slack: 1.0 / (c_eff * tf),
        upper_slack: (nf - tf + 2.0) / (tf - 2.0).powi(2) + (nf - tf + 1.0) / (tf - 1.0).powi(2),
    })
}

/// `t = ⌈c·n⌉ + 1`, so that the sampling phase holds at least `c·n` items.
/// Products like `0.2 · 10⁵` that land a few ulps above an integer are not
/// rounded up.
pub fn threshold_for_fraction(c: f64, n: usize) -> usize {
    let x = c * n as f64;
    let nearest = x.round();
    let ceil = if (x - nearest).abs() <= 1e-9 * x.max(1.0) { nearest } else { x.ceil() };
    ceil as usize + 1
}
