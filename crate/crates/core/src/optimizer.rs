//! Numerical maximization of the asymptotic competitive ratios.
//!
//! For each `(k, r)` the objective in `c` is scanned on a coarse grid and
//! the best grid cell is refined by golden-section search. When many `k`
//! are optimized together, the dominating-item profile for a given `(r, c)`
//! is computed once and every `k` is read off prefix sums of it.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{cr_optimistic_k2_asym, cr_single_ref_asym, dominating_asym_profile, kleinberg_bound};
use crate::error::{range, Error, Result};
use crate::numeric::golden_section_max;

/// Ratios closer than this are treated as tied; ties go to the smaller `r`.
pub const TIE_EPS: f64 = 1e-9;
/// Table rows up to this `k` must be monotone; later dips are only reported.
pub const MONOTONE_CHECKED_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub c_tol: f64,
    pub grid_step: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { c_tol: 1e-6, grid_step: 1e-3, c_min: 0.01, c_max: 0.99 }
    }
}

impl SearchConfig {
    pub fn with_tolerance(c_tol: f64) -> Self {
        SearchConfig { c_tol, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.c_tol) {
            return range(format!("tolerance must be positive (got {})", self.c_tol));
        }
        if !ok(self.grid_step) {
            return range(format!("grid step must be positive (got {})", self.grid_step));
        }
        if !(0.0 < self.c_min && self.c_min < self.c_max && self.c_max < 1.0) {
            return range(format!("need 0 < c_min < c_max < 1 (got {}, {})", self.c_min, self.c_max));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let steps = ((self.c_max - self.c_min) / self.grid_step).round() as usize;
        (0..=steps).map(|i| (self.c_min + i as f64 * self.grid_step).min(self.c_max)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimumRow {
    pub k: usize,
    #[serde(rename = "rStar")]
    pub r: usize,
    #[serde(rename = "cStar")]
    pub c: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimisticOptimum {
    #[serde(rename = "cStar")]
    pub c: f64,
    pub ratio: f64,
}

/// Per-`k` objective values for one `(r, c)`, from prefix sums of the profile.
///
/// With `M = k − r + 1` the weights are `r + 2(j−1)` for `j ≤ M` and `k`
/// beyond, so `k · ratio = r·S0[M] + 2·S1[M] + k·(S0[k] − S0[M])`.
fn ratios_for_all_k(r: usize, c: f64, ks: &RangeInclusive<usize>) -> Result<Vec<f64>> {
    let k_max = *ks.end();
    let q = dominating_asym_profile(r, c, k_max)?;
    let mut s0 = vec![0.0; k_max + 1];
    let mut s1 = vec![0.0; k_max + 1];
    for (j, &x) in q.iter().enumerate() {
        s0[j + 1] = s0[j] + x;
        s1[j + 1] = s1[j] + j as f64 * x;
    }
    Ok(ks
        .clone()
        .map(|k| {
            if k < r {
                return f64::NEG_INFINITY;
            }
            let m = k - r + 1;
            (r as f64 * s0[m] + 2.0 * s1[m] + k as f64 * (s0[k] - s0[m])) / k as f64
        })
        .collect())
}

/// Best `(c, ratio)` for every `k` in `ks` at fixed `r` (entries for `k < r`
/// are `None`).
fn best_c_for_r(r: usize, ks: &RangeInclusive<usize>, config: &SearchConfig) -> Result<Vec<Option<(f64, f64)>>> {
    let grid = config.grid();
    let nk = ks.clone().count();
    let mut best = vec![(0usize, f64::NEG_INFINITY); nk];
    for (gi, &c) in grid.iter().enumerate() {
        for (slot, v) in best.iter_mut().zip(ratios_for_all_k(r, c, ks)?) {
            if v > slot.1 {
                *slot = (gi, v);
            }
        }
    }
    ks.clone()
        .zip(best)
        .map(|(k, (gi, _))| {
            if k < r {
                return Ok(None);
            }
            let lo = grid[gi.saturating_sub(1)];
            let hi = grid[(gi + 1).min(grid.len() - 1)];
            // errors cannot occur inside the bracket; map them to -inf defensively
            let f = |c: f64| cr_single_ref_asym(k, r, c).unwrap_or(f64::NEG_INFINITY);
            let (c, v) = golden_section_max(f, lo, hi, config.c_tol);
            // keep the grid point if refinement somehow lost ground
            let g = f(grid[gi]);
            Ok(Some(if g > v { (grid[gi], g) } else { (c, v) }))
        })
        .collect()
}

/// Optimal rows for every `k` in `ks`, searching `r` exhaustively over `1..=k`.
pub fn optimize_range(ks: RangeInclusive<usize>, config: &SearchConfig) -> Result<Vec<OptimumRow>> {
    config.validate()?;
    if *ks.start() < 1 || ks.is_empty() {
        return range("k must be at least 1");
    }
    let k_max = *ks.end();
    let per_r: Vec<Vec<Option<(f64, f64)>>> =
        (1..=k_max).into_par_iter().map(|r| best_c_for_r(r, &ks, config)).collect::<Result<_>>()?;
    Ok(ks
        .clone()
        .enumerate()
        .map(|(idx, k)| {
            let mut row = OptimumRow { k, r: 0, c: f64::NAN, ratio: f64::NEG_INFINITY };
            for (r0, cand) in per_r.iter().enumerate().take(k) {
                if let Some((c, v)) = cand[idx] {
                    if v > row.ratio + TIE_EPS {
                        row = OptimumRow { k, r: r0 + 1, c, ratio: v };
                    }
                }
            }
            row
        })
        .collect())
}

pub fn optimize_single_ref(k: usize, c_tol: f64) -> Result<OptimumRow> {
    optimize_single_ref_with(k, &SearchConfig::with_tolerance(c_tol))
}

pub fn optimize_single_ref_with(k: usize, config: &SearchConfig) -> Result<OptimumRow> {
    if k < 1 {
        return range("k must be at least 1");
    }
    Ok(optimize_range(k..=k, config)?[0])
}

/// Maximizes the OPTIMISTIC k = 2 objective, which is unimodal on (0, 1).
pub fn optimize_optimistic_k2(c_tol: f64) -> Result<OptimisticOptimum> {
    let config = SearchConfig::with_tolerance(c_tol);
    config.validate()?;
    let f = |c: f64| cr_optimistic_k2_asym(c).unwrap_or(f64::NEG_INFINITY);
    let (c, ratio) = golden_section_max(f, config.c_min, config.c_max, c_tol);
    Ok(OptimisticOptimum { c, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(flatten)]
    pub optimum: OptimumRow,
    pub kleinberg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimumTable {
    pub rows: Vec<TableRow>,
    /// Every `k` whose ratio falls below that of `k − 1`.
    pub monotonicity_violations: Vec<usize>,
}

impl OptimumTable {
    /// Whether ratios are non-decreasing for all `k ≤ k_limit`.
    pub fn monotone_up_to(&self, k_limit: usize) -> bool {
        self.monotonicity_violations.iter().all(|&k| k > k_limit)
    }
}

pub fn build_table(k_max: usize) -> Result<OptimumTable> {
    build_table_with(k_max, &SearchConfig::default())
}

/// Rows for `k = 1..=k_max` with the Kleinberg column. A ratio dip at
/// `k ≤ 20` is an error; later dips are listed in the result.
pub fn build_table_with(k_max: usize, config: &SearchConfig) -> Result<OptimumTable> {
    if k_max < 1 {
        return range("k-max must be at least 1");
    }
    let rows: Vec<TableRow> = optimize_range(1..=k_max, config)?
        .into_iter()
        .map(|optimum| TableRow { optimum, kleinberg: kleinberg_bound(optimum.k) })
        .collect();
    let monotonicity_violations: Vec<usize> = rows
        .windows(2)
        .filter(|w| w[1].optimum.ratio < w[0].optimum.ratio)
        .map(|w| w[1].optimum.k)
        .collect();
    let table = OptimumTable { rows, monotonicity_violations };
    if !table.monotone_up_to(MONOTONE_CHECKED_K) {
        return Err(Error::Check(format!(
            "ratios decrease at k = {:?}",
            table.monotonicity_violations.iter().filter(|&&k| k <= MONOTONE_CHECKED_K).collect::<Vec<_>>()
        )));
    }
    Ok(table)
}

/// One row of the published optimum table (values truncated to 4 decimals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    pub k: usize,
    pub r: usize,
    pub c: f64,
    pub cr: f64,
}

pub const APPENDIX_TABLE_CSV: &str = include_str!("../fixtures/appendix_table.csv");

pub fn parse_appendix_table(text: &str) -> Result<Vec<AppendixRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Range(e.to_string()))?;
    if headers != vec!["k", "r", "c", "cr"] {
        return range(format!("unexpected header {headers:?}"));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Range(format!("bad fixture row: {e}"))))
        .collect()
}

/// The bundled golden table, `k = 1..=100`.
pub fn appendix_table() -> Vec<AppendixRow> {
    parse_appendix_table(APPENDIX_TABLE_CSV).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn prefix_objective_matches_direct() {
        let ks = 1..=30;
        for r in [1, 2, 5, 11] {
            for c in [0.05, 0.2545, 0.6] {
                let fast = ratios_for_all_k(r, c, &ks).unwrap();
                for (k, v) in ks.clone().zip(fast) {
                    if k >= r {
                        let direct = cr_single_ref_asym(k, r, c).unwrap();
                        assert!((v - direct).abs() < 1e-13, "k={k} r={r} c={c}");
                    }
                }
            }
        }
        let v = ratios_for_all_k(1, 0.2545, &(2..=2)).unwrap()[0];
        assert!((v - 0.41193).abs() < 5e-5, "{v}");
    }

    #[test]
    fn classical_optimum() {
        let row = optimize_single_ref(1, 1e-6).unwrap();
        assert_eq!(row.r, 1);
        assert!((row.c - 1.0 / E).abs() < 1e-4);
        assert!((row.ratio - 1.0 / E).abs() < 1e-9);
    }

    #[test]
    fn small_k_rows() {
        let row = optimize_single_ref(2, 1e-6).unwrap();
        assert_eq!(row.r, 1);
        assert!((row.c - 0.2545).abs() < 5e-3 && (row.ratio - 0.4119).abs() < 5e-4, "{row:?}");
        let row = optimize_single_ref(5, 1e-6).unwrap();
        assert_eq!(row.r, 2);
        assert!((row.c - 0.2525).abs() < 5e-3 && (row.ratio - 0.4999).abs() < 1e-3, "{row:?}");
    }

    #[test]
    fn optimum_is_local_max() {
        for k in [3, 10, 40] {
            let row = optimize_single_ref(k, 1e-6).unwrap();
            let f = |c| cr_single_ref_asym(k, row.r, c).unwrap();
            assert!(row.ratio >= f(row.c + 1e-5) && row.ratio >= f(row.c - 1e-5));
            assert!((row.ratio - f(row.c)).abs() < 1e-15);
        }
    }

    #[test]
    fn finer_grid_is_consistent() {
        let fine = SearchConfig { grid_step: 5e-4, ..Default::default() };
        for k in [2, 7, 25] {
            let a = optimize_single_ref(k, 1e-6).unwrap();
            let b = optimize_single_ref_with(k, &fine).unwrap();
            assert_eq!(a.r, b.r);
            assert!((a.ratio - b.ratio).abs() < 1e-6);
        }
    }

    #[test]
    fn range_matches_single_k() {
        let rows = optimize_range(1..=12, &SearchConfig::default()).unwrap();
        for row in rows {
            let single = optimize_single_ref(row.k, 1e-6).unwrap();
            assert_eq!(row, single);
        }
    }

    #[test]
    fn optimistic_optimum() {
        let o = optimize_optimistic_k2(1e-8).unwrap();
        assert!((o.c - 0.3521).abs() < 2e-3, "{o:?}");
        assert!(o.ratio > cr_optimistic_k2_asym(1.0 / E).unwrap());
        assert!(o.ratio > 1.0 / E);
        assert!((o.ratio - 0.416894).abs() < 1e-6);
    }

    #[test]
    fn bad_inputs() {
        assert!(optimize_single_ref(0, 1e-6).is_err());
        assert!(optimize_single_ref(3, 0.0).is_err());
        assert!(optimize_optimistic_k2(-1.0).is_err());
        assert!(build_table(0).is_err());
    }

    #[test]
    fn single_row_table() {
        let t = build_table(1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].kleinberg, None);
        assert!(t.monotonicity_violations.is_empty());
    }

    #[test]
    fn fixture_shape() {
        let rows = appendix_table();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().enumerate().all(|(i, r)| r.k == i + 1 && r.r >= 1 && r.r <= r.k));
        assert_eq!(rows[99], AppendixRow { k: 100, r: 15, c: 0.1331, cr: 0.7569 });
        assert!(parse_appendix_table("k,r,c\n1,1,0.3").is_err());
    }
}
