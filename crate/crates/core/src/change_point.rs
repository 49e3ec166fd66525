//! Change-point inference for a single series of curves: CUSUM-type
//! sequential sup-norm statistics, location estimation, and a multiplier
//! block bootstrap with classical and relevant tests.
//!
//! The sequential process is linear in the time fraction s between the knots
//! k/n, so every supremum over s is computed exactly by scanning knots.

use crate::block::centered_blocks;
use crate::curves::{Curve, CurveSet, Grid};
use crate::error::{Error, Result};
use crate::rng::{standard_normals, RngSpec};
use crate::two_sample::{
    build_report, masks_from_diff, restricted_max, ExtremalSets, MultiplierSource, TestReport,
};
use rayon::prelude::*;

/// Configuration of the change-point bootstrap.
#[derive(Debug, Clone, Copy)]
pub struct CpConfig {
    /// Moving-block length l.
    pub block: usize,
    /// Number of bootstrap replicates R.
    pub reps: usize,
    /// Location restriction: the estimated fraction is clamped to
    /// [min_fraction, 1 - min_fraction]. Must lie in (0, 1/2).
    pub min_fraction: f64,
    /// Margin constant c_n of the extremal-set estimate; `None` uses
    /// 0.1 ln(n).
    pub set_margin: Option<f64>,
    pub rng: RngSpec,
}

impl CpConfig {
    /// Defaults: l = 2, R = 200, clamp at 0.1, default margin.
    pub fn with_seed(rng: RngSpec) -> Self {
        Self {
            block: 2,
            reps: 200,
            min_fraction: 0.1,
            set_margin: None,
            rng,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.block == 0 || self.block > n {
            return Err(Error::InvalidInput(format!(
                "block length {} invalid for series of length {n}",
                self.block
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput(
                "need at least one bootstrap replicate".into(),
            ));
        }
        check_min_fraction(self.min_fraction)?;
        if let Some(c) = self.set_margin {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "margin must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

fn check_min_fraction(v: f64) -> Result<()> {
    if !(v > 0.0 && v < 0.5) {
        return Err(Error::InvalidInput(format!(
            "location restriction must lie in (0, 1/2), got {v}"
        )));
    }
    Ok(())
}

/// The default margin constant `0.1 * ln(n)`.
pub fn default_set_margin(n: usize) -> f64 {
    0.1 * (n as f64).ln()
}

/// A process indexed by the knots k/n (k = 0..=n) and the grid, stored as a
/// dense (n+1) x G table.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialProcess {
    grid: Grid,
    knots: usize,
    values: Vec<f64>,
}

impl SequentialProcess {
    fn new(grid: Grid, knots: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), knots * grid.len());
        Self {
            grid,
            knots,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of knot rows, n + 1.
    pub fn knot_count(&self) -> usize {
        self.knots
    }

    /// Values at knot k/n over the grid.
    pub fn row(&self, k: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[k * g..(k + 1) * g]
    }

    /// Maximum absolute entry over all knots and grid points.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Maximum absolute entry of row k.
    pub fn row_max_abs(&self, k: usize) -> f64 {
        self.row(k).iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// The sequential CUSUM process
/// `U(k/n, t) = (1/n) (sum_{j<=k} X_j(t) - (k/n) sum_{j=1}^n X_j(t))`,
/// whose values between knots are linear interpolants; rows 0 and n vanish
/// identically.
pub fn cusum_process(set: &CurveSet) -> Result<SequentialProcess> {
    let n = set.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 curves, got {n}"
        )));
    }
    let g = set.grid().len();
    let inv_n = 1.0 / n as f64;
    let mut prefix = vec![0.0; g];
    let mut values = vec![0.0; (n + 1) * g];
    let mut total = vec![0.0; g];
    for i in 0..n {
        for (t, v) in total.iter_mut().zip(set.row(i)) {
            *t += v;
        }
    }
    for k in 1..=n {
        for (p, v) in prefix.iter_mut().zip(set.row(k - 1)) {
            *p += v;
        }
        let frac = k as f64 / n as f64;
        let row = &mut values[k * g..(k + 1) * g];
        for ((r, p), tot) in row.iter_mut().zip(&prefix).zip(&total) {
            *r = inv_n * (p - frac * tot);
        }
    }
    Ok(SequentialProcess::new(set.grid().clone(), n + 1, values))
}

/// Sup of |U| over all knots and grid points.
pub fn cusum_max(set: &CurveSet) -> Result<f64> {
    Ok(cusum_process(set)?.max_abs())
}

/// Change-point location estimate before and after clamping.
#[derive(Debug, Clone, Copy)]
pub struct ChangePointEstimate {
    /// Smallest k in 1..n maximizing sup_t |U(k/n, t)|.
    pub knot_index: usize,
    /// k / n.
    pub raw_fraction: f64,
    /// Clamped to [min_fraction, 1 - min_fraction].
    pub fraction: f64,
}

/// Locate the change point: min-argmax of the CUSUM row sups, clamped.
pub fn estimate_change_point(set: &CurveSet, min_fraction: f64) -> Result<ChangePointEstimate> {
    check_min_fraction(min_fraction)?;
    let u = cusum_process(set)?;
    let n = set.len();
    let mut best_k = 1;
    let mut best = u.row_max_abs(1);
    for k in 2..n {
        let v = u.row_max_abs(k);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let raw = best_k as f64 / n as f64;
    Ok(ChangePointEstimate {
        knot_index: best_k,
        raw_fraction: raw,
        fraction: raw.clamp(min_fraction, 1.0 - min_fraction),
    })
}

/// Convenience wrapper returning only the clamped fraction.
pub fn estimate_change_fraction(set: &CurveSet, min_fraction: f64) -> Result<f64> {
    Ok(estimate_change_point(set, min_fraction)?.fraction)
}

/// Result of a change-point test.
#[derive(Debug, Clone)]
pub struct CpResult {
    /// Clamped change-point fraction.
    pub change_fraction: f64,
    /// Sup of |U| over knots and grid.
    pub cusum_max: f64,
    /// Estimated maximal mean deviation, `cusum_max / (s(1-s))`.
    pub max_gap: f64,
    pub mean_before: Curve,
    pub mean_after: Curve,
    /// Extremal-set estimates (relevant test only).
    pub sets: Option<ExtremalSets>,
    pub report: TestReport,
}

struct Prepared {
    n: usize,
    split: usize,
    fraction: f64,
    cusum_max: f64,
    max_gap: f64,
    mean_before: Curve,
    mean_after: Curve,
    dejumped: CurveSet,
}

fn prepare(set: &CurveSet, cfg: &CpConfig) -> Result<Prepared> {
    let n = set.len();
    cfg.validate(n)?;
    let est = estimate_change_point(set, cfg.min_fraction)?;
    let cusum_max = cusum_process(set)?.max_abs();
    let max_gap = cusum_max / (est.fraction * (1.0 - est.fraction));
    // floor(fraction * n) as the split row; the offset guards against
    // floating-point undershoot of exact integers, and the clamp keeps both
    // segments non-empty.
    let split = ((est.fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n - 1);
    let mean_before = set.partial_mean(1, split)?;
    let mean_after = set.partial_mean(split + 1, n)?;
    let jump = mean_after.minus(&mean_before)?;
    let g = set.grid().len();
    let mut values = set.values().to_vec();
    for i in split..n {
        for (v, j) in values[i * g..(i + 1) * g].iter_mut().zip(jump.values()) {
            *v -= j;
        }
    }
    let dejumped = CurveSet::new(set.grid().clone(), n, values)?;
    Ok(Prepared {
        n,
        split,
        fraction: est.fraction,
        cusum_max,
        max_gap,
        mean_before,
        mean_after,
        dejumped,
    })
}

/// Evaluate one bootstrap replicate of the partial-sum process B at every
/// knot into `buf` ((n+1) x G, row-major). Block sums only exist for start
/// indices up to n-l+1; beyond that the process stays frozen at its value
/// at (n-l+1)/n.
fn fill_partial_sums(
    prep: &Prepared,
    blocks: &crate::block::BlockRows,
    xi: &[f64],
    buf: &mut [f64],
) {
    let n = prep.n;
    let g = blocks.width;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    buf[..g].fill(0.0);
    for k in 1..=n {
        let (done, rest) = buf.split_at_mut(k * g);
        let prev = &done[(k - 1) * g..];
        let row = &mut rest[..g];
        if k <= blocks.count {
            let w = xi[k - 1] * inv_sqrt_n;
            for ((r, p), b) in row.iter_mut().zip(prev).zip(blocks.row(k - 1)) {
                *r = p + w * b;
            }
        } else {
            row.copy_from_slice(prev);
        }
    }
}

/// The bridge transform `W(k/n, t) = B(k/n, t) - (k/n) B(1, t)` of one
/// filled partial-sum table, in place.
fn bridge_in_place(n: usize, g: usize, buf: &mut [f64]) {
    let last_start = n * g;
    for k in 0..=n {
        let frac = k as f64 / n as f64;
        for t in 0..g {
            let last = buf[last_start + t];
            buf[k * g + t] -= frac * last;
        }
    }
}

/// Bootstrap bridge processes W_r for the change-point tests, evaluated at
/// all knots. De-jumps the series at the estimated split before building
/// centered moving-block sums.
pub fn cp_bootstrap(set: &CurveSet, cfg: &CpConfig) -> Result<Vec<SequentialProcess>> {
    cp_bootstrap_with(set, cfg, MultiplierSource::Gaussian)
}

pub fn cp_bootstrap_with(
    set: &CurveSet,
    cfg: &CpConfig,
    multipliers: MultiplierSource,
) -> Result<Vec<SequentialProcess>> {
    let prep = prepare(set, cfg)?;
    let blocks = centered_blocks(&prep.dejumped, cfg.block);
    let g = set.grid().len();
    let n = prep.n;
    (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut buf = vec![0.0; (n + 1) * g];
            if multipliers == MultiplierSource::Gaussian {
                let mut rng = cfg.rng.child(r as u64).rng();
                let xi = standard_normals(&mut rng, blocks.count);
                fill_partial_sums(&prep, &blocks, &xi, &mut buf);
                bridge_in_place(n, g, &mut buf);
            }
            Ok(SequentialProcess::new(set.grid().clone(), n + 1, buf))
        })
        .collect()
}

/// Per-replicate scalar statistics computed without materializing all
/// bridge tables at once.
fn replicate_stats<F>(
    prep: &Prepared,
    cfg: &CpConfig,
    multipliers: MultiplierSource,
    stat: F,
) -> Vec<f64>
where
    F: Fn(usize, usize, &[f64]) -> f64 + Sync,
{
    let blocks = centered_blocks(&prep.dejumped, cfg.block);
    let g = blocks.width;
    let n = prep.n;
    (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut buf = vec![0.0; (n + 1) * g];
            if multipliers == MultiplierSource::Gaussian {
                let mut rng = cfg.rng.child(r as u64).rng();
                let xi = standard_normals(&mut rng, blocks.count);
                fill_partial_sums(prep, &blocks, &xi, &mut buf);
                bridge_in_place(n, g, &mut buf);
            }
            stat(n, g, &buf)
        })
        .collect()
}

/// Bootstrap test of the classical no-change hypothesis: rejects when the
/// CUSUM sup exceeds the empirical (1-alpha)-quantile of `max |W_r|`
/// divided by sqrt(n).
pub fn classical_test(set: &CurveSet, cfg: &CpConfig, alpha: f64) -> Result<CpResult> {
    classical_test_with(set, cfg, alpha, MultiplierSource::Gaussian)
}

pub fn classical_test_with(
    set: &CurveSet,
    cfg: &CpConfig,
    alpha: f64,
    multipliers: MultiplierSource,
) -> Result<CpResult> {
    let prep = prepare(set, cfg)?;
    let boot_stats = replicate_stats(&prep, cfg, multipliers, |_, _, buf| {
        buf.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    });
    let scale = (prep.n as f64).sqrt();
    let report = build_report(
        prep.cusum_max,
        0.0,
        alpha,
        boot_stats,
        scale,
        cfg.rng,
        vec![cfg.block],
    )?;
    Ok(CpResult {
        change_fraction: prep.fraction,
        cusum_max: prep.cusum_max,
        max_gap: prep.max_gap,
        mean_before: prep.mean_before,
        mean_after: prep.mean_after,
        sets: None,
        report,
    })
}

/// Bootstrap test of `H0: sup|mu1 - mu2| <= delta` for the mean functions
/// before and after the change point.
///
/// Replicate r contributes
/// `T_r = max( max_{plus} W_r(s, t), max_{minus} -W_r(s, t) ) / (s(1-s))`
/// with the bridge evaluated at the knot floor(s n) / n; the null is
/// rejected when `max_gap > delta + quantile(T, alpha) / sqrt(n)`.
pub fn relevant_test(set: &CurveSet, cfg: &CpConfig, delta: f64, alpha: f64) -> Result<CpResult> {
    relevant_test_with(set, cfg, delta, alpha, MultiplierSource::Gaussian)
}

pub fn relevant_test_with(
    set: &CurveSet,
    cfg: &CpConfig,
    delta: f64,
    alpha: f64,
    multipliers: MultiplierSource,
) -> Result<CpResult> {
    if delta < 0.0 {
        return Err(Error::InvalidInput(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    let prep = prepare(set, cfg)?;
    let n = prep.n;
    let margin = cfg.set_margin.unwrap_or_else(|| default_set_margin(n));
    let diff = prep.mean_before.minus(&prep.mean_after)?;
    let cutoff = prep.max_gap - margin / (n as f64).sqrt();
    let sets = masks_from_diff(diff.values(), cutoff, margin);
    if sets.is_empty() {
        return Err(Error::Internal(
            "both extremal-set estimates are empty for the change-point test".into(),
        ));
    }
    let denom = prep.fraction * (1.0 - prep.fraction);
    let split = prep.split;
    let sets_for_stats = sets.clone();
    let boot_stats = replicate_stats(&prep, cfg, multipliers, move |_, g, buf| {
        restricted_max(&buf[split * g..(split + 1) * g], &sets_for_stats) / denom
    });
    let report = build_report(
        prep.max_gap,
        delta,
        alpha,
        boot_stats,
        (n as f64).sqrt(),
        cfg.rng,
        vec![cfg.block],
    )?;
    Ok(CpResult {
        change_fraction: prep.fraction,
        cusum_max: prep.cusum_max,
        max_gap: prep.max_gap,
        mean_before: prep.mean_before,
        mean_after: prep.mean_after,
        sets: Some(sets),
        report,
    })
}

/// Direct evaluation of the sequential process at an arbitrary rational
/// fraction s = num/den, including the interpolation term. Used as an
/// oracle to confirm that knot scanning attains the supremum.
pub fn cusum_at_fraction(set: &CurveSet, num: usize, den: usize) -> Result<Vec<f64>> {
    if den == 0 || num > den {
        return Err(Error::InvalidInput(
            "fraction must satisfy 0 <= num/den <= 1".into(),
        ));
    }
    let n = set.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 curves, got {n}"
        )));
    }
    let g = set.grid().len();
    let k = num * n / den;
    let remainder = (num * n - k * den) as f64 / den as f64;
    let s = num as f64 / den as f64;
    let mut total = vec![0.0; g];
    let mut prefix = vec![0.0; g];
    for i in 0..n {
        for (t, v) in total.iter_mut().zip(set.row(i)) {
            *t += v;
        }
    }
    for i in 0..k {
        for (p, v) in prefix.iter_mut().zip(set.row(i)) {
            *p += v;
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut out = vec![0.0; g];
    for t in 0..g {
        let interp = if k < n {
            remainder * set.row(k)[t]
        } else {
            0.0
        };
        out[t] = inv_n * (prefix[t] + interp - s * total[t]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{Curve, CurveSet, Grid};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn step_series(n: usize, split: usize, jump: &Curve) -> CurveSet {
        let grid = jump.grid().clone();
        let curves: Vec<Curve> = (0..n)
            .map(|i| {
                if i < split {
                    Curve::zero(grid.clone())
                } else {
                    jump.clone()
                }
            })
            .collect();
        CurveSet::from_curves(&curves).unwrap()
    }

    fn noisy_series(grid: &Grid, n: usize, seed: RngSpec) -> CurveSet {
        let mut rng = seed.rng();
        let curves: Vec<Curve> = (0..n)
            .map(|_| {
                let vals: Vec<f64> = (0..grid.len())
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Curve::new(grid.clone(), vals).unwrap()
            })
            .collect();
        CurveSet::from_curves(&curves).unwrap()
    }

    #[test]
    fn cusum_vanishes_for_identical_rows() {
        let grid = Grid::uniform(5).unwrap();
        let c = Curve::constant(grid, 2.0).unwrap();
        let set = CurveSet::from_curves(&vec![c; 7]).unwrap();
        let u = cusum_process(&set).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn cusum_rows_zero_and_n_are_exactly_zero() {
        let grid = Grid::uniform(6).unwrap();
        let set = noisy_series(&grid, 9, RngSpec::new(1, 0));
        let u = cusum_process(&set).unwrap();
        assert!(u.row(0).iter().all(|&v| v == 0.0));
        assert!(u.row(9).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cusum_step_series_value() {
        let grid = Grid::uniform(3).unwrap();
        let one = Curve::constant(grid, 1.0).unwrap();
        let set = step_series(10, 5, &one);
        let u = cusum_process(&set).unwrap();
        for &v in u.row(5) {
            assert_relative_eq!(v, -0.25, epsilon = 1e-15);
        }
        assert_relative_eq!(cusum_max(&set).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn cusum_is_shift_invariant() {
        let grid = Grid::uniform(5).unwrap();
        let set = noisy_series(&grid, 12, RngSpec::new(2, 0));
        let shift = noisy_series(&grid, 1, RngSpec::new(2, 5)).row_curve(0);
        let shifted = set.shifted_by_curve(&shift).unwrap();
        let a = cusum_process(&set).unwrap();
        let b = cusum_process(&shifted).unwrap();
        for k in 0..a.knot_count() {
            for (x, y) in a.row(k).iter().zip(b.row(k)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let ea = estimate_change_point(&set, 0.1).unwrap();
        let eb = estimate_change_point(&shifted, 0.1).unwrap();
        assert_eq!(ea.knot_index, eb.knot_index);
    }

    #[test]
    fn estimate_on_step_series() {
        let grid = Grid::uniform(3).unwrap();
        let one = Curve::constant(grid, 1.0).unwrap();
        let set = step_series(10, 5, &one);
        let est = estimate_change_point(&set, 0.1).unwrap();
        assert_eq!(est.knot_index, 5);
        assert_eq!(est.fraction, 0.5);
    }

    #[test]
    fn constant_series_ties_break_to_first_knot_then_clamp() {
        let grid = Grid::uniform(3).unwrap();
        let c = Curve::constant(grid, 4.0).unwrap();
        let set = CurveSet::from_curves(&vec![c; 10]).unwrap();
        let est = estimate_change_point(&set, 0.1).unwrap();
        assert_eq!(est.knot_index, 1);
        assert_relative_eq!(est.raw_fraction, 0.1, epsilon = 1e-15);
        assert_eq!(est.fraction, 0.1);

        let tight = estimate_change_point(&set, 0.25).unwrap();
        assert_eq!(tight.fraction, 0.25);
    }

    #[test]
    fn row_reversal_preserves_cusum_sup() {
        let grid = Grid::uniform(4).unwrap();
        let set = noisy_series(&grid, 11, RngSpec::new(3, 0));
        let reversed: Vec<Curve> = (0..11).rev().map(|i| set.row_curve(i)).collect();
        let reversed = CurveSet::from_curves(&reversed).unwrap();
        assert_relative_eq!(
            cusum_max(&set).unwrap(),
            cusum_max(&reversed).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn knot_scan_matches_refined_rational_grid() {
        let grid = Grid::uniform(6).unwrap();
        for seed in 0..4 {
            let n = 7 + seed as usize;
            let set = noisy_series(&grid, n, RngSpec::new(40 + seed, 0));
            let u = cusum_process(&set).unwrap();
            let knot_max = u.max_abs();
            let den = 10 * n;
            let mut refined: f64 = 0.0;
            for num in 0..=den {
                let row = cusum_at_fraction(&set, num, den).unwrap();
                refined = refined.max(row.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
            }
            assert!((refined - knot_max).abs() <= 1e-12);
        }
    }

    #[test]
    fn bridge_rows_zero_at_ends_and_zero_hook() {
        let grid = Grid::uniform(5).unwrap();
        let set = noisy_series(&grid, 10, RngSpec::new(5, 0));
        let cfg = CpConfig::with_seed(RngSpec::new(1, 0));
        for w in cp_bootstrap(&set, &cfg).unwrap() {
            assert!(w.row(0).iter().all(|&v| v == 0.0));
            assert!(w.row(10).iter().all(|&v| v.abs() < 1e-12));
        }
        for w in cp_bootstrap_with(&set, &cfg, MultiplierSource::Zero).unwrap() {
            assert_eq!(w.max_abs(), 0.0);
        }
    }

    #[test]
    fn constant_series_bridges_vanish() {
        let grid = Grid::uniform(4).unwrap();
        let c = Curve::constant(grid, 1.25).unwrap();
        let set = CurveSet::from_curves(&vec![c; 12]).unwrap();
        let cfg = CpConfig::with_seed(RngSpec::new(2, 0));
        for w in cp_bootstrap(&set, &cfg).unwrap() {
            assert!(w.max_abs() < 1e-12);
        }
    }

    #[test]
    fn classical_zero_hook_rejects_positive_statistic() {
        let grid = Grid::uniform(4).unwrap();
        let one = Curve::constant(grid.clone(), 1.0).unwrap();
        let set = step_series(10, 5, &one);
        let cfg = CpConfig::with_seed(RngSpec::new(3, 0));
        let res = classical_test_with(&set, &cfg, 0.05, MultiplierSource::Zero).unwrap();
        assert!(res.cusum_max > 0.0);
        assert!(res.report.reject);

        let flat = CurveSet::from_curves(&vec![Curve::constant(grid, 2.0).unwrap(); 10]).unwrap();
        let res = classical_test(&flat, &cfg, 0.05).unwrap();
        assert_eq!(res.cusum_max, 0.0);
        assert!(!res.report.reject);
    }

    #[test]
    fn relevant_zero_hook_thresholds_at_delta() {
        let grid = Grid::uniform(4).unwrap();
        let jump = Curve::constant(grid, 0.9).unwrap();
        let set = step_series(20, 10, &jump);
        let cfg = CpConfig::with_seed(RngSpec::new(4, 0));
        let low = relevant_test_with(&set, &cfg, 0.5, 0.05, MultiplierSource::Zero).unwrap();
        assert!(low.report.reject);
        let high = relevant_test_with(&set, &cfg, 1.1, 0.05, MultiplierSource::Zero).unwrap();
        assert!(!high.report.reject);
    }

    #[test]
    fn noiseless_step_is_recovered_exactly() {
        let grid = Grid::canonical();
        let ramp: Vec<f64> = grid.points().iter().map(|&t| 1.5 * t - 0.4).collect();
        let jump = Curve::new(grid.clone(), ramp).unwrap();
        for (n, split) in [(10usize, 4usize), (25, 13), (50, 31), (8, 2)] {
            let set = step_series(n, split, &jump);
            let cfg = CpConfig::with_seed(RngSpec::new(5, 0));
            let res = relevant_test(&set, &cfg, 0.5, 0.05).unwrap();
            let target = split as f64 / n as f64;
            if (0.1..=0.9).contains(&target) {
                assert!((res.change_fraction - target).abs() <= 1e-12);
                assert!((res.max_gap - jump.sup_norm()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn max_gap_identity_holds() {
        let grid = Grid::uniform(7).unwrap();
        let set = noisy_series(&grid, 14, RngSpec::new(6, 0));
        let cfg = CpConfig::with_seed(RngSpec::new(6, 0));
        let res = relevant_test(&set, &cfg, 0.2, 0.05).unwrap();
        let s = res.change_fraction;
        assert_eq!(res.max_gap, res.cusum_max / (s * (1.0 - s)));
        // Partial means split at floor(s n).
        let split = (s * 14.0 + 1e-9).floor() as usize;
        assert_eq!(res.mean_before, set.partial_mean(1, split).unwrap());
        assert_eq!(res.mean_after, set.partial_mean(split + 1, 14).unwrap());
    }

    #[test]
    fn bootstrap_is_deterministic_and_matches_tables() {
        let grid = Grid::uniform(5).unwrap();
        let set = noisy_series(&grid, 12, RngSpec::new(7, 0));
        let cfg = CpConfig {
            reps: 16,
            ..CpConfig::with_seed(RngSpec::new(8, 0))
        };
        let a = classical_test(&set, &cfg, 0.05).unwrap();
        let b = classical_test(&set, &cfg, 0.05).unwrap();
        assert_eq!(a.report.boot_stats, b.report.boot_stats);

        // The streaming statistics agree with the materialized tables.
        let tables = cp_bootstrap(&set, &cfg).unwrap();
        let from_tables: Vec<f64> = tables.iter().map(|w| w.max_abs()).collect();
        assert_eq!(a.report.boot_stats, from_tables);

        let rel = relevant_test(&set, &cfg, 0.1, 0.05).unwrap();
        let split = (rel.change_fraction * 12.0 + 1e-9).floor() as usize;
        let denom = rel.change_fraction * (1.0 - rel.change_fraction);
        let sets = rel.sets.as_ref().unwrap();
        let from_tables: Vec<f64> = tables
            .iter()
            .map(|w| restricted_max(w.row(split), sets) / denom)
            .collect();
        assert_eq!(rel.report.boot_stats, from_tables);
    }

    #[test]
    fn block_longer_than_series_is_rejected() {
        let grid = Grid::uniform(3).unwrap();
        let set = noisy_series(&grid, 6, RngSpec::new(9, 0));
        let cfg = CpConfig {
            block: 7,
            ..CpConfig::with_seed(RngSpec::new(0, 0))
        };
        assert!(cp_bootstrap(&set, &cfg).is_err());
        let bad_theta = CpConfig {
            min_fraction: 0.5,
            ..CpConfig::with_seed(RngSpec::new(0, 0))
        };
        assert!(classical_test(&set, &bad_theta, 0.05).is_err());
    }

    #[test]
    fn plateau_freezes_partial_sums() {
        // With l = 4 on n = 10 the last three knots repeat the value at
        // (n-l+1)/n before bridging.
        let grid = Grid::uniform(4).unwrap();
        let set = noisy_series(&grid, 10, RngSpec::new(10, 0));
        let cfg = CpConfig {
            block: 4,
            reps: 5,
            ..CpConfig::with_seed(RngSpec::new(11, 0))
        };
        let prep = prepare(&set, &cfg).unwrap();
        let blocks = centered_blocks(&prep.dejumped, cfg.block);
        assert_eq!(blocks.count, 7);
        let mut rng = cfg.rng.child(0).rng();
        let xi = standard_normals(&mut rng, blocks.count);
        let g = 4;
        let mut buf = vec![0.0; 11 * g];
        fill_partial_sums(&prep, &blocks, &xi, &mut buf);
        for k in 8..=10 {
            assert_eq!(&buf[k * g..(k + 1) * g], &buf[7 * g..8 * g]);
        }
    }
}
