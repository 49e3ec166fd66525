//! Two-sample sup-norm inference: the maximal mean deviation, a multiplier
//! block bootstrap for its distribution, classical and relevant tests, and
//! simultaneous confidence bands.
//!
//! The relevant test addresses `H0: sup|mu1 - mu2| <= delta` against
//! `H1: sup|mu1 - mu2| > delta`. Its bootstrap null distribution is a
//! maximum restricted to estimated extremal sets of the mean difference;
//! with `delta = 0` and both sets covering the grid it degenerates to the
//! classical equal-means test.

use crate::block::{centered_blocks, BlockRows};
use crate::curves::{Curve, CurveSet};
use crate::error::{Error, Result};
use crate::rng::{standard_normals, RngSpec};
use rayon::prelude::*;

/// Two independent samples of curves on a shared grid.
#[derive(Debug, Clone)]
pub struct TwoSampleData {
    x: CurveSet,
    y: CurveSet,
}

impl TwoSampleData {
    pub fn new(x: CurveSet, y: CurveSet) -> Result<Self> {
        if x.len() < 2 || y.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "both samples need at least 2 curves, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.grid() != y.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &CurveSet {
        &self.x
    }

    pub fn y(&self) -> &CurveSet {
        &self.y
    }

    /// m + n, the scaling basis of all decision rules.
    pub fn total(&self) -> usize {
        self.x.len() + self.y.len()
    }
}

/// Bootstrap configuration: number of replicates, block lengths per sample
/// and the random stream the multipliers are drawn from.
#[derive(Debug, Clone, Copy)]
pub struct BootConfig {
    pub reps: usize,
    pub block_x: usize,
    pub block_y: usize,
    pub rng: RngSpec,
}

impl BootConfig {
    /// Library defaults: R = 200 replicates, blocks of length 2.
    pub fn with_seed(rng: RngSpec) -> Self {
        Self {
            reps: 200,
            block_x: 2,
            block_y: 2,
            rng,
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidInput(
                "need at least one bootstrap replicate".into(),
            ));
        }
        if self.block_x == 0 || self.block_x > m {
            return Err(Error::InvalidInput(format!(
                "block length {} invalid for sample of size {m}",
                self.block_x
            )));
        }
        if self.block_y == 0 || self.block_y > n {
            return Err(Error::InvalidInput(format!(
                "block length {} invalid for sample of size {n}",
                self.block_y
            )));
        }
        Ok(())
    }
}

/// How bootstrap multipliers are produced. `Zero` forces every multiplier
/// to zero and exists for degeneracy checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierSource {
    Gaussian,
    Zero,
}

/// Outcome of a bootstrap test, carrying everything needed to audit the
/// decision: `reject` holds iff `statistic > delta + quantile / scale`.
#[derive(Debug, Clone)]
pub struct TestReport {
    pub statistic: f64,
    pub delta: f64,
    pub alpha: f64,
    pub quantile: f64,
    pub reject: bool,
    pub p_value: f64,
    pub boot_stats: Vec<f64>,
    /// sqrt(m + n) for two-sample tests, sqrt(n) for change-point tests.
    pub scale: f64,
    pub rng: RngSpec,
    pub block_lengths: Vec<usize>,
}

/// A simultaneous confidence band `center -+ half_width` for the difference
/// of the mean curves.
#[derive(Debug, Clone)]
pub struct Band {
    pub center: Curve,
    pub lower: Curve,
    pub upper: Curve,
    pub alpha: f64,
    pub half_width: f64,
}

impl Band {
    /// Whether `truth` lies inside the band at every grid point; equivalent
    /// to `sup |center - truth| <= half_width`.
    pub fn covers(&self, truth: &Curve) -> Result<bool> {
        Ok(self.center.minus(truth)?.sup_norm() <= self.half_width)
    }
}

/// Grid masks estimating where the mean difference attains +/- its sup-norm.
#[derive(Debug, Clone)]
pub struct ExtremalSets {
    pub plus: Vec<bool>,
    pub minus: Vec<bool>,
    /// The constant c of the defining inequality
    /// `+/-(mean diff) >= statistic - c / sqrt(total)`.
    pub margin: f64,
}

impl ExtremalSets {
    pub fn is_empty(&self) -> bool {
        !self.plus.iter().chain(self.minus.iter()).any(|&b| b)
    }
}

/// Sup-norm of the difference of the two sample mean curves.
pub fn sup_mean_diff(data: &TwoSampleData) -> f64 {
    let diff = data
        .x
        .mean_curve()
        .minus(&data.y.mean_curve())
        .expect("validated shared grid");
    diff.sup_norm()
}

/// The default margin constant `0.1 * ln(total)` for extremal-set
/// estimation.
pub fn default_set_margin(total: usize) -> f64 {
    0.1 * (total as f64).ln()
}

/// The multiplier block bootstrap processes.
///
/// Replicate r is
/// `B_r(t) = sqrt(m+n) * [ (1/m) sum_k A_k(t) xi_k + (1/n) sum_k C_k(t) zeta_k ]`
/// where `A_k`/`C_k` are the centered, sqrt(block)-scaled moving-block sums
/// of the two samples and the multipliers are i.i.d. standard normal.
/// Multipliers for replicate r are drawn block-index-major from the child
/// stream `cfg.rng.child(r)`, so replicates may be computed in parallel and
/// stay bit-identical to a sequential run.
pub fn bootstrap_processes(data: &TwoSampleData, cfg: &BootConfig) -> Result<Vec<Curve>> {
    bootstrap_processes_with(data, cfg, MultiplierSource::Gaussian)
}

/// Same as [`bootstrap_processes`] with an explicit multiplier source.
pub fn bootstrap_processes_with(
    data: &TwoSampleData,
    cfg: &BootConfig,
    multipliers: MultiplierSource,
) -> Result<Vec<Curve>> {
    let m = data.x.len();
    let n = data.y.len();
    cfg.validate(m, n)?;
    let blocks_x = centered_blocks(&data.x, cfg.block_x);
    let blocks_y = centered_blocks(&data.y, cfg.block_y);
    let grid = data.x.grid().clone();
    let g = grid.len();
    let scale = (data.total() as f64).sqrt();
    let inv_m = 1.0 / m as f64;
    let inv_n = 1.0 / n as f64;

    (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut values = vec![0.0; g];
            if multipliers == MultiplierSource::Gaussian {
                let mut rng = cfg.rng.child(r as u64).rng();
                let xi = standard_normals(&mut rng, blocks_x.count);
                let zeta = standard_normals(&mut rng, blocks_y.count);
                accumulate(&blocks_x, &xi, inv_m, &mut values);
                accumulate(&blocks_y, &zeta, inv_n, &mut values);
                for v in values.iter_mut() {
                    *v *= scale;
                }
            }
            Curve::new(grid.clone(), values)
        })
        .collect()
}

fn accumulate(blocks: &BlockRows, weights: &[f64], factor: f64, out: &mut [f64]) {
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let fw = factor * w;
        for (o, &b) in out.iter_mut().zip(blocks.row(k)) {
            *o += fw * b;
        }
    }
}

/// The floor(R(1-alpha))-th ascending order statistic (1-based), clamped to
/// the valid index range. No interpolation.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput(
            "empty sample for empirical quantile".into(),
        ));
    }
    check_alpha(alpha)?;
    let r = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // The small offset keeps floor() from undershooting when R(1-alpha) is
    // an integer that floating-point arithmetic lands just below.
    let idx = ((r as f64 * (1.0 - alpha)) + 1e-9).floor() as usize;
    Ok(sorted[idx.clamp(1, r) - 1])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

pub(crate) fn build_report(
    statistic: f64,
    delta: f64,
    alpha: f64,
    boot_stats: Vec<f64>,
    scale: f64,
    rng: RngSpec,
    block_lengths: Vec<usize>,
) -> Result<TestReport> {
    let quantile = empirical_quantile(&boot_stats, alpha)?;
    let reject = statistic > delta + quantile / scale;
    let exceed = boot_stats
        .iter()
        .filter(|&&t| t / scale >= statistic - delta)
        .count();
    let p_value = (1 + exceed) as f64 / (boot_stats.len() + 1) as f64;
    Ok(TestReport {
        statistic,
        delta,
        alpha,
        quantile,
        reject,
        p_value,
        boot_stats,
        scale,
        rng,
        block_lengths,
    })
}

/// Bootstrap test of equal mean curves: rejects when the observed maximal
/// deviation exceeds the empirical (1-alpha)-quantile of the sup-norms of
/// the bootstrap processes, divided by sqrt(m+n).
pub fn classical_test(data: &TwoSampleData, cfg: &BootConfig, alpha: f64) -> Result<TestReport> {
    classical_test_with(data, cfg, alpha, MultiplierSource::Gaussian)
}

pub fn classical_test_with(
    data: &TwoSampleData,
    cfg: &BootConfig,
    alpha: f64,
    multipliers: MultiplierSource,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let procs = bootstrap_processes_with(data, cfg, multipliers)?;
    let boot_stats: Vec<f64> = procs.iter().map(Curve::sup_norm).collect();
    build_report(
        sup_mean_diff(data),
        0.0,
        alpha,
        boot_stats,
        (data.total() as f64).sqrt(),
        cfg.rng,
        vec![cfg.block_x, cfg.block_y],
    )
}

/// Simultaneous (1-alpha) confidence band for the difference of the mean
/// curves, with half width `quantile / sqrt(m+n)`.
pub fn confidence_band(data: &TwoSampleData, cfg: &BootConfig, alpha: f64) -> Result<Band> {
    confidence_band_with(data, cfg, alpha, MultiplierSource::Gaussian)
}

pub fn confidence_band_with(
    data: &TwoSampleData,
    cfg: &BootConfig,
    alpha: f64,
    multipliers: MultiplierSource,
) -> Result<Band> {
    check_alpha(alpha)?;
    let procs = bootstrap_processes_with(data, cfg, multipliers)?;
    let boot_stats: Vec<f64> = procs.iter().map(Curve::sup_norm).collect();
    let quantile = empirical_quantile(&boot_stats, alpha)?;
    let half_width = quantile / (data.total() as f64).sqrt();
    let center = data.x.mean_curve().minus(&data.y.mean_curve())?;
    Ok(Band {
        lower: center.shifted(-half_width)?,
        upper: center.shifted(half_width)?,
        center,
        alpha,
        half_width,
    })
}

/// Estimated extremal sets: grid points where the signed mean difference
/// comes within `margin / sqrt(m+n)` of the observed sup-norm.
pub fn extremal_sets(data: &TwoSampleData, margin: f64) -> Result<ExtremalSets> {
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let diff = data.x.mean_curve().minus(&data.y.mean_curve())?;
    let statistic = diff.sup_norm();
    let cutoff = statistic - margin / (data.total() as f64).sqrt();
    Ok(masks_from_diff(diff.values(), cutoff, margin))
}

pub(crate) fn masks_from_diff(diff: &[f64], cutoff: f64, margin: f64) -> ExtremalSets {
    ExtremalSets {
        plus: diff.iter().map(|&v| v >= cutoff).collect(),
        minus: diff.iter().map(|&v| -v >= cutoff).collect(),
        margin,
    }
}

/// Bootstrap test of `H0: sup|mu1 - mu2| <= delta`, with the default
/// extremal-set margin `0.1 ln(m+n)`.
pub fn relevant_test(
    data: &TwoSampleData,
    cfg: &BootConfig,
    delta: f64,
    alpha: f64,
) -> Result<TestReport> {
    relevant_test_with(
        data,
        cfg,
        delta,
        alpha,
        default_set_margin(data.total()),
        MultiplierSource::Gaussian,
    )
}

/// Relevant test with explicit margin constant and multiplier source.
///
/// The bootstrap statistic of replicate r is
/// `K_r = max( max_{plus set} B_r(t), max_{minus set} -B_r(t) )`,
/// and the null is rejected when
/// `statistic > delta + quantile(K, alpha) / sqrt(m+n)`.
pub fn relevant_test_with(
    data: &TwoSampleData,
    cfg: &BootConfig,
    delta: f64,
    alpha: f64,
    margin: f64,
    multipliers: MultiplierSource,
) -> Result<TestReport> {
    if delta < 0.0 {
        return Err(Error::InvalidInput(format!(
            "delta must be non-negative, got {delta}"
        )));
    }
    check_alpha(alpha)?;
    let sets = extremal_sets(data, margin)?;
    if sets.is_empty() {
        return Err(Error::Internal(
            "both extremal-set estimates are empty; data-built sets always contain the argmax"
                .into(),
        ));
    }
    let procs = bootstrap_processes_with(data, cfg, multipliers)?;
    let boot_stats: Vec<f64> = procs
        .iter()
        .map(|b| restricted_max(b.values(), &sets))
        .collect();
    build_report(
        sup_mean_diff(data),
        delta,
        alpha,
        boot_stats,
        (data.total() as f64).sqrt(),
        cfg.rng,
        vec![cfg.block_x, cfg.block_y],
    )
}

/// `max( max_{plus} v(t), max_{minus} -v(t) )` over the masked grid points.
pub(crate) fn restricted_max(values: &[f64], sets: &ExtremalSets) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if sets.plus[i] && v > best {
            best = v;
        }
        if sets.minus[i] && -v > best {
            best = -v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{Curve, CurveSet, Grid};
    use crate::dgp::{eval_mean, MeanFamily, MeanSpec};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noisy_set(grid: &Grid, rows: usize, seed: RngSpec, mean: Option<&Curve>) -> CurveSet {
        let mut rng = seed.rng();
        let curves: Vec<Curve> = (0..rows)
            .map(|_| {
                let vals: Vec<f64> = (0..grid.len())
                    .map(|t| {
                        let z: f64 = rng.sample(StandardNormal);
                        z + mean.map_or(0.0, |m| m.values()[t])
                    })
                    .collect();
                Curve::new(grid.clone(), vals).unwrap()
            })
            .collect();
        CurveSet::from_curves(&curves).unwrap()
    }

    fn small_data(seed: u64) -> TwoSampleData {
        let grid = Grid::uniform(11).unwrap();
        let x = noisy_set(&grid, 12, RngSpec::new(seed, 0), None);
        let y = noisy_set(&grid, 16, RngSpec::new(seed, 1), None);
        TwoSampleData::new(x, y).unwrap()
    }

    #[test]
    fn sup_mean_diff_examples() {
        let grid = Grid::canonical();
        let zeros = CurveSet::from_curves(&vec![Curve::zero(grid.clone()); 4]).unwrap();
        let data = TwoSampleData::new(zeros.clone(), zeros.clone()).unwrap();
        assert_eq!(sup_mean_diff(&data), 0.0);

        let plateau = eval_mean(&MeanSpec::new(MeanFamily::SinglePlateau, 1.0), &grid).unwrap();
        let ys = CurveSet::from_curves(&vec![plateau; 4]).unwrap();
        let data = TwoSampleData::new(zeros.clone(), ys.clone()).unwrap();
        assert_eq!(sup_mean_diff(&data), 0.1);

        let swapped = TwoSampleData::new(ys, zeros).unwrap();
        assert_eq!(sup_mean_diff(&swapped), 0.1);
    }

    #[test]
    fn zero_multipliers_give_zero_processes() {
        let data = small_data(5);
        let cfg = BootConfig::with_seed(RngSpec::new(1, 0));
        let procs = bootstrap_processes_with(&data, &cfg, MultiplierSource::Zero).unwrap();
        assert_eq!(procs.len(), 200);
        for p in procs {
            assert_eq!(p.sup_norm(), 0.0);
        }
    }

    #[test]
    fn constant_samples_center_to_zero() {
        let grid = Grid::uniform(5).unwrap();
        let xs =
            CurveSet::from_curves(&vec![Curve::constant(grid.clone(), 3.0).unwrap(); 6]).unwrap();
        let ys = CurveSet::from_curves(&vec![Curve::constant(grid, -1.5).unwrap(); 9]).unwrap();
        let data = TwoSampleData::new(xs, ys).unwrap();
        let cfg = BootConfig {
            reps: 50,
            block_x: 2,
            block_y: 3,
            rng: RngSpec::new(8, 0),
        };
        for p in bootstrap_processes(&data, &cfg).unwrap() {
            assert!(p.sup_norm() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn matches_brute_force_double_sum() {
        // Independent oracle: evaluate the bootstrap process definition with
        // nested loops and the replicate's own multiplier draws.
        let grid = Grid::uniform(3).unwrap();
        let mk = |vals: [f64; 3]| Curve::new(grid.clone(), vals.to_vec()).unwrap();
        let x = CurveSet::from_curves(&[
            mk([1.0, -0.5, 0.25]),
            mk([0.0, 2.0, -1.0]),
            mk([0.5, 0.5, 0.5]),
            mk([-1.0, 1.0, 0.0]),
        ])
        .unwrap();
        let y = CurveSet::from_curves(&[
            mk([2.0, 0.0, 1.0]),
            mk([-2.0, 1.0, 0.5]),
            mk([0.25, 0.25, -0.75]),
            mk([1.5, -1.5, 2.0]),
        ])
        .unwrap();
        let data = TwoSampleData::new(x.clone(), y.clone()).unwrap();
        let cfg = BootConfig {
            reps: 3,
            block_x: 2,
            block_y: 2,
            rng: RngSpec::new(77, 1),
        };
        let procs = bootstrap_processes(&data, &cfg).unwrap();
        let (m, n) = (4usize, 4usize);
        let (l1, l2) = (2usize, 2usize);
        for r in 0..3 {
            let mut rng = cfg.rng.child(r as u64).rng();
            let xi = standard_normals(&mut rng, m - l1 + 1);
            let zeta = standard_normals(&mut rng, n - l2 + 1);
            for t in 0..3 {
                let mut sx = 0.0;
                for k in 0..=(m - l1) {
                    let block: f64 = (k..k + l1).map(|j| x.row(j)[t]).sum();
                    let total: f64 = (0..m).map(|j| x.row(j)[t]).sum();
                    sx += (block - (l1 as f64 / m as f64) * total) / (l1 as f64).sqrt() * xi[k];
                }
                let mut sy = 0.0;
                for k in 0..=(n - l2) {
                    let block: f64 = (k..k + l2).map(|j| y.row(j)[t]).sum();
                    let total: f64 = (0..n).map(|j| y.row(j)[t]).sum();
                    sy += (block - (l2 as f64 / n as f64) * total) / (l2 as f64).sqrt() * zeta[k];
                }
                let expected = ((m + n) as f64).sqrt() * (sx / m as f64 + sy / n as f64);
                assert_relative_eq!(procs[r].values()[t], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn boot_rejects_oversized_blocks() {
        let data = small_data(2);
        let mut cfg = BootConfig::with_seed(RngSpec::new(0, 0));
        cfg.block_x = 13;
        assert!(bootstrap_processes(&data, &cfg).is_err());
    }

    #[test]
    fn quantile_order_statistics() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(empirical_quantile(&values, 0.05).unwrap(), 95.0);
        assert_eq!(empirical_quantile(&[7.0], 0.3).unwrap(), 7.0);
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&values, 0.01).unwrap(), 99.0);
        assert!(empirical_quantile(&[], 0.05).is_err());
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
        assert!(empirical_quantile(&[1.0], 1.0).is_err());
    }

    #[test]
    fn classical_zero_hook_rejects_any_positive_statistic() {
        let grid = Grid::uniform(6).unwrap();
        let x = noisy_set(&grid, 8, RngSpec::new(4, 0), None);
        let shift = Curve::constant(grid.clone(), 1.0).unwrap();
        let y = noisy_set(&grid, 8, RngSpec::new(4, 1), Some(&shift));
        let data = TwoSampleData::new(x, y).unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(1, 1));
        let report = classical_test_with(&data, &cfg, 0.05, MultiplierSource::Zero).unwrap();
        assert!(report.statistic > 0.0);
        assert_eq!(report.quantile, 0.0);
        assert!(report.reject);
    }

    #[test]
    fn identical_samples_never_reject() {
        let grid = Grid::uniform(6).unwrap();
        let x = noisy_set(&grid, 10, RngSpec::new(6, 0), None);
        let data = TwoSampleData::new(x.clone(), x).unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(2, 0));
        let report = classical_test(&data, &cfg, 0.05).unwrap();
        assert_eq!(report.statistic, 0.0);
        assert!(!report.reject);
    }

    #[test]
    fn band_degenerates_under_zero_hook() {
        let data = small_data(9);
        let cfg = BootConfig::with_seed(RngSpec::new(3, 0));
        let band = confidence_band_with(&data, &cfg, 0.05, MultiplierSource::Zero).unwrap();
        assert_eq!(band.half_width, 0.0);
        assert_eq!(band.lower, band.center);
        assert_eq!(band.upper, band.center);
    }

    #[test]
    fn coverage_event_equals_sup_condition() {
        let data = small_data(10);
        let cfg = BootConfig::with_seed(RngSpec::new(5, 0));
        let band = confidence_band(&data, &cfg, 0.1).unwrap();
        let grid = data.x().grid().clone();
        for seed in 0..20 {
            let truth = noisy_set(&grid, 1, RngSpec::new(100 + seed, 0), None).row_curve(0);
            let truth = truth.scaled(0.3).unwrap();
            let pointwise = truth
                .values()
                .iter()
                .enumerate()
                .all(|(t, &v)| band.lower.values()[t] <= v && v <= band.upper.values()[t]);
            assert_eq!(band.covers(&truth).unwrap(), pointwise);
        }
    }

    #[test]
    fn band_width_identity() {
        let data = small_data(11);
        let cfg = BootConfig::with_seed(RngSpec::new(6, 0));
        let band = confidence_band(&data, &cfg, 0.05).unwrap();
        for t in 0..band.center.grid().len() {
            assert_relative_eq!(
                band.upper.values()[t] - band.lower.values()[t],
                2.0 * band.half_width,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn extremal_sets_constant_difference() {
        let grid = Grid::uniform(9).unwrap();
        let xs =
            CurveSet::from_curves(&vec![Curve::constant(grid.clone(), 0.7).unwrap(); 4]).unwrap();
        let ys = CurveSet::from_curves(&vec![Curve::zero(grid); 4]).unwrap();
        let data = TwoSampleData::new(xs, ys.clone()).unwrap();
        let sets = extremal_sets(&data, 1e-6).unwrap();
        assert!(sets.plus.iter().all(|&b| b));
        assert!(!sets.minus.iter().any(|&b| b));

        // A margin of at least 2 * statistic * sqrt(total) pushes the cutoff
        // below -statistic, so both masks fill up even here.
        let huge = extremal_sets(&data, 2.0 * 0.7 * (8.0f64).sqrt() + 1.0).unwrap();
        assert!(huge.plus.iter().all(|&b| b));
        assert!(huge.minus.iter().all(|&b| b));

        // With zero difference any positive margin makes the cutoff negative
        // and both masks cover the grid.
        let same = TwoSampleData::new(ys.clone(), ys).unwrap();
        let full = extremal_sets(&same, 1e-9).unwrap();
        assert!(full.plus.iter().all(|&b| b));
        assert!(full.minus.iter().all(|&b| b));

        assert!(extremal_sets(&data, 0.0).is_err());
    }

    #[test]
    fn extremal_sets_match_brute_force() {
        let data = small_data(13);
        let margin = default_set_margin(data.total());
        let sets = extremal_sets(&data, margin).unwrap();
        let diff = data.x().mean_curve().minus(&data.y().mean_curve()).unwrap();
        let stat = diff.sup_norm();
        let cutoff = stat - margin / (data.total() as f64).sqrt();
        for (i, &v) in diff.values().iter().enumerate() {
            assert_eq!(sets.plus[i], v >= cutoff);
            assert_eq!(sets.minus[i], -v >= cutoff);
        }
        let (argmax, signed) = diff.abs_argmax();
        if signed > 0.0 {
            assert!(sets.plus[argmax]);
        } else {
            assert!(sets.minus[argmax]);
        }
    }

    #[test]
    fn relevant_reduces_to_classical_on_full_masks() {
        // Identical samples: statistic 0, cutoff negative, both masks full,
        // so K_r = sup |B_r| matches the classical statistic exactly.
        let grid = Grid::uniform(6).unwrap();
        let x = noisy_set(&grid, 10, RngSpec::new(21, 0), None);
        let data = TwoSampleData::new(x.clone(), x).unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(9, 0));
        let classical = classical_test(&data, &cfg, 0.05).unwrap();
        let relevant = relevant_test(&data, &cfg, 0.0, 0.05).unwrap();
        assert_eq!(classical.boot_stats, relevant.boot_stats);
        assert_eq!(classical.quantile, relevant.quantile);
    }

    #[test]
    fn relevant_zero_hook_thresholds_at_delta() {
        let grid = Grid::uniform(6).unwrap();
        let x = noisy_set(&grid, 8, RngSpec::new(30, 0), None);
        let shift = Curve::constant(grid.clone(), 0.8).unwrap();
        let y = noisy_set(&grid, 8, RngSpec::new(30, 1), Some(&shift));
        let data = TwoSampleData::new(x, y).unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(10, 0));
        let stat = sup_mean_diff(&data);
        let margin = default_set_margin(data.total());
        let below = relevant_test_with(
            &data,
            &cfg,
            stat * 0.9,
            0.05,
            margin,
            MultiplierSource::Zero,
        )
        .unwrap();
        assert!(below.reject);
        let above = relevant_test_with(
            &data,
            &cfg,
            stat * 1.1,
            0.05,
            margin,
            MultiplierSource::Zero,
        )
        .unwrap();
        assert!(!above.reject);
    }

    #[test]
    fn rejection_is_monotone_in_delta() {
        let data = small_data(31);
        let cfg = BootConfig::with_seed(RngSpec::new(12, 0));
        let deltas = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8];
        let rejections: Vec<bool> = deltas
            .iter()
            .map(|&d| relevant_test(&data, &cfg, d, 0.05).unwrap().reject)
            .collect();
        for w in rejections.windows(2) {
            // reject at the larger delta implies reject at the smaller one
            assert!(w[0] || !w[1]);
        }
    }

    #[test]
    fn p_values_are_valid_and_bound_rejections() {
        for seed in 0..6 {
            let data = small_data(40 + seed);
            let cfg = BootConfig::with_seed(RngSpec::new(seed, 2));
            for alpha in [0.01, 0.05, 0.1] {
                let report = classical_test(&data, &cfg, alpha).unwrap();
                assert!(report.p_value > 0.0 && report.p_value <= 1.0);
                if report.reject {
                    assert!(report.p_value <= alpha + 1.0 / (cfg.reps as f64 + 1.0));
                }
            }
        }
    }

    #[test]
    fn common_shift_leaves_everything_unchanged() {
        let data = small_data(50);
        let grid = data.x().grid().clone();
        let shift = noisy_set(&grid, 1, RngSpec::new(99, 0), None).row_curve(0);
        let shifted = TwoSampleData::new(
            data.x().shifted_by_curve(&shift).unwrap(),
            data.y().shifted_by_curve(&shift).unwrap(),
        )
        .unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(14, 0));

        assert_relative_eq!(
            sup_mean_diff(&data),
            sup_mean_diff(&shifted),
            epsilon = 1e-12
        );
        let a = bootstrap_processes(&data, &cfg).unwrap();
        let b = bootstrap_processes(&shifted, &cfg).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert!(pa.minus(pb).unwrap().sup_norm() < 1e-12);
        }
        let ra = classical_test(&data, &cfg, 0.05).unwrap();
        let rb = classical_test(&shifted, &cfg, 0.05).unwrap();
        assert_eq!(ra.reject, rb.reject);
        assert_relative_eq!(ra.quantile, rb.quantile, epsilon = 1e-12);
        assert_eq!(ra.p_value, rb.p_value);
    }

    #[test]
    fn one_sample_shift_moves_mean_only() {
        let data = small_data(60);
        let c = 0.75;
        let shifted_y = {
            let grid = data.y().grid().clone();
            data.y()
                .shifted_by_curve(&Curve::constant(grid, c).unwrap())
                .unwrap()
        };
        let shifted = TwoSampleData::new(data.x().clone(), shifted_y).unwrap();
        let cfg = BootConfig::with_seed(RngSpec::new(15, 0));

        let d0 = data.x().mean_curve().minus(&data.y().mean_curve()).unwrap();
        let d1 = shifted
            .x()
            .mean_curve()
            .minus(&shifted.y().mean_curve())
            .unwrap();
        for t in 0..d0.grid().len() {
            assert_relative_eq!(d1.values()[t], d0.values()[t] - c, epsilon = 1e-12);
        }
        let a = bootstrap_processes(&data, &cfg).unwrap();
        let b = bootstrap_processes(&shifted, &cfg).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert!(pa.minus(pb).unwrap().sup_norm() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data = small_data(70);
        let cfg = BootConfig::with_seed(RngSpec::new(16, 3));
        let a = classical_test(&data, &cfg, 0.05).unwrap();
        let b = classical_test(&data, &cfg, 0.05).unwrap();
        assert_eq!(a.boot_stats, b.boot_stats);
    }

    #[test]
    fn parallel_matches_sequential_replicates() {
        let data = small_data(80);
        let cfg = BootConfig::with_seed(RngSpec::new(17, 0));
        let par = bootstrap_processes(&data, &cfg).unwrap();
        // Sequential reference: replicate the per-replicate computation by
        // brute force from the same child streams.
        let blocks_x = centered_blocks(data.x(), cfg.block_x);
        let blocks_y = centered_blocks(data.y(), cfg.block_y);
        let g = data.x().grid().len();
        let scale = (data.total() as f64).sqrt();
        for (r, curve) in par.iter().enumerate() {
            let mut rng = cfg.rng.child(r as u64).rng();
            let xi = standard_normals(&mut rng, blocks_x.count);
            let zeta = standard_normals(&mut rng, blocks_y.count);
            let mut vals = vec![0.0; g];
            accumulate(&blocks_x, &xi, 1.0 / data.x().len() as f64, &mut vals);
            accumulate(&blocks_y, &zeta, 1.0 / data.y().len() as f64, &mut vals);
            for v in vals.iter_mut() {
                *v *= scale;
            }
            assert_eq!(curve.values(), vals.as_slice());
        }
    }
}
