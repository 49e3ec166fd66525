//! Seeded, replication-parallel Monte Carlo studies of the tests and bands.
//!
//! A study fixes sample sizes, an error process, a mean family with a grid
//! of parameter values, and a test; it then tallies rejection rates (or
//! coverage and half widths) over many independent replications. Replication
//! j of every scenario draws from the stream `(master_seed, j)`, so results
//! do not depend on scheduling and parameter values share common random
//! numbers.

use crate::basis::BSplineBasis;
use crate::change_point;
use crate::curves::{Curve, Grid};
use crate::dgp::{
    constant_schedule, eval_mean, make_psi, standard_sigmas, step_schedule, FtsConfig, FtsKind,
    MeanFamily, MeanSpec,
};
use crate::error::{Error, Result};
use crate::rng::RngSpec;
use crate::two_sample::{self, BootConfig, TwoSampleData};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Table1,
    Table2,
    Table3,
    Table4,
    Fig1,
    Custom,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StudyKind::Table1 => "table1",
            StudyKind::Table2 => "table2",
            StudyKind::Table3 => "table3",
            StudyKind::Table4 => "table4",
            StudyKind::Fig1 => "fig1",
            StudyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    TwoSampleClassical,
    TwoSampleRelevant,
    TwoSampleBand,
    ChangePointClassical,
    ChangePointRelevant,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TestKind::TwoSampleClassical => "two-sample-classical",
            TestKind::TwoSampleRelevant => "two-sample-relevant",
            TestKind::TwoSampleBand => "two-sample-band",
            TestKind::ChangePointClassical => "changepoint-classical",
            TestKind::ChangePointRelevant => "changepoint-relevant",
        };
        f.write_str(s)
    }
}

/// Mean family of the second sample (the first has mean zero). The study
/// parameter selects a member: the parabola amplitude a, the power k, or the
/// target maximal deviation for the plateau families (whose base sup-norm is
/// 0.1, so the amplitude is param / 0.1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Parabola,
    NormalizedPower,
    DoublePlateau,
    SinglePlateau,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::Parabola => "parabola",
            FamilyKind::NormalizedPower => "normalized-power",
            FamilyKind::DoublePlateau => "double-plateau",
            FamilyKind::SinglePlateau => "single-plateau",
        };
        f.write_str(s)
    }
}

pub fn mean_spec_for(family: FamilyKind, param: f64) -> MeanSpec {
    match family {
        FamilyKind::Parabola => MeanSpec::new(MeanFamily::Parabola { a: param }, 1.0),
        FamilyKind::NormalizedPower => MeanSpec::new(
            MeanFamily::NormalizedPower {
                k: param.round() as u32,
            },
            1.0,
        ),
        FamilyKind::DoublePlateau => MeanSpec::new(MeanFamily::DoublePlateau, param / 0.1),
        FamilyKind::SinglePlateau => MeanSpec::new(MeanFamily::SinglePlateau, param / 0.1),
    }
}

/// How the coupling operator is chosen across replications.
#[derive(Debug, Clone)]
pub enum PsiMode {
    /// Redraw from the replication's stream.
    RedrawPerRun,
    /// One fixed operator for every replication.
    Fixed(DMatrix<f64>),
}

/// Error-process template; the concrete [`FtsConfig`] is materialized per
/// replication once Psi is known.
#[derive(Debug, Clone)]
pub struct ProcessTemplate {
    pub kind: FtsKind,
    pub dimension: usize,
    pub kappa: f64,
    pub burn_in: usize,
    pub psi: PsiMode,
}

impl ProcessTemplate {
    pub fn standard(kind: FtsKind) -> Self {
        Self {
            kind,
            dimension: 21,
            kappa: 0.5,
            burn_in: 100,
            psi: PsiMode::RedrawPerRun,
        }
    }
}

/// Full description of one Monte Carlo scenario family.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub study: StudyKind,
    pub test: TestKind,
    /// First-sample size (unused by change-point tests).
    pub m: usize,
    /// Second-sample size, or the series length for change-point tests.
    pub n: usize,
    pub process: ProcessTemplate,
    pub family: FamilyKind,
    /// Parameter grid: a-values, k-values, or target deviations.
    pub params: Vec<f64>,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub runs: usize,
    /// Bootstrap replicates per run.
    pub reps: usize,
    pub block_x: usize,
    pub block_y: usize,
    pub block: usize,
    pub min_fraction: f64,
    /// True change fraction s* of change-point scenarios.
    pub change_fraction: f64,
    pub grid_size: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    /// A spec with the library defaults filled in; callers override the
    /// scenario-specific fields.
    pub fn base(study: StudyKind, test: TestKind, family: FamilyKind) -> Self {
        Self {
            study,
            test,
            m: 100,
            n: 200,
            process: ProcessTemplate::standard(FtsKind::Ma1),
            family,
            params: vec![0.1],
            delta: 0.0,
            alphas: vec![0.01, 0.05, 0.10],
            runs: 1000,
            reps: 200,
            block_x: 2,
            block_y: 2,
            block: 2,
            min_fraction: 0.1,
            change_fraction: 0.5,
            grid_size: crate::curves::CANONICAL_GRID_SIZE,
            master_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidInput("runs must be at least 1".into()));
        }
        if self.params.is_empty() {
            return Err(Error::InvalidInput(
                "parameter grid must be non-empty".into(),
            ));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::InvalidInput(
                "alphas must be a non-empty subset of (0, 1)".into(),
            ));
        }
        if matches!(
            self.test,
            TestKind::ChangePointClassical | TestKind::ChangePointRelevant
        ) && !(self.change_fraction > 0.0 && self.change_fraction < 1.0)
        {
            return Err(Error::InvalidInput(
                "change fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rejection,
    Coverage,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rejection => "rejection",
            Metric::Coverage => "coverage",
        })
    }
}

/// One aggregated scenario row.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub study: StudyKind,
    pub test: TestKind,
    pub family: FamilyKind,
    pub m: usize,
    pub n: usize,
    pub param: f64,
    pub alpha: f64,
    pub metric: Metric,
    /// Rejection rate or coverage probability.
    pub value: f64,
    /// Mean band half width (band studies only).
    pub half_width: Option<f64>,
    /// sqrt(p (1-p) / runs).
    pub mc_se: f64,
    pub runs: usize,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn rate(&self, param: f64, alpha: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.param - param).abs() < 1e-12 && (r.alpha - alpha).abs() < 1e-12)
            .map(|r| r.value)
    }

    /// Equality of everything except wall-clock times.
    pub fn rows_match(&self, other: &ResultTable) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.study == b.study
                    && a.test == b.test
                    && a.family == b.family
                    && a.m == b.m
                    && a.n == b.n
                    && a.param == b.param
                    && a.alpha == b.alpha
                    && a.metric == b.metric
                    && a.value == b.value
                    && a.half_width == b.half_width
                    && a.mc_se == b.mc_se
                    && a.runs == b.runs
            })
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }
}

enum RepOutcome {
    /// One rejection decision per alpha.
    Decisions(Vec<bool>),
    /// One (covered, half width) pair per alpha.
    Bands(Vec<(bool, f64)>),
}

/// Run a study: one row per (parameter, alpha).
pub fn run_study(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let grid = Grid::uniform(spec.grid_size)?;
    let basis = BSplineBasis::cubic(spec.process.dimension, &grid)?;
    let mut rows = Vec::new();
    for &param in &spec.params {
        let start = Instant::now();
        let outcomes: Vec<RepOutcome> = (0..spec.runs)
            .into_par_iter()
            .map(|rep| {
                run_replication(spec, &grid, &basis, param, rep).map_err(|e| {
                    Error::Internal(format!(
                        "replication {rep} failed (master_seed {}, stream {rep}): {e}",
                        spec.master_seed
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let wall = start.elapsed().as_secs_f64();
        for (ai, &alpha) in spec.alphas.iter().enumerate() {
            let runs = spec.runs as f64;
            let (metric, value, half_width) = match &outcomes[0] {
                RepOutcome::Decisions(_) => {
                    let count = outcomes
                        .iter()
                        .filter(|o| match o {
                            RepOutcome::Decisions(d) => d[ai],
                            _ => unreachable!(),
                        })
                        .count();
                    (Metric::Rejection, count as f64 / runs, None)
                }
                RepOutcome::Bands(_) => {
                    let mut covered = 0usize;
                    let mut width_sum = 0.0;
                    for o in &outcomes {
                        if let RepOutcome::Bands(b) = o {
                            if b[ai].0 {
                                covered += 1;
                            }
                            width_sum += b[ai].1;
                        }
                    }
                    (
                        Metric::Coverage,
                        covered as f64 / runs,
                        Some(width_sum / runs),
                    )
                }
            };
            let mc_se = (value * (1.0 - value) / runs).sqrt();
            rows.push(ResultRow {
                study: spec.study,
                test: spec.test,
                family: spec.family,
                m: spec.m,
                n: spec.n,
                param,
                alpha,
                metric,
                value,
                half_width,
                mc_se,
                runs: spec.runs,
                wall_secs: wall,
            });
        }
    }
    Ok(ResultTable { rows })
}

/// Power curve over an a-grid that must span the interior (d < delta),
/// the boundary (d = delta) and the alternative (d > delta).
pub fn power_curve(spec: &ExperimentSpec) -> Result<ResultTable> {
    let below = spec.params.iter().any(|&p| p < spec.delta - 1e-12);
    let at = spec.params.iter().any(|&p| (p - spec.delta).abs() <= 1e-12);
    let above = spec.params.iter().any(|&p| p > spec.delta + 1e-12);
    if !(below && at && above) {
        return Err(Error::InvalidInput(
            "power-curve grid must contain values below, at and above delta".into(),
        ));
    }
    run_study(spec)
}

fn run_replication(
    spec: &ExperimentSpec,
    grid: &Grid,
    basis: &BSplineBasis,
    param: f64,
    rep: usize,
) -> Result<RepOutcome> {
    let rep_rng = RngSpec::new(spec.master_seed, rep as u64);
    let sigmas = standard_sigmas(spec.process.dimension);
    let psi = match &spec.process.psi {
        PsiMode::RedrawPerRun => make_psi(spec.process.dimension, &sigmas, &rep_rng.child(0))?,
        PsiMode::Fixed(p) => p.clone(),
    };
    let cfg = FtsConfig {
        kind: spec.process.kind,
        dimension: spec.process.dimension,
        kappa: spec.process.kappa,
        sigmas,
        psi,
        burn_in: spec.process.burn_in,
    };
    let mu2 = eval_mean(&mean_spec_for(spec.family, param), grid)?;

    match spec.test {
        TestKind::TwoSampleClassical | TestKind::TwoSampleRelevant | TestKind::TwoSampleBand => {
            let zero = Curve::zero(grid.clone());
            let x_means = constant_schedule(&zero, spec.m);
            let x = crate::dgp::gen_series(spec.m, &cfg, basis, &x_means, &rep_rng.child(1))?;
            let y_means = constant_schedule(&mu2, spec.n);
            let y = crate::dgp::gen_series(spec.n, &cfg, basis, &y_means, &rep_rng.child(2))?;
            let data = TwoSampleData::new(x, y)?;
            let bcfg = BootConfig {
                reps: spec.reps,
                block_x: spec.block_x,
                block_y: spec.block_y,
                rng: rep_rng.child(3),
            };
            let scale = (data.total() as f64).sqrt();
            match spec.test {
                TestKind::TwoSampleClassical => {
                    let report = two_sample::classical_test(&data, &bcfg, spec.alphas[0])?;
                    Ok(RepOutcome::Decisions(decisions_from(
                        &report.boot_stats,
                        report.statistic,
                        0.0,
                        scale,
                        &spec.alphas,
                    )?))
                }
                TestKind::TwoSampleRelevant => {
                    let report =
                        two_sample::relevant_test(&data, &bcfg, spec.delta, spec.alphas[0])?;
                    Ok(RepOutcome::Decisions(decisions_from(
                        &report.boot_stats,
                        report.statistic,
                        spec.delta,
                        scale,
                        &spec.alphas,
                    )?))
                }
                _ => {
                    let procs = two_sample::bootstrap_processes(&data, &bcfg)?;
                    let sup_stats: Vec<f64> = procs.iter().map(Curve::sup_norm).collect();
                    let center = data.x().mean_curve().minus(&data.y().mean_curve())?;
                    // True difference of means is 0 - mu2; the band covers it
                    // iff sup |center - truth| <= half width.
                    let truth = mu2.scaled(-1.0)?;
                    let miss = center.minus(&truth)?.sup_norm();
                    let mut pairs = Vec::with_capacity(spec.alphas.len());
                    for &alpha in &spec.alphas {
                        let q = two_sample::empirical_quantile(&sup_stats, alpha)?;
                        let hw = q / scale;
                        pairs.push((miss <= hw, hw));
                    }
                    Ok(RepOutcome::Bands(pairs))
                }
            }
        }
        TestKind::ChangePointClassical | TestKind::ChangePointRelevant => {
            let zero = Curve::zero(grid.clone());
            let split = (spec.change_fraction * spec.n as f64 + 1e-9).floor() as usize;
            let means = step_schedule(&zero, &mu2, split, spec.n);
            let series = crate::dgp::gen_series(spec.n, &cfg, basis, &means, &rep_rng.child(1))?;
            let ccfg = change_point::CpConfig {
                block: spec.block,
                reps: spec.reps,
                min_fraction: spec.min_fraction,
                set_margin: None,
                rng: rep_rng.child(3),
            };
            let scale = (spec.n as f64).sqrt();
            let (stats, statistic, delta) = match spec.test {
                TestKind::ChangePointClassical => {
                    let res = change_point::classical_test(&series, &ccfg, spec.alphas[0])?;
                    (res.report.boot_stats, res.cusum_max, 0.0)
                }
                _ => {
                    let res =
                        change_point::relevant_test(&series, &ccfg, spec.delta, spec.alphas[0])?;
                    (res.report.boot_stats, res.max_gap, spec.delta)
                }
            };
            Ok(RepOutcome::Decisions(decisions_from(
                &stats,
                statistic,
                delta,
                scale,
                &spec.alphas,
            )?))
        }
    }
}

/// Decisions at several levels from one bootstrap sample.
fn decisions_from(
    boot_stats: &[f64],
    statistic: f64,
    delta: f64,
    scale: f64,
    alphas: &[f64],
) -> Result<Vec<bool>> {
    alphas
        .iter()
        .map(|&alpha| {
            let q = two_sample::empirical_quantile(boot_stats, alpha)?;
            Ok(statistic > delta + q / scale)
        })
        .collect()
}

// Built-in study presets mirroring the simulation section. Each returns one
// spec per (sample-size, family) combination.

pub fn table1_specs(runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for (family, params) in [
        (FamilyKind::Parabola, vec![0.0, 0.4, 0.6, 0.8]),
        (FamilyKind::NormalizedPower, vec![2.0, 3.0, 4.0, 5.0]),
    ] {
        let mut s = ExperimentSpec::base(StudyKind::Table1, TestKind::TwoSampleClassical, family);
        s.process = ProcessTemplate::standard(FtsKind::Ar1);
        s.params = params;
        s.runs = runs;
        s.master_seed = master_seed;
        specs.push(s);
    }
    specs
}

fn two_sample_sizes() -> [(usize, usize); 3] {
    [(50, 100), (100, 100), (100, 200)]
}

pub fn table2_specs(runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for (m, n) in two_sample_sizes() {
        for family in [FamilyKind::DoublePlateau, FamilyKind::SinglePlateau] {
            let mut s =
                ExperimentSpec::base(StudyKind::Table2, TestKind::TwoSampleRelevant, family);
            s.m = m;
            s.n = n;
            s.delta = 0.1;
            s.params = vec![0.1];
            s.runs = runs;
            s.master_seed = master_seed;
            specs.push(s);
        }
    }
    specs
}

pub fn table3_specs(runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for (m, n) in two_sample_sizes() {
        for family in [FamilyKind::DoublePlateau, FamilyKind::SinglePlateau] {
            let mut s = ExperimentSpec::base(StudyKind::Table3, TestKind::TwoSampleBand, family);
            s.m = m;
            s.n = n;
            s.params = vec![0.1];
            s.runs = runs;
            s.master_seed = master_seed;
            specs.push(s);
        }
    }
    specs
}

pub fn table4_specs(runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for n in [100usize, 200, 500] {
        for family in [FamilyKind::DoublePlateau, FamilyKind::SinglePlateau] {
            let mut s =
                ExperimentSpec::base(StudyKind::Table4, TestKind::ChangePointRelevant, family);
            s.n = n;
            s.delta = 0.4;
            s.params = vec![0.37, 0.38, 0.39, 0.40, 0.41, 0.42, 0.43];
            s.change_fraction = 0.5;
            s.runs = runs;
            s.master_seed = master_seed;
            specs.push(s);
        }
    }
    specs
}

pub fn fig1_specs(runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for (m, n) in [(50, 100), (100, 200)] {
        for family in [FamilyKind::DoublePlateau, FamilyKind::SinglePlateau] {
            let mut s = ExperimentSpec::base(StudyKind::Fig1, TestKind::TwoSampleRelevant, family);
            s.m = m;
            s.n = n;
            s.delta = 0.1;
            s.params = vec![0.02, 0.05, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25];
            s.runs = runs;
            s.master_seed = master_seed;
            specs.push(s);
        }
    }
    specs
}

/// All specs of a named study.
pub fn study_specs(study: StudyKind, runs: usize, master_seed: u64) -> Vec<ExperimentSpec> {
    match study {
        StudyKind::Table1 => table1_specs(runs, master_seed),
        StudyKind::Table2 => table2_specs(runs, master_seed),
        StudyKind::Table3 => table3_specs(runs, master_seed),
        StudyKind::Table4 => table4_specs(runs, master_seed),
        StudyKind::Fig1 => fig1_specs(runs, master_seed),
        StudyKind::Custom => Vec::new(),
    }
}
