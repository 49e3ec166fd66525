//! Command-line interface: sup-norm two-sample tests, confidence bands,
//! change-point tests and the built-in simulation studies.
//!
//! Exit status reports process health only: 0 on success, 2 on input or
//! flag validation errors, 1 on internal errors. Statistical decisions are
//! written to the report files, never encoded in the exit code.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use supfda::change_point::{self, CpConfig};
use supfda::curves::{CurveSet, Grid};
use supfda::error::Error;
use supfda::io;
use supfda::mc::{self, ResultTable, StudyKind};
use supfda::rng::RngSpec;
use supfda::smooth::{smooth_to_curves, FourierSpec};
use supfda::two_sample::{self, BootConfig, MultiplierSource, TwoSampleData};

#[derive(Parser)]
#[command(
    name = "supfda",
    about = "Sup-norm inference for functional time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputOpts {
    /// Treat input files as raw panels (unit label + observations per row)
    /// and smooth them onto the grid with a Fourier basis.
    #[arg(long)]
    raw: bool,
    /// Fourier basis size for --raw smoothing (odd).
    #[arg(long, default_value_t = 49)]
    basis: usize,
    /// Grid size used when smoothing raw panels.
    #[arg(long, default_value_t = 101)]
    grid_size: usize,
}

#[derive(Args)]
struct BootOpts {
    /// Bootstrap replicates R.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Block length for both samples (overridden by --block-x/--block-y).
    #[arg(long, default_value_t = 2)]
    block: usize,
    /// Block length for the first sample.
    #[arg(long)]
    block_x: Option<usize>,
    /// Block length for the second sample.
    #[arg(long)]
    block_y: Option<usize>,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sample test: classical when --delta is 0, relevant otherwise.
    TwoSample {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        input: InputOpts,
        /// Margin of the relevant hypothesis sup|mu1-mu2| <= delta.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        boot: BootOpts,
        /// Extremal-set margin constant c (margin = c ln(m+n)).
        #[arg(long, default_value_t = 0.1)]
        c_const: f64,
        /// Report CSV path.
        #[arg(long, default_value = "two_sample_report.csv")]
        out: PathBuf,
    },
    /// Simultaneous confidence band for the difference of mean curves.
    Band {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        input: InputOpts,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        boot: BootOpts,
        /// Band CSV path.
        #[arg(long, default_value = "band.csv")]
        out: PathBuf,
    },
    /// Change-point test on one series: classical when --delta is 0,
    /// relevant otherwise.
    Changepoint {
        x: PathBuf,
        #[command(flatten)]
        input: InputOpts,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        boot: BootOpts,
        /// Location restriction: the estimate is clamped to
        /// [vartheta, 1 - vartheta].
        #[arg(long, default_value_t = 0.1)]
        vartheta: f64,
        /// Extremal-set margin constant c (margin = c ln(n)).
        #[arg(long, default_value_t = 0.1)]
        c_const: f64,
        /// Result CSV path.
        #[arg(long, default_value = "changepoint_report.csv")]
        out: PathBuf,
    },
    /// Run a built-in simulation study and write its result table,
    /// manifest and (for fig1) plot data.
    Simulate {
        #[arg(long, value_enum)]
        study: StudyArg,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bootstrap replicates per run.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Table1,
    Table2,
    Table3,
    Table4,
    Fig1,
}

impl From<StudyArg> for StudyKind {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::Table1 => StudyKind::Table1,
            StudyArg::Table2 => StudyKind::Table2,
            StudyArg::Table3 => StudyKind::Table3,
            StudyArg::Table4 => StudyKind::Table4,
            StudyArg::Fig1 => StudyKind::Fig1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_curves(path: &Path, input: &InputOpts) -> Result<CurveSet, Error> {
    if input.raw {
        let panel = io::read_raw_panel(path)?;
        let grid = Grid::uniform(input.grid_size)?;
        smooth_to_curves(
            &panel,
            &FourierSpec {
                n_basis: input.basis,
            },
            &grid,
        )
    } else {
        io::read_curve_set(path)
    }
}

fn boot_config(boot: &BootOpts) -> BootConfig {
    BootConfig {
        reps: boot.reps,
        block_x: boot.block_x.unwrap_or(boot.block),
        block_y: boot.block_y.unwrap_or(boot.block),
        rng: RngSpec::new(boot.seed, 0),
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::TwoSample {
            x,
            y,
            input,
            delta,
            alpha,
            boot,
            c_const,
            out,
        } => {
            let data = TwoSampleData::new(load_curves(&x, &input)?, load_curves(&y, &input)?)?;
            let cfg = boot_config(&boot);
            let report = if delta == 0.0 {
                two_sample::classical_test(&data, &cfg, alpha)?
            } else {
                let margin = c_const * (data.total() as f64).ln();
                two_sample::relevant_test_with(
                    &data,
                    &cfg,
                    delta,
                    alpha,
                    margin,
                    MultiplierSource::Gaussian,
                )?
            };
            std::fs::write(&out, io::test_report_csv(&report))?;
            print!("{}", io::test_report_text(&report));
            Ok(())
        }
        Command::Band {
            x,
            y,
            input,
            alpha,
            boot,
            out,
        } => {
            let data = TwoSampleData::new(load_curves(&x, &input)?, load_curves(&y, &input)?)?;
            let band = two_sample::confidence_band(&data, &boot_config(&boot), alpha)?;
            std::fs::write(&out, io::band_csv(&band))?;
            print!("{}", io::band_text(&band));
            Ok(())
        }
        Command::Changepoint {
            x,
            input,
            delta,
            alpha,
            boot,
            vartheta,
            c_const,
            out,
        } => {
            let series = load_curves(&x, &input)?;
            let cfg = CpConfig {
                block: boot.block,
                reps: boot.reps,
                min_fraction: vartheta,
                set_margin: Some(c_const * (series.len() as f64).ln()),
                rng: RngSpec::new(boot.seed, 0),
            };
            let result = if delta == 0.0 {
                change_point::classical_test(&series, &cfg, alpha)?
            } else {
                change_point::relevant_test(&series, &cfg, delta, alpha)?
            };
            std::fs::write(&out, io::cp_result_csv(&result))?;
            print!("{}", io::cp_result_text(&result));
            Ok(())
        }
        Command::Simulate {
            study,
            runs,
            seed,
            reps,
            out_dir,
        } => {
            let kind: StudyKind = study.into();
            let mut specs = mc::study_specs(kind, runs, seed);
            for s in specs.iter_mut() {
                s.reps = reps;
            }
            let mut table = ResultTable::default();
            for spec in &specs {
                table.extend(mc::run_study(spec)?);
            }
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(
                out_dir.join(format!("{kind}.csv")),
                io::result_table_csv(&table),
            )?;
            std::fs::write(
                out_dir.join(format!("{kind}_manifest.json")),
                io::manifest_json_string(&specs, &table),
            )?;
            if kind == StudyKind::Fig1 {
                std::fs::write(out_dir.join("fig1_plot.csv"), fig1_plot_csv(&table))?;
            }
            eprintln!(
                "{kind}: {} rows written to {}",
                table.rows.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

/// (a, rate) pairs per scenario for plotting the power curves.
fn fig1_plot_csv(table: &ResultTable) -> String {
    let mut out = String::from("family,m,n,alpha,a,rate\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.family, r.m, r.n, r.alpha, r.param, r.value
        ));
    }
    out
}
