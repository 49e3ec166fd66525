//! Text formats: curve-set CSV, raw-panel CSV, report/band/result-table
//! serialization and study manifests.
//!
//! Curve sets print floats in shortest round-trip form, so a written file
//! reads back bit-identically. Reports print every float with 17
//! significant digits.

use crate::change_point::CpResult;
use crate::curves::{CurveSet, Grid};
use crate::dgp::{FtsConfig, FtsKind};
use crate::error::{Error, Result};
use crate::mc::{ExperimentSpec, PsiMode, ResultTable};
use crate::smooth::RawPanel;
use crate::two_sample::{Band, TestReport};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// 17 significant digits, enough to reconstruct the exact f64.
fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        reason: format!("cannot parse `{}` as a number", field.trim()),
    })
}

// ---------------------------------------------------------------------------
// Curve sets
// ---------------------------------------------------------------------------

/// CSV with the grid points as header row and one row of values per curve.
pub fn curve_set_csv(set: &CurveSet) -> String {
    let mut out = String::new();
    let header: Vec<String> = set.grid().points().iter().map(|t| t.to_string()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..set.len() {
        let row: Vec<String> = set.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_curve_set(text: &str) -> Result<CurveSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "empty curve-set file".into(),
    })?;
    let points = header
        .split(',')
        .map(|f| parse_f64(f, hline + 1))
        .collect::<Result<Vec<f64>>>()?;
    let grid = Grid::new(points)?;
    let g = grid.len();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in lines {
        let row = line
            .split(',')
            .map(|f| parse_f64(f, idx + 1))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != g {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("expected {g} values, found {}", row.len()),
            });
        }
        values.extend_from_slice(&row);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            line: hline + 1,
            reason: "curve-set file contains no curves".into(),
        });
    }
    CurveSet::new(grid, rows, values)
}

pub fn write_curve_set(path: &Path, set: &CurveSet) -> Result<()> {
    fs::write(path, curve_set_csv(set))?;
    Ok(())
}

pub fn read_curve_set(path: &Path) -> Result<CurveSet> {
    parse_curve_set(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Raw panels
// ---------------------------------------------------------------------------

/// Raw-panel CSV: first column is the unit label, remaining columns are the
/// ordered observations; blank cells mark missing values.
pub fn parse_raw_panel(text: &str) -> Result<RawPanel> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut obs_per_unit = None;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields
            .next()
            .ok_or(Error::Parse {
                line: idx + 1,
                reason: "missing unit label".into(),
            })?
            .trim()
            .to_string();
        let mut row = Vec::new();
        for f in fields {
            if f.trim().is_empty() {
                row.push(f64::NAN);
            } else {
                row.push(parse_f64(f, idx + 1)?);
            }
        }
        match obs_per_unit {
            None => obs_per_unit = Some(row.len()),
            Some(p) if p != row.len() => {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!(
                        "unit `{label}` has {} observations, expected {p}",
                        row.len()
                    ),
                });
            }
            _ => {}
        }
        labels.push(label);
        values.extend_from_slice(&row);
    }
    let obs = obs_per_unit.ok_or(Error::Parse {
        line: 1,
        reason: "empty raw-panel file".into(),
    })?;
    RawPanel::new(labels, obs, values)
}

pub fn read_raw_panel(path: &Path) -> Result<RawPanel> {
    parse_raw_panel(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

pub fn test_report_csv(report: &TestReport) -> String {
    let blocks: Vec<String> = report.block_lengths.iter().map(|b| b.to_string()).collect();
    let mut out = String::from(
        "statistic,delta,alpha,quantile,reject,p_value,reps,scale,blocks,master_seed,stream_id\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt17(report.statistic),
        fmt17(report.delta),
        fmt17(report.alpha),
        fmt17(report.quantile),
        report.reject,
        fmt17(report.p_value),
        report.boot_stats.len(),
        fmt17(report.scale),
        blocks.join(";"),
        report.rng.master_seed,
        report.rng.stream_id,
    );
    out
}

pub fn test_report_text(report: &TestReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "statistic   = {}", fmt17(report.statistic));
    let _ = writeln!(out, "delta       = {}", fmt17(report.delta));
    let _ = writeln!(out, "alpha       = {}", fmt17(report.alpha));
    let _ = writeln!(out, "quantile    = {}", fmt17(report.quantile));
    let _ = writeln!(
        out,
        "threshold   = {}",
        fmt17(report.delta + report.quantile / report.scale)
    );
    let _ = writeln!(out, "reject      = {}", report.reject);
    let _ = writeln!(out, "p_value     = {}", fmt17(report.p_value));
    let _ = writeln!(out, "reps        = {}", report.boot_stats.len());
    let _ = writeln!(out, "scale       = {}", fmt17(report.scale));
    let blocks: Vec<String> = report.block_lengths.iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "blocks      = {}", blocks.join(";"));
    let _ = writeln!(out, "master_seed = {}", report.rng.master_seed);
    let _ = writeln!(out, "stream_id   = {}", report.rng.stream_id);
    out
}

fn mask_string(mask: &[bool]) -> String {
    mask.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn cp_result_csv(res: &CpResult) -> String {
    let r = &res.report;
    let (plus, minus) = match &res.sets {
        Some(s) => (mask_string(&s.plus), mask_string(&s.minus)),
        None => (String::new(), String::new()),
    };
    let mut out = String::from(
        "s_hat,cusum_max,d_hat,delta,alpha,quantile,reject,p_value,reps,scale,block,\
         master_seed,stream_id,plus_mask,minus_mask\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt17(res.change_fraction),
        fmt17(res.cusum_max),
        fmt17(res.max_gap),
        fmt17(r.delta),
        fmt17(r.alpha),
        fmt17(r.quantile),
        r.reject,
        fmt17(r.p_value),
        r.boot_stats.len(),
        fmt17(r.scale),
        r.block_lengths[0],
        r.rng.master_seed,
        r.rng.stream_id,
        plus,
        minus,
    );
    out
}

pub fn cp_result_text(res: &CpResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "s_hat       = {}", fmt17(res.change_fraction));
    let _ = writeln!(out, "cusum_max   = {}", fmt17(res.cusum_max));
    let _ = writeln!(out, "d_hat       = {}", fmt17(res.max_gap));
    out.push_str(&test_report_text(&res.report));
    if let Some(sets) = &res.sets {
        let _ = writeln!(out, "plus_mask   = {}", mask_string(&sets.plus));
        let _ = writeln!(out, "minus_mask  = {}", mask_string(&sets.minus));
    }
    out
}

/// Band CSV: one row per grid point.
pub fn band_csv(band: &Band) -> String {
    let mut out = String::from("t,center,lower,upper\n");
    let grid = band.center.grid();
    for (j, &t) in grid.points().iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt17(t),
            fmt17(band.center.values()[j]),
            fmt17(band.lower.values()[j]),
            fmt17(band.upper.values()[j]),
        );
    }
    out
}

pub fn band_text(band: &Band) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "alpha      = {}", fmt17(band.alpha));
    let _ = writeln!(out, "half_width = {}", fmt17(band.half_width));
    out
}

// ---------------------------------------------------------------------------
// Result tables and manifests
// ---------------------------------------------------------------------------

/// Study CSV, one row per (scenario, alpha). Wall-clock times live in the
/// manifest so the CSV is byte-identical across reruns with the same seed.
pub fn result_table_csv(table: &ResultTable) -> String {
    let mut out =
        String::from("study,test,family,m,n,param,alpha,metric,value,half_width,mc_se,runs\n");
    for r in &table.rows {
        let hw = r.half_width.map(fmt17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.study,
            r.test,
            r.family,
            r.m,
            r.n,
            fmt17(r.param),
            fmt17(r.alpha),
            r.metric,
            fmt17(r.value),
            hw,
            fmt17(r.mc_se),
            r.runs,
        );
    }
    out
}

/// Pretty-printed JSON manifest, ready to write next to a study CSV.
pub fn manifest_json_string(specs: &[ExperimentSpec], table: &ResultTable) -> String {
    serde_json::to_string_pretty(&manifest_json(specs, table)).expect("manifest serializes")
}

/// Machine-readable echo of a study spec plus seeds and timings.
pub fn manifest_json(specs: &[ExperimentSpec], table: &ResultTable) -> serde_json::Value {
    let spec_entries: Vec<serde_json::Value> = specs
        .iter()
        .map(|s| {
            serde_json::json!({
                "study": s.study.to_string(),
                "test": s.test.to_string(),
                "family": s.family.to_string(),
                "m": s.m,
                "n": s.n,
                "params": s.params,
                "delta": s.delta,
                "alphas": s.alphas,
                "runs": s.runs,
                "reps": s.reps,
                "block_x": s.block_x,
                "block_y": s.block_y,
                "block": s.block,
                "min_fraction": s.min_fraction,
                "change_fraction": s.change_fraction,
                "grid_size": s.grid_size,
                "master_seed": s.master_seed,
                "process": {
                    "kind": match s.process.kind { FtsKind::Ma1 => "fma1", FtsKind::Ar1 => "far1" },
                    "dimension": s.process.dimension,
                    "kappa": s.process.kappa,
                    "burn_in": s.process.burn_in,
                    "psi": match s.process.psi { PsiMode::RedrawPerRun => "redraw-per-run", PsiMode::Fixed(_) => "fixed" },
                },
            })
        })
        .collect();
    let wall: f64 = table.rows.iter().map(|r| r.wall_secs).sum::<f64>();
    serde_json::json!({
        "specs": spec_entries,
        "rows": table.rows.len(),
        "wall_secs_total_per_row_sum": wall,
    })
}

// ---------------------------------------------------------------------------
// Process configs
// ---------------------------------------------------------------------------

/// key=value serialization of an [`FtsConfig`], without the Psi matrix
/// (see [`psi_csv`] for exact replay of the operator).
pub fn fts_config_kv(cfg: &FtsConfig) -> String {
    let sigmas: Vec<String> = cfg.sigmas.iter().map(|s| s.to_string()).collect();
    format!(
        "kind={}\ndimension={}\nkappa={}\nburn_in={}\nsigmas={}\n",
        match cfg.kind {
            FtsKind::Ma1 => "fma1",
            FtsKind::Ar1 => "far1",
        },
        cfg.dimension,
        cfg.kappa,
        cfg.burn_in,
        sigmas.join(";"),
    )
}

/// Rebuild a config from its key=value form and an explicit Psi matrix.
pub fn fts_config_from_kv(text: &str, psi: DMatrix<f64>) -> Result<FtsConfig> {
    let mut kind = None;
    let mut dimension = None;
    let mut kappa = None;
    let mut burn_in = None;
    let mut sigmas = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: idx + 1,
            reason: "expected key=value".into(),
        })?;
        match key.trim() {
            "kind" => {
                kind = Some(match value.trim() {
                    "fma1" => FtsKind::Ma1,
                    "far1" => FtsKind::Ar1,
                    other => {
                        return Err(Error::Parse {
                            line: idx + 1,
                            reason: format!("unknown process kind `{other}`"),
                        })
                    }
                })
            }
            "dimension" => {
                dimension = Some(value.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: "bad dimension".into(),
                })?)
            }
            "kappa" => kappa = Some(parse_f64(value, idx + 1)?),
            "burn_in" => {
                burn_in = Some(value.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: "bad burn_in".into(),
                })?)
            }
            "sigmas" => {
                sigmas = Some(
                    value
                        .split(';')
                        .map(|f| parse_f64(f, idx + 1))
                        .collect::<Result<Vec<f64>>>()?,
                )
            }
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
    }
    let cfg = FtsConfig {
        kind: kind.ok_or_else(|| missing("kind"))?,
        dimension: dimension.ok_or_else(|| missing("dimension"))?,
        kappa: kappa.ok_or_else(|| missing("kappa"))?,
        sigmas: sigmas.ok_or_else(|| missing("sigmas"))?,
        psi,
        burn_in: burn_in.ok_or_else(|| missing("burn_in"))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn missing(key: &str) -> Error {
    Error::Parse {
        line: 0,
        reason: format!("missing key `{key}`"),
    }
}

/// Dump a Psi matrix row per line for exact replay.
pub fn psi_csv(psi: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..psi.nrows() {
        let row: Vec<String> = (0..psi.ncols()).map(|j| psi[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_psi_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            line.split(',')
                .map(|f| parse_f64(f, idx + 1))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            line: 1,
            reason: "Psi matrix must be square and non-empty".into(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Curve;
    use crate::dgp::{make_psi, standard_sigmas};
    use crate::rng::RngSpec;
    use rand::Rng;

    #[test]
    fn curve_set_roundtrip_is_bit_exact() {
        let grid = Grid::canonical();
        let mut rng = RngSpec::new(123, 0).rng();
        let curves: Vec<Curve> = (0..5)
            .map(|_| {
                let vals: Vec<f64> = (0..grid.len())
                    .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                    .collect();
                Curve::new(grid.clone(), vals).unwrap()
            })
            .collect();
        let set = CurveSet::from_curves(&curves).unwrap();
        let text = curve_set_csv(&set);
        let back = parse_curve_set(&text).unwrap();
        assert_eq!(set, back);
        // And the text itself is stable.
        assert_eq!(text, curve_set_csv(&back));
    }

    #[test]
    fn curve_set_parse_errors_carry_line_numbers() {
        let bad = "0,0.5,1\n1,2\n";
        match parse_curve_set(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_curve_set("").is_err());
        assert!(parse_curve_set("0,0.5,1\n").is_err());
        assert!(parse_curve_set("0,0.5,oops\n1,2,3\n").is_err());
    }

    #[test]
    fn raw_panel_parsing_handles_blanks() {
        let text = "y1990,1,2,3,4,5,6,7,8,9,10\ny1991,2,,3,4,5,6,7,8,9,10\n";
        let panel = parse_raw_panel(text).unwrap();
        assert_eq!(panel.units(), 2);
        assert_eq!(panel.obs_per_unit(), 10);
        assert!(panel.row(1)[1].is_nan());
        assert_eq!(panel.labels()[0], "y1990");

        let ragged = "a,1,2,3\nb,1,2\n";
        assert!(parse_raw_panel(ragged).is_err());
    }

    #[test]
    fn report_serializations_include_decision() {
        let report = TestReport {
            statistic: 0.25,
            delta: 0.1,
            alpha: 0.05,
            quantile: 1.75,
            reject: true,
            p_value: 0.0199,
            boot_stats: vec![0.5; 200],
            scale: 300f64.sqrt(),
            rng: RngSpec::new(7, 3),
            block_lengths: vec![2, 2],
        };
        let csv = test_report_csv(&report);
        assert!(csv.contains("true"));
        assert!(csv.lines().count() == 2);
        let txt = test_report_text(&report);
        assert!(txt.contains("reject      = true"));
        assert!(txt.contains("2.5000000000000000e-1"));
    }

    #[test]
    fn psi_roundtrip() {
        let psi = make_psi(6, &standard_sigmas(6), &RngSpec::new(4, 0)).unwrap();
        let text = psi_csv(&psi);
        let back = parse_psi_csv(&text).unwrap();
        assert_eq!(psi, back);
    }

    #[test]
    fn fts_config_kv_roundtrip() {
        let psi = make_psi(4, &standard_sigmas(4), &RngSpec::new(9, 0)).unwrap();
        let cfg = FtsConfig::standard(crate::dgp::FtsKind::Ar1, 4, 0.5, psi.clone()).unwrap();
        let kv = fts_config_kv(&cfg);
        let back = fts_config_from_kv(&kv, psi).unwrap();
        assert_eq!(back.dimension, 4);
        assert_eq!(back.kappa, 0.5);
        assert_eq!(back.burn_in, 100);
        assert_eq!(back.sigmas, cfg.sigmas);
        assert!(fts_config_from_kv("kind=nope\n", DMatrix::identity(1, 1)).is_err());
    }
}
