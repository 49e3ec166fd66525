//! Ingestion of raw discrete observations: least-squares Fourier smoothing
//! of per-unit measurement vectors (e.g. daily values over a year) into
//! curves on the shared grid.
//!
//! Observation j of a unit with P observations sits at the time fraction
//! j / P, treating the unit as one full period; units of different lengths
//! (365 vs 366 days) therefore live on the same domain.

use crate::basis::fourier_design;
use crate::curves::{CurveSet, Grid};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Raw observations: one row per unit, missing entries stored as NaN.
#[derive(Debug, Clone)]
pub struct RawPanel {
    labels: Vec<String>,
    obs_per_unit: usize,
    values: Vec<f64>,
}

/// Highest tolerated share of missing observations per unit.
const MAX_MISSING_SHARE: f64 = 0.10;

impl RawPanel {
    pub fn new(labels: Vec<String>, obs_per_unit: usize, values: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput(
                "panel must contain at least one unit".into(),
            ));
        }
        if obs_per_unit < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 observations per unit, got {obs_per_unit}"
            )));
        }
        if values.len() != labels.len() * obs_per_unit {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                labels.len() * obs_per_unit,
                values.len()
            )));
        }
        let panel = Self {
            labels,
            obs_per_unit,
            values,
        };
        for u in 0..panel.units() {
            let missing = panel.row(u).iter().filter(|v| v.is_nan()).count();
            if missing as f64 > MAX_MISSING_SHARE * obs_per_unit as f64 {
                return Err(Error::Ingestion {
                    unit: panel.labels[u].clone(),
                    reason: format!(
                        "{missing} of {obs_per_unit} observations missing (limit {:.0}%)",
                        MAX_MISSING_SHARE * 100.0
                    ),
                });
            }
            if panel.row(u).iter().any(|v| v.is_infinite()) {
                return Err(Error::Ingestion {
                    unit: panel.labels[u].clone(),
                    reason: "non-finite observation".into(),
                });
            }
        }
        Ok(panel)
    }

    pub fn units(&self) -> usize {
        self.labels.len()
    }

    pub fn obs_per_unit(&self) -> usize {
        self.obs_per_unit
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        &self.values[unit * self.obs_per_unit..(unit + 1) * self.obs_per_unit]
    }
}

/// Fourier smoothing basis: constant plus sine/cosine pairs, so the size
/// must be odd. The period is 1 on the rescaled domain.
#[derive(Debug, Clone, Copy)]
pub struct FourierSpec {
    pub n_basis: usize,
}

impl Default for FourierSpec {
    fn default() -> Self {
        Self { n_basis: 49 }
    }
}

/// Least-squares fit of every unit onto the Fourier basis, evaluated on
/// `grid`. Units whose design turns rank deficient (possible with extreme
/// missingness) are reported by label.
pub fn smooth_to_curves(panel: &RawPanel, fourier: &FourierSpec, grid: &Grid) -> Result<CurveSet> {
    let p = panel.obs_per_unit();
    if fourier.n_basis > p {
        return Err(Error::InvalidInput(format!(
            "basis size {} exceeds observations per unit {p}",
            fourier.n_basis
        )));
    }
    let eval = fourier_design(grid.points(), fourier.n_basis)?;
    let times: Vec<f64> = (0..p).map(|j| j as f64 / p as f64).collect();
    let full_design = fourier_design(&times, fourier.n_basis)?;
    let mut full_solver: Option<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;

    let g = grid.len();
    let mut values = vec![0.0; panel.units() * g];
    for u in 0..panel.units() {
        let row = panel.row(u);
        let present: Vec<usize> = (0..p).filter(|&j| !row[j].is_nan()).collect();
        let coeffs = if present.len() == p {
            let solver = full_solver.get_or_insert_with(|| full_design.clone().svd(true, true));
            solve_or_name(solver, &DVector::from_row_slice(row), &panel.labels()[u])?
        } else {
            let mut design = DMatrix::zeros(present.len(), fourier.n_basis);
            let mut obs = DVector::zeros(present.len());
            for (r, &j) in present.iter().enumerate() {
                design.row_mut(r).copy_from(&full_design.row(j));
                obs[r] = row[j];
            }
            let svd = design.svd(true, true);
            solve_or_name(&svd, &obs, &panel.labels()[u])?
        };
        let fitted = &eval * &coeffs;
        values[u * g..(u + 1) * g].copy_from_slice(fitted.as_slice());
    }
    CurveSet::new(grid.clone(), panel.units(), values)
}

fn solve_or_name(
    svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    obs: &DVector<f64>,
    unit: &str,
) -> Result<DVector<f64>> {
    let max_sv = svd.singular_values.iter().fold(0.0_f64, |a, s| a.max(*s));
    let min_sv = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, s| a.min(*s));
    if min_sv <= max_sv * 1e-10 {
        return Err(Error::Ingestion {
            unit: unit.to_string(),
            reason: "rank-deficient smoothing design".into(),
        });
    }
    svd.solve(obs, 0.0).map_err(|e| Error::Ingestion {
        unit: unit.to_string(),
        reason: e.to_string(),
    })
}
