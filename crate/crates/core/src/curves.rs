//! Grid-based representation of continuous functions on [0, 1].
//!
//! All inference in this crate works with functions discretized on one shared
//! uniform grid; the sup-norm of a curve is defined as the maximum absolute
//! value over the grid points. Curve arithmetic never resamples: operands
//! must carry identical grids.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Number of points of the canonical evaluation grid. Chosen so that the
/// breakpoints of the built-in piecewise-linear mean families (multiples of
/// 0.05) fall exactly on grid points.
pub const CANONICAL_GRID_SIZE: usize = 101;

/// A uniform grid on [0, 1] shared by curves. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Arc<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points == other.points
    }
}

impl Grid {
    /// Validate and wrap an explicit list of grid points.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let g = points.len();
        if g < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {g}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first point must be 0, got {}",
                points[0]
            )));
        }
        if points[g - 1] != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "last point must be 1, got {}",
                points[g - 1]
            )));
        }
        // Uniformity within 1e-12 of the unit domain; fine grids carry
        // rounding of order 1e-16 in their consecutive differences.
        let spacing = 1.0 / (g - 1) as f64;
        for w in points.windows(2) {
            let diff = w[1] - w[0];
            if diff <= 0.0 {
                return Err(Error::InvalidGrid(
                    "points must be strictly increasing".into(),
                ));
            }
            if (diff - spacing).abs() > 1e-12 {
                return Err(Error::InvalidGrid(format!(
                    "non-uniform spacing: step {diff} vs expected {spacing}"
                )));
            }
        }
        Ok(Self {
            points: Arc::new(points),
        })
    }

    /// Uniform grid with `size` points, 0 = t_0 < ... < t_{size-1} = 1.
    pub fn uniform(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {size}"
            )));
        }
        let den = (size - 1) as f64;
        let mut points: Vec<f64> = (0..size).map(|i| i as f64 / den).collect();
        // Guard against rounding on the endpoint.
        points[size - 1] = 1.0;
        Self::new(points)
    }

    /// The default 101-point grid.
    pub fn canonical() -> Self {
        Self::uniform(CANONICAL_GRID_SIZE).expect("canonical grid is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// A single function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Grid,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "curve contains a non-finite value".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Maximum of |f| over the grid; the discrete sup-norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Smallest grid index attaining the sup-norm, with the signed value
    /// at that index.
    pub fn abs_argmax(&self) -> (usize, f64) {
        let mut best = 0;
        let mut best_abs = self.values[0].abs();
        for (i, v) in self.values.iter().enumerate().skip(1) {
            if v.abs() > best_abs {
                best = i;
                best_abs = v.abs();
            }
        }
        (best, self.values[best])
    }

    /// Pointwise difference `self - other`. Grids must be identical.
    pub fn minus(&self, other: &Curve) -> Result<Curve> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Curve::new(self.grid.clone(), values)
    }

    /// Pointwise sum `self + other`. Grids must be identical.
    pub fn plus(&self, other: &Curve) -> Result<Curve> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Curve::new(self.grid.clone(), values)
    }

    /// Pointwise scaling `s * self`.
    pub fn scaled(&self, s: f64) -> Result<Curve> {
        let values = self.values.iter().map(|v| s * v).collect();
        Curve::new(self.grid.clone(), values)
    }

    /// Pointwise vertical shift `self + s`.
    pub fn shifted(&self, s: f64) -> Result<Curve> {
        let values = self.values.iter().map(|v| v + s).collect();
        Curve::new(self.grid.clone(), values)
    }
}

/// An ordered sample of curves sharing one grid, stored as a dense
/// row-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    grid: Grid,
    rows: usize,
    values: Vec<f64>,
}

impl CurveSet {
    /// Build from a dense row-major table of `rows * grid.len()` values.
    pub fn new(grid: Grid, rows: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidInput(
                "curve set must contain at least one row".into(),
            ));
        }
        if values.len() != rows * grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {} rows on a {}-point grid, got {}",
                rows * grid.len(),
                rows,
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "curve set contains a non-finite value".into(),
            ));
        }
        Ok(Self { grid, rows, values })
    }

    pub fn from_curves(curves: &[Curve]) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InvalidInput("curve set must contain at least one row".into()))?;
        let grid = first.grid().clone();
        let mut values = Vec::with_capacity(curves.len() * grid.len());
        for c in curves {
            if *c.grid() != grid {
                return Err(Error::GridMismatch);
            }
            values.extend_from_slice(c.values());
        }
        Self::new(grid, curves.len(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of curves in the sample.
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Borrow row `i` (0-based) as a slice of grid values.
    pub fn row(&self, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[i * g..(i + 1) * g]
    }

    pub fn row_curve(&self, i: usize) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.row(i).to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise arithmetic mean over all rows.
    pub fn mean_curve(&self) -> Curve {
        self.partial_mean(1, self.rows)
            .expect("full range is valid")
    }

    /// Pointwise mean of rows `from..=to` (1-based, inclusive).
    pub fn partial_mean(&self, from: usize, to: usize) -> Result<Curve> {
        if from < 1 || from > to || to > self.rows {
            return Err(Error::InvalidInput(format!(
                "row range {from}..={to} out of bounds for {} rows",
                self.rows
            )));
        }
        let g = self.grid.len();
        let mut acc = vec![0.0; g];
        for i in (from - 1)..to {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v;
            }
        }
        let count = (to - from + 1) as f64;
        for a in acc.iter_mut() {
            *a /= count;
        }
        Curve::new(self.grid.clone(), acc)
    }

    /// A new set whose rows are `row_i + shift` pointwise.
    pub fn shifted_by_curve(&self, shift: &Curve) -> Result<CurveSet> {
        if *shift.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.rows {
            for (v, s) in self.row(i).iter().zip(shift.values()) {
                values.push(v + s);
            }
        }
        CurveSet::new(self.grid.clone(), self.rows, values)
    }
}
