//! Function bases: clamped B-splines for the synthetic error processes and
//! a Fourier design for smoothing raw observations into curves.

use crate::curves::Grid;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// A B-spline basis with clamped uniform knots, pre-evaluated on a grid.
#[derive(Debug, Clone)]
pub struct BSplineBasis {
    dimension: usize,
    degree: usize,
    knots: Vec<f64>,
    grid: Grid,
    /// Row-major `dimension x grid.len()` table of basis values.
    values: Vec<f64>,
}

impl BSplineBasis {
    /// Clamped uniform basis of `dimension` functions of the given degree.
    pub fn clamped(dimension: usize, degree: usize, grid: &Grid) -> Result<Self> {
        if dimension < degree + 1 {
            return Err(Error::InvalidInput(format!(
                "B-spline dimension {dimension} must be at least degree + 1 = {}",
                degree + 1
            )));
        }
        let knots = clamped_uniform_knots(dimension, degree);
        let g = grid.len();
        let mut values = vec![0.0; dimension * g];
        let mut local = vec![0.0; degree + 1];
        for (j, &t) in grid.points().iter().enumerate() {
            let span = find_span(&knots, dimension, degree, t);
            basis_funs(&knots, span, degree, t, &mut local);
            for (r, &v) in local.iter().enumerate() {
                let idx = span - degree + r;
                values[idx * g + j] = v;
            }
        }
        let basis = Self {
            dimension,
            degree,
            knots,
            grid: grid.clone(),
            values,
        };
        basis.check_partition_of_unity()?;
        Ok(basis)
    }

    /// Cubic clamped basis, the default for the synthetic processes.
    pub fn cubic(dimension: usize, grid: &Grid) -> Result<Self> {
        Self::clamped(dimension, 3, grid)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Values of basis function `i` on the grid.
    pub fn row(&self, i: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[i * g..(i + 1) * g]
    }

    /// Accumulate `sum_i coeffs[i] * basis_i` into `out` (overwritten).
    pub fn combine_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.dimension);
        debug_assert_eq!(out.len(), self.grid.len());
        out.fill(0.0);
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                *o += c * b;
            }
        }
    }

    fn check_partition_of_unity(&self) -> Result<()> {
        let g = self.grid.len();
        for j in 0..g {
            let sum: f64 = (0..self.dimension).map(|i| self.values[i * g + j]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Internal(format!(
                    "B-spline partition of unity violated at grid index {j}: sum {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Knot vector with degree+1 clamps at each end and uniform interior knots.
fn clamped_uniform_knots(dimension: usize, degree: usize) -> Vec<f64> {
    let interior = dimension - degree - 1;
    let mut knots = Vec::with_capacity(dimension + degree + 1);
    knots.extend(std::iter::repeat_n(0.0, degree + 1));
    for j in 1..=interior {
        knots.push(j as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    knots
}

/// Index of the knot span containing `t`, clamped so that `t = 1` falls in
/// the last non-degenerate span.
fn find_span(knots: &[f64], dimension: usize, degree: usize, t: f64) -> usize {
    if t >= knots[dimension] {
        return dimension - 1;
    }
    let mut lo = degree;
    let mut hi = dimension;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Cox–de Boor recursion for the degree+1 basis functions active on `span`.
fn basis_funs(knots: &[f64], span: usize, degree: usize, t: f64, out: &mut [f64]) {
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    out[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Design matrix of the odd-sized Fourier basis 1, sin(2πt), cos(2πt),
/// sin(4πt), cos(4πt), ... evaluated at the given points (period 1).
pub fn fourier_design(points: &[f64], n_basis: usize) -> Result<DMatrix<f64>> {
    if n_basis == 0 || n_basis.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "Fourier basis size must be odd and positive, got {n_basis}"
        )));
    }
    let rows = points.len();
    let mut design = DMatrix::zeros(rows, n_basis);
    for (r, &t) in points.iter().enumerate() {
        design[(r, 0)] = 1.0;
        for p in 1..=(n_basis - 1) / 2 {
            let angle = 2.0 * PI * p as f64 * t;
            design[(r, 2 * p - 1)] = angle.sin();
            design[(r, 2 * p)] = angle.cos();
        }
    }
    Ok(design)
}
