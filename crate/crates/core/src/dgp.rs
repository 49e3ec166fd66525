//! Synthetic functional time series and the mean-function families used by
//! the simulation studies.
//!
//! Errors are built in a B-spline coefficient space: innovations are
//! independent Gaussian coefficient vectors with Var(N_i) = sigma_i^2, and a
//! random operator Psi (scaled to unit spectral norm) couples consecutive
//! innovations into functional MA(1) or AR(1) dynamics. Everything is a pure
//! function of its inputs and an [`RngSpec`], so replications can run in
//! parallel and still reproduce bit for bit.

use crate::basis::BSplineBasis;
use crate::curves::{Curve, CurveSet, Grid};
use crate::error::{Error, Result};
use crate::rng::RngSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Sub-stream used for innovations preceding the observed stretch
/// (the extra MA innovation and the AR burn-in).
const PRESAMPLE_SALT: u64 = 0x5052_4553_414D_504C;

/// Closed-form mean families. `DoublePlateau` and `SinglePlateau` are
/// piecewise linear with plateaus of height 0.1 and breakpoints on the
/// canonical grid, so their sup-norm is exactly 0.1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFamily {
    Zero,
    /// a * t * (1 - t).
    Parabola {
        a: f64,
    },
    /// 0.1 * (1 - t(1-t))^k normalized by its integral over [0, 1].
    NormalizedPower {
        k: u32,
    },
    /// Ramps up to +0.1, down through zero to -0.1 and back; plateaus on
    /// [0.2, 0.3] and [0.7, 0.8].
    DoublePlateau,
    /// Single plateau at +0.1 on [0.25, 0.75] with linear ramps.
    SinglePlateau,
}

/// A mean family together with a multiplicative amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSpec {
    pub family: MeanFamily,
    pub amplitude: f64,
}

impl MeanSpec {
    pub fn new(family: MeanFamily, amplitude: f64) -> Self {
        Self { family, amplitude }
    }

    pub fn zero() -> Self {
        Self::new(MeanFamily::Zero, 1.0)
    }
}

/// Evaluate a mean specification pointwise on a grid.
pub fn eval_mean(spec: &MeanSpec, grid: &Grid) -> Result<Curve> {
    if let MeanFamily::NormalizedPower { k } = spec.family {
        if k < 1 {
            return Err(Error::InvalidInput(
                "NormalizedPower requires k >= 1".into(),
            ));
        }
    }
    let values = grid
        .points()
        .iter()
        .map(|&t| spec.amplitude * family_value(&spec.family, t))
        .collect();
    Curve::new(grid.clone(), values)
}

fn family_value(family: &MeanFamily, t: f64) -> f64 {
    match *family {
        MeanFamily::Zero => 0.0,
        MeanFamily::Parabola { a } => a * t * (1.0 - t),
        MeanFamily::NormalizedPower { k } => {
            0.1 * (1.0 - t * (1.0 - t)).powi(k as i32) / normalized_power_integral(k)
        }
        MeanFamily::DoublePlateau => {
            if t <= 0.2 {
                0.5 * t
            } else if t <= 0.3 {
                0.1
            } else if t <= 0.7 {
                -0.5 * t + 0.25
            } else if t <= 0.8 {
                -0.1
            } else {
                0.5 * t - 0.5
            }
        }
        MeanFamily::SinglePlateau => {
            if t <= 0.25 {
                0.4 * t
            } else if t <= 0.75 {
                0.1
            } else {
                -0.4 * t + 0.4
            }
        }
    }
}

/// Integral of (1 - t(1-t))^k over [0, 1], by binomial expansion:
/// sum_j (-1)^j C(k,j) / (C(2j,j) (2j+1)).
pub fn normalized_power_integral(k: u32) -> f64 {
    let mut total = 0.0;
    for j in 0..=k {
        let term = binomial(k as u128, j as u128) as f64
            / (binomial(2 * j as u128, j as u128) as f64 * (2 * j + 1) as f64);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Kind of functional time series driving the errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtsKind {
    /// eta_i = eps_i + kappa Psi eps_{i-1}.
    Ma1,
    /// eta_i = kappa Psi eta_{i-1} + eps_i, started at zero and burned in.
    Ar1,
}

/// Full description of an error process in coefficient space.
#[derive(Debug, Clone)]
pub struct FtsConfig {
    pub kind: FtsKind,
    pub dimension: usize,
    pub kappa: f64,
    pub sigmas: Vec<f64>,
    pub psi: DMatrix<f64>,
    /// Discarded leading steps for the AR recursion.
    pub burn_in: usize,
}

impl FtsConfig {
    /// Standard configuration: sigma_i = 1/i, burn-in of 100 AR steps.
    pub fn standard(
        kind: FtsKind,
        dimension: usize,
        kappa: f64,
        psi: DMatrix<f64>,
    ) -> Result<Self> {
        let cfg = Self {
            kind,
            dimension,
            kappa,
            sigmas: standard_sigmas(dimension),
            psi,
            burn_in: 100,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::InvalidInput(format!(
                "kappa must lie in [0, 1), got {}",
                self.kappa
            )));
        }
        if self.sigmas.len() != self.dimension {
            return Err(Error::InvalidInput(format!(
                "{} sigmas for dimension {}",
                self.sigmas.len(),
                self.dimension
            )));
        }
        if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidInput(
                "sigmas must be finite and non-negative".into(),
            ));
        }
        if self.psi.nrows() != self.dimension || self.psi.ncols() != self.dimension {
            return Err(Error::InvalidInput(
                "Psi must be dimension x dimension".into(),
            ));
        }
        let norm = spectral_norm(&self.psi);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "Psi must have unit spectral norm, got {norm}"
            )));
        }
        Ok(())
    }
}

/// sigma_i = 1/i for i = 1..=dimension.
pub fn standard_sigmas(dimension: usize) -> Vec<f64> {
    (1..=dimension).map(|i| 1.0 / i as f64).collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, s| acc.max(*s))
}

/// Draw the coupling operator: independent N(0, (sigma_i sigma_j)^2)
/// entries, then the whole matrix scaled to unit spectral norm.
pub fn make_psi(dimension: usize, sigmas: &[f64], rng: &RngSpec) -> Result<DMatrix<f64>> {
    if dimension == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if sigmas.len() != dimension {
        return Err(Error::InvalidInput(format!(
            "{} sigmas for dimension {dimension}",
            sigmas.len()
        )));
    }
    let mut gen = rng.rng();
    let mut psi = DMatrix::zeros(dimension, dimension);
    for i in 0..dimension {
        for j in 0..dimension {
            let z: f64 = gen.sample(StandardNormal);
            psi[(i, j)] = z * sigmas[i] * sigmas[j];
        }
    }
    let norm = spectral_norm(&psi);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Internal("degenerate Psi draw".into()));
    }
    psi /= norm;
    Ok(psi)
}

/// Draw `n` innovation coefficient vectors in order.
fn draw_innovations(n: usize, sigmas: &[f64], rng: &RngSpec) -> Vec<DVector<f64>> {
    let mut gen = rng.rng();
    (0..n)
        .map(|_| {
            DVector::from_iterator(
                sigmas.len(),
                sigmas.iter().map(|&s| {
                    let z: f64 = gen.sample(StandardNormal);
                    s * z
                }),
            )
        })
        .collect()
}

/// Centered i.i.d. noise curves eps_j = sum_i N_{i,j} nu_i.
pub fn gen_noise(
    n: usize,
    basis: &BSplineBasis,
    sigmas: &[f64],
    rng: &RngSpec,
) -> Result<CurveSet> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one curve".into()));
    }
    if sigmas.len() != basis.dimension() {
        return Err(Error::InvalidInput(format!(
            "{} sigmas for basis dimension {}",
            sigmas.len(),
            basis.dimension()
        )));
    }
    let innovations = draw_innovations(n, sigmas, rng);
    let g = basis.grid().len();
    let mut values = vec![0.0; n * g];
    for (j, coeffs) in innovations.iter().enumerate() {
        basis.combine_into(coeffs.as_slice(), &mut values[j * g..(j + 1) * g]);
    }
    CurveSet::new(basis.grid().clone(), n, values)
}

/// Error coefficient vectors eta_1..eta_n of the configured process.
///
/// The n innovations of the observed stretch come first from the main
/// stream; the pre-sample innovations (one MA lag, or the AR burn-in) come
/// from a dedicated child stream. With kappa = 0 this makes the output
/// coincide with plain noise drawn from the same stream.
pub fn coefficient_series(n: usize, cfg: &FtsConfig, rng: &RngSpec) -> Result<Vec<DVector<f64>>> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one observation".into()));
    }
    cfg.validate()?;
    let main = draw_innovations(n, &cfg.sigmas, rng);
    let theta = &cfg.psi * cfg.kappa;
    match cfg.kind {
        FtsKind::Ma1 => {
            let pre = draw_innovations(1, &cfg.sigmas, &rng.child(PRESAMPLE_SALT));
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let prev = if i == 0 { &pre[0] } else { &main[i - 1] };
                out.push(&main[i] + &theta * prev);
            }
            Ok(out)
        }
        FtsKind::Ar1 => {
            let pre = draw_innovations(cfg.burn_in.max(1), &cfg.sigmas, &rng.child(PRESAMPLE_SALT));
            let mut state = DVector::zeros(cfg.dimension);
            for eps in pre.iter().take(cfg.burn_in) {
                state = &theta * &state + eps;
            }
            let mut out = Vec::with_capacity(n);
            for eps in &main {
                state = &theta * &state + eps;
                out.push(state.clone());
            }
            Ok(out)
        }
    }
}

/// Generate `n` observations row_i = means[i] + eta_i on the basis grid.
pub fn gen_series(
    n: usize,
    cfg: &FtsConfig,
    basis: &BSplineBasis,
    means: &[Curve],
    rng: &RngSpec,
) -> Result<CurveSet> {
    if means.len() != n {
        return Err(Error::InvalidInput(format!(
            "mean schedule has {} curves for n = {n}",
            means.len()
        )));
    }
    if basis.dimension() != cfg.dimension {
        return Err(Error::InvalidInput(format!(
            "basis dimension {} does not match process dimension {}",
            basis.dimension(),
            cfg.dimension
        )));
    }
    let grid = basis.grid();
    if means.iter().any(|m| m.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let etas = coefficient_series(n, cfg, rng)?;
    let g = grid.len();
    let mut values = vec![0.0; n * g];
    for (i, eta) in etas.iter().enumerate() {
        let row = &mut values[i * g..(i + 1) * g];
        basis.combine_into(eta.as_slice(), row);
        for (v, m) in row.iter_mut().zip(means[i].values()) {
            *v += m;
        }
    }
    CurveSet::new(grid.clone(), n, values)
}

/// Constant mean schedule: the same curve for every observation.
pub fn constant_schedule(mean: &Curve, n: usize) -> Vec<Curve> {
    vec![mean.clone(); n]
}

/// Mean schedule with a single shift: `before` for rows 1..=split,
/// `after` for the remaining rows.
pub fn step_schedule(before: &Curve, after: &Curve, split: usize, n: usize) -> Vec<Curve> {
    (0..n)
        .map(|i| {
            if i < split {
                before.clone()
            } else {
                after.clone()
            }
        })
        .collect()
}
