//! Exact solutions used as references (superposed relaxing stable laws for
//! the homogeneous problem, a Cauchy-based family for the kinetic problem)
//! and the error norms against them.

use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64;

use crate::error::{check_len, LfpError, Result};
use crate::fractional_weights::VelocityGrid;
use crate::integrators::{DistributionXV, PhaseGrid};
use crate::stable_density::{AlphaParam, DensityEvaluator};

/// Mixture of stable laws relaxing towards `μ_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tc1Params {
    pub weights: Vec<f64>,
    pub centers: Vec<f64>,
    pub alpha: AlphaParam,
}

impl Tc1Params {
    /// Weights `(3/4, 1/4)` at centres `(2, −6)`.
    pub fn standard(alpha: AlphaParam) -> Self {
        Self { weights: vec![0.75, 0.25], centers: vec![2.0, -6.0], alpha }
    }

    pub fn new(weights: Vec<f64>, centers: Vec<f64>, alpha: AlphaParam) -> Result<Self> {
        check_len(weights.len(), centers.len())?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LfpError::Precondition(format!("mixture weights must sum to 1, got {total}")));
        }
        Ok(Self { weights, centers, alpha })
    }
}

/// `f(t, v) = Σ θ_i σ⁻¹ μ_α((v − w_i e^{−(t+1)}) / σ)`,
/// `σ = (1 − e^{−(t+1)α})^{1/α}`.
pub fn exact_homogeneous(p: &Tc1Params, t: f64, v: f64) -> Result<f64> {
    HomogeneousReference::new(p).eval(t, v)
}

/// Evaluator for [`exact_homogeneous`] sharing one density evaluator.
#[derive(Debug, Clone)]
pub struct HomogeneousReference<'a> {
    params: &'a Tc1Params,
    density: DensityEvaluator,
}

impl<'a> HomogeneousReference<'a> {
    pub fn new(params: &'a Tc1Params) -> Self {
        Self { params, density: DensityEvaluator::new(params.alpha) }
    }

    pub fn eval(&self, t: f64, v: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(LfpError::Domain(format!("reference time must be nonnegative, got {t}")));
        }
        let a = self.params.alpha.value();
        let decay = (-(t + 1.0)).exp();
        let sigma = (1.0 - (-(t + 1.0) * a).exp()).powf(1.0 / a);
        let mut total = 0.0;
        for (theta, w) in self.params.weights.iter().zip(&self.params.centers) {
            total += theta * self.density.eval((v - w * decay) / sigma)? / sigma;
        }
        Ok(total)
    }

    pub fn sample(&self, t: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
        grid.velocities().iter().map(|&v| self.eval(t, v)).collect()
    }
}

/// Time and space offsets and initial drift of the kinetic reference family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tc3Params {
    pub t0: f64,
    pub x0: f64,
    pub v0: f64,
}

impl Default for Tc3Params {
    fn default() -> Self {
        Self { t0: 0.5, x0: 0.0, v0: 1.0 }
    }
}

fn tau(t: f64) -> f64 {
    -(-t).exp_m1()
}

/// Piecewise exponent
/// `g = ξτ + η` for `ξ ≥ 0`, `ξ(τ − 2) + η − 2 ln(1 − ξ)` for
/// `−τ/(1−τ) ≤ ξ < 0`, `−ξτ − η` below, with `τ = 1 − e^{−t}`, `η = t − τ`.
pub fn g_exponent(t: f64, xi: f64) -> f64 {
    let ta = tau(t);
    let eta = t - ta;
    let a = t.exp_m1();
    if xi >= 0.0 {
        xi * ta + eta
    } else if xi >= -a {
        xi * (ta - 2.0) + eta - 2.0 * (-xi).ln_1p()
    } else {
        -xi * ta - eta
    }
}

/// `(1/π) ∫ e^{−g(t,ξ)} cos(ξ w + y) dξ` in closed form, branch by branch.
pub fn kinetic_oscillatory_part(t: f64, w: f64, y: f64) -> f64 {
    let ta = tau(t);
    let eta = t - ta;
    let a = t.exp_m1();
    let iw = Complex64::new(0.0, w);
    let right = (-eta).exp() / (ta - iw);
    let left = (eta - a * ta).exp() * (-a * iw).exp() / (ta + iw);
    let c = Complex64::new(2.0 - ta, w);
    let antiderivative = |xi: f64| {
        let one = 1.0 - xi;
        (c * xi - eta).exp() * (one * one / c + 2.0 * one / (c * c) + 2.0 / (c * c * c))
    };
    let middle = antiderivative(0.0) - antiderivative(-a);
    let total = right + left + middle;
    FRAC_1_PI * (Complex64::new(y.cos(), y.sin()) * total).re
}

/// Kinetic reference at simulation time `t` (absolute time `t + t0`) and
/// position `x` (shifted by `x0`).
pub fn exact_kinetic(p: &Tc3Params, t: f64, x: f64, v: f64) -> Result<f64> {
    let s = t + p.t0;
    if !(s > 0.0) {
        return Err(LfpError::Domain(format!("kinetic reference needs t + t0 > 0, got {s}")));
    }
    let ta = tau(s);
    let w = v - p.v0 * (-s).exp();
    let y = x + p.x0 - p.v0 * ta;
    let cauchy = ta * FRAC_1_PI / (ta * ta + w * w);
    Ok(cauchy + kinetic_oscillatory_part(s, w, y))
}

/// Kinetic reference sampled on a phase grid.
pub fn sample_kinetic(p: &Tc3Params, t: f64, pg: &PhaseGrid) -> Result<DistributionXV> {
    let vg = pg.vgrid();
    let mut out = nalgebra::DMatrix::zeros(pg.nx(), vg.len());
    for j in 0..vg.len() {
        for i in 0..pg.nx() {
            out[(i, j)] = exact_kinetic(p, t, pg.x(i), vg.velocity(j))?;
        }
    }
    Ok(DistributionXV::new(out))
}

/// Maximum and `ℓ²(M⁻¹)` norms of a discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l2mu: f64,
}

impl ErrorNorms {
    /// Componentwise maximum, for sup-in-time accumulation.
    pub fn max(self, other: Self) -> Self {
        Self { linf: self.linf.max(other.linf), l2mu: self.l2mu.max(other.l2mu) }
    }
}

/// Errors of velocity profiles: `max |Δ|` and `sqrt(Σ Δ_j² h / M_j)`.
pub fn error_norms(fnum: &[f64], fref: &[f64], m: &[f64], h: f64) -> Result<ErrorNorms> {
    check_len(fref.len(), fnum.len())?;
    check_len(m.len(), fnum.len())?;
    let mut out = ErrorNorms::default();
    let mut sq = 0.0;
    for ((a, b), mj) in fnum.iter().zip(fref).zip(m) {
        let d = a - b;
        out.linf = out.linf.max(d.abs());
        sq += d * d / mj;
    }
    out.l2mu = (sq * h).sqrt();
    Ok(out)
}

/// Errors of phase-space samples, with the `ℓ²_{Δx,Δv}(M⁻¹)` norm.
pub fn error_norms_xv(fnum: &DistributionXV, fref: &DistributionXV, pg: &PhaseGrid, m: &[f64]) -> Result<ErrorNorms> {
    check_len(fref.values().len(), fnum.values().len())?;
    check_len(m.len(), fnum.values().ncols())?;
    let d = fnum.values() - fref.values();
    let mut sq = 0.0;
    for (j, mj) in m.iter().enumerate() {
        sq += d.column(j).norm_squared() / mj;
    }
    Ok(ErrorNorms { linf: d.amax(), l2mu: (sq * pg.dx() * pg.vgrid().h()).sqrt() })
}
