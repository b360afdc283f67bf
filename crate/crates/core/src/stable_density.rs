//! Symmetric α-stable equilibrium density
//! `μ_α(v) = (1/π) ∫₀^∞ cos(vξ) exp(−ξ^α/α) dξ` and its grid samples.

use std::f64::consts::{FRAC_1_PI, PI};

use crate::error::{LfpError, Result};
use crate::fractional_weights::VelocityGrid;
use crate::quadrature::{integrate_adaptive, pairwise_sum};

/// Default absolute tolerance for density evaluation.
pub const DEFAULT_DENSITY_TOL: f64 = 1e-10;

/// `ln(1e16)`: the characteristic function is below 1e-16 past `ξ^α/α` of this size.
const LOG_CUTOFF: f64 = 36.841_361_487_904_73;

/// Stability index `α ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 2.0 {
            Ok(Self(alpha))
        } else {
            Err(LfpError::Domain(format!("stability index must lie in (0, 2], got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_gaussian(self) -> bool {
        self.0 == 2.0
    }

    pub fn is_cauchy(self) -> bool {
        self.0 == 1.0
    }

    /// Normalising constant `C_{1,α}` of the singular-integral fractional Laplacian.
    pub fn c1(self) -> f64 {
        let a = self.0;
        if a == 2.0 {
            return 0.0;
        }
        2f64.powf(a) * libm::tgamma(0.5 * (a + 1.0)) / (PI.sqrt() * libm::tgamma(-0.5 * a).abs())
    }

    /// Default far-field decay exponent `1 + α`.
    pub fn default_decay(self) -> f64 {
        1.0 + self.0
    }
}

/// `μ_α(v)` with the default tolerance.
pub fn eval_density(alpha: AlphaParam, v: f64) -> Result<f64> {
    DensityEvaluator::new(alpha).eval(v)
}

/// `μ_α(0) = α^{1/α−1} Γ(1/α) / π`.
pub fn density_at_zero(alpha: AlphaParam) -> f64 {
    let a = alpha.value();
    a.powf(1.0 / a - 1.0) * libm::tgamma(1.0 / a) * FRAC_1_PI
}

/// Density evaluator with a configurable absolute tolerance.
#[derive(Debug, Clone, Copy)]
pub struct DensityEvaluator {
    alpha: AlphaParam,
    abs_tol: f64,
}

impl DensityEvaluator {
    pub fn new(alpha: AlphaParam) -> Self {
        Self { alpha, abs_tol: DEFAULT_DENSITY_TOL }
    }

    pub fn with_tolerance(alpha: AlphaParam, abs_tol: f64) -> Self {
        Self { alpha, abs_tol }
    }

    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(LfpError::Domain(format!("density argument must be finite, got {v}")));
        }
        let x = v.abs();
        let a = self.alpha.value();
        if a == 1.0 {
            return Ok(FRAC_1_PI / (1.0 + x * x));
        }
        if a == 2.0 {
            return Ok((-0.5 * x * x).exp() / (2.0 * PI).sqrt());
        }
        if x == 0.0 {
            return Ok(density_at_zero(self.alpha));
        }
        if x >= 1.0 {
            if let Some(value) = tail_series(a, x, 0) {
                return Ok(value);
            }
        }
        self.eval_quadrature(v)
    }

    /// Direct oscillatory quadrature of the Fourier integral, bypassing
    /// closed forms and series.
    pub fn eval_quadrature(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(LfpError::Domain(format!("density argument must be finite, got {v}")));
        }
        let a = self.alpha.value();
        let x = v.abs();
        let decay = move |xi: f64| (-xi.powf(a) / a).exp();
        let integrand = move |xi: f64| (x * xi).cos() * decay(xi);
        let xi_max = (a * LOG_CUTOFF).powf(1.0 / a);
        let tol = self.abs_tol * PI;
        let integral = if x * xi_max <= 10.0 {
            integrate_adaptive(&integrand, 0.0, xi_max, tol)?
        } else {
            let half = PI / x;
            let panels = ((x * xi_max / PI) + 0.5).ceil() as usize;
            let panel_tol = tol / (panels as f64 + 1.0);
            let mut parts = Vec::with_capacity(panels + 1);
            let mut lo = 0.0;
            for m in 0..=panels {
                let hi = ((m as f64 + 0.5) * half).min(xi_max);
                if hi <= lo {
                    break;
                }
                parts.push(integrate_adaptive(&integrand, lo, hi, panel_tol)?);
                lo = hi;
            }
            pairwise_sum(&parts)
        };
        Ok(integral * FRAC_1_PI)
    }
}

/// Large-|v| expansion
/// `(1/π) Σ_{n≥1} (−1)^{n+1} Γ(αn+1) sin(παn/2) / (αⁿ n!) · x^{−αn−1−p·…}`.
///
/// With `integrated = 0` this is the density; with `integrated = 1` each term
/// is integrated over `[x, ∞)`. Returns `None` if the terms do not decrease to
/// round-off before growing again, or if the sum suffers heavy cancellation.
fn tail_series(a: f64, x: f64, integrated: u8) -> Option<f64> {
    let ln_x = x.ln();
    let ln_a = a.ln();
    let mut sum = 0.0;
    let mut max_mag: f64 = 0.0;
    let mut prev_mag = f64::INFINITY;
    for n in 1..=400u32 {
        let nf = f64::from(n);
        let exponent = if integrated == 0 { a * nf + 1.0 } else { a * nf };
        let mut ln_mag = libm::lgamma(a * nf + 1.0) - nf * ln_a - libm::lgamma(nf + 1.0) - exponent * ln_x;
        if integrated == 1 {
            ln_mag -= (a * nf).ln();
        }
        let mag = ln_mag.exp();
        if mag > prev_mag && n > 2 {
            return None;
        }
        prev_mag = mag;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (0.5 * PI * a * nf).sin() * mag;
        sum += term;
        max_mag = max_mag.max(mag);
        if n > 1 && mag < 1e-17 * sum.abs() {
            return if max_mag <= 1e2 * sum.abs() && sum > 0.0 {
                Some(sum * FRAC_1_PI)
            } else {
                None
            };
        }
    }
    None
}

/// Samples `M_j = μ_α(v_j)` for `j = −J..J`.
pub fn sample_equilibrium(alpha: AlphaParam, grid: &VelocityGrid) -> Result<Vec<f64>> {
    sample_on_indices(alpha, grid.h(), -(grid.j_max() as i64), grid.j_max() as i64)
}

/// Samples `μ_α(j h)` for `j = lo..=hi`.
pub fn sample_on_indices(alpha: AlphaParam, h: f64, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let eval = DensityEvaluator::new(alpha);
    let half: Vec<f64> = (0..=lo.unsigned_abs().max(hi.unsigned_abs()))
        .map(|j| eval.eval(j as f64 * h))
        .collect::<Result<_>>()?;
    Ok((lo..=hi).map(|j| half[j.unsigned_abs() as usize]).collect())
}

/// Tail mass `∫_x^∞ μ_α(v) dv` for `x ≥ 0`.
pub fn tail_mass(alpha: AlphaParam, x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(LfpError::Domain(format!("tail mass needs a finite x ≥ 0, got {x}")));
    }
    let a = alpha.value();
    if a == 1.0 {
        return Ok(if x == 0.0 { 0.5 } else { (1.0 / x).atan() * FRAC_1_PI });
    }
    if a == 2.0 {
        return Ok(0.5 * libm::erfc(x / std::f64::consts::SQRT_2));
    }
    if x >= 1.0 {
        if let Some(value) = tail_series(a, x, 1) {
            return Ok(value);
        }
    }
    let xi_max = (a * LOG_CUTOFF).powf(1.0 / a);
    let integrand = move |xi: f64| (x * xi).sin() / xi * (-xi.powf(a) / a).exp();
    let head = integrate_adaptive(&integrand, 0.0, xi_max, DEFAULT_DENSITY_TOL)?;
    Ok(0.5 - head * FRAC_1_PI)
}

/// Continuous exterior-mass ratio `∫_L^∞ μ_α / μ_α(L)`.
pub fn exterior_mass_continuous(alpha: AlphaParam, l: f64) -> Result<f64> {
    let a = alpha.value();
    if a == 1.0 {
        return Ok((1.0 + l * l) * (1.0 / l).atan());
    }
    if a == 2.0 {
        return Ok((0.5 * PI).sqrt() * erfcx(l / std::f64::consts::SQRT_2));
    }
    Ok(tail_mass(alpha, l)? / eval_density(alpha, l)?)
}

/// Scaled complementary error function `exp(x²) erfc(x)` for `x ≥ 0`.
pub fn erfcx(x: f64) -> f64 {
    if x < 26.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..12 {
        term *= -(2.0 * f64::from(n) - 1.0) * inv;
        sum += term;
    }
    sum / (x * PI.sqrt())
}
