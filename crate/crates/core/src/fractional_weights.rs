//! Quadrature weights of the discrete fractional Laplacian, its full-line
//! application, and the truncated-domain matrix with far-field corrections.

use nalgebra::DMatrix;

use crate::error::{LfpError, Result};
use crate::quadrature::gauss_legendre;
use crate::stable_density::AlphaParam;

/// Dense operator on the `2J+1` velocity nodes; row/column `0` is `j = −J`.
pub type OperatorMatrix = DMatrix<f64>;

/// From this index on the weights come from their integral form, which avoids
/// the cubic cancellation of the closed form.
const INTEGRAL_FORM_FROM: usize = 16;
const GL_POINTS: usize = 24;

/// Uniform symmetric velocity mesh `v_j = j h`, `j = −J..J`, with the
/// integral truncation index `K` (kernel cut at `K h`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    h: f64,
    j_max: usize,
    k_max: usize,
}

impl VelocityGrid {
    /// Builds a grid; `k_max` is rounded up to an odd integer `≥ 2J+1` and
    /// defaults to `10J+1`.
    pub fn new(h: f64, j_max: usize, k_max: Option<usize>) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(LfpError::Precondition(format!("velocity step must be positive, got {h}")));
        }
        if j_max == 0 {
            return Err(LfpError::Precondition("velocity grid needs J ≥ 1".into()));
        }
        let mut k = k_max.unwrap_or(10 * j_max + 1).max(2 * j_max + 1);
        if k % 2 == 0 {
            k += 1;
        }
        Ok(Self { h, j_max, k_max: k })
    }

    /// Grid covering `[−L, L]` with `J = round(L/h)`.
    pub fn from_half_width(half_width: f64, h: f64, k_max: Option<usize>) -> Result<Self> {
        let j = (half_width / h).round();
        if !(j >= 1.0) {
            return Err(LfpError::Precondition(format!("half-width {half_width} too small for step {h}")));
        }
        Self::new(h, j as usize, k_max)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Domain half-width `L = J h`.
    pub fn half_width(&self) -> f64 {
        self.j_max as f64 * self.h
    }

    /// Number of nodes `2J+1`.
    pub fn len(&self) -> usize {
        2 * self.j_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage position of node `j`.
    pub fn index(&self, j: i64) -> usize {
        (j + self.j_max as i64) as usize
    }

    pub fn velocity(&self, pos: usize) -> f64 {
        (pos as f64 - self.j_max as f64) * self.h
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.velocity(p)).collect()
    }
}

/// Weights `β_k` for `k = 1..K`, plus the boundary value used at `|k| = K`
/// on a truncated domain.
#[derive(Debug, Clone)]
pub struct WeightTable {
    alpha: AlphaParam,
    h: f64,
    beta: Vec<f64>,
    beta_boundary: f64,
}

impl WeightTable {
    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k_max(&self) -> usize {
        self.beta.len()
    }

    /// Interior weight `β_k`, symmetric in `k`; `β_0` and `|k| > K` are 0.
    pub fn beta(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        if k == 0 || k > self.beta.len() {
            0.0
        } else {
            self.beta[k - 1]
        }
    }

    /// Weight used on a truncated domain: the boundary value at `|k| = K`.
    pub fn beta_truncated(&self, k: i64) -> f64 {
        if k.unsigned_abs() as usize == self.beta.len() {
            self.beta_boundary
        } else {
            self.beta(k)
        }
    }

    pub fn beta_boundary(&self) -> f64 {
        self.beta_boundary
    }

    /// `β_k |hk|^{1+α}`, which does not depend on `h`.
    pub fn scaled(&self, k: i64) -> f64 {
        self.beta(k) * (self.h * k.unsigned_abs() as f64).powf(1.0 + self.alpha.value())
    }

    pub fn interior(&self) -> &[f64] {
        &self.beta
    }
}

/// `φ_α(t)`, the second antiderivative of `t^{−α}` up to sign and scaling.
pub fn phi_alpha(alpha: AlphaParam, t: f64) -> Result<f64> {
    check_phi_args(alpha, t)?;
    Ok(phi(alpha.value(), t))
}

fn check_phi_args(alpha: AlphaParam, t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(LfpError::Domain(format!("φ_α needs t > 0, got {t}")));
    }
    if alpha.is_gaussian() {
        return Err(LfpError::Domain("φ_α is singular at α = 2".into()));
    }
    Ok(())
}

fn phi(a: f64, t: f64) -> f64 {
    if a == 1.0 {
        t - t * t.ln()
    } else {
        t.powf(2.0 - a) / ((2.0 - a) * (a - 1.0) * a)
    }
}

fn dphi(a: f64, t: f64) -> f64 {
    if a == 1.0 {
        -t.ln()
    } else {
        t.powf(1.0 - a) / ((a - 1.0) * a)
    }
}

fn d2phi(a: f64, t: f64) -> f64 {
    -t.powf(-a) / a
}

/// Dimensionless bracket of `β_k` from the closed `φ_α` stencils.
fn unit_weight_closed(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    if k == 1 {
        1.0 / (2.0 - a) - d2phi(a, 1.0) - 0.5 * (dphi(a, 3.0) + 3.0 * dphi(a, 1.0)) + phi(a, 3.0) - phi(a, 1.0)
    } else if k % 2 == 0 {
        2.0 * (dphi(a, kf + 1.0) + dphi(a, kf - 1.0) - phi(a, kf + 1.0) + phi(a, kf - 1.0))
    } else {
        -0.5 * (dphi(a, kf + 2.0) + 6.0 * dphi(a, kf) + dphi(a, kf - 2.0)) + phi(a, kf + 2.0) - phi(a, kf - 2.0)
    }
}

fn unit_boundary_closed(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    0.5 * (2.0 * d2phi(a, kf) + 2.0 * phi(a, kf) - 2.0 * phi(a, kf - 2.0) - dphi(a, kf - 2.0) - 3.0 * dphi(a, kf))
}

/// Integral forms of the same brackets: the stencils are exact integrals of
/// quadratic Lagrange basis functions against `s^{−1−α}`.
struct IntegralForms {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl IntegralForms {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(GL_POINTS);
        Self { nodes, weights }
    }

    /// `∫_lo^hi p(t) (k+t)^{−1−α} dt`.
    fn integrate(&self, a: f64, k: f64, lo: f64, hi: f64, p: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = c + r * x;
            s += w * p(t) * (k + t).powf(-1.0 - a);
        }
        s * r
    }

    fn interior(&self, a: f64, k: usize) -> f64 {
        let kf = k as f64;
        if k % 2 == 0 {
            self.integrate(a, kf, -1.0, 1.0, |t| 1.0 - t * t)
        } else {
            0.5 * (self.integrate(a, kf, -2.0, 0.0, |t| (t + 1.0) * (t + 2.0))
                + self.integrate(a, kf, 0.0, 2.0, |t| (t - 1.0) * (t - 2.0)))
        }
    }

    fn boundary(&self, a: f64, k: usize) -> f64 {
        0.5 * self.integrate(a, k as f64, -2.0, 0.0, |t| (t + 1.0) * (t + 2.0))
    }
}

/// Builds `β_k^h` for `k = 1..K` (`K` odd, `≥ 3`) and the boundary value.
pub fn build_weights(alpha: AlphaParam, h: f64, k_max: usize) -> Result<WeightTable> {
    if alpha.is_gaussian() {
        return Err(LfpError::Domain("fractional weights need α < 2".into()));
    }
    if k_max < 3 || k_max % 2 == 0 {
        return Err(LfpError::Precondition(format!("K must be odd and at least 3, got {k_max}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(LfpError::Precondition(format!("velocity step must be positive, got {h}")));
    }
    let a = alpha.value();
    let scale = alpha.c1() / h.powf(1.0 + a);
    let forms = IntegralForms::new();
    let beta = (1..=k_max)
        .map(|k| {
            let unit = if k < INTEGRAL_FORM_FROM { unit_weight_closed(a, k) } else { forms.interior(a, k) };
            scale * unit
        })
        .collect();
    let unit_boundary = if k_max < INTEGRAL_FORM_FROM {
        unit_boundary_closed(a, k_max)
    } else {
        forms.boundary(a, k_max)
    };
    Ok(WeightTable { alpha, h, beta, beta_boundary: scale * unit_boundary })
}

/// `(Λf)_j = Σ_{k=1..K} β_k (f_{j+k} + f_{j−k} − 2 f_j) h`, with `f` extended
/// by zero outside its index range.
pub fn apply_lambda_fullline(weights: &WeightTable, f: &[f64]) -> Vec<f64> {
    let n = f.len() as i64;
    let h = weights.h();
    let total: f64 = weights.interior().iter().sum();
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for (k, b) in (1..).zip(weights.interior()) {
                let up = if j + k < n { f[(j + k) as usize] } else { 0.0 };
                let down = if j - k >= 0 { f[(j - k) as usize] } else { 0.0 };
                acc += b * (up + down);
            }
            (acc - 2.0 * total * f[j as usize]) * h
        })
        .collect()
}

/// Gauss hypergeometric series `₂F₁(a, b; c; z)` for `|z| ≤ 0.75`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() <= 0.75) {
        return Err(LfpError::Domain(format!("₂F₁ series restricted to |z| ≤ 0.75, got {z}")));
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(LfpError::Domain(format!("₂F₁ undefined for c = {c}")));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..10_000 {
        let nf = f64::from(n);
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() && n > 2 {
            return Ok(sum);
        }
        if term == 0.0 {
            return Ok(sum);
        }
    }
    Err(LfpError::Domain(format!("₂F₁({a}, {b}; {c}; {z}) series did not converge")))
}

/// Truncated-domain discrete fractional Laplacian
/// `−(2C/(α(Kh)^α) + Σ_{|k|≤K} β_k h) I + P + Q` on `j = −J..J`.
///
/// Values beyond `±L` are modelled as `f_{±J} (J/|l|)^γ`; `P` folds the
/// quadrature nodes past the boundary onto columns `±J` and `Q` adds the
/// kernel mass past `K h` in closed form.
pub fn assemble_lambda_truncated(alpha: AlphaParam, grid: &VelocityGrid, gamma_decay: f64) -> Result<OperatorMatrix> {
    if !(gamma_decay.is_finite() && gamma_decay > 0.0) {
        return Err(LfpError::Precondition(format!("far-field decay exponent must be positive, got {gamma_decay}")));
    }
    let weights = build_weights(alpha, grid.h(), grid.k_max())?;
    Ok(assemble_lambda_with(&weights, grid, gamma_decay))
}

pub(crate) fn assemble_lambda_with(weights: &WeightTable, grid: &VelocityGrid, gamma_decay: f64) -> OperatorMatrix {
    let a = weights.alpha().value();
    let c1 = weights.alpha().c1();
    let h = grid.h();
    let jm = grid.j_max() as i64;
    let km = grid.k_max() as i64;
    let n = grid.len();
    let kh = km as f64 * h;

    let interior_sum: f64 = weights.interior()[..weights.k_max() - 1].iter().sum();
    let diag = 2.0 * c1 / (a * kh.powf(a)) + 2.0 * h * (interior_sum + weights.beta_boundary());

    let q_pref = c1 * (jm as f64 * h).powf(gamma_decay) / (kh.powf(a + gamma_decay) * (a + gamma_decay));
    let fold: Vec<f64> = (0..=km + jm).map(|l| if l < jm { 0.0 } else { (jm as f64 / l as f64).powf(gamma_decay) }).collect();

    let mut m = OperatorMatrix::zeros(n, n);
    for j in -jm..=jm {
        let row = grid.index(j);
        for k in (-jm + 1)..jm {
            m[(row, grid.index(k))] = weights.beta_truncated(j - k) * h;
        }
        let mut right = 0.0;
        for l in jm..=(j + km) {
            right += weights.beta_truncated(j - l) * fold[l as usize];
        }
        let mut left = 0.0;
        for l in (j - km)..=-jm {
            left += weights.beta_truncated(j - l) * fold[l.unsigned_abs() as usize];
        }
        let z = j as f64 / km as f64;
        let q_right = q_pref * gauss_2f1(gamma_decay, a + gamma_decay, 1.0 + a + gamma_decay, -z).expect("|j/K| ≤ 1/2");
        let q_left = q_pref * gauss_2f1(gamma_decay, a + gamma_decay, 1.0 + a + gamma_decay, z).expect("|j/K| ≤ 1/2");
        m[(row, grid.index(jm))] += right * h + q_right;
        m[(row, grid.index(-jm))] += left * h + q_left;
        m[(row, row)] -= diag;
    }
    m
}
