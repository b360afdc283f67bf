//! Discrete norms, seminorms, difference operators, the symmetric and skew
//! parts of the operator's quadratic form, the equilibrium projection, the
//! hypocoercivity energy and the functional-inequality probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, LfpError, Result};
use crate::fractional_weights::{build_weights, WeightTable};
use crate::integrators::{DistributionXV, PhaseGrid};
use crate::lfp_operator::{FullLineOperator, LfpOperator};
use crate::stable_density::sample_on_indices;

/// Strictly positive weights `γ_j` on a grid index range.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence(Vec<f64>);

impl WeightSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|&g| g > 0.0 && g.is_finite()) {
            Ok(Self(values))
        } else {
            Err(LfpError::Domain("weight sequence must be finite and strictly positive".into()))
        }
    }

    pub fn flat(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    /// `γ_j = 1 / M_j`.
    pub fn inverse_of(m: &[f64]) -> Result<Self> {
        Self::new(m.iter().map(|x| 1.0 / x).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coefficients `(a, b, c)` of the hypocoercivity energy, `c² < ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCoefficients {
    a: f64,
    b: f64,
    c: f64,
}

impl EnergyCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c * c < a * b) {
            return Err(LfpError::Precondition(format!("energy coefficients need a, b > 0 and c² < ab, got ({a}, {b}, {c})")));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for EnergyCoefficients {
    fn default() -> Self {
        Self { a: 1.0, b: 0.05, c: 0.1 }
    }
}

/// `sqrt(Σ f_j² γ_j h)`.
pub fn weighted_l2_norm(f: &[f64], gamma: &WeightSequence, h: f64) -> Result<f64> {
    Ok(weighted_inner(f, f, gamma, h)?.sqrt())
}

/// `Σ f_j g_j γ_j h`.
pub fn weighted_inner(f: &[f64], g: &[f64], gamma: &WeightSequence, h: f64) -> Result<f64> {
    check_len(gamma.len(), f.len())?;
    check_len(gamma.len(), g.len())?;
    Ok(f.iter().zip(g).zip(gamma.values()).map(|((a, b), w)| a * b * w).sum::<f64>() * h)
}

/// Discrete `Ḣ^s` seminorm with zero extension:
/// `sqrt(Σ_j Σ_{0<|k|≤k_max} (f_j − f_{j+k})² / |hk|^{1+2s} · γ_j h²)`.
pub fn frac_sobolev_seminorm(f: &[f64], s: f64, gamma: &WeightSequence, h: f64, k_max: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(LfpError::Domain(format!("fractional order must lie in (0, 1], got {s}")));
    }
    check_len(gamma.len(), f.len())?;
    let n = f.len() as i64;
    let at = |p: i64| if (0..n).contains(&p) { f[p as usize] } else { 0.0 };
    let kernel: Vec<f64> = (1..=k_max).map(|k| (h * k as f64).powf(-1.0 - 2.0 * s)).collect();
    let mut total = 0.0;
    for (p, w) in gamma.values().iter().enumerate() {
        let pi = p as i64;
        let mut row = 0.0;
        for (k, ker) in (1..).zip(&kernel) {
            let up = f[p] - at(pi + k);
            let down = f[p] - at(pi - k);
            row += (up * up + down * down) * ker;
        }
        total += row * w;
    }
    Ok((total * h * h).sqrt())
}

/// Finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    /// `(f_{j+1} − f_j)/h`
    Forward,
    /// `(f_{j+1} − f_{j−1})/(2h)`
    Centered,
    /// `(f_{j+2} + f_{j−2} − 2f_j)/(4h²)`
    SecondCentered,
}

/// Difference operator with zero extension outside the array.
pub fn diff(f: &[f64], mode: DiffMode, h: f64) -> Vec<f64> {
    let n = f.len() as i64;
    let at = |p: i64| if (0..n).contains(&p) { f[p as usize] } else { 0.0 };
    (0..n)
        .map(|p| match mode {
            DiffMode::Forward => (at(p + 1) - at(p)) / h,
            DiffMode::Centered => (at(p + 1) - at(p - 1)) / (2.0 * h),
            DiffMode::SecondCentered => (at(p + 2) + at(p - 2) - 2.0 * at(p)) / (4.0 * h * h),
        })
        .collect()
}

/// Checks that `m_ext` covers the window of `f` plus `k_max` on each side and
/// returns the window half-size.
fn window_of(f_len: usize, m_len: usize, k_max: usize) -> Result<usize> {
    if f_len % 2 == 0 {
        return Err(LfpError::Precondition("sequences must be centred (odd length)".into()));
    }
    let n = (f_len - 1) / 2;
    check_len(2 * (n + k_max) + 1, m_len)?;
    Ok(n)
}

/// Symmetric form
/// `S(f, g) = ½ Σ_j Σ_{0<|k|≤k_max} β_k (F_j − F_{j+k})(G_j − G_{j+k}) M_j h²`
/// with `F = f/M`, `G = g/M`, `f, g` centred on `−N..N` and zero outside, and
/// `m_ext` the equilibrium on `−N−k_max..N+k_max`.
pub fn sym_form(f: &[f64], g: &[f64], weights: &WeightTable, m_ext: &[f64], h: f64, k_max: usize) -> Result<f64> {
    check_len(f.len(), g.len())?;
    let n = window_of(f.len(), m_ext.len(), k_max)? as i64;
    let reach = n + k_max as i64;
    let ratio = |seq: &[f64], j: i64| if j.abs() <= n { seq[(j + n) as usize] / m_ext[(j + reach) as usize] } else { 0.0 };
    let mut total = 0.0;
    for j in -reach..=reach {
        let fj = ratio(f, j);
        let gj = ratio(g, j);
        let mj = m_ext[(j + reach) as usize];
        let mut row = 0.0;
        for k in 1..=k_max as i64 {
            let b = weights.beta(k);
            for jk in [j + k, j - k] {
                if jk.abs() <= reach {
                    row += b * (fj - ratio(f, jk)) * (gj - ratio(g, jk));
                }
            }
        }
        total += row * mj;
    }
    Ok(0.5 * total * h * h)
}

/// Skew form
/// `A(f, g) = −½ Σ_j Σ_k β_k (F_j G_{j+k} − G_j F_{j+k}) M_j h² − ½ Σ_j VM_{j+½}(F_{j+1} G_j − F_j G_{j+1})`
/// with `vm` on the half points `−N−½..N+½`.
pub fn skew_form(f: &[f64], g: &[f64], weights: &WeightTable, m_ext: &[f64], vm: &[f64], h: f64, k_max: usize) -> Result<f64> {
    check_len(f.len(), g.len())?;
    let n = window_of(f.len(), m_ext.len(), k_max)? as i64;
    check_len(f.len() + 1, vm.len())?;
    let reach = n + k_max as i64;
    let ratio = |seq: &[f64], j: i64| if j.abs() <= n { seq[(j + n) as usize] / m_ext[(j + reach) as usize] } else { 0.0 };
    let mut nonlocal = 0.0;
    for j in -n..=n {
        let fj = ratio(f, j);
        let gj = ratio(g, j);
        let mj = m_ext[(j + reach) as usize];
        let mut row = 0.0;
        for k in 1..=k_max as i64 {
            let b = weights.beta(k);
            for jk in [j + k, j - k] {
                row += b * (fj * ratio(g, jk) - gj * ratio(f, jk));
            }
        }
        nonlocal += row * mj;
    }
    let mut drift = 0.0;
    for j in (-n - 1)..=n {
        let v = vm[(j + n + 1) as usize];
        drift += v * (ratio(f, j + 1) * ratio(g, j) - ratio(f, j) * ratio(g, j + 1));
    }
    Ok(-0.5 * nonlocal * h * h - 0.5 * drift)
}

/// `Π f = M · (Σ f h) / (Σ M h)`.
pub fn project_equilibrium(f: &[f64], m: &[f64], _h: f64) -> Result<Vec<f64>> {
    check_len(m.len(), f.len())?;
    let ratio = f.iter().sum::<f64>() / m.iter().sum::<f64>();
    Ok(m.iter().map(|x| x * ratio).collect())
}

/// `H(f) = ‖f‖² + a‖D_x f‖² + b‖D_v f‖² + 2c⟨D_x f, D_v f⟩` in
/// `ℓ²_{Δx,Δv}(M⁻¹)`, with centred differences (periodic in `x`, zero
/// extension in `v`).
pub fn hypocoercivity_energy(f: &DistributionXV, coeffs: &EnergyCoefficients, pg: &PhaseGrid, m: &[f64]) -> Result<f64> {
    let parts = energy_parts(f, pg, m)?;
    Ok(parts.norm2 + coeffs.a * parts.dx2 + coeffs.b * parts.dv2 + 2.0 * coeffs.c * parts.cross)
}

/// Components of the hypocoercivity energy.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParts {
    pub norm2: f64,
    pub dx2: f64,
    pub dv2: f64,
    pub cross: f64,
}

pub fn energy_parts(f: &DistributionXV, pg: &PhaseGrid, m: &[f64]) -> Result<EnergyParts> {
    let nx = pg.nx();
    let nv = pg.vgrid().len();
    check_len(nv, m.len())?;
    check_len(nx, f.values().nrows())?;
    check_len(nv, f.values().ncols())?;
    let dx = pg.dx();
    let dv = pg.vgrid().h();
    let vals = f.values();
    let mut parts = EnergyParts { norm2: 0.0, dx2: 0.0, dv2: 0.0, cross: 0.0 };
    for j in 0..nv {
        let w = 1.0 / m[j];
        for i in 0..nx {
            let x = vals[(i, j)];
            let ddx = (vals[((i + 1) % nx, j)] - vals[((i + nx - 1) % nx, j)]) / (2.0 * dx);
            let up = if j + 1 < nv { vals[(i, j + 1)] } else { 0.0 };
            let down = if j > 0 { vals[(i, j - 1)] } else { 0.0 };
            let ddv = (up - down) / (2.0 * dv);
            parts.norm2 += x * x * w;
            parts.dx2 += ddx * ddx * w;
            parts.dv2 += ddv * ddv * w;
            parts.cross += ddx * ddv * w;
        }
    }
    let cell = dx * dv;
    parts.norm2 *= cell;
    parts.dx2 *= cell;
    parts.dv2 *= cell;
    parts.cross *= cell;
    Ok(parts)
}

/// Equilibrium extended past the truncated grid by fresh density samples,
/// with the weights needed to evaluate the symmetric form of `op`.
fn extended_form_data(op: &LfpOperator) -> Result<(WeightTable, Vec<f64>, usize)> {
    let grid = op.grid();
    let k = grid.k_max();
    let weights = build_weights(op.alpha(), grid.h(), k)?;
    let reach = (grid.j_max() + k) as i64;
    let m_ext = sample_on_indices(op.alpha(), grid.h(), -reach, reach)?;
    Ok((weights, m_ext, k))
}

/// Dissipation `S(f, f)` of a grid function: the symmetric form with zero
/// extension, or `−⟨Lf, f⟩_{M⁻¹}` for the Gaussian limit operator.
pub fn dissipation(f: &[f64], op: &LfpOperator) -> Result<f64> {
    check_len(op.grid().len(), f.len())?;
    if op.alpha().is_gaussian() {
        let lf = op.apply(f)?;
        let gamma = WeightSequence::inverse_of(op.equilibrium())?;
        return Ok(-weighted_inner(&lf, f, &gamma, op.grid().h())?);
    }
    let (weights, m_ext, k) = extended_form_data(op)?;
    sym_form(f, f, &weights, &m_ext, op.grid().h(), k)
}

/// Poincaré ratio `‖f − Πf‖²_{M⁻¹} / S(f, f)`; 0 when `f ∝ M`.
pub fn poincare_ratio(f: &[f64], op: &LfpOperator) -> Result<f64> {
    let m = op.equilibrium();
    let h = op.grid().h();
    let pf = project_equilibrium(f, m, h)?;
    let diff: Vec<f64> = f.iter().zip(&pf).map(|(a, b)| a - b).collect();
    let gamma = WeightSequence::inverse_of(m)?;
    let num = weighted_l2_norm(&diff, &gamma, h)?.powi(2);
    let scale = weighted_l2_norm(f, &gamma, h)?.powi(2);
    if num <= 1e-26 * scale {
        return Ok(0.0);
    }
    Ok(num / dissipation(f, op)?)
}

/// Interpolation ratio `(‖D⁺f‖² − ε|Df|²_{Ḣ^s}) / ‖f‖²_{H^s}` in flat norms,
/// with `‖f‖²_{H^s} = ‖f‖² + |f|²_{Ḣ^s}`.
pub fn interpolation_ratio(f: &[f64], s: f64, eps: f64, h: f64, k_max: usize) -> Result<f64> {
    let flat = WeightSequence::flat(f.len());
    let dplus = weighted_l2_norm(&diff(f, DiffMode::Forward, h), &flat, h)?.powi(2);
    let df = diff(f, DiffMode::Centered, h);
    let df_semi = frac_sobolev_seminorm(&df, s, &flat, h, k_max)?.powi(2);
    let hs = weighted_l2_norm(f, &flat, h)?.powi(2) + frac_sobolev_seminorm(f, s, &flat, h, k_max)?.powi(2);
    Ok((dplus - eps * df_semi) / hs)
}

/// Commutator ratio
/// `|⟨[D, L] f, g⟩_{M⁻¹}| / (‖f‖‖g‖ + ‖Df‖‖g‖)` for the full-line operator;
/// `f` and `g` should vanish near the window edges.
pub fn commutator_ratio(f: &[f64], g: &[f64], op: &FullLineOperator) -> Result<f64> {
    let h = op.weights().h();
    let m = op.equilibrium();
    let gamma = WeightSequence::inverse_of(m)?;
    let dlf = diff(&op.apply(f)?, DiffMode::Centered, h);
    let ldf = op.apply(&diff(f, DiffMode::Centered, h))?;
    let comm: Vec<f64> = dlf.iter().zip(&ldf).map(|(a, b)| a - b).collect();
    let num = weighted_inner(&comm, g, &gamma, h)?.abs();
    let nf = weighted_l2_norm(f, &gamma, h)?;
    let ng = weighted_l2_norm(g, &gamma, h)?;
    let ndf = weighted_l2_norm(&diff(f, DiffMode::Centered, h), &gamma, h)?;
    Ok(num / (nf * ng + ndf * ng))
}

/// Smooth compactly supported bump `exp(1 − 1/(1 − r²))` on `|r| < 1`.
pub fn smooth_bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Profiles of the deterministic test battery.
#[derive(Debug, Clone, PartialEq)]
pub enum BatteryProfile {
    /// Sum of smooth bumps `(centre, half-width, amplitude)`.
    Bumps(Vec<(f64, f64, f64)>),
    Spike,
    Step,
    Gaussian,
    CauchyLike,
    Sinusoid,
}

/// Named continuous profile, sampled on any grid so probes can be compared
/// under refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryFunction {
    pub name: String,
    pub profile: BatteryProfile,
}

/// Every battery profile vanishes outside this half-width.
pub const BATTERY_SUPPORT: f64 = 7.0;

impl BatteryFunction {
    pub fn eval(&self, v: f64) -> f64 {
        let window = smooth_bump(v / BATTERY_SUPPORT);
        match &self.profile {
            BatteryProfile::Bumps(bumps) => bumps.iter().map(|(c, w, a)| a * smooth_bump((v - c) / w)).sum(),
            BatteryProfile::Spike => smooth_bump(v / 0.75),
            BatteryProfile::Step => 0.5 * (1.0 + (3.0 * v).tanh()) * window,
            BatteryProfile::Gaussian => (-v * v).exp() * window,
            BatteryProfile::CauchyLike => window / (1.0 + v * v),
            BatteryProfile::Sinusoid => (2.0 * v).sin() * window,
        }
    }

    /// Samples at `v_j = j h`, `j = −n..n`.
    pub fn sample(&self, h: f64, n: usize) -> Vec<f64> {
        (-(n as i64)..=n as i64).map(|j| self.eval(j as f64 * h)).collect()
    }
}

/// Seed of the pseudo-random battery members.
pub const BATTERY_SEED: u64 = 0x5eed_1e57;

/// 20 seeded random bump sums followed by the spike, step, Gaussian,
/// Cauchy-like and windowed sinusoid profiles.
pub fn test_battery() -> Vec<BatteryFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(BATTERY_SEED);
    let mut out: Vec<BatteryFunction> = (0..20)
        .map(|i| {
            let count = rng.gen_range(1..=3);
            let bumps = (0..count)
                .map(|_| {
                    let width = rng.gen_range(0.8..3.0);
                    let centre = rng.gen_range(-(BATTERY_SUPPORT - width)..(BATTERY_SUPPORT - width));
                    let amp = rng.gen_range(-1.0..1.0);
                    (centre, width, amp)
                })
                .collect();
            BatteryFunction { name: format!("random_{i:02}"), profile: BatteryProfile::Bumps(bumps) }
        })
        .collect();
    for (name, profile) in [
        ("spike", BatteryProfile::Spike),
        ("step", BatteryProfile::Step),
        ("gaussian", BatteryProfile::Gaussian),
        ("cauchy_like", BatteryProfile::CauchyLike),
        ("sinusoid", BatteryProfile::Sinusoid),
    ] {
        out.push(BatteryFunction { name: name.into(), profile });
    }
    out
}
