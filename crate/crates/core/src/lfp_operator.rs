//! Lévy–Fokker–Planck operator `L = Γ + Λ`: equilibrium-preserving drift
//! fluxes, truncated end rows with the exterior-mass parameter, and the
//! Gaussian (α = 2) limit.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{check_len, LfpError, Result};
use crate::fractional_weights::{apply_lambda_fullline, assemble_lambda_with, build_weights, OperatorMatrix, VelocityGrid, WeightTable};
use crate::stable_density::{sample_equilibrium, sample_on_indices, AlphaParam};

/// Assembled operator on a truncated velocity grid together with the
/// quantities it was built from.
#[derive(Debug, Clone)]
pub struct LfpOperator {
    grid: VelocityGrid,
    alpha: AlphaParam,
    l_mat: OperatorMatrix,
    lambda_mat: OperatorMatrix,
    equilibrium: Vec<f64>,
    /// Half-point fluxes; entry `m` sits at `v = (m − J + ½) h`.
    vm: Vec<f64>,
    exterior_mass: f64,
}

impl LfpOperator {
    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn alpha(&self) -> AlphaParam {
        self.alpha
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.l_mat
    }

    pub fn lambda_matrix(&self) -> &OperatorMatrix {
        &self.lambda_mat
    }

    pub fn equilibrium(&self) -> &[f64] {
        &self.equilibrium
    }

    pub fn vm(&self) -> &[f64] {
        &self.vm
    }

    pub fn exterior_mass(&self) -> f64 {
        self.exterior_mass
    }

    /// Quadrature weights of the conserved mass: `h` inside, `h + I_L` at `±J`.
    pub fn mass_weights(&self) -> Vec<f64> {
        let h = self.grid.h();
        let mut w = vec![h; self.grid.len()];
        let last = w.len() - 1;
        w[0] += self.exterior_mass;
        w[last] += self.exterior_mass;
        w
    }

    /// Conserved mass `Σ f_j h + I_L (f_J + f_{−J})`.
    pub fn weighted_mass(&self, f: &[f64]) -> f64 {
        self.mass_weights().iter().zip(f).map(|(w, x)| w * x).sum()
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.grid.len(), f.len())?;
        Ok((&self.l_mat * nalgebra::DVector::from_column_slice(f)).as_slice().to_vec())
    }
}

/// Half-point fluxes `(VM)_{j+½} = −½ Σ_{k=−j..j} (ΛM)_k h` for `j ≥ 0`,
/// extended antisymmetrically. Output entry `m` corresponds to `j = m − J`.
pub fn compute_vm(lambda_m: &[f64], h: f64) -> Vec<f64> {
    let n = lambda_m.len();
    let jm = (n - 1) / 2;
    let mut vm = vec![0.0; n - 1];
    let mut partial = lambda_m[jm];
    vm[jm] = -0.5 * partial * h;
    for j in 1..jm {
        partial += lambda_m[jm + j] + lambda_m[jm - j];
        vm[jm + j] = -0.5 * partial * h;
    }
    for j in 0..jm {
        vm[jm - 1 - j] = -vm[jm + j];
    }
    vm
}

/// Exterior-mass parameter `I_L = (1 − Σ M_j h) / (2 M_J)`, clamped at 0.
pub fn exterior_mass(m: &[f64], h: f64) -> Result<f64> {
    let last = *m.last().ok_or(LfpError::Shape { expected: 1, found: 0 })?;
    if !(last > 0.0) {
        return Err(LfpError::Domain("exterior mass undefined: boundary equilibrium value is zero".into()));
    }
    let inside: f64 = m.iter().sum::<f64>() * h;
    let value = (1.0 - inside) / (2.0 * last);
    if value < 0.0 {
        warn!("exterior mass {value:e} is negative; clamping to zero");
        return Ok(0.0);
    }
    Ok(value)
}

/// Drift matrix `Γ`: centred fluxes on interior rows and the boundary fluxes
/// involving `I_L` on rows `±J`.
pub fn assemble_gamma_truncated(vm: &[f64], m: &[f64], i_l: f64, lambda_mat: &OperatorMatrix, grid: &VelocityGrid) -> Result<OperatorMatrix> {
    let n = grid.len();
    check_len(n, m.len())?;
    check_len(n - 1, vm.len())?;
    check_len(n, lambda_mat.nrows())?;
    let h = grid.h();
    let mut g = DMatrix::zeros(n, n);
    for r in 1..n - 1 {
        let up = vm[r];
        let down = vm[r - 1];
        g[(r, r + 1)] += up / (2.0 * h * m[r + 1]);
        g[(r, r)] += (up - down) / (2.0 * h * m[r]);
        g[(r, r - 1)] -= down / (2.0 * h * m[r - 1]);
    }

    let interior_sum = lambda_mat.rows(1, n - 2).row_sum();
    let share = h / (2.0 * (h + i_l));
    let last = n - 1;

    // Row J: −Λ_J − share·hΣΛ_k/h − share·VM_{J−½}/h · (e_J/M_J + e_{J−1}/M_{J−1}).
    for c in 0..n {
        g[(last, c)] = -lambda_mat[(last, c)] - share * interior_sum[c];
        g[(0, c)] = -lambda_mat[(0, c)] - share * interior_sum[c];
    }
    let flux_top = vm[last - 1] / h;
    g[(last, last)] -= share * flux_top / m[last];
    g[(last, last - 1)] -= share * flux_top / m[last - 1];
    let flux_bottom = vm[0] / h;
    g[(0, 1)] += share * flux_bottom / m[1];
    g[(0, 0)] += share * flux_bottom / m[0];
    Ok(g)
}

/// Full assembly pipeline: `M`, `Λ`, `VM`, `I_L`, `Γ`, and `L = Γ + Λ`.
/// At `α = 2` the Gaussian limit operator is returned.
pub fn assemble_lfp(alpha: AlphaParam, grid: &VelocityGrid, gamma_decay: f64) -> Result<LfpOperator> {
    if alpha.is_gaussian() {
        return assemble_lfp_gaussian_limit(grid);
    }
    if !(gamma_decay.is_finite() && gamma_decay > 0.0) {
        return Err(LfpError::Precondition(format!("far-field decay exponent must be positive, got {gamma_decay}")));
    }
    let m = sample_equilibrium(alpha, grid)?;
    let weights = build_weights(alpha, grid.h(), grid.k_max())?;
    let lambda_mat = assemble_lambda_with(&weights, grid, gamma_decay);
    let lambda_m = &lambda_mat * nalgebra::DVector::from_column_slice(&m);
    let vm = compute_vm(lambda_m.as_slice(), grid.h());
    let i_l = exterior_mass(&m, grid.h())?;
    let gamma = assemble_gamma_truncated(&vm, &m, i_l, &lambda_mat, grid)?;
    let l_mat = gamma + &lambda_mat;
    Ok(LfpOperator { grid: *grid, alpha, l_mat, lambda_mat, equilibrium: m, vm, exterior_mass: i_l })
}

/// α = 2 operator in flux form
/// `G_{j+½} = (M_j + M_{j+1})/(2h) · (f_{j+1}/M_{j+1} − f_j/M_j)` with
/// no-flux ends and `I_L = 0`.
pub fn assemble_lfp_gaussian_limit(grid: &VelocityGrid) -> Result<LfpOperator> {
    let alpha = AlphaParam::new(2.0)?;
    let m = sample_equilibrium(alpha, grid)?;
    let n = grid.len();
    let h = grid.h();
    let mut l_mat = DMatrix::zeros(n, n);
    let mut lambda_mat = DMatrix::zeros(n, n);
    for r in 0..n - 1 {
        let c = (m[r] + m[r + 1]) / (2.0 * h * h);
        // Flux through r+½ leaves row r and enters row r+1.
        l_mat[(r, r + 1)] += c / m[r + 1];
        l_mat[(r, r)] -= c / m[r];
        l_mat[(r + 1, r + 1)] -= c / m[r + 1];
        l_mat[(r + 1, r)] += c / m[r];
    }
    for r in 0..n {
        lambda_mat[(r, r)] = -2.0 / (h * h);
        if r > 0 {
            lambda_mat[(r, r - 1)] = 1.0 / (h * h);
        }
        if r + 1 < n {
            lambda_mat[(r, r + 1)] = 1.0 / (h * h);
        }
    }
    let vm = (0..n - 1).map(|r| (m[r] - m[r + 1]) / h).collect();
    Ok(LfpOperator { grid: *grid, alpha, l_mat, lambda_mat, equilibrium: m, vm, exterior_mass: 0.0 })
}

/// Untruncated operator acting on sequences supported in `j = −N..N`.
///
/// `M` is sampled on `−N−K..N+K`, so `ΛM` and the fluxes are exact on the
/// window and no far-field modelling is involved.
#[derive(Debug, Clone)]
pub struct FullLineOperator {
    weights: WeightTable,
    window: usize,
    m_ext: Vec<f64>,
    vm: Vec<f64>,
}

impl FullLineOperator {
    pub fn new(alpha: AlphaParam, h: f64, k_max: usize, window: usize) -> Result<Self> {
        let weights = build_weights(alpha, h, k_max)?;
        let reach = (window + k_max) as i64;
        let m_ext = sample_on_indices(alpha, h, -reach, reach)?;
        let lambda_m = apply_lambda_fullline(&weights, &m_ext);
        let centre = reach as usize;
        // Half points −N−½ .. N+½.
        let mut vm = vec![0.0; 2 * window + 2];
        let mut partial = 0.0;
        for j in 0..=window {
            partial += if j == 0 { lambda_m[centre] } else { lambda_m[centre + j] + lambda_m[centre - j] };
            vm[window + 1 + j] = -0.5 * partial * h;
            vm[window - j] = -vm[window + 1 + j];
        }
        Ok(Self { weights, window, m_ext, vm })
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Equilibrium on `−N−K..N+K`.
    pub fn equilibrium_extended(&self) -> &[f64] {
        &self.m_ext
    }

    /// Equilibrium on the window `−N..N`.
    pub fn equilibrium(&self) -> &[f64] {
        let k = self.weights.k_max();
        &self.m_ext[k..k + 2 * self.window + 1]
    }

    /// Fluxes at `−N−½ .. N+½`.
    pub fn vm(&self) -> &[f64] {
        &self.vm
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = 2 * self.window + 1;
        check_len(n, f.len())?;
        let h = self.weights.h();
        let m = self.equilibrium();
        let big_f = |p: i64| if p < 0 || p >= n as i64 { 0.0 } else { f[p as usize] / m[p as usize] };
        let mut out = apply_lambda_fullline(&self.weights, f);
        for (p, o) in out.iter_mut().enumerate() {
            let pi = p as i64;
            let up = self.vm[p + 1] * (big_f(pi + 1) + big_f(pi));
            let down = self.vm[p] * (big_f(pi) + big_f(pi - 1));
            *o += (up - down) / (2.0 * h);
        }
        Ok(out)
    }
}
