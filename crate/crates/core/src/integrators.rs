//! Time integrators: implicit Euler for the homogeneous and kinetic
//! equations, and the semi-Lagrangian Strang splitting with Crank–Nicolson
//! collisions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, LfpError, Result};
use crate::fractional_weights::VelocityGrid;
use crate::lfp_operator::LfpOperator;

/// Periodic space mesh `x_i = i Δx`, `Δx = P / N_x`, paired with a velocity grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    nx: usize,
    period: f64,
    vgrid: VelocityGrid,
}

impl PhaseGrid {
    /// Any `N_x ≥ 3` is accepted here; the Eulerian kinetic scheme further
    /// requires it to be odd.
    pub fn new(nx: usize, period: f64, vgrid: VelocityGrid) -> Result<Self> {
        if nx < 3 {
            return Err(LfpError::Precondition(format!("need at least 3 space cells, got {nx}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(LfpError::Precondition(format!("space period must be positive, got {period}")));
        }
        Ok(Self { nx, period, vgrid })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.nx as f64
    }

    pub fn vgrid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }
}

/// Phase-space samples `f_{i,j}`: rows are space cells, columns velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionXV(DMatrix<f64>);

impl DistributionXV {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self(values)
    }

    pub fn from_fn(pg: &PhaseGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let vg = pg.vgrid();
        Self(DMatrix::from_fn(pg.nx(), vg.len(), |i, j| f(pg.x(i), vg.velocity(j))))
    }

    /// `f_{i,j} = ρ M_j` for every cell.
    pub fn uniform(pg: &PhaseGrid, profile: &[f64]) -> Self {
        Self(DMatrix::from_fn(pg.nx(), profile.len(), |_, j| profile[j]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `ΣΣ f Δx Δv`.
    pub fn total_mass(&self, pg: &PhaseGrid) -> f64 {
        self.0.sum() * pg.dx() * pg.vgrid().h()
    }

    /// Conserved mass `Σ_i Δx (Σ_j f_{ij} h + I_L (f_{i,J} + f_{i,−J}))`.
    pub fn weighted_mass(&self, op: &LfpOperator, pg: &PhaseGrid) -> f64 {
        let w = op.mass_weights();
        let mut total = 0.0;
        for (j, wj) in w.iter().enumerate() {
            total += wj * self.0.column(j).sum();
        }
        total * pg.dx()
    }

    /// `‖f‖_{ℓ²_{Δx,Δv}(M⁻¹)}`.
    pub fn l2_norm(&self, pg: &PhaseGrid, m: &[f64]) -> f64 {
        let mut total = 0.0;
        for (j, mj) in m.iter().enumerate() {
            total += self.0.column(j).norm_squared() / mj;
        }
        (total * pg.dx() * pg.vgrid().h()).sqrt()
    }

    pub fn min_value(&self) -> f64 {
        self.0.min()
    }
}

/// LU factorisation kept together with its matrix for residual checks.
#[derive(Debug, Clone)]
pub struct FactorizedSystem {
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    pivot_ratio: f64,
}

impl FactorizedSystem {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LfpError::Shape { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let lu = matrix.clone().lu();
        let diag = lu.u().diagonal();
        let max = diag.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let min = diag.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        let pivot_ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(pivot_ratio > 1e-14) {
            return Err(LfpError::Solver { reason: "matrix is numerically singular".into(), pivot_ratio });
        }
        Ok(Self { matrix, lu, pivot_ratio })
    }

    /// `min |u_ii| / max |u_ii|` of the LU factor, a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

const RESIDUAL_TOL: f64 = 1e-12;

/// Direct solve with one step of iterative refinement if the residual exceeds
/// `1e−12 ‖b‖`.
pub fn solve_linear(system: &FactorizedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len(system.matrix.nrows(), rhs.len())?;
    let b = DVector::from_column_slice(rhs);
    let mut x = system.lu.solve(&b).ok_or_else(|| LfpError::Solver { reason: "LU solve failed".into(), pivot_ratio: system.pivot_ratio })?;
    let bnorm = b.amax();
    let mut resid = &b - &system.matrix * &x;
    if resid.amax() > RESIDUAL_TOL * bnorm {
        if let Some(dx) = system.lu.solve(&resid) {
            x += dx;
        }
        resid = &b - &system.matrix * &x;
    }
    let r = resid.amax();
    if !(r <= RESIDUAL_TOL * bnorm) && r > 0.0 {
        return Err(LfpError::Solver {
            reason: format!("residual {r:e} exceeds {RESIDUAL_TOL:e}·‖b‖ = {:e}", RESIDUAL_TOL * bnorm),
            pivot_ratio: system.pivot_ratio,
        });
    }
    Ok(x.as_slice().to_vec())
}

/// Implicit Euler `(I − Δt L) f_new = f` with a stored factorisation.
#[derive(Debug, Clone)]
pub struct ImplicitEuler {
    system: FactorizedSystem,
    dt: f64,
}

impl ImplicitEuler {
    pub fn new(op: &LfpOperator, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let n = op.grid().len();
        let a = DMatrix::identity(n, n) - op.matrix() * dt;
        Ok(Self { system: FactorizedSystem::new(a)?, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, f: &[f64]) -> Result<Vec<f64>> {
        solve_linear(&self.system, f)
    }
}

/// One implicit Euler step of the homogeneous equation.
pub fn step_homogeneous(op: &LfpOperator, f: &[f64], dt: f64) -> Result<Vec<f64>> {
    ImplicitEuler::new(op, dt)?.step(f)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(LfpError::Precondition(format!("time step must be positive, got {dt}")))
    }
}

/// Implicit Euler for the kinetic equation,
/// `(I + Δt T − Δt L) f_new = f` with centred periodic transport.
///
/// The system is block-diagonal in the discrete Fourier modes of `x`; each
/// mode is a dense complex system of the velocity size, factorised once.
pub struct KineticEuler {
    pg: PhaseGrid,
    dt: f64,
    modes: Vec<LU<Complex64, Dyn, Dyn>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KineticEuler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KineticEuler").field("pg", &self.pg).field("dt", &self.dt).finish()
    }
}

impl KineticEuler {
    pub fn new(op: &LfpOperator, pg: &PhaseGrid, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if pg.nx() % 2 == 0 {
            return Err(LfpError::Precondition(format!("the Eulerian kinetic scheme needs an odd number of space cells, got {}", pg.nx())));
        }
        check_len(pg.vgrid().len(), op.grid().len())?;
        let nv = op.grid().len();
        let nx = pg.nx();
        let v = op.grid().velocities();
        let base: DMatrix<Complex64> = (DMatrix::identity(nv, nv) - op.matrix() * dt).map(|x| Complex64::new(x, 0.0));
        let mut modes = Vec::with_capacity(nx / 2 + 1);
        for m in 0..=nx / 2 {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / nx as f64;
            let mut a = base.clone();
            for j in 0..nv {
                a[(j, j)] += Complex64::new(0.0, dt * v[j] * theta.sin() / pg.dx());
            }
            let lu = a.lu();
            if lu.u().diagonal().iter().any(|d| d.norm() == 0.0) {
                return Err(LfpError::Solver { reason: format!("singular Fourier block {m}"), pivot_ratio: 0.0 });
            }
            modes.push(lu);
        }
        let mut planner = FftPlanner::new();
        Ok(Self { pg: *pg, dt, modes, forward: planner.plan_fft_forward(nx), inverse: planner.plan_fft_inverse(nx) })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, f: &DistributionXV) -> Result<DistributionXV> {
        let nx = self.pg.nx();
        let nv = self.pg.vgrid().len();
        check_len(nx, f.values().nrows())?;
        check_len(nv, f.values().ncols())?;
        let mut spectrum = DMatrix::<Complex64>::zeros(nx, nv);
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..nv {
            for (b, x) in buf.iter_mut().zip(f.values().column(j).iter()) {
                *b = Complex64::new(*x, 0.0);
            }
            self.forward.process(&mut buf);
            spectrum.column_mut(j).copy_from_slice(&buf);
        }
        for (m, lu) in self.modes.iter().enumerate() {
            let rhs = spectrum.row(m).transpose();
            let sol = lu.solve(&rhs).ok_or_else(|| LfpError::Solver { reason: format!("Fourier block {m} solve failed"), pivot_ratio: 0.0 })?;
            for j in 0..nv {
                spectrum[(m, j)] = sol[j];
                if m != 0 {
                    spectrum[(nx - m, j)] = sol[j].conj();
                }
            }
        }
        let scale = 1.0 / nx as f64;
        let mut out = DMatrix::zeros(nx, nv);
        for j in 0..nv {
            buf.copy_from_slice(spectrum.column(j).as_slice());
            self.inverse.process(&mut buf);
            for (o, b) in out.column_mut(j).iter_mut().zip(&buf) {
                *o = b.re * scale;
            }
        }
        Ok(DistributionXV(out))
    }
}

/// One kinetic implicit Euler step (factorises on every call; keep a
/// [`KineticEuler`] for repeated steps).
pub fn step_kinetic_euler(op: &LfpOperator, pg: &PhaseGrid, f: &DistributionXV, dt: f64) -> Result<DistributionXV> {
    KineticEuler::new(op, pg, dt)?.step(f)
}

/// C¹ cubic Hermite value at local coordinate `t ∈ [0, 1]` of the cell
/// `[x_i, x_{i+1}]`, with slopes from centred differences.
pub fn hermite_cubic(u_prev: f64, u0: f64, u1: f64, u_next: f64, t: f64) -> f64 {
    let d0 = 0.5 * (u1 - u_prev);
    let d1 = 0.5 * (u_next - u0);
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * u0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * u1 + (t3 - t2) * d1
}

/// Hermite reconstruction of periodic samples `u_i = u(iP/N)` at `x`.
pub fn hermite_reconstruct(u: &[f64], period: f64, x: f64) -> f64 {
    let n = u.len();
    let dx = period / n as f64;
    let y = (x / dx).rem_euclid(n as f64);
    let cell = y.floor();
    let t = y - cell;
    let i = cell as usize % n;
    let at = |k: isize| u[(i as isize + k).rem_euclid(n as isize) as usize];
    hermite_cubic(at(-1), at(0), at(1), at(2), t)
}

/// Strang splitting: half-step Hermite transport, Crank–Nicolson collision,
/// half-step transport.
#[derive(Debug, Clone)]
pub struct SemiLagrangian {
    pg: PhaseGrid,
    dt: f64,
    /// Transpose of `(I − Δt/2 L)⁻¹ (I + Δt/2 L)`, applied from the right.
    propagator_t: DMatrix<f64>,
    /// Per velocity: cell offset and local coordinate of the foot point.
    shifts: Vec<(isize, f64)>,
}

impl SemiLagrangian {
    pub fn new(op: &LfpOperator, pg: &PhaseGrid, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        check_len(pg.vgrid().len(), op.grid().len())?;
        let n = op.grid().len();
        let id = DMatrix::<f64>::identity(n, n);
        let lhs = FactorizedSystem::new(&id - op.matrix() * (0.5 * dt))?;
        let rhs = &id + op.matrix() * (0.5 * dt);
        let prop = lhs.lu.solve(&rhs).ok_or_else(|| LfpError::Solver { reason: "Crank–Nicolson factor solve failed".into(), pivot_ratio: lhs.pivot_ratio })?;
        let shifts = op
            .grid()
            .velocities()
            .iter()
            .map(|v| {
                let y = -v * 0.5 * dt / pg.dx();
                let o = y.floor();
                (o as isize, y - o)
            })
            .collect();
        Ok(Self { pg: *pg, dt, propagator_t: prop.transpose(), shifts })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn transport(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let nx = f.nrows() as isize;
        let mut out = DMatrix::zeros(f.nrows(), f.ncols());
        for (j, &(o, t)) in self.shifts.iter().enumerate() {
            let col = f.column(j);
            let at = |k: isize| col[k.rem_euclid(nx) as usize];
            for i in 0..nx {
                let b = i + o;
                out[(i as usize, j)] = hermite_cubic(at(b - 1), at(b), at(b + 1), at(b + 2), t);
            }
        }
        out
    }

    pub fn step(&self, f: &DistributionXV) -> Result<DistributionXV> {
        check_len(self.pg.nx(), f.values().nrows())?;
        check_len(self.propagator_t.nrows(), f.values().ncols())?;
        let half = self.transport(f.values());
        let collided = half * &self.propagator_t;
        Ok(DistributionXV(self.transport(&collided)))
    }
}

/// One semi-Lagrangian step (rebuilds the propagator on every call).
pub fn step_kinetic_sl(op: &LfpOperator, pg: &PhaseGrid, f: &DistributionXV, dt: f64) -> Result<DistributionXV> {
    SemiLagrangian::new(op, pg, dt)?.step(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfp_operator::assemble_lfp;
    use crate::stable_density::AlphaParam;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_operator(a: f64, j: usize) -> LfpOperator {
        let grid = VelocityGrid::new(0.5, j, None).unwrap();
        assemble_lfp(AlphaParam::new(a).unwrap(), &grid, 1.0 + a).unwrap()
    }

    #[test]
    fn identity_solve() {
        let sys = FactorizedSystem::new(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(solve_linear(&sys, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn random_system_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(50, 50, |i, j| if i == j { 60.0 } else { rng.gen_range(-1.0..1.0) });
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = FactorizedSystem::new(a.clone()).unwrap();
        let x = solve_linear(&sys, &b).unwrap();
        let r = DVector::from_column_slice(&b) - &a * DVector::from_column_slice(&x);
        assert!(r.amax() <= 1e-12 * b.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }

    #[test]
    fn singular_system_reports_pivot_ratio() {
        let err = FactorizedSystem::new(DMatrix::zeros(3, 3)).unwrap_err();
        assert!(matches!(err, LfpError::Solver { .. }));
    }

    #[test]
    fn hermite_interpolates_nodes_and_quadratics() {
        let u: Vec<f64> = (0..10).map(|i| ((i * 7) % 5) as f64).collect();
        for (i, ui) in u.iter().enumerate() {
            assert_eq!(hermite_reconstruct(&u, 10.0, i as f64), *ui);
        }
        let q = |x: f64| 0.3 * x * x - 1.2 * x + 0.7;
        for &t in &[0.0, 0.2, 0.5, 0.9] {
            let v = hermite_cubic(q(-1.0), q(0.0), q(1.0), q(2.0), t);
            assert!((v - q(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_sine_third_order() {
        let err = |n: usize| {
            let u: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
            (0..997)
                .map(|k| {
                    let x = k as f64 / 997.0;
                    (hermite_reconstruct(&u, 1.0, x) - (2.0 * std::f64::consts::PI * x).sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(16), err(32), err(64));
        assert!((e1 / e2).log2() >= 3.0 - 0.05 && (e2 / e3).log2() >= 3.0 - 0.05, "{e1} {e2} {e3}");
    }

    #[test]
    fn homogeneous_stationary_and_conservative() {
        let op = small_operator(1.0, 16);
        let stepper = ImplicitEuler::new(&op, 0.05).unwrap();
        let m = op.equilibrium().to_vec();
        let next = stepper.step(&m).unwrap();
        assert!(next.iter().zip(&m).all(|(a, b)| (a - b).abs() <= 1e-11 * b));
        let f: Vec<f64> = (0..33).map(|j| if (10..20).contains(&j) { 1.0 } else { 0.1 }).collect();
        let g = stepper.step(&f).unwrap();
        let (m0, m1) = (op.weighted_mass(&f), op.weighted_mass(&g));
        assert!((m0 - m1).abs() <= 1e-11 * m0.abs());
    }

    #[test]
    fn kinetic_euler_matches_dense_inverse() {
        let op = small_operator(1.0, 8);
        let pg = PhaseGrid::new(9, 2.0 * std::f64::consts::PI, *op.grid()).unwrap();
        let dt = 0.1;
        let nx = 9;
        let nv = op.grid().len();
        let v = op.grid().velocities();
        // Unknown (i, j) at position i + nx j, matching column-major storage.
        let n = nx * nv;
        let mut a = DMatrix::<f64>::identity(n, n);
        for j in 0..nv {
            for i in 0..nx {
                let r = i + nx * j;
                let c = v[j] * dt / (2.0 * pg.dx());
                a[(r, (i + 1) % nx + nx * j)] += c;
                a[(r, (i + nx - 1) % nx + nx * j)] -= c;
                for k in 0..nv {
                    a[(r, i + nx * k)] -= dt * op.matrix()[(j, k)];
                }
            }
        }
        let inv = a.try_inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f0 = DMatrix::from_fn(nx, nv, |_, _| rng.gen_range(0.0..1.0));
        let oracle = &inv * DVector::from_column_slice(f0.as_slice());
        let got = KineticEuler::new(&op, &pg, dt).unwrap().step(&DistributionXV::new(f0)).unwrap();
        for (x, y) in got.values().iter().zip(oracle.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn even_nx_rejected_for_euler() {
        let op = small_operator(1.0, 4);
        let pg = PhaseGrid::new(8, 1.0, *op.grid()).unwrap();
        assert!(matches!(KineticEuler::new(&op, &pg, 0.1), Err(LfpError::Precondition(_))));
    }

    #[test]
    fn sl_keeps_equilibrium_and_mass() {
        let op = small_operator(1.0, 8);
        let pg = PhaseGrid::new(16, 2.0 * std::f64::consts::PI, *op.grid()).unwrap();
        let sl = SemiLagrangian::new(&op, &pg, 0.01).unwrap();
        let eq = DistributionXV::uniform(&pg, op.equilibrium());
        let next = sl.step(&eq).unwrap();
        let diff = (next.values() - eq.values()).amax();
        assert!(diff < 1e-13, "{diff}");
        let f = DistributionXV::from_fn(&pg, |x, v| (1.0 + 0.5 * x.cos()) / (1.0 + v * v));
        let g = sl.step(&f).unwrap();
        let (m0, m1) = (f.weighted_mass(&op, &pg), g.weighted_mass(&op, &pg));
        assert!((m0 - m1).abs() < 1e-12 * m0);
    }
}
