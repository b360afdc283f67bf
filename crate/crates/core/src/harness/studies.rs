//! Convergence, decay, tail and probe studies, and recorded runs.

use std::path::Path;

use crate::discrete_analysis::{commutator_ratio, interpolation_ratio, poincare_ratio, test_battery};
use crate::error::{LfpError, Result};
use crate::fractional_weights::VelocityGrid;
use crate::lfp_operator::{assemble_lfp, FullLineOperator};
use crate::stable_density::AlphaParam;

use super::config::{DtRefinement, Model, RunConfig, Scheme};
use super::csv::{format_value, CsvTable};
use super::simulation::{run, RunSummary, Simulation, State, TraceRow};

/// Errors below this are treated as exact and give no observed order.
pub const EXACT_ERROR: f64 = 1e-11;

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub j_max: usize,
    pub nx: Option<usize>,
    pub dt: f64,
    pub error_linf: f64,
    pub error_l2mu: f64,
    /// `log2(e_{2h} / e_h)` in the `ℓ²(M⁻¹)` norm; NaN on the first row or
    /// when both errors are at roundoff level.
    pub observed_order: f64,
    pub mass_drift: f64,
    pub runtime_seconds: f64,
}

/// Rows of a convergence study, possibly cut short by a failed level.
#[derive(Debug)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub failure: Option<LfpError>,
}

impl StudyReport {
    pub fn to_csv(&self, config: Vec<String>) -> CsvTable {
        let mut t = CsvTable::new(["resolution", "J", "nx", "dt", "error_linf", "error_l2mu", "observed_order", "mass_drift", "runtime_seconds"])
            .with_config(config);
        for r in &self.rows {
            t.push_row(vec![
                format_value(r.h),
                r.j_max.to_string(),
                r.nx.map_or_else(|| "-".to_string(), |n| n.to_string()),
                format_value(r.dt),
                format_value(r.error_linf),
                format_value(r.error_l2mu),
                format_value(r.observed_order),
                format_value(r.mass_drift),
                format!("{:.3}", r.runtime_seconds),
            ]);
        }
        t
    }

    /// Least-squares slope of `−log2 e` against `log2 (1/h)` over the last
    /// `count` rows.
    pub fn fitted_order(&self, count: usize) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(count)..];
        let pts: Vec<(f64, f64)> = tail.iter().map(|r| (-r.h.log2(), -r.error_l2mu.log2())).collect();
        least_squares(&pts).map_or(f64::NAN, |fit| fit.slope)
    }
}

/// Configuration of refinement level `level` (the base is level 0): `h`
/// halves with `L` fixed, `dt` follows the configured refinement and the
/// space grid doubles in the kinetic case (kept odd for the Eulerian
/// scheme).
pub fn refine(base: &RunConfig, level: u32) -> RunConfig {
    let scale = 2usize.pow(level);
    let mut cfg = base.clone();
    cfg.h = base.h / scale as f64;
    cfg.j_max = base.j_max * scale;
    cfg.dt = match base.dt_refinement {
        DtRefinement::Linear => base.dt / scale as f64,
        DtRefinement::Quadratic => base.dt / (scale * scale) as f64,
    };
    if base.model == Model::Kinetic {
        cfg.nx = match base.scheme {
            Scheme::Euler => (base.nx - 1) * scale + 1,
            Scheme::SemiLagrangian => base.nx * scale,
        };
    }
    cfg
}

fn run_level(cfg: &RunConfig) -> Result<(RunSummary, f64)> {
    let mut sim = Simulation::new(cfg.clone())?;
    if !sim.has_reference() {
        return Err(LfpError::Precondition("convergence studies need an initial preset with a known solution (tc1, tc3 or equilibrium)".into()));
    }
    let summary = run(&mut sim, |_| Ok(()))?;
    let wall = summary.runtime_seconds;
    Ok((summary, wall))
}

/// Runs `levels` refinement levels of `base` against the exact solution.
pub fn run_convergence_study(base: &RunConfig, levels: usize) -> Result<StudyReport> {
    if levels < 2 {
        return Err(LfpError::Precondition(format!("a convergence study needs at least two levels, got {levels}")));
    }
    let mut rows: Vec<StudyRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let cfg = refine(base, level as u32);
        log::info!("convergence level {level}: h = {}, J = {}, dt = {}", cfg.h, cfg.j_max, cfg.dt);
        let (summary, wall) = match run_level(&cfg) {
            Ok(x) => x,
            Err(e) => return Ok(StudyReport { rows, failure: Some(LfpError::Study { level, source: Box::new(e) }) }),
        };
        let e = summary.errors.expect("reference checked");
        let observed_order = match rows.last() {
            Some(prev) if prev.error_l2mu > EXACT_ERROR && e.l2mu > EXACT_ERROR => (prev.error_l2mu / e.l2mu).log2(),
            _ => f64::NAN,
        };
        rows.push(StudyRow {
            h: cfg.h,
            j_max: cfg.j_max,
            nx: (cfg.model == Model::Kinetic).then_some(cfg.nx),
            dt: cfg.dt,
            error_linf: e.linf,
            error_l2mu: e.l2mu,
            observed_order,
            mass_drift: summary.weighted_mass_drift,
            runtime_seconds: wall,
        });
    }
    Ok(StudyReport { rows, failure: None })
}

/// Straight-line fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Time series of the distance to equilibrium with fitted decay rates.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Distance of the exact solution to its own limit `μ_α(v_j)`, when the
    /// initial preset has one.
    pub reference_distances: Option<Vec<f64>>,
    /// Fit of `ln distance` over the window; the decay rate is `−slope`.
    pub fit: Option<LinearFit>,
    pub reference_fit: Option<LinearFit>,
    pub summary: RunSummary,
}

impl DecayReport {
    pub fn rate(&self) -> Option<f64> {
        self.fit.map(|f| -f.slope)
    }

    pub fn reference_rate(&self) -> Option<f64> {
        self.reference_fit.map(|f| -f.slope)
    }

    pub fn to_csv(&self, config: Vec<String>) -> CsvTable {
        let mut t = CsvTable::new(["t", "distance", "reference_distance"]).with_config(config);
        for (k, (&tk, &d)) in self.times.iter().zip(&self.distances).enumerate() {
            let r = self.reference_distances.as_ref().map_or(f64::NAN, |v| v[k]);
            t.push_values(&[tk, d, r]);
        }
        t
    }
}

fn window_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Option<LinearFit> {
    let eps = 1e-9 * window.1.abs().max(1.0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &d)| t >= window.0 - eps && t <= window.1 + eps && d > 0.0 && d.is_finite())
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    least_squares(&pts)
}

/// Distance of a kinetic state to `M` in `ℓ²_{Δx,Δv}(M⁻¹)`.
fn distance_to_profile(sim: &Simulation, state: &State) -> f64 {
    let m = sim.operator().equilibrium();
    match (state, sim.phase_grid()) {
        (State::Kinetic(f), Some(pg)) => {
            let mut sq = 0.0;
            for (j, mj) in m.iter().enumerate() {
                sq += f.values().column(j).iter().map(|x| (x - mj).powi(2)).sum::<f64>() / mj;
            }
            (sq * pg.dx() * pg.vgrid().h()).sqrt()
        }
        _ => f64::NAN,
    }
}

/// Runs a kinetic configuration, recording `‖f − f^∞‖` every step and the
/// least-squares decay rate over the configured window.
pub fn run_decay_study(cfg: &RunConfig) -> Result<DecayReport> {
    if cfg.model != Model::Kinetic {
        return Err(LfpError::Precondition("decay studies need the kinetic model".into()));
    }
    let mut sim = Simulation::new(cfg.clone())?;
    let with_reference = sim.has_reference() && cfg.init == super::config::InitSpec::Tc3;
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut reference_distances = Vec::new();
    let summary = run(&mut sim, |s| {
        times.push(s.time());
        distances.push(s.distance_to_equilibrium());
        if with_reference {
            let r = s.reference_state()?.expect("tc3 reference");
            reference_distances.push(distance_to_profile(s, &r));
        }
        Ok(())
    })?;
    let fit = window_fit(&times, &distances, cfg.decay_window);
    let reference_fit = with_reference.then(|| window_fit(&times, &reference_distances, cfg.decay_window)).flatten();
    Ok(DecayReport { times, distances, reference_distances: with_reference.then_some(reference_distances), fit, reference_fit, summary })
}

/// Tail slopes at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub t: f64,
    pub right: Option<f64>,
    pub left: Option<f64>,
    /// Why a fit was skipped.
    pub note: Option<String>,
}

/// Log-log slope of `f` against `|v|` over `vmin ≤ ±v ≤ vmax` (`side` is
/// `+1` or `−1`); `None` when the window holds a nonpositive value or fewer
/// than two points.
pub fn tail_slope(v: &[f64], f: &[f64], vmin: f64, vmax: f64, side: f64) -> Option<f64> {
    let eps = 1e-12 * vmax.abs().max(1.0);
    let window: Vec<(f64, f64)> = v.iter().zip(f).filter(|(&x, _)| side * x >= vmin - eps && side * x <= vmax + eps).map(|(&x, &y)| (x, y)).collect();
    if window.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = window.iter().map(|&(x, y)| (x.abs().ln(), y.ln())).collect();
    least_squares(&pts).map(|fit| fit.slope)
}

fn tail_fit_of(sim: &Simulation, t: f64) -> TailFit {
    let State::Homogeneous(f) = sim.state() else { unreachable!("tail studies are homogeneous") };
    let grid = sim.operator().grid();
    let v = grid.velocities();
    let (vmin, vmax) = (sim.config().tail_vmin, grid.half_width());
    let right = tail_slope(&v, f, vmin, vmax, 1.0);
    let left = tail_slope(&v, f, vmin, vmax, -1.0);
    let note = (right.is_none() || left.is_none()).then(|| "nonpositive density in the fit window; fit skipped".to_string());
    if let Some(n) = &note {
        log::warn!("t = {t}: {n}");
    }
    TailFit { t, right, left, note }
}

/// Runs a homogeneous configuration and fits tail slopes over
/// `tail_vmin ≤ |v| ≤ L` at the requested times (rounded to steps).
pub fn run_tail_study(cfg: &RunConfig, times: &[f64]) -> Result<Vec<TailFit>> {
    if cfg.model != Model::Homogeneous {
        return Err(LfpError::Precondition("tail studies need the homogeneous model".into()));
    }
    let targets: Vec<usize> = times.iter().map(|t| (t / cfg.dt).round() as usize).collect();
    let mut run_cfg = cfg.clone();
    run_cfg.t_final = targets.iter().copied().max().unwrap_or(0) as f64 * cfg.dt;
    let mut sim = Simulation::new(run_cfg)?;
    let mut fits: Vec<Option<TailFit>> = vec![None; times.len()];
    run(&mut sim, |s| {
        for (k, &n) in targets.iter().enumerate() {
            if n == s.steps_taken() {
                fits[k] = Some(tail_fit_of(s, times[k]));
            }
        }
        Ok(())
    })?;
    Ok(fits.into_iter().map(|f| f.expect("every target step is visited")).collect())
}

/// Functional-inequality probe families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSuite {
    Poincare,
    Interpolation,
    Commutator,
}

/// Probe ratio of one battery member at `h` and `h/2` (same `L`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub test_id: String,
    pub ratio_h: f64,
    pub ratio_half: f64,
}

impl ProbeRow {
    /// `max/min` of the two ratios.
    pub fn variation(&self) -> f64 {
        let (a, b) = (self.ratio_h.abs(), self.ratio_half.abs());
        a.max(b) / a.min(b)
    }
}

/// Exponent and thresholds used by the interpolation probe.
pub const INTERP_S: f64 = 0.5;
pub const INTERP_EPS: [f64; 2] = [0.1, 0.01];

/// Largest ratio over the battery at `h` and at `h/2`: the empirical
/// inequality constants.
pub fn probe_constants(rows: &[ProbeRow]) -> (f64, f64) {
    rows.iter().fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.max(r.ratio_h), b.max(r.ratio_half)))
}

/// Evaluates a probe suite on the battery at `(h, J)` and `(h/2, 2J)`.
/// The interpolation suite has one row per member and threshold; the
/// commutator pairs member `i` with member `i + 1`.
pub fn run_probe_suite(alpha: AlphaParam, h: f64, j_max: usize, suite: ProbeSuite) -> Result<Vec<ProbeRow>> {
    let battery = test_battery();
    let ids: Vec<String> = match suite {
        ProbeSuite::Interpolation => INTERP_EPS.iter().flat_map(|eps| battery.iter().map(move |b| format!("{}@eps={eps}", b.name))).collect(),
        _ => battery.iter().map(|b| b.name.clone()).collect(),
    };
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    for (hh, jj) in [(h, j_max), (h / 2.0, 2 * j_max)] {
        let ratios = match suite {
            ProbeSuite::Poincare => {
                let grid = VelocityGrid::new(hh, jj, None)?;
                let op = assemble_lfp(alpha, &grid, alpha.default_decay())?;
                battery.iter().map(|b| poincare_ratio(&b.sample(hh, jj), &op)).collect::<Result<Vec<_>>>()?
            }
            ProbeSuite::Interpolation => INTERP_EPS
                .iter()
                .flat_map(|&eps| battery.iter().map(move |b| interpolation_ratio(&b.sample(hh, jj), INTERP_S, eps, hh, 2 * jj)))
                .collect::<Result<Vec<_>>>()?,
            ProbeSuite::Commutator => {
                let op = FullLineOperator::new(alpha, hh, 10 * jj + 1, jj)?;
                (0..battery.len())
                    .map(|i| commutator_ratio(&battery[i].sample(hh, jj), &battery[(i + 1) % battery.len()].sample(hh, jj), &op))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        per_level.push(ratios);
    }
    Ok(ids.into_iter().enumerate().map(|(i, test_id)| ProbeRow { test_id, ratio_h: per_level[0][i], ratio_half: per_level[1][i] }).collect())
}

/// Conservation check applied before a run is marked successful: the
/// Eulerian schemes conserve the weighted mass to `1e−10` over the run, the
/// semi-Lagrangian scheme to `1e−8` per step.
pub fn check_conservation(cfg: &RunConfig, summary: &RunSummary) -> Result<()> {
    let (drift, tol, what) = match cfg.scheme {
        Scheme::Euler => (summary.weighted_mass_drift, 1e-10, "weighted mass over the run"),
        Scheme::SemiLagrangian => (summary.max_step_mass_drift, 1e-8, "weighted mass per step"),
    };
    if drift > tol {
        return Err(LfpError::Conservation { quantity: what.into(), drift, tol });
    }
    Ok(())
}

fn snapshot_table(sim: &Simulation) -> CsvTable {
    let grid = sim.operator().grid();
    match (sim.state(), sim.phase_grid()) {
        (State::Homogeneous(f), _) => {
            let mut t = CsvTable::new(["v", "f"]);
            for (j, x) in f.iter().enumerate() {
                t.push_values(&[grid.velocity(j), *x]);
            }
            t
        }
        (State::Kinetic(f), Some(pg)) => {
            let mut t = CsvTable::new(["x", "v", "f"]);
            for i in 0..pg.nx() {
                for j in 0..grid.len() {
                    t.push_values(&[pg.x(i), grid.velocity(j), f.values()[(i, j)]]);
                }
            }
            t
        }
        _ => unreachable!(),
    }
}

/// Name of the marker written after a run passes its conservation check.
pub const SUCCESS_MARKER: &str = "SUCCESS";

/// Runs `cfg`, writing `trace.csv` and snapshots into `out_dir`; the
/// success marker is written only if the conservation check passes.
pub fn run_and_record(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    let marker = out_dir.join(SUCCESS_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker)?;
    }
    let mut sim = Simulation::new(cfg.clone())?;
    let every = cfg.snapshot_every;
    let summary = run(&mut sim, |s| {
        let n = s.steps_taken();
        if every > 0 && (n % every == 0 || n == s.config().steps()) {
            snapshot_table(s).with_config(cfg.describe()).write(&out_dir.join(format!("snapshot_t{:.6}.csv", s.time())))?;
        }
        Ok(())
    })?;
    let mut trace = CsvTable::new(TraceRow::HEADER).with_config(cfg.describe());
    for row in &summary.trace {
        trace.push_values(&row.fields());
    }
    trace.write(&out_dir.join("trace.csv"))?;
    if let Some(e) = summary.errors {
        log::info!("reference errors: L∞ {:e}, ℓ²(M⁻¹) {:e}", e.linf, e.l2mu);
    }
    let worst_min = summary.trace.iter().map(|r| r.min_f).fold(f64::INFINITY, f64::min);
    if worst_min < 0.0 {
        log::warn!("negative values observed (min {worst_min:e})");
    }
    check_conservation(cfg, &summary)?;
    std::fs::write(&marker, "ok\n")?;
    Ok(summary)
}
