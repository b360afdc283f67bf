//! A single time-dependent run assembled from a [`RunConfig`].

use std::time::Instant;

use crate::discrete_analysis::{diff, hypocoercivity_energy, DiffMode, EnergyCoefficients};
use crate::error::{LfpError, Result};
use crate::integrators::{DistributionXV, ImplicitEuler, KineticEuler, PhaseGrid, SemiLagrangian};
use crate::lfp_operator::{assemble_lfp, LfpOperator};
use crate::reference::{error_norms, error_norms_xv, sample_kinetic, ErrorNorms, HomogeneousReference, Tc1Params, Tc3Params};

use super::config::{InitSpec, Model, RunConfig, Scheme};

/// Scheme state: a velocity profile or phase-space samples.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Homogeneous(Vec<f64>),
    Kinetic(DistributionXV),
}

#[derive(Debug)]
enum Stepper {
    Homogeneous(ImplicitEuler),
    KineticEuler(Box<KineticEuler>),
    SemiLagrangian(Box<SemiLagrangian>),
}

#[derive(Debug, Clone)]
enum Reference {
    Tc1(Tc1Params),
    Tc3(Tc3Params),
    Stationary(State),
    Unknown,
}

/// One row of `trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub mass: f64,
    pub weighted_mass: f64,
    pub l2m: f64,
    pub henergy: f64,
    pub min_f: f64,
}

impl TraceRow {
    pub const HEADER: [&'static str; 6] = ["t", "mass", "weighted_mass", "l2M", "Henergy", "min_f"];

    pub fn fields(&self) -> [f64; 6] {
        [self.t, self.mass, self.weighted_mass, self.l2m, self.henergy, self.min_f]
    }
}

/// Time stepper, state and bookkeeping for one configuration.
#[derive(Debug)]
pub struct Simulation {
    config: RunConfig,
    op: LfpOperator,
    phase: Option<PhaseGrid>,
    stepper: Stepper,
    state: State,
    reference: Reference,
    energy: EnergyCoefficients,
    steps_taken: usize,
}

fn indicator_tc2(v: f64) -> f64 {
    let mut f = 0.0;
    if (-3.0..=-1.0).contains(&v) {
        f += 0.5;
    }
    if (0.0..=4.0).contains(&v) {
        f += 0.25;
    }
    f
}

fn read_initial_file(path: &std::path::Path, cfg: &RunConfig, phase: Option<&PhaseGrid>) -> Result<State> {
    let text = std::fs::read_to_string(path)?;
    let grid = cfg.velocity_grid()?;
    let mut rows = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = rows.next().ok_or_else(|| LfpError::Config(vec![format!("{}: empty file", path.display())]))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let parse_row = |line: &str| -> Result<Vec<f64>> {
        line.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| LfpError::Config(vec![format!("{}: bad number {s:?}: {e}", path.display())])))
            .collect()
    };
    let vindex = |v: f64| -> Result<usize> {
        let pos = v / grid.h() + grid.j_max() as f64;
        let idx = pos.round();
        if (pos - idx).abs() > 1e-6 || idx < 0.0 || idx as usize >= grid.len() {
            return Err(LfpError::Config(vec![format!("{}: velocity {v} is not a grid node", path.display())]));
        }
        Ok(idx as usize)
    };
    match (cfg.model, phase) {
        (Model::Homogeneous, _) => {
            if cols != ["v", "f"] {
                return Err(LfpError::Config(vec![format!("{}: expected header v,f", path.display())]));
            }
            let mut f = vec![f64::NAN; grid.len()];
            for line in rows {
                let r = parse_row(line)?;
                crate::error::check_len(2, r.len())?;
                f[vindex(r[0])?] = r[1];
            }
            if f.iter().any(|x| x.is_nan()) {
                return Err(LfpError::Config(vec![format!("{}: some grid velocities have no value", path.display())]));
            }
            Ok(State::Homogeneous(f))
        }
        (Model::Kinetic, Some(pg)) => {
            if cols != ["x", "v", "f"] {
                return Err(LfpError::Config(vec![format!("{}: expected header x,v,f", path.display())]));
            }
            let mut f = nalgebra::DMatrix::from_element(pg.nx(), grid.len(), f64::NAN);
            for line in rows {
                let r = parse_row(line)?;
                crate::error::check_len(3, r.len())?;
                let ipos = r[0] / pg.dx();
                let i = ipos.round();
                if (ipos - i).abs() > 1e-6 || i < 0.0 || i as usize >= pg.nx() {
                    return Err(LfpError::Config(vec![format!("{}: position {} is not a grid node", path.display(), r[0])]));
                }
                f[(i as usize, vindex(r[1])?)] = r[2];
            }
            if f.iter().any(|x| x.is_nan()) {
                return Err(LfpError::Config(vec![format!("{}: some grid nodes have no value", path.display())]));
            }
            Ok(State::Kinetic(DistributionXV::new(f)))
        }
        (Model::Kinetic, None) => unreachable!("kinetic runs always carry a phase grid"),
    }
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        let grid = config.velocity_grid()?;
        let op = assemble_lfp(config.alpha, &grid, config.gamma_decay)?;
        let energy = EnergyCoefficients::new(config.energy.0, config.energy.1, config.energy.2)?;
        let phase = match config.model {
            Model::Homogeneous => None,
            Model::Kinetic => Some(PhaseGrid::new(config.nx, config.period, grid.clone())?),
        };
        let stepper = match (config.model, config.scheme, &phase) {
            (Model::Homogeneous, Scheme::Euler, _) => Stepper::Homogeneous(ImplicitEuler::new(&op, config.dt)?),
            (Model::Kinetic, Scheme::Euler, Some(pg)) => Stepper::KineticEuler(Box::new(KineticEuler::new(&op, pg, config.dt)?)),
            (Model::Kinetic, Scheme::SemiLagrangian, Some(pg)) => Stepper::SemiLagrangian(Box::new(SemiLagrangian::new(&op, pg, config.dt)?)),
            _ => return Err(LfpError::Config(vec!["the semi-Lagrangian scheme applies to the kinetic model only".into()])),
        };
        let m = op.equilibrium().to_vec();
        let (state, reference) = match (&config.init, &phase) {
            (InitSpec::Equilibrium, None) => (State::Homogeneous(m.clone()), Reference::Stationary(State::Homogeneous(m))),
            (InitSpec::Equilibrium, Some(pg)) => {
                let s = State::Kinetic(DistributionXV::uniform(pg, &m));
                (s.clone(), Reference::Stationary(s))
            }
            (InitSpec::Tc1, None) => {
                let p = Tc1Params::standard(config.alpha);
                (State::Homogeneous(HomogeneousReference::new(&p).sample(0.0, &grid)?), Reference::Tc1(p))
            }
            (InitSpec::Tc2, None) => (State::Homogeneous(grid.velocities().into_iter().map(indicator_tc2).collect()), Reference::Unknown),
            (InitSpec::Tc3, Some(pg)) => {
                let p = Tc3Params { t0: config.tc3.0, x0: config.tc3.1, v0: config.tc3.2 };
                (State::Kinetic(sample_kinetic(&p, 0.0, pg)?), Reference::Tc3(p))
            }
            (InitSpec::File(path), pg) => (read_initial_file(path, &config, pg.as_ref())?, Reference::Unknown),
            _ => return Err(LfpError::Config(vec!["initial preset does not match the model".into()])),
        };
        Ok(Self { config, op, phase, stepper, state, reference, energy, steps_taken: 0 })
    }

    /// Replaces the initial state (same shape required).
    pub fn with_state(mut self, state: State) -> Result<Self> {
        match (&self.state, &state) {
            (State::Homogeneous(a), State::Homogeneous(b)) => crate::error::check_len(a.len(), b.len())?,
            (State::Kinetic(a), State::Kinetic(b)) => crate::error::check_len(a.values().len(), b.values().len())?,
            _ => return Err(LfpError::Precondition("state kind does not match the model".into())),
        }
        self.reference = Reference::Unknown;
        self.state = state;
        self.steps_taken = 0;
        Ok(self)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn operator(&self) -> &LfpOperator {
        &self.op
    }

    pub fn phase_grid(&self) -> Option<&PhaseGrid> {
        self.phase.as_ref()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.config.dt
    }

    pub fn has_reference(&self) -> bool {
        !matches!(self.reference, Reference::Unknown)
    }

    pub fn step(&mut self) -> Result<()> {
        self.state = match (&self.stepper, &self.state) {
            (Stepper::Homogeneous(s), State::Homogeneous(f)) => State::Homogeneous(s.step(f)?),
            (Stepper::KineticEuler(s), State::Kinetic(f)) => State::Kinetic(s.step(f)?),
            (Stepper::SemiLagrangian(s), State::Kinetic(f)) => State::Kinetic(s.step(f)?),
            _ => unreachable!("stepper and state are built together"),
        };
        self.steps_taken += 1;
        Ok(())
    }

    /// `Σ f h` (times `Δx` in the kinetic case).
    pub fn total_mass(&self) -> f64 {
        match (&self.state, &self.phase) {
            (State::Homogeneous(f), _) => f.iter().sum::<f64>() * self.op.grid().h(),
            (State::Kinetic(f), Some(pg)) => f.total_mass(pg),
            _ => unreachable!(),
        }
    }

    /// Mass conserved by the truncated scheme.
    pub fn weighted_mass(&self) -> f64 {
        match (&self.state, &self.phase) {
            (State::Homogeneous(f), _) => self.op.weighted_mass(f),
            (State::Kinetic(f), Some(pg)) => f.weighted_mass(&self.op, pg),
            _ => unreachable!(),
        }
    }

    /// `f^∞ = (⟨f⟩ / ⟨M⟩) M`, constant in space.
    pub fn equilibrium_limit(&self) -> State {
        let m = self.op.equilibrium();
        let scale = self.weighted_mass() / self.op.weighted_mass(m);
        match &self.phase {
            None => State::Homogeneous(m.iter().map(|x| scale * x).collect()),
            Some(pg) => {
                let s = scale / pg.period();
                State::Kinetic(DistributionXV::uniform(pg, &m.iter().map(|x| s * x).collect::<Vec<_>>()))
            }
        }
    }

    fn l2m_of(&self, s: &State) -> f64 {
        let m = self.op.equilibrium();
        match (s, &self.phase) {
            (State::Homogeneous(f), _) => (f.iter().zip(m).map(|(a, b)| a * a / b).sum::<f64>() * self.op.grid().h()).sqrt(),
            (State::Kinetic(f), Some(pg)) => f.l2_norm(pg, m),
            _ => unreachable!(),
        }
    }

    fn minus(a: &State, b: &State) -> State {
        match (a, b) {
            (State::Homogeneous(x), State::Homogeneous(y)) => State::Homogeneous(x.iter().zip(y).map(|(p, q)| p - q).collect()),
            (State::Kinetic(x), State::Kinetic(y)) => State::Kinetic(DistributionXV::new(x.values() - y.values())),
            _ => unreachable!(),
        }
    }

    /// `‖f − f^∞‖` in `ℓ²(M⁻¹)`.
    pub fn distance_to_equilibrium(&self) -> f64 {
        self.l2m_of(&Self::minus(&self.state, &self.equilibrium_limit()))
    }

    /// Hypocoercivity energy of `f − f^∞`; the `x` terms vanish for the
    /// homogeneous model.
    pub fn energy(&self) -> Result<f64> {
        let g = Self::minus(&self.state, &self.equilibrium_limit());
        let m = self.op.equilibrium();
        match (&g, &self.phase) {
            (State::Homogeneous(f), _) => {
                let h = self.op.grid().h();
                let dv = diff(f, DiffMode::Centered, h);
                let norm2: f64 = f.iter().zip(m).map(|(a, b)| a * a / b).sum::<f64>() * h;
                let dv2: f64 = dv.iter().zip(m).map(|(a, b)| a * a / b).sum::<f64>() * h;
                Ok(norm2 + self.energy.b() * dv2)
            }
            (State::Kinetic(f), Some(pg)) => hypocoercivity_energy(f, &self.energy, pg, m),
            _ => unreachable!(),
        }
    }

    pub fn min_value(&self) -> f64 {
        match &self.state {
            State::Homogeneous(f) => f.iter().copied().fold(f64::INFINITY, f64::min),
            State::Kinetic(f) => f.min_value(),
        }
    }

    pub fn trace_row(&self) -> Result<TraceRow> {
        Ok(TraceRow {
            t: self.time(),
            mass: self.total_mass(),
            weighted_mass: self.weighted_mass(),
            l2m: self.l2m_of(&self.state),
            henergy: self.energy()?,
            min_f: self.min_value(),
        })
    }

    /// Reference solution at the current time, when one is known.
    pub fn reference_state(&self) -> Result<Option<State>> {
        let t = self.time();
        Ok(match (&self.reference, &self.phase) {
            (Reference::Tc1(p), _) => Some(State::Homogeneous(HomogeneousReference::new(p).sample(t, self.op.grid())?)),
            (Reference::Tc3(p), Some(pg)) => Some(State::Kinetic(sample_kinetic(p, t, pg)?)),
            (Reference::Stationary(s), _) => Some(s.clone()),
            _ => None,
        })
    }

    /// Errors against the reference at the current time.
    pub fn reference_errors(&self) -> Result<Option<ErrorNorms>> {
        let Some(r) = self.reference_state()? else { return Ok(None) };
        let m = self.op.equilibrium();
        Ok(Some(match (&self.state, &r, &self.phase) {
            (State::Homogeneous(f), State::Homogeneous(g), _) => error_norms(f, g, m, self.op.grid().h())?,
            (State::Kinetic(f), State::Kinetic(g), Some(pg)) => error_norms_xv(f, g, pg, m)?,
            _ => unreachable!(),
        }))
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub trace: Vec<TraceRow>,
    /// Sup over comparison times of the reference errors.
    pub errors: Option<ErrorNorms>,
    /// `|m(T) − m(0)| / |m(0)|` for the conserved (weighted) mass.
    pub weighted_mass_drift: f64,
    /// Largest one-step relative change of the conserved mass.
    pub max_step_mass_drift: f64,
    pub runtime_seconds: f64,
    pub final_state: State,
}

/// Advances `sim` to its final time, recording one trace row per step
/// and comparing with the reference every `compare_every` steps and at the
/// end. `on_step` sees the simulation after every step.
pub fn run(sim: &mut Simulation, mut on_step: impl FnMut(&Simulation) -> Result<()>) -> Result<RunSummary> {
    let start = Instant::now();
    let steps = sim.config.steps();
    let every = sim.config.compare_every;
    let mut trace = vec![sim.trace_row()?];
    let mut errors = sim.reference_errors()?;
    on_step(sim)?;
    let mut max_step_mass_drift: f64 = 0.0;
    for n in 1..=steps {
        let before = trace.last().expect("initial row").weighted_mass;
        sim.step()?;
        let row = sim.trace_row()?;
        max_step_mass_drift = max_step_mass_drift.max((row.weighted_mass - before).abs() / before.abs().max(f64::MIN_POSITIVE));
        trace.push(row);
        if n % every == 0 || n == steps {
            if let Some(e) = sim.reference_errors()? {
                errors = Some(errors.map_or(e, |acc| acc.max(e)));
            }
        }
        on_step(sim)?;
    }
    let m0 = trace[0].weighted_mass;
    let m1 = trace.last().expect("initial row").weighted_mass;
    Ok(RunSummary {
        weighted_mass_drift: (m1 - m0).abs() / m0.abs().max(f64::MIN_POSITIVE),
        max_step_mass_drift,
        errors,
        trace,
        runtime_seconds: start.elapsed().as_secs_f64(),
        final_state: sim.state.clone(),
    })
}
