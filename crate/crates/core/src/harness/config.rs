//! Run configuration: a flat TOML document of `key = value` pairs.

use std::path::PathBuf;

use toml::{Table, Value};

use crate::error::{LfpError, Result};
use crate::fractional_weights::VelocityGrid;
use crate::stable_density::AlphaParam;

/// Equation being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Homogeneous,
    Kinetic,
}

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    SemiLagrangian,
}

/// Initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// `f = M` (constant in `x` for the kinetic model).
    Equilibrium,
    /// Relaxing mixture of stable laws at `t = 0`.
    Tc1,
    /// `½·1_{[−3,−1]} + ¼·1_{[0,4]}`.
    Tc2,
    /// Kinetic Cauchy-family reference at `t = 0`.
    Tc3,
    /// CSV file with a `v,f` header (homogeneous) or `x,v,f` (kinetic).
    File(PathBuf),
}

/// How the time step follows the velocity step in convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtRefinement {
    Linear,
    Quadratic,
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub scheme: Scheme,
    pub alpha: AlphaParam,
    pub h: f64,
    pub j_max: usize,
    pub k_ratio: f64,
    pub gamma_decay: f64,
    pub nx: usize,
    pub period: f64,
    pub dt: f64,
    pub t_final: f64,
    pub init: InitSpec,
    pub output: String,
    pub seed: u64,
    /// Steps between reference comparisons (the final step is always compared).
    pub compare_every: usize,
    /// Steps between snapshot files; 0 disables snapshots.
    pub snapshot_every: usize,
    pub energy: (f64, f64, f64),
    pub tc3: (f64, f64, f64),
    pub dt_refinement: DtRefinement,
    pub decay_window: (f64, f64),
    pub tail_vmin: f64,
}

/// Keys accepted by [`parse_config`].
pub const KNOWN_KEYS: &[&str] = &[
    "model", "scheme", "alpha", "h", "J", "L", "K_ratio", "gamma_decay", "nx", "period", "dt", "T", "init", "output", "seed", "compare_every",
    "snapshot_every", "energy_a", "energy_b", "energy_c", "t0", "x0", "v0", "dt_refinement", "decay_window_start", "decay_window_end", "tail_vmin",
];

impl RunConfig {
    /// Velocity grid with `K = round(K_ratio · J) + 1`, rounded up to odd.
    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        let k = (self.k_ratio * self.j_max as f64).round() as usize + 1;
        VelocityGrid::new(self.h, self.j_max, Some(k))
    }

    pub fn half_width(&self) -> f64 {
        self.h * self.j_max as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Key/value lines describing the resolved configuration.
    pub fn describe(&self) -> Vec<String> {
        let init = match &self.init {
            InitSpec::Equilibrium => "equilibrium".to_string(),
            InitSpec::Tc1 => "tc1".into(),
            InitSpec::Tc2 => "tc2".into(),
            InitSpec::Tc3 => "tc3".into(),
            InitSpec::File(p) => format!("file:{}", p.display()),
        };
        vec![
            format!("model = \"{}\"", if self.model == Model::Homogeneous { "homogeneous" } else { "kinetic" }),
            format!("scheme = \"{}\"", if self.scheme == Scheme::Euler { "euler" } else { "sl" }),
            format!("alpha = {}", self.alpha.value()),
            format!("h = {}", self.h),
            format!("J = {}", self.j_max),
            format!("K_ratio = {}", self.k_ratio),
            format!("gamma_decay = {}", self.gamma_decay),
            format!("nx = {}", self.nx),
            format!("period = {}", self.period),
            format!("dt = {}", self.dt),
            format!("T = {}", self.t_final),
            format!("init = \"{init}\""),
            format!("output = \"{}\"", self.output),
            format!("seed = {}", self.seed),
            format!("compare_every = {}", self.compare_every),
            format!("snapshot_every = {}", self.snapshot_every),
            format!("energy_a = {}", self.energy.0),
            format!("energy_b = {}", self.energy.1),
            format!("energy_c = {}", self.energy.2),
            format!("t0 = {}", self.tc3.0),
            format!("x0 = {}", self.tc3.1),
            format!("v0 = {}", self.tc3.2),
            format!("dt_refinement = \"{}\"", if self.dt_refinement == DtRefinement::Linear { "linear" } else { "quadratic" }),
            format!("decay_window_start = {}", self.decay_window.0),
            format!("decay_window_end = {}", self.decay_window.1),
            format!("tail_vmin = {}", self.tail_vmin),
        ]
    }

    /// TOML text that parses back to this configuration.
    pub fn to_toml(&self) -> String {
        self.describe().join("\n") + "\n"
    }
}

struct Reader<'a> {
    table: &'a Table,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn float(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.errors.push(format!("`{key}` must be a number, got {other}"));
                None
            }
        }
    }

    fn uint(&mut self, key: &str) -> Option<usize> {
        match self.table.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                self.errors.push(format!("`{key}` must be a nonnegative integer, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.errors.push(format!("`{key}` must be a string, got {other}"));
                None
            }
        }
    }
}

/// Parses and validates a configuration, reporting every violation at once.
///
/// Velocity resolution is given by any two of `h`, `J`, `L`; `K_ratio`
/// defaults to 10 and `gamma_decay` to `1 + alpha`.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    parse_config_with_overrides(source, "")
}

/// Like [`parse_config`], with the keys of a second document replacing
/// those of the first.
pub fn parse_config_with_overrides(source: &str, overrides: &str) -> Result<RunConfig> {
    let parse = |text: &str| -> Result<Table> { text.parse().map_err(|e: toml::de::Error| LfpError::Config(vec![format!("malformed document: {e}")])) };
    let mut table = parse(source)?;
    for (k, v) in parse(overrides)? {
        table.insert(k, v);
    }
    validate(&table)
}

fn validate(table: &Table) -> Result<RunConfig> {
    let mut r = Reader { table, errors: Vec::new() };

    let unknown: Vec<&String> = table.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())).collect();
    if !unknown.is_empty() {
        r.errors.push(format!("unknown keys: {}", unknown.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")));
    }

    let model = match r.string("model").as_deref() {
        None | Some("homogeneous") => Model::Homogeneous,
        Some("kinetic") => Model::Kinetic,
        Some(other) => {
            r.errors.push(format!("`model` must be homogeneous or kinetic, got {other}"));
            Model::Homogeneous
        }
    };
    let scheme = match r.string("scheme").as_deref() {
        None | Some("euler") => Scheme::Euler,
        Some("sl") => Scheme::SemiLagrangian,
        Some(other) => {
            r.errors.push(format!("`scheme` must be euler or sl, got {other}"));
            Scheme::Euler
        }
    };
    if model == Model::Homogeneous && scheme == Scheme::SemiLagrangian {
        r.errors.push("the semi-Lagrangian scheme applies to the kinetic model only".into());
    }

    let alpha_raw = r.float("alpha").unwrap_or(1.0);
    let alpha = match AlphaParam::new(alpha_raw) {
        Ok(a) => a,
        Err(_) => {
            r.errors.push(format!("`alpha` must lie in (0, 2], got {alpha_raw}"));
            AlphaParam::new(1.0).expect("valid")
        }
    };

    let (h, j, l) = (r.float("h"), r.uint("J"), r.float("L"));
    let (h, j_max) = match (h, j, l) {
        (Some(h), Some(j), None) => (h, j),
        (Some(h), None, Some(l)) => (h, (l / h).round().max(0.0) as usize),
        (None, Some(j), Some(l)) => (if j > 0 { l / j as f64 } else { f64::NAN }, j),
        (Some(h), Some(j), Some(l)) => {
            if ((h * j as f64) - l).abs() > 1e-9 * l.abs() {
                r.errors.push(format!("inconsistent velocity grid: h·J = {} but L = {l}", h * j as f64));
            }
            (h, j)
        }
        _ => {
            r.errors.push("velocity grid needs two of `h`, `J`, `L`".into());
            (1.0, 1)
        }
    };
    if !(h > 0.0 && h.is_finite()) {
        r.errors.push(format!("velocity step must be positive, got {h}"));
    }
    if j_max == 0 {
        r.errors.push("velocity grid needs J ≥ 1".into());
    }
    let k_ratio = r.float("K_ratio").unwrap_or(10.0);
    if !(k_ratio >= 2.0) {
        r.errors.push(format!("`K_ratio` must be at least 2 so that K ≥ 2J, got {k_ratio}"));
    }
    let gamma_decay = r.float("gamma_decay").unwrap_or(1.0 + alpha.value());
    if !(gamma_decay > 0.0) {
        r.errors.push(format!("`gamma_decay` must be positive, got {gamma_decay}"));
    }

    let nx = r.uint("nx").unwrap_or(129);
    if model == Model::Kinetic {
        if nx < 3 {
            r.errors.push(format!("`nx` must be at least 3, got {nx}"));
        }
        if scheme == Scheme::Euler && nx % 2 == 0 {
            r.errors.push(format!("`nx` = {nx} is even: the Eulerian kinetic scheme requires an odd number of space cells"));
        }
    }
    let period = r.float("period").unwrap_or(1.0);
    if !(period > 0.0) {
        r.errors.push(format!("`period` must be positive, got {period}"));
    }

    let dt = r.float("dt").unwrap_or(1e-2);
    if !(dt > 0.0) {
        r.errors.push(format!("`dt` must be positive, got {dt}"));
    }
    let t_final = r.float("T").unwrap_or(1.0);
    if !(t_final >= 0.0) {
        r.errors.push(format!("`T` must be nonnegative, got {t_final}"));
    }

    let init = match r.string("init").as_deref() {
        None | Some("equilibrium") => InitSpec::Equilibrium,
        Some("tc1") => InitSpec::Tc1,
        Some("tc2") => InitSpec::Tc2,
        Some("tc3") => InitSpec::Tc3,
        Some(s) if s.starts_with("file:") => InitSpec::File(PathBuf::from(&s[5..])),
        Some(other) => {
            r.errors.push(format!("`init` must be equilibrium, tc1, tc2, tc3 or file:<path>, got {other}"));
            InitSpec::Equilibrium
        }
    };
    match (&init, model) {
        (InitSpec::Tc1 | InitSpec::Tc2, Model::Kinetic) => r.errors.push("presets tc1 and tc2 are homogeneous".into()),
        (InitSpec::Tc3, Model::Homogeneous) => r.errors.push("preset tc3 is kinetic".into()),
        _ => {}
    }
    if init == InitSpec::Tc3 && alpha.value() != 1.0 {
        r.errors.push("preset tc3 is an exact solution only for alpha = 1".into());
    }

    let output = r.string("output").unwrap_or_else(|| "lfp_run".into());
    let seed = r.uint("seed").unwrap_or(0) as u64;
    let compare_every = r.uint("compare_every").unwrap_or(10).max(1);
    let snapshot_every = r.uint("snapshot_every").unwrap_or(0);
    let energy = (r.float("energy_a").unwrap_or(1.0), r.float("energy_b").unwrap_or(0.05), r.float("energy_c").unwrap_or(0.1));
    if !(energy.0 > 0.0 && energy.1 > 0.0 && energy.2 * energy.2 < energy.0 * energy.1) {
        r.errors.push(format!("energy coefficients need a, b > 0 and c² < ab, got {energy:?}"));
    }
    let tc3 = (r.float("t0").unwrap_or(0.5), r.float("x0").unwrap_or(0.0), r.float("v0").unwrap_or(1.0));
    if !(tc3.0 > 0.0) {
        r.errors.push(format!("`t0` must be positive, got {}", tc3.0));
    }
    let dt_refinement = match r.string("dt_refinement").as_deref() {
        None | Some("quadratic") => DtRefinement::Quadratic,
        Some("linear") => DtRefinement::Linear,
        Some(other) => {
            r.errors.push(format!("`dt_refinement` must be linear or quadratic, got {other}"));
            DtRefinement::Quadratic
        }
    };
    let decay_window = (r.float("decay_window_start").unwrap_or(5.0), r.float("decay_window_end").unwrap_or(30.0));
    if !(decay_window.1 > decay_window.0) {
        r.errors.push(format!("decay window must be increasing, got {decay_window:?}"));
    }
    let tail_vmin = r.float("tail_vmin").unwrap_or(10.0);

    if !r.errors.is_empty() {
        return Err(LfpError::Config(r.errors));
    }
    Ok(RunConfig {
        model,
        scheme,
        alpha,
        h,
        j_max,
        k_ratio,
        gamma_decay,
        nx,
        period,
        dt,
        t_final,
        init,
        output,
        seed,
        compare_every,
        snapshot_every,
        energy,
        tc3,
        dt_refinement,
        decay_window,
        tail_vmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(src: &str) -> Vec<String> {
        match parse_config(src) {
            Err(LfpError::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_homogeneous_defaults() {
        let cfg = parse_config("alpha = 0.8\nh = 0.5\nL = 16\n").unwrap();
        assert_eq!(cfg.j_max, 32);
        assert_eq!(cfg.velocity_grid().unwrap().k_max(), 321);
        assert!((cfg.gamma_decay - 1.8).abs() < 1e-15);
        assert_eq!(cfg.model, Model::Homogeneous);
    }

    #[test]
    fn even_nx_rejected_for_euler() {
        let v = violations("model = \"kinetic\"\nh = 0.5\nJ = 8\nnx = 128\n");
        assert!(v.iter().any(|m| m.contains("odd")), "{v:?}");
        assert!(parse_config("model = \"kinetic\"\nscheme = \"sl\"\nh = 0.5\nJ = 8\nnx = 128\n").is_ok());
    }

    #[test]
    fn all_violations_reported() {
        let v = violations("alpha = 2.5\nh = 0.5\nJ = 8\nbogus = 1\ndt = -1\n");
        assert!(v.iter().any(|m| m.contains("alpha")));
        assert!(v.iter().any(|m| m.contains("bogus")));
        assert!(v.iter().any(|m| m.contains("dt")));
    }

    #[test]
    fn overrides_replace_keys() {
        let cfg = parse_config_with_overrides("alpha = 0.8\nh = 0.5\nJ = 32\n", "alpha = 1.5\n").unwrap();
        assert_eq!(cfg.alpha.value(), 1.5);
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config("model = \"kinetic\"\nalpha = 1\nh = 0.5\nJ = 32\nnx = 129\ninit = \"tc3\"\nperiod = 6.283185307179586\n").unwrap();
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}
