//! `lfp`: command-line front end for the Lévy–Fokker–Planck solvers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lfp_core::fractional_weights::{build_weights, VelocityGrid};
use lfp_core::harness::{
    parse_config_with_overrides, probe_constants, run_and_record, run_convergence_study, run_decay_study, run_probe_suite, run_tail_study, CsvTable, ProbeSuite, RunConfig,
};
use lfp_core::integrators::PhaseGrid;
use lfp_core::lfp_operator::assemble_lfp;
use lfp_core::reference::{sample_kinetic, HomogeneousReference, Tc1Params, Tc3Params};
use lfp_core::stable_density::{eval_density, AlphaParam};

#[derive(Parser)]
#[command(name = "lfp", version, about = "Structure-preserving solvers for the fractional Fokker-Planck equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the stable density on a uniform grid.
    Density {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        vmin: f64,
        #[arg(long, default_value_t = 10.0)]
        vmax: f64,
        #[arg(long, default_value_t = 201)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the quadrature weights for k = 1..K.
    Weights {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "K")]
        k_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the truncated operator and its companions.
    Operator {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "J")]
        j_max: usize,
        #[arg(long = "K")]
        k_max: Option<usize>,
        #[arg(long)]
        gamma_decay: Option<f64>,
        /// Output prefix; writes `<prefix>_L.csv`, `_M.csv`, `_VM.csv`, `_IL.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Functional-inequality probes on the test battery at h and h/2.
    Probe {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "J")]
        j_max: usize,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time-integrate one configuration into an output directory.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample an exact solution.
    Reference {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "J")]
        j_max: usize,
        #[arg(long, default_value_t = 129)]
        nx: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        period: f64,
        #[arg(long, default_value_t = 0.5)]
        t0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        v0: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-refinement study against an exact solution.
    Convergence {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Fail unless the fitted order over the last three levels reaches this.
        #[arg(long)]
        min_order: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance to equilibrium over time with fitted decay rates.
    Decay {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Fail unless the fit over the window reaches this R².
        #[arg(long)]
        min_r2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Log-log tail slopes at the requested times.
    Tails {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        times: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Poincare,
    Interp,
    Commutator,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Tc1,
    Tc3,
}

/// Configuration file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "J")]
    j_max: Option<usize>,
    #[arg(long = "L")]
    half_width: Option<f64>,
    #[arg(long = "K-ratio")]
    k_ratio: Option<f64>,
    #[arg(long)]
    gamma_decay: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Preset name or `file:<path>`.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        let mut o = String::new();
        let mut num = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push_str(&format!("{k} = {v}\n"));
            }
        };
        let float = |x: Option<f64>| x.map(|x| format!("{x:?}"));
        num("alpha", float(self.alpha));
        num("h", float(self.h));
        num("J", self.j_max.map(|x| x.to_string()));
        num("L", float(self.half_width));
        num("K_ratio", float(self.k_ratio));
        num("gamma_decay", float(self.gamma_decay));
        num("nx", self.nx.map(|x| x.to_string()));
        num("period", float(self.period));
        num("dt", float(self.dt));
        num("T", float(self.t_final));
        num("seed", self.seed.map(|x| x.to_string()));
        num("snapshot_every", self.snapshot_every.map(|x| x.to_string()));
        let quoted = |s: &Option<String>| s.as_ref().map(|s| toml_string(s));
        num("model", quoted(&self.model));
        num("scheme", quoted(&self.scheme));
        num("init", quoted(&self.init));
        Ok(parse_config_with_overrides(&base, &o)?)
    }
}

fn toml_string(s: &str) -> String {
    let escaped: String = s.chars().flat_map(|c| if c == '"' || c == '\\' { vec!['\\', c] } else { vec![c] }).collect();
    format!("\"{escaped}\"")
}

fn write(table: &CsvTable, path: &Path) -> Result<()> {
    table.write(path).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs a subcommand; `Ok(false)` means an embedded assertion failed.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Density { alpha, vmin, vmax, n, out } => {
            let a = AlphaParam::new(alpha)?;
            if n < 2 || !(vmax > vmin) {
                bail!("need n ≥ 2 and vmax > vmin");
            }
            let mut t = CsvTable::new(["v", "mu"]).with_config(vec![format!("alpha = {alpha}")]);
            for k in 0..n {
                let v = vmin + (vmax - vmin) * k as f64 / (n - 1) as f64;
                t.push_values(&[v, eval_density(a, v)?]);
            }
            write(&t, &out)?;
            Ok(true)
        }
        Command::Weights { alpha, h, k_max, out } => {
            let w = build_weights(AlphaParam::new(alpha)?, h, k_max)?;
            let mut t = CsvTable::new(["k", "beta_k", "beta_k_scaled"]).with_config(vec![format!("alpha = {alpha}"), format!("h = {h}"), format!("K = {k_max}")]);
            for k in 1..=k_max as i64 {
                t.push_row(vec![k.to_string(), lfp_core::harness::csv::format_value(w.beta(k)), lfp_core::harness::csv::format_value(w.scaled(k))]);
            }
            write(&t, &out)?;
            Ok(w.interior().iter().all(|&b| b > 0.0) || alpha == 2.0)
        }
        Command::Operator { alpha, h, j_max, k_max, gamma_decay, out } => {
            let a = AlphaParam::new(alpha)?;
            let grid = VelocityGrid::new(h, j_max, k_max)?;
            let op = assemble_lfp(a, &grid, gamma_decay.unwrap_or(1.0 + alpha))?;
            let config = vec![format!("alpha = {alpha}"), format!("h = {h}"), format!("J = {j_max}"), format!("K = {}", grid.k_max())];
            let n = grid.len();
            let mut lt = CsvTable::new((0..n).map(|j| format!("col{j}"))).with_config(config.clone());
            for r in 0..n {
                lt.push_values(&op.matrix().row(r).iter().copied().collect::<Vec<_>>());
            }
            write(&lt, &with_suffix(&out, "_L.csv"))?;
            let mut mt = CsvTable::new(["v", "M"]).with_config(config.clone());
            for (j, m) in op.equilibrium().iter().enumerate() {
                mt.push_values(&[grid.velocity(j), *m]);
            }
            write(&mt, &with_suffix(&out, "_M.csv"))?;
            let mut vt = CsvTable::new(["v_half", "VM"]).with_config(config.clone());
            for (m, x) in op.vm().iter().enumerate() {
                vt.push_values(&[(m as f64 - j_max as f64 + 0.5) * h, *x]);
            }
            write(&vt, &with_suffix(&out, "_VM.csv"))?;
            let mut it = CsvTable::new(["I_L"]).with_config(config);
            it.push_values(&[op.exterior_mass()]);
            write(&it, &with_suffix(&out, "_IL.csv"))?;
            let lm = op.apply(op.equilibrium())?;
            let mmax = op.equilibrium().iter().copied().fold(0.0, f64::max);
            let residual = lm.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            log::info!("‖L M‖∞ / ‖M‖∞ = {:e}", residual / mmax);
            Ok(residual <= 1e-12 * mmax)
        }
        Command::Probe { alpha, h, j_max, suite, out } => {
            let suite = match suite {
                SuiteArg::Poincare => ProbeSuite::Poincare,
                SuiteArg::Interp => ProbeSuite::Interpolation,
                SuiteArg::Commutator => ProbeSuite::Commutator,
            };
            let rows = run_probe_suite(AlphaParam::new(alpha)?, h, j_max, suite)?;
            let mut t = CsvTable::new(["test_id", "ratio_h", "ratio_h/2"]).with_config(vec![format!("alpha = {alpha}"), format!("h = {h}"), format!("J = {j_max}")]);
            for r in &rows {
                t.push_row(vec![r.test_id.clone(), lfp_core::harness::csv::format_value(r.ratio_h), lfp_core::harness::csv::format_value(r.ratio_half)]);
            }
            let bounded = rows.iter().all(|r| r.ratio_h.is_finite() && r.ratio_half.is_finite());
            let (c_h, c_half) = probe_constants(&rows);
            println!("battery constants: {c_h:e} at h, {c_half:e} at h/2");
            let ok = bounded && c_h > 0.0 && c_half > 0.0 && c_h.max(c_half) < 2.0 * c_h.min(c_half);
            write(&t, &out)?;
            Ok(ok)
        }
        Command::Run { cfg, out } => {
            let cfg = cfg.resolve()?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let summary = run_and_record(&cfg, &dir)?;
            if let Some(e) = summary.errors {
                println!("reference error: L∞ {:e}, ℓ²(M⁻¹) {:e}", e.linf, e.l2mu);
            }
            println!("weighted mass drift {:e}; runtime {:.2} s", summary.weighted_mass_drift, summary.runtime_seconds);
            Ok(true)
        }
        Command::Reference { case, alpha, t, h, j_max, nx, period, t0, x0, v0, out } => {
            let grid = VelocityGrid::new(h, j_max, None)?;
            let table = match case {
                CaseArg::Tc1 => {
                    let p = Tc1Params::standard(AlphaParam::new(alpha)?);
                    let f = HomogeneousReference::new(&p).sample(t, &grid)?;
                    let mut tab = CsvTable::new(["v", "f"]).with_config(vec![format!("case = tc1"), format!("alpha = {alpha}"), format!("t = {t}")]);
                    for (j, x) in f.iter().enumerate() {
                        tab.push_values(&[grid.velocity(j), *x]);
                    }
                    tab
                }
                CaseArg::Tc3 => {
                    let pg = PhaseGrid::new(nx, period, grid.clone())?;
                    let p = Tc3Params { t0, x0, v0 };
                    let f = sample_kinetic(&p, t, &pg)?;
                    let mut tab = CsvTable::new(["x", "v", "f"]).with_config(vec![
                        "case = tc3".to_string(),
                        format!("t = {t}"),
                        format!("t0 = {t0}"),
                        format!("x0 = {x0}"),
                        format!("v0 = {v0}"),
                    ]);
                    for i in 0..nx {
                        for j in 0..grid.len() {
                            tab.push_values(&[pg.x(i), grid.velocity(j), f.values()[(i, j)]]);
                        }
                    }
                    tab
                }
            };
            write(&table, &out)?;
            Ok(true)
        }
        Command::Convergence { cfg, levels, min_order, out } => {
            let cfg = cfg.resolve()?;
            let report = run_convergence_study(&cfg, levels)?;
            write(&report.to_csv(cfg.describe()), &out)?;
            for r in &report.rows {
                println!("h = {:<10} L∞ {:.4e}  ℓ²(M⁻¹) {:.4e}  order {:.3}  ({:.1} s)", r.h, r.error_linf, r.error_l2mu, r.observed_order, r.runtime_seconds);
            }
            if let Some(e) = &report.failure {
                eprintln!("{e}");
                return Ok(false);
            }
            let mut ok = report.rows.iter().all(|r| r.mass_drift <= 1e-10);
            if let Some(target) = min_order {
                let order = report.fitted_order(3);
                println!("fitted order over the last three levels: {order:.3}");
                ok &= order >= target;
            }
            Ok(ok)
        }
        Command::Decay { cfg, min_r2, out } => {
            let cfg = cfg.resolve()?;
            let report = run_decay_study(&cfg)?;
            write(&report.to_csv(cfg.describe()), &out)?;
            if let Some(fit) = report.fit {
                println!("decay rate {:.4} (R² {:.6})", -fit.slope, fit.r_squared);
            }
            if let Some(r) = report.reference_rate() {
                println!("reference rate {r:.4}");
            }
            let mut ok = lfp_core::harness::check_conservation(&cfg, &report.summary).is_ok();
            if let Some(target) = min_r2 {
                ok &= report.fit.is_some_and(|f| f.r_squared >= target);
            }
            Ok(ok)
        }
        Command::Tails { cfg, times, out } => {
            let cfg = cfg.resolve()?;
            let fits = run_tail_study(&cfg, &times)?;
            let mut t = CsvTable::new(["t", "slope_right", "slope_left", "note"]).with_config(cfg.describe());
            for f in &fits {
                let fmt = |x: Option<f64>| lfp_core::harness::csv::format_value(x.unwrap_or(f64::NAN));
                t.push_row(vec![lfp_core::harness::csv::format_value(f.t), fmt(f.right), fmt(f.left), f.note.clone().unwrap_or_default()]);
                println!("t = {}: slopes {:?} / {:?}", f.t, f.right, f.left);
            }
            write(&t, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("an embedded check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
