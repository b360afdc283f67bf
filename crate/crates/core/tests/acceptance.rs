//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria run concurrently.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use lfp_core::discrete_analysis::{skew_form, sym_form, test_battery, weighted_inner, WeightSequence};
use lfp_core::fractional_weights::{build_weights, VelocityGrid};
use lfp_core::harness::{
    parse_config, probe_constants, run, run_convergence_study, run_decay_study, run_probe_suite, run_tail_study, ProbeSuite, RunConfig, Simulation,
};
use lfp_core::integrators::ImplicitEuler;
use lfp_core::lfp_operator::{assemble_lfp, exterior_mass, FullLineOperator};
use lfp_core::reference::{HomogeneousReference, Tc1Params};
use lfp_core::stable_density::{eval_density, exterior_mass_continuous, sample_equilibrium, AlphaParam, DensityEvaluator};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn alpha(a: f64) -> AlphaParam {
    AlphaParam::new(a).expect("valid alpha")
}

fn config(text: &str) -> RunConfig {
    parse_config(text).expect("valid configuration")
}

fn structure_preservation() -> Outcome {
    let mut worst_lm: f64 = 0.0;
    for a in [0.5, 0.8, 1.0, 1.5, 1.9, 2.0] {
        let grid = VelocityGrid::new(0.25, 64, None).unwrap();
        let op = assemble_lfp(alpha(a), &grid, 1.0 + a).unwrap();
        let m = op.equilibrium();
        let lm = op.apply(m).unwrap();
        let ratio = lm.iter().fold(0.0f64, |x, y| x.max(y.abs())) / m.iter().fold(0.0f64, |x, y| x.max(*y));
        worst_lm = worst_lm.max(ratio);
    }
    let a = alpha(1.0);
    let grid = VelocityGrid::new(0.25, 64, None).unwrap();
    let op = assemble_lfp(a, &grid, 2.0).unwrap();
    let stepper = ImplicitEuler::new(&op, 0.01).unwrap();
    let p = Tc1Params::standard(a);
    let mut f = HomogeneousReference::new(&p).sample(0.0, &grid).unwrap();
    let m = op.equilibrium().to_vec();
    let norm = |f: &[f64]| (f.iter().zip(&m).map(|(x, y)| x * x / y).sum::<f64>() * grid.h()).sqrt();
    let mass0 = op.weighted_mass(&f);
    let n0 = norm(&f);
    let mut prev = n0;
    let mut increases = 0;
    for _ in 0..1000 {
        f = stepper.step(&f).unwrap();
        let n = norm(&f);
        if n > prev + 1e-15 * n0 {
            increases += 1;
        }
        prev = n;
    }
    let drift = (op.weighted_mass(&f) - mass0).abs() / mass0;
    Outcome::new(
        worst_lm <= 1e-12 && drift <= 1e-10 && increases == 0,
        format!("max ‖LM‖∞/‖M‖∞ = {worst_lm:.2e}; weighted mass drift {drift:.2e} over 1000 steps; ℓ²(M⁻¹) increases: {increases}"),
    )
}

fn bilinear_decomposition() -> Outcome {
    let battery = test_battery();
    let (h, n) = (0.25, 64usize);
    let k = 10 * n + 1;
    let mut worst_identity: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut worst_skew: f64 = 0.0;
    for a in [0.8, 1.0, 1.5] {
        let op = FullLineOperator::new(alpha(a), h, k, n).unwrap();
        let gamma = WeightSequence::inverse_of(op.equilibrium()).unwrap();
        let (w, mx, vm) = (op.weights(), op.equilibrium_extended(), op.vm());
        // Shift 3 pairs no even member with the odd sinusoid, for which every
        // form vanishes identically.
        let pairs = (0..battery.len()).flat_map(|i| [(i, i), (i, (i + 3) % battery.len())]);
        for (i, j) in pairs {
            let f = battery[i].sample(h, n);
            let g = battery[j].sample(h, n);
            let lf = op.apply(&f).unwrap();
            let lhs = weighted_inner(&lf, &g, &gamma, h).unwrap();
            let s_fg = sym_form(&f, &g, w, mx, h, k).unwrap();
            let s_gf = sym_form(&g, &f, w, mx, h, k).unwrap();
            let a_fg = skew_form(&f, &g, w, mx, vm, h, k).unwrap();
            let a_gf = skew_form(&g, &f, w, mx, vm, h, k).unwrap();
            let scale = (sym_form(&f, &f, w, mx, h, k).unwrap() * sym_form(&g, &g, w, mx, h, k).unwrap()).sqrt();
            worst_identity = worst_identity.max((lhs + s_fg + a_fg).abs() / (s_fg.abs() + a_fg.abs() + 1e-30));
            worst_sym = worst_sym.max((s_fg - s_gf).abs() / scale);
            worst_skew = worst_skew.max((a_fg + a_gf).abs() / scale);
        }
    }
    Outcome::new(
        worst_identity <= 1e-10 && worst_sym <= 1e-12 && worst_skew <= 1e-12,
        format!("identity {worst_identity:.2e}, symmetry {worst_sym:.2e}, skew {worst_skew:.2e} (relative, 150 pairs)"),
    )
}

fn weight_correctness() -> Outcome {
    let w = build_weights(alpha(1.0), 1.0, 5).unwrap();
    let beta1_err = (w.beta(1) - (8.0 - 5.0 * 3f64.ln()) / TAU).abs();
    let mut worst_invariance: f64 = 0.0;
    let mut all_positive = true;
    for a in [0.5, 0.8, 1.0, 1.5, 1.9] {
        let tables: Vec<_> = [1.0, 0.37, 0.01].iter().map(|&h| build_weights(alpha(a), h, 10_001).unwrap()).collect();
        for k in 1..=10_000i64 {
            let base = tables[0].scaled(k);
            all_positive &= base > 0.0;
            for t in &tables[1..] {
                worst_invariance = worst_invariance.max((t.scaled(k) - base).abs() / base);
            }
        }
    }
    let h = 0.5;
    let near = build_weights(alpha(2.0 - 1e-4), h, 10_001).unwrap();
    let off: f64 = (2..=10_000).map(|k| near.beta(k)).sum();
    let off_ratio = off / near.beta(1);
    let limit_err = (near.beta(1) * h * h * h - 1.0).abs();
    Outcome::new(
        beta1_err <= 1e-12 && all_positive && worst_invariance <= 1e-12 && off_ratio <= 1e-3,
        format!(
            "β₁ error {beta1_err:.2e}; h-invariance {worst_invariance:.2e} (k ≤ 10⁴), positive: {all_positive}; at α = 2 − 10⁻⁴ off-nearest/nearest {off_ratio:.2e}, |h³β₁ − 1| = {limit_err:.2e}"
        ),
    )
}

const MESHES: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];
const TARGET_L2MU: [(f64, [f64; 6]); 3] = [
    (0.8, [0.1308892320513, 0.0893854869978074, 0.0317621402055704, 0.00957849730597995, 0.00257709819744217, 0.000660503532892379]),
    (1.0, [0.0858632105113834, 0.0403015619739594, 0.0123815047792652, 0.0033912378572473, 0.000872161814163415, 0.000237928501014633]),
    (1.5, [0.0899748047880546, 0.0285048330821137, 0.0077183775776165, 0.00197569917853812, 0.000497017182788124, 0.0001244523679925]),
];

fn homogeneous_convergence() -> Outcome {
    let results: Vec<(f64, Vec<f64>, f64, bool)> = std::thread::scope(|s| {
        let handles: Vec<_> = TARGET_L2MU
            .iter()
            .map(|(a, target)| {
                s.spawn(move || {
                    let base = config(&format!("alpha = {a}\nh = 1\nL = 16\ndt = 0.1\nT = 0.5\ninit = \"tc1\"\ncompare_every = 10\n"));
                    let report = run_convergence_study(&base, MESHES.len()).unwrap();
                    assert!(report.failure.is_none());
                    let errs: Vec<f64> = report.rows.iter().map(|r| r.error_l2mu).collect();
                    let within = errs.iter().zip(target).all(|(e, t)| e / t <= 2.0 && t / e <= 2.0);
                    (*a, errs, report.fitted_order(3), within)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("convergence thread")).collect()
    });
    let mut pass = true;
    let mut detail = Vec::new();
    for (a, errs, order, within) in results {
        pass &= within && order >= 1.8;
        detail.push(format!(
            "α={a}: errors [{}], within ×2: {within}, order(last 3) {order:.3}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

fn heavy_tails() -> Outcome {
    let cfg = config("alpha = 1.1\nL = 20\nJ = 512\ndt = 0.01\nT = 2\ninit = \"tc2\"\ntail_vmin = 10\n");
    let fits = run_tail_study(&cfg, &[2.0]).unwrap();
    let (r, l) = (fits[0].right, fits[0].left);
    let ok = |s: Option<f64>| s.is_some_and(|s| (s + 2.1).abs() <= 0.15);
    Outcome::new(ok(r) && ok(l), format!("slopes at t = 2: right {r:?}, left {l:?} (target −2.1 ± 0.15)"))
}

fn kinetic_eulerian() -> Outcome {
    let cfg = config(&format!(
        "model = \"kinetic\"\nalpha = 1\nL = 16\nJ = 32\nnx = 129\nperiod = {TAU}\ndt = 0.01\nT = 35\ninit = \"tc3\"\ncompare_every = 1\ndecay_window_start = 5\ndecay_window_end = 30\n"
    ));
    let report = run_decay_study(&cfg).unwrap();
    let err = report.summary.errors.expect("tc3 has a reference").linf;
    let fit = report.fit.expect("fit");
    let (rate, reference) = (-fit.slope, report.reference_rate().expect("reference fit"));
    let rel = (rate - reference).abs() / reference;
    Outcome::new(
        err <= 9e-2 && fit.r_squared >= 0.999 && rel <= 0.1,
        format!("L∞ error {err:.4e} (≤ 9e-2); decay rate {rate:.4} vs reference {reference:.4} ({:.1}%), R² {:.6}", 100.0 * rel, fit.r_squared),
    )
}

fn semi_lagrangian() -> Outcome {
    let rows = [(128usize, 16usize, 2.8e-1), (256, 32, 4.6e-2), (512, 64, 4.1e-2), (1024, 128, 1.4e-2)];
    let errs: Vec<(f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = rows
            .iter()
            .map(|&(nx, j, _)| {
                s.spawn(move || {
                    let cfg = config(&format!(
                        "model = \"kinetic\"\nscheme = \"sl\"\nalpha = 1\nL = 16\nJ = {j}\nnx = {nx}\nperiod = {TAU}\ndt = 0.001\nT = 3.5\ninit = \"tc3\"\ncompare_every = 10\n"
                    ));
                    let mut sim = Simulation::new(cfg).unwrap();
                    let summary = run(&mut sim, |_| Ok(())).unwrap();
                    (summary.errors.expect("reference").linf, summary.runtime_seconds)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("SL thread")).collect()
    });
    let within = errs.iter().zip(&rows).all(|((e, _), (_, _, t))| e / t <= 2.0 && t / e <= 2.0);
    let monotone = errs.windows(2).all(|w| w[1].0 <= w[0].0);
    let detail = errs
        .iter()
        .zip(&rows)
        .map(|((e, secs), (nx, j, t))| format!("{nx}×{}: {e:.3e} (target {t:.1e}, {secs:.0} s)", 2 * j + 1))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome::new(within && monotone, format!("{detail}; non-increasing: {monotone}"))
}

fn probes() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for a in [0.8, 1.0, 1.5] {
        for (name, suite) in [("Poincaré", ProbeSuite::Poincare), ("interpolation", ProbeSuite::Interpolation), ("commutator", ProbeSuite::Commutator)] {
            let rows = run_probe_suite(alpha(a), 0.25, 64, suite).unwrap();
            let bounded = rows.iter().all(|r| r.ratio_h.is_finite() && r.ratio_half.is_finite());
            let (c_h, c_half) = probe_constants(&rows);
            let variation = c_h.max(c_half) / c_h.min(c_half);
            pass &= bounded && c_h > 0.0 && c_half > 0.0 && variation < 2.0;
            detail.push(format!("α={a} {name}: sup {c_h:.3e} / {c_half:.3e} (×{variation:.3})"));
        }
    }
    Outcome::new(pass, detail.join("; "))
}

fn density_fidelity() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [1.0, 2.0] {
        let q = DensityEvaluator::new(alpha(a));
        for i in 0..=1000 {
            let v = -50.0 + 0.1 * i as f64;
            worst = worst.max((q.eval_quadrature(v).unwrap() - eval_density(alpha(a), v).unwrap()).abs());
        }
    }
    let grid = VelocityGrid::new(0.1, 1000, None).unwrap();
    let m = sample_equilibrium(alpha(1.0), &grid).unwrap();
    let i1 = exterior_mass(&m, 0.1).unwrap();
    let i2 = exterior_mass_continuous(alpha(2.0), 100.0).unwrap();
    let ok1 = i1 / 1e2 <= 1.5 && 1e2 / i1 <= 1.5;
    let ok2 = i2 / 5e-3 <= 2.0 && 5e-3 / i2 <= 2.0;
    Outcome::new(worst <= 1e-8 && ok1 && ok2, format!("quadrature vs closed form {worst:.2e}; I_1^100 = {i1:.4} (≈1e2 ×1.5), I_2^100 = {i2:.6} (≈5e-3 ×2)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("structure preservation", structure_preservation),
        ("bilinear decomposition", bilinear_decomposition),
        ("weight correctness", weight_correctness),
        ("homogeneous convergence", homogeneous_convergence),
        ("heavy tails", heavy_tails),
        ("kinetic Eulerian accuracy and decay", kinetic_eulerian),
        ("semi-Lagrangian table", semi_lagrangian),
        ("functional-inequality probes", probes),
        ("stable density fidelity", density_fidelity),
    ];
    let start = Instant::now();
    let outcomes: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
                        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
                        Outcome::new(false, format!("panicked: {msg}"))
                    });
                    (o, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failures = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&outcomes).enumerate() {
        failures += usize::from(!o.pass);
        println!("criterion {} [{name}]: {} ({secs:.1} s) {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} criteria passed in {:.0} s", criteria.len() - failures, criteria.len(), start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
