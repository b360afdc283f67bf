use lfp_core::fractional_weights::VelocityGrid;
use lfp_core::lfp_operator::{assemble_lfp, assemble_lfp_gaussian_limit, exterior_mass};
use lfp_core::reference::{exact_homogeneous, Tc1Params};
use lfp_core::stable_density::{eval_density, sample_equilibrium, AlphaParam};
use proptest::prelude::*;

fn alpha(a: f64) -> AlphaParam {
    AlphaParam::new(a).unwrap()
}

#[test]
fn cauchy_exterior_mass_tracks_continuous_tail() {
    // ∫_L^∞ μ₁ / μ₁(L) = (1 + L²)(π/2 − atan L); the discrete value omits the
    // half cell already counted at the endpoint.
    let (h, l) = (0.1, 10.0);
    let grid = VelocityGrid::new(h, 100, None).unwrap();
    let m = sample_equilibrium(alpha(1.0), &grid).unwrap();
    let continuous = (1.0 + l * l) * (std::f64::consts::FRAC_PI_2 - f64::atan(l));
    let discrete = exterior_mass(&m, h).unwrap();
    assert!((discrete - (continuous - 0.5 * h)).abs() < 1e-3, "{discrete} vs {continuous}");
}

#[test]
fn exterior_mass_rejects_vanishing_boundary() {
    assert!(exterior_mass(&[0.2, 0.5, 0.0], 1.0).is_err());
}

fn max_abs_on(values: impl Iterator<Item = (f64, f64)>, window: f64) -> f64 {
    values.filter(|(v, _)| v.abs() <= window).map(|(_, e)| e.abs()).fold(0.0, f64::max)
}

#[test]
fn half_point_fluxes_approximate_v_mu() {
    for a in [0.8, 1.0, 1.5] {
        let errors: Vec<f64> = [(0.25, 128), (0.125, 256)]
            .into_iter()
            .map(|(h, j)| {
                let grid = VelocityGrid::new(h, j, None).unwrap();
                let op = assemble_lfp(alpha(a), &grid, 1.0 + a).unwrap();
                let pairs = op.vm().iter().enumerate().map(|(m, vm)| {
                    let v = (m as f64 - j as f64 + 0.5) * h;
                    (v, vm - v * eval_density(alpha(a), v).unwrap())
                });
                max_abs_on(pairs, 4.0)
            })
            .collect();
        assert!(errors[1] < 1.1e-3, "α={a}: {errors:?}");
        assert!(errors[0] / errors[1] > 2.5, "α={a}: {errors:?}");
    }
}

#[test]
fn operator_consistent_with_exact_evolution() {
    let (t, dt) = (0.3, 1e-4);
    for a in [0.8, 1.0, 1.5] {
        let params = Tc1Params::standard(alpha(a));
        let errors: Vec<f64> = [(0.25, 128), (0.125, 256)]
            .into_iter()
            .map(|(h, j)| {
                let grid = VelocityGrid::new(h, j, None).unwrap();
                let op = assemble_lfp(alpha(a), &grid, 1.0 + a).unwrap();
                let v = grid.velocities();
                let f: Vec<f64> = v.iter().map(|&x| exact_homogeneous(&params, t, x).unwrap()).collect();
                let lf = op.apply(&f).unwrap();
                let pairs = v.iter().zip(lf).map(|(&x, l)| {
                    let rate = (exact_homogeneous(&params, t + dt, x).unwrap() - exact_homogeneous(&params, t - dt, x).unwrap()) / (2.0 * dt);
                    (x, rate - l)
                });
                max_abs_on(pairs, 8.0)
            })
            .collect();
        assert!(errors[0] / errors[1] > 2.5, "α={a}: {errors:?}");
    }
}

#[test]
fn near_two_matches_gaussian_limit() {
    let grid = VelocityGrid::new(0.25, 40, None).unwrap();
    let near = assemble_lfp(alpha(1.999), &grid, 2.999).unwrap();
    let gauss = assemble_lfp_gaussian_limit(&grid).unwrap();
    let v = grid.velocities();
    let f: Vec<f64> = v.iter().map(|x| (-(x - 1.0) * (x - 1.0)).exp()).collect();
    let a = near.apply(&f).unwrap();
    let b = gauss.apply(&f).unwrap();
    let diff = max_abs_on(v.iter().zip(a.iter().zip(&b)).map(|(&x, (p, q))| (x, p - q)), 4.0);
    let scale = max_abs_on(v.iter().zip(&b).map(|(&x, q)| (x, *q)), 4.0);
    assert!(diff / scale < 1e-2, "relative gap {}", diff / scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equilibrium_in_kernel_and_mass_conserved(a in 0.3f64..1.99, h in 0.1f64..0.8, j in 8usize..40) {
        let grid = VelocityGrid::new(h, j, None).unwrap();
        let op = assemble_lfp(alpha(a), &grid, 1.0 + a).unwrap();
        let m = op.equilibrium();
        let scale = m.iter().fold(0.0f64, |s, x| s.max(*x));
        let lm = op.apply(m).unwrap();
        prop_assert!(lm.iter().all(|x| x.abs() <= 1e-12 * scale / (h * h)));
        let w = op.mass_weights();
        let l = op.matrix();
        for c in 0..grid.len() {
            let col: f64 = (0..grid.len()).map(|r| w[r] * l[(r, c)]).sum();
            let size: f64 = (0..grid.len()).map(|r| (w[r] * l[(r, c)]).abs()).sum();
            prop_assert!(col.abs() <= 1e-12 * size.max(1.0));
        }
    }
}
