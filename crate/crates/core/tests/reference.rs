mod common;

use common::{density_oracle, g_oracle, kinetic_oracle};
use lfp_core::reference::{error_norms, exact_homogeneous, exact_kinetic, g_exponent, Tc1Params, Tc3Params};
use lfp_core::stable_density::AlphaParam;
use proptest::prelude::*;

fn alpha(a: f64) -> AlphaParam {
    AlphaParam::new(a).unwrap()
}

fn mixture_oracle(a: f64, t: f64, v: f64) -> f64 {
    let s = t + 1.0;
    let sigma = (1.0 - (-s * a).exp()).powf(1.0 / a);
    [(0.75, 2.0), (0.25, -6.0)].iter().map(|(w, c)| w / sigma * density_oracle(a, (v - c * (-s).exp()) / sigma)).sum()
}

#[test]
fn homogeneous_reference_matches_oracle() {
    let frozen = 1.425_108_003_011_863_19e-1;
    let oracle = mixture_oracle(0.8, 0.25, 1.3);
    assert!((oracle - frozen).abs() < 1e-12, "oracle drifted: {oracle:e}");
    let params = Tc1Params::standard(alpha(0.8));
    let value = exact_homogeneous(&params, 0.25, 1.3).unwrap();
    assert!((value - oracle).abs() < 1e-11, "{value:e} vs {oracle:e}");
    for (a, t, v) in [(1.0, 0.0, -5.0), (1.5, 2.0, 0.4), (1.9, 0.5, 3.0)] {
        let value = exact_homogeneous(&Tc1Params::standard(alpha(a)), t, v).unwrap();
        assert!((value - mixture_oracle(a, t, v)).abs() < 1e-11, "α={a} t={t} v={v}");
    }
}

#[test]
fn mixture_weights_must_sum_to_one() {
    assert!(Tc1Params::new(vec![0.5, 0.4], vec![0.0, 1.0], alpha(1.0)).is_err());
    assert!(Tc1Params::new(vec![1.0], vec![0.0, 1.0], alpha(1.0)).is_err());
}

#[test]
fn exponent_matches_quadrature() {
    for t in [0.3, 1.5, 4.0] {
        for xi in [-20.0, -3.0, -0.7, -0.1, 0.0, 0.5, 6.0] {
            let got = g_exponent(t, xi);
            let want = g_oracle(t, xi);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "t={t} ξ={xi}: {got} vs {want}");
        }
    }
}

#[test]
fn kinetic_reference_matches_oracle() {
    let frozen = 5.995_616_891_938_626_57e-1;
    let oracle = kinetic_oracle(1.5, 0.3, 0.7, 1.0);
    assert!((oracle - frozen).abs() < 1e-12, "oracle drifted: {oracle:e}");
    let p = Tc3Params::default();
    let value = exact_kinetic(&p, 1.0, 0.3, 0.7).unwrap();
    assert!((value - oracle).abs() < 1e-10, "{value:e} vs {oracle:e}");
    for (t, x, v) in [(0.0, 1.0, -0.5), (2.5, -2.0, 3.0)] {
        let value = exact_kinetic(&p, t, x, v).unwrap();
        let oracle = kinetic_oracle(t + p.t0, x, v, p.v0);
        assert!((value - oracle).abs() < 1e-9, "t={t}: {value:e} vs {oracle:e}");
    }
}

#[test]
fn kinetic_reference_relaxes_to_cauchy() {
    let p = Tc3Params::default();
    for v in [-3.0, 0.0, 2.0] {
        let m = 1.0 / (std::f64::consts::PI * (1.0 + v * v));
        let late = exact_kinetic(&p, 30.0, 0.4, v).unwrap();
        assert!((late - m).abs() < 1e-10);
    }
}

#[test]
fn error_norm_definitions() {
    let e = error_norms(&[1.0, 2.0, 3.0], &[1.0, 1.5, 3.5], &[0.5, 0.25, 1.0], 0.1).unwrap();
    assert_eq!(e.linf, 0.5);
    assert!((e.l2mu - (0.1f64 * (0.25 / 0.25 + 0.25)).sqrt()).abs() < 1e-15);
    assert!(error_norms(&[1.0], &[1.0, 2.0], &[1.0], 1.0).is_err());
}

proptest! {
    #[test]
    fn exponent_is_nonnegative_and_continuous(t in 0.05f64..6.0, xi in -30.0f64..30.0) {
        let g = g_exponent(t, xi);
        prop_assert!(g >= -1e-14);
        let nudge = g_exponent(t, xi + 1e-7);
        prop_assert!((nudge - g).abs() <= 1e-5);
    }
}
