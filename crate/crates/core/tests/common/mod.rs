//! Independent oracles shared by the integration tests. Everything here uses
//! composite Simpson rules and direct definitions, never the library's
//! quadrature or closed forms.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Smallest integer `p ≤ 40` with `α p` integral.
fn smoothing_power(alpha: f64) -> f64 {
    (1..=40).map(f64::from).find(|p| ((alpha * p) - (alpha * p).round()).abs() < 1e-12).expect("rational alpha with small denominator")
}

/// `μ_α(v) = (1/π) ∫₀^∞ cos(vξ) e^{−ξ^α/α} dξ` after `ξ = u^p`, which makes
/// the integrand smooth at the origin.
pub fn density_oracle(alpha: f64, v: f64) -> f64 {
    let p = smoothing_power(alpha);
    let q = alpha * p;
    let u_max = (46.0 * alpha).powf(1.0 / q);
    let xi_max = u_max.powf(p);
    let n = (2e4f64).max(400.0 * v.abs() * xi_max * p) as usize;
    let integrand = |u: f64| (v * u.powf(p)).cos() * (-u.powf(q) / alpha).exp() * p * u.powf(p - 1.0);
    simpson(integrand, 0.0, u_max, n) / PI
}

/// `₂F₁(a, b; 1 + b; z) = b ∫₀¹ t^{b−1} (1 − z t)^{−a} dt` (Euler integral
/// with `c − b = 1`), for `b ≥ 1`.
pub fn hypergeometric_oracle(a: f64, b: f64, z: f64) -> f64 {
    b * simpson(|t| t.powf(b - 1.0) * (1.0 - z * t).powf(-a), 0.0, 1.0, 200_000)
}

/// `g(t, ξ) = ∫₀ᵗ |ξ e^{−s} + 1 − e^{−s}| ds` by quadrature, split at the
/// sign change.
pub fn g_oracle(t: f64, xi: f64) -> f64 {
    let f = |s: f64| (xi * (-s).exp() + 1.0 - (-s).exp()).abs();
    let mut cuts = vec![0.0];
    if xi < 0.0 {
        let s_star = (1.0 - xi).ln();
        if s_star < t {
            cuts.push(s_star);
        }
    }
    cuts.push(t);
    cuts.windows(2).map(|w| simpson(f, w[0], w[1], 400)).sum()
}

/// Kinetic reference by direct quadrature of its Fourier-side integral,
/// at absolute time `s`.
pub fn kinetic_oracle(s: f64, x: f64, v: f64, v0: f64) -> f64 {
    let tau = 1.0 - (-s).exp();
    let w = v - v0 * (-s).exp();
    let y = x - v0 * tau;
    let cauchy = tau / (PI * (tau * tau + w * w));
    let reach = 45.0 / tau;
    let integrand = |xi: f64| (-g_oracle(s, xi)).exp() * (xi * w + y).cos();
    let a = s.exp() - 1.0;
    let mut cuts = vec![-reach];
    if a < reach {
        cuts.push(-a);
    }
    cuts.extend([0.0, reach]);
    let oscillatory: f64 = cuts.windows(2).map(|c| simpson(integrand, c[0], c[1], (400.0 * (c[1] - c[0])) as usize)).sum();
    cauchy + oscillatory / PI
}
