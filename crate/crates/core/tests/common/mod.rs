//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's quadrature or bath code.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

use dpe::phonon::PhononParams;

pub const HBAR: f64 = 0.6582119569;
pub const K_B: f64 = 0.08617333262;

/// `∫ g` over `[a, b]` by composite Simpson with `n` (rounded up to even) panels.
pub fn simpson<T>(g: impl Fn(f64) -> T, a: f64, b: f64, n: usize) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = g(a) + g(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + g(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Deformation-potential spectral density in 1/ps, `ω` in rad/ps.
pub fn spectral_density(p: &PhononParams, w: f64) -> f64 {
    let c = p.c_s * 1e-3;
    let pref = 1.602176634e-19f64.powi(2) / (4.0 * PI * PI * p.rho * 1.054571817e-34 * p.c_s.powi(5)) * 1e24;
    let g = p.d_e * (-(w * p.a_e / (2.0 * c)).powi(2)).exp() - p.d_h * (-(w * p.a_h / (2.0 * c)).powi(2)).exp();
    pref * w.powi(3) * g * g
}

/// `coth(βħω/2)`, or 1 at zero temperature.
pub fn thermal(p: &PhononParams, w: f64) -> f64 {
    if p.temperature == 0.0 {
        1.0
    } else {
        1.0 / (0.5 * HBAR * w / (K_B * p.temperature)).tanh()
    }
}

pub const OMEGA_CUT: f64 = 15.0;

/// Independent-boson exponent `φ(t)`.
pub fn phi(p: &PhononParams, t: f64) -> Complex64 {
    let integrand = |w: f64| {
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let jw = spectral_density(p, w) / (w * w);
        let x = w * t;
        Complex64::new(jw * thermal(p, w) * (1.0 - x.cos()), jw * (x.sin() - x))
    };
    simpson(integrand, 0.0, OMEGA_CUT, 60_000)
}

/// Bath correlation `C(τ) = ∫ J [coth cos ωτ - i sin ωτ] dω`.
pub fn correlation(p: &PhononParams, tau: f64) -> Complex64 {
    let integrand = |w: f64| {
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let j = spectral_density(p, w);
        let (s, c) = (w * tau).sin_cos();
        Complex64::new(j * thermal(p, w) * c, -j * s)
    };
    simpson(integrand, 0.0, OMEGA_CUT, 20_000)
}
