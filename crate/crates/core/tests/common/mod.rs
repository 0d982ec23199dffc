//! Independent reference values for the Gaussian test profile, computed by
//! one-dimensional radial quadrature. Nothing here touches the solver.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Density `|φ|²` of the unit-norm Gaussian whose density has per-axis std `sigma`.
pub fn density(sigma: f64, r: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-1.5) * (-r * r / (2.0 * sigma * sigma)).exp()
}

/// `|φ̂(k)|²` for the same profile, unitary transform on ℝ³.
pub fn spectral_density(sigma: f64, k: f64) -> f64 {
    (2.0 * sigma * sigma / PI).powf(1.5) * (-2.0 * sigma * sigma * k * k).exp()
}

/// `∫ w(|k|) |φ̂(k)|² dk` over ℝ³.
pub fn spectral_moment(sigma: f64, w: impl Fn(f64) -> f64) -> f64 {
    let kmax = 12.0 / sigma;
    simpson(0.0, kmax, 4000, |k| {
        4.0 * PI * k * k * w(k) * spectral_density(sigma, k)
    })
}

/// Newtonian potential `(|·|⁻¹ ∗ ρ)(r)` by shell decomposition.
pub fn newton_potential(sigma: f64, r: f64) -> f64 {
    let rmax = 14.0 * sigma;
    let inner = if r > 0.0 {
        simpson(0.0, r, 2000, |s| 4.0 * PI * s * s * density(sigma, s)) / r
    } else {
        0.0
    };
    let outer = simpson(r.min(rmax), rmax, 4000, |s| {
        4.0 * PI * s * density(sigma, s)
    });
    inner + outer
}

/// `(|·|⁻² ∗ ρ)(0) = ∫ 4π ρ(s) ds`.
pub fn inverse_square_potential_at_origin(sigma: f64) -> f64 {
    simpson(0.0, 14.0 * sigma, 4000, |s| 4.0 * PI * density(sigma, s))
}

/// `D = ∬ ρ(x)ρ(y)/|x-y|`.
pub fn coulomb_self_energy(sigma: f64) -> f64 {
    simpson(0.0, 12.0 * sigma, 1200, |r| {
        4.0 * PI * r * r * density(sigma, r) * newton_potential(sigma, r)
    })
}

pub fn kinetic(sigma: f64) -> f64 {
    spectral_moment(sigma, |k| (1.0 + k * k).sqrt())
}

/// `∫ |k| |φ̂|²`.
pub fn half_seminorm(sigma: f64) -> f64 {
    spectral_moment(sigma, |k| k)
}

/// `∫ |k|² |φ̂|²`.
pub fn gradient_energy(sigma: f64) -> f64 {
    spectral_moment(sigma, |k| k * k)
}
