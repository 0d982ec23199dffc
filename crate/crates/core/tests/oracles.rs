//! Grid results for the Gaussian profile against radial quadrature and a
//! finite-difference Laplacian.

mod common;

use collapsar_core::blowup::tail_fraction;
use collapsar_core::critical::weinstein_ratio;
use collapsar_core::energy::{energy, negative_energy_threshold};
use collapsar_core::interaction::{
    build_kernel, convolve, coulomb_potential_symbol, hardy_ratio, kato_ratio,
};
use collapsar_core::profiles::gaussian;
use collapsar_core::spectral::{apply_multiplier, sobolev_norm, SobolevIndex};
use collapsar_core::{Complex64, Field, Grid, Representation};
use std::f64::consts::PI;

fn canonical() -> (Grid, Field) {
    let g = Grid::new(64, 32.0).unwrap();
    let f = gaussian(g, 1.0, [0.0; 3]).unwrap();
    (g, f)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gaussian_kinetic_energy_matches_quadrature() {
    let (_, f) = canonical();
    let e = energy(&f, 0.0, 0.0).unwrap();
    let oracle = common::kinetic(1.0);
    assert!(rel(e.kinetic, oracle) < 1e-4, "{} vs {oracle}", e.kinetic);
    assert!(e.kinetic >= e.mass);
}

#[test]
fn gaussian_h_one_norm_matches_quadrature() {
    let (_, f) = canonical();
    let h1 = sobolev_norm(&f, SobolevIndex::ONE).unwrap();
    let oracle = common::spectral_moment(1.0, |k| 1.0 + k * k).sqrt();
    assert!(rel(h1, oracle) < 1e-6, "{h1} vs {oracle}");
}

#[test]
fn gaussian_potential_matches_shell_quadrature() {
    let (g, f) = canonical();
    let kernel = build_kernel(g, 0.0).unwrap();
    let rho = Field::new(
        g,
        f.density()
            .unwrap()
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        Representation::Position,
    )
    .unwrap();
    let v = convolve(&kernel, &rho).unwrap();
    let c = g.n() / 2;
    for m in [0, 1, 2, 4, 8, 16, 24] {
        let r = m as f64 * g.dx();
        let oracle = common::newton_potential(1.0, r);
        let got = v.values()[g.index(c + m, c, c)];
        assert!(got.im.abs() < 1e-10 * got.re.abs());
        assert!(
            rel(got.re, oracle) < 1e-3,
            "r = {r}: {} vs {oracle}",
            got.re
        );
    }
}

#[test]
fn padded_kernel_agrees_with_periodic_symbol_up_to_background_term() {
    // The periodic solution of -ΔV = 4π(ρ - ρ̄) differs from the free-space
    // one by a constant plus (2π/3L³)|x|² near the centre.
    let (g, f) = canonical();
    let kernel = build_kernel(g, 0.0).unwrap();
    let rho = f.density().unwrap();
    let free = kernel.potential(&rho).unwrap();
    let dens = Field::new(
        g,
        rho.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        Representation::Position,
    )
    .unwrap();
    let periodic = coulomb_potential_symbol(&dens).unwrap();
    let l3 = g.box_length().powi(3);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    g.for_each_node(|i, x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2 <= 9.0 {
            let d = periodic.values()[i].re - free[i] - 2.0 * PI / (3.0 * l3) * r2;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    });
    let scale = common::newton_potential(1.0, 0.0);
    assert!((hi - lo) < 2e-3 * scale, "spread {}", hi - lo);
}

#[test]
fn gaussian_interaction_energy_matches_quadrature() {
    let (_, f) = canonical();
    let e = energy(&f, 1.0, 0.0).unwrap();
    let d = common::coulomb_self_energy(1.0);
    // sanity of the oracle itself: D = 1/(σ√π) for this profile
    assert!(rel(d, 1.0 / PI.sqrt()) < 1e-6);
    assert!(
        rel(e.interaction, 0.5 * d) < 1e-3,
        "{} vs {}",
        e.interaction,
        0.5 * d
    );
    assert!((e.total - (e.kinetic - e.interaction)).abs() == 0.0);
}

#[test]
fn negative_energy_threshold_matches_quadrature() {
    let (_, f) = canonical();
    let ls = negative_energy_threshold(&f, 0.0).unwrap();
    let oracle = common::kinetic(1.0) / (0.5 * common::coulomb_self_energy(1.0));
    assert!(rel(ls, oracle) < 1e-3, "{ls} vs {oracle}");
}

#[test]
fn kato_and_hardy_ratios_match_quadrature() {
    let (_, f) = canonical();
    let kato = kato_ratio(&f).unwrap();
    let kato_oracle = common::newton_potential(1.0, 0.0) / common::half_seminorm(1.0);
    assert!(rel(kato, kato_oracle) < 1e-2, "{kato} vs {kato_oracle}");
    // for this profile the Kato ratio is exactly 1
    assert!(rel(kato_oracle, 1.0) < 1e-6);

    let hardy = hardy_ratio(&f).unwrap();
    let hardy_oracle =
        common::inverse_square_potential_at_origin(1.0) / common::gradient_energy(1.0);
    assert!(rel(hardy, hardy_oracle) < 1e-2, "{hardy} vs {hardy_oracle}");
}

#[test]
fn weinstein_ratio_matches_quadrature() {
    let (_, f) = canonical();
    let r = weinstein_ratio(&f).unwrap();
    let oracle = 0.5 * common::coulomb_self_energy(1.0) / common::half_seminorm(1.0);
    assert!(rel(r, oracle) < 1e-2, "{r} vs {oracle}");
    assert!(r <= PI / 4.0 + 0.05);
}

#[test]
fn ratios_are_dilation_invariant() {
    // σ from 0.5 to 2 needs both a fine grid and a long box
    let g = Grid::new(96, 32.0).unwrap();
    let base_kato = kato_ratio(&gaussian(g, 1.0, [0.0; 3]).unwrap()).unwrap();
    let base_hardy = hardy_ratio(&gaussian(g, 1.0, [0.0; 3]).unwrap()).unwrap();
    for scale in [0.5, 2.0] {
        // f_s(x) = s^{3/2} f(s x) is the Gaussian with σ/s
        let f = gaussian(g, 1.0 / scale, [0.0; 3]).unwrap();
        let k = kato_ratio(&f).unwrap();
        let h = hardy_ratio(&f).unwrap();
        assert!(
            rel(k, base_kato) < 1e-2,
            "scale {scale}: kato {k} vs {base_kato}"
        );
        assert!(
            rel(h, base_hardy) < 1e-2,
            "scale {scale}: hardy {h} vs {base_hardy}"
        );
    }
}

/// Max error of the spectral `|k|²` multiplier against the 7-point stencil.
fn laplacian_mismatch(n: usize) -> f64 {
    let g = Grid::new(n, 16.0).unwrap();
    let f = gaussian(g, 1.0, [0.0; 3]).unwrap();
    let spectral = apply_multiplier(&f, |k| {
        Complex64::new(k[0] * k[0] + k[1] * k[1] + k[2] * k[2], 0.0)
    })
    .unwrap();
    let v = f.values();
    let h2 = g.dx() * g.dx();
    let wrap = |i: usize, d: isize| ((i as isize + d).rem_euclid(n as isize)) as usize;
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let c = v[g.index(i, j, l)];
                let sum = v[g.index(wrap(i, 1), j, l)]
                    + v[g.index(wrap(i, -1), j, l)]
                    + v[g.index(i, wrap(j, 1), l)]
                    + v[g.index(i, wrap(j, -1), l)]
                    + v[g.index(i, j, wrap(l, 1))]
                    + v[g.index(i, j, wrap(l, -1))];
                let minus_lap = -(sum - c * 6.0) / h2;
                err = err.max((minus_lap - spectral.values()[g.index(i, j, l)]).norm());
            }
        }
    }
    err
}

#[test]
fn spectral_laplacian_agrees_with_stencil_at_second_order() {
    let coarse = laplacian_mismatch(32);
    let fine = laplacian_mismatch(64);
    let ratio = coarse / fine;
    assert!(coarse < 0.05, "{coarse}");
    assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn resolved_gaussian_has_negligible_tail() {
    let (_, f) = canonical();
    assert!(tail_fraction(&f).unwrap() < 1e-8);
}
