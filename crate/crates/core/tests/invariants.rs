//! Randomized invariants of the spectral, interaction, energy and monitor layers.

use collapsar_core::blowup::{check, fl_check, BlowupThresholds};
use collapsar_core::critical::weinstein_ratio;
use collapsar_core::energy::{energy, kinetic_energy};
use collapsar_core::evolution::MonitorSeries;
use collapsar_core::interaction::{
    build_inverse_square_kernel, build_kernel, convolve, hardy_ratio, kato_ratio,
};
use collapsar_core::spectral::{
    apply_multiplier, free_propagator, homogeneous_energy, sobolev_norm, to_frequency, to_position,
    SobolevIndex,
};
use collapsar_core::{Complex64, Field, Grid, Representation};
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid8() -> Grid {
    Grid::new(8, 6.0).unwrap()
}

fn grid16() -> Grid {
    Grid::new(16, 12.0).unwrap()
}

fn arbitrary_field(g: Grid) -> impl Strategy<Value = Field> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), g.len()).prop_map(move |v| {
        Field::new(
            g,
            v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(),
            Representation::Position,
        )
        .unwrap()
    })
}

/// Sum of up to three anisotropic Gaussian bumps with random phases.
fn smooth_field(g: Grid) -> impl Strategy<Value = Field> {
    let bump = (
        prop::array::uniform3(-1.5..1.5f64),
        prop::array::uniform3(0.8..2.0f64),
        (-1.0..1.0f64, -1.0..1.0f64),
        prop::array::uniform3(-0.6..0.6f64),
    );
    prop::collection::vec(bump, 1..=3).prop_map(move |bumps| {
        Field::from_fn(g, |x| {
            bumps
                .iter()
                .map(|(c, w, (a, b), k)| {
                    let q: f64 = (0..3).map(|d| ((x[d] - c[d]) / w[d]).powi(2)).sum();
                    let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                    Complex64::new(*a, *b) * Complex64::from_polar((-q).exp(), ph)
                })
                .sum()
        })
        .normalized()
        .unwrap()
    })
}

fn real_density(f: &Field) -> Field {
    Field::new(
        *f.grid(),
        f.density()
            .unwrap()
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        Representation::Position,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plancherel_and_round_trip(f in arbitrary_field(grid8())) {
        let fh = to_frequency(&f).unwrap();
        prop_assert!((fh.norm() - f.norm()).abs() < 1e-12 * f.norm());
        let back = to_position(&fh).unwrap();
        prop_assert!(back.distance(&f).unwrap() < 1e-12 * f.norm());
    }

    #[test]
    fn multipliers_compose(f in arbitrary_field(grid8()), a in 0.1..3.0f64, b in -2.0..2.0f64) {
        let m1 = |k: [f64; 3]| Complex64::new(1.0 + a * k[0] * k[0], b * k[1]);
        let m2 = |k: [f64; 3]| Complex64::from_polar(1.0 / (1.0 + k[2].abs()), a * k[0]);
        let two = apply_multiplier(&apply_multiplier(&f, m1).unwrap(), m2).unwrap();
        let one = apply_multiplier(&f, |k| m1(k) * m2(k)).unwrap();
        prop_assert!(two.distance(&one).unwrap() < 1e-12 * one.norm().max(1.0));
    }

    #[test]
    fn sobolev_norms_are_ordered(f in arbitrary_field(grid8())) {
        let l2 = sobolev_norm(&f, SobolevIndex::L2).unwrap();
        prop_assert!((l2 - f.norm()).abs() < 1e-12 * l2);
        let mut prev = l2;
        for s in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let v = sobolev_norm(&f, SobolevIndex::new(s).unwrap()).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn free_flow_is_a_unitary_group(f in arbitrary_field(grid8()), t in -3.0..3.0f64) {
        let ft = free_propagator(&f, t).unwrap();
        for s in [0.0, 0.5, 1.0, 2.0] {
            let s = SobolevIndex::new(s).unwrap();
            let a = sobolev_norm(&f, s).unwrap();
            prop_assert!((sobolev_norm(&ft, s).unwrap() - a).abs() < 1e-12 * a);
        }
        let back = free_propagator(&ft, -t).unwrap();
        prop_assert!(back.distance(&f).unwrap() < 1e-12 * f.norm());
    }

    #[test]
    fn convolution_is_linear_and_symmetric(
        f in smooth_field(grid8()),
        g in smooth_field(grid8()),
        a in 0.0..2.0f64,
        alpha in 0.0..0.5f64,
    ) {
        let k = build_kernel(grid8(), alpha).unwrap();
        let (r1, r2) = (real_density(&f), real_density(&g));
        let mix = r1.scaled(Complex64::new(a, 0.0)).add(&r2).unwrap();
        let lhs = convolve(&k, &mix).unwrap();
        let rhs = convolve(&k, &r1).unwrap().scaled(Complex64::new(a, 0.0))
            .add(&convolve(&k, &r2).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-12 * rhs.norm());
        let v1 = convolve(&k, &r1).unwrap();
        let v2 = convolve(&k, &r2).unwrap();
        let s12 = r1.inner(&v2).unwrap().re;
        let s21 = r2.inner(&v1).unwrap().re;
        prop_assert!((s12 - s21).abs() < 1e-10 * s12.abs());
        prop_assert!(v1.values().iter().all(|v| v.im.abs() <= 1e-10 * v.re.abs()));
    }

    #[test]
    fn potential_decreases_with_regularization(f in smooth_field(grid8()), a1 in 0.0..0.5f64, gap in 0.01..0.5f64) {
        let rho = f.density().unwrap();
        let v1 = build_kernel(grid8(), a1).unwrap().potential(&rho).unwrap();
        let v2 = build_kernel(grid8(), a1 + gap).unwrap().potential(&rho).unwrap();
        prop_assert!(v1.iter().zip(&v2).all(|(x, y)| x >= y));
    }

    #[test]
    fn regularization_error_is_bounded_by_inverse_square_potential(f in smooth_field(grid8()), alpha in 0.001..0.5f64) {
        let rho = f.density().unwrap();
        let v0 = build_kernel(grid8(), 0.0).unwrap().potential(&rho).unwrap();
        let va = build_kernel(grid8(), alpha).unwrap().potential(&rho).unwrap();
        let w = build_inverse_square_kernel(grid8()).unwrap().potential(&rho).unwrap();
        let lhs = v0.iter().zip(&va).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let rhs = alpha * w.iter().cloned().fold(0.0, f64::max);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{} > {}", lhs, rhs);
    }

    #[test]
    fn energy_is_affine_in_coupling(f in smooth_field(grid8()), l in -2.0..2.0f64) {
        let e = |lam: f64| energy(&f, lam, 0.0).unwrap().total;
        let (a, b, c) = (e(l), e(l + 1.0), e(l + 2.0));
        prop_assert!((a - 2.0 * b + c).abs() < 1e-12 * (a.abs() + b.abs() + c.abs()));
    }

    #[test]
    fn energy_pieces_obey_their_bounds(f in smooth_field(grid16())) {
        let e = energy(&f, 1.0, 0.0).unwrap();
        prop_assert!(e.kinetic >= e.mass);
        prop_assert!(e.interaction >= 0.0);
        prop_assert!(e.total >= 0.0);
        let half = homogeneous_energy(&f, SobolevIndex::HALF).unwrap();
        prop_assert!(e.interaction <= PI / 4.0 * half);
        prop_assert!(kinetic_energy(&f).unwrap() == e.kinetic);
        prop_assert!(weinstein_ratio(&f).unwrap() <= PI / 4.0 + 0.05);
    }

    #[test]
    fn kato_and_hardy_constants_hold_on_smooth_fields(f in smooth_field(grid16())) {
        prop_assert!(kato_ratio(&f).unwrap() <= PI / 2.0 + 0.05);
        prop_assert!(hardy_ratio(&f).unwrap() <= 4.0 + 0.1);
    }

    #[test]
    fn raising_the_threshold_never_detects_earlier(
        h in prop::collection::vec(1.0..30.0f64, 2..40),
        f1 in 2.0..20.0f64,
        extra in 0.0..10.0f64,
    ) {
        let mut s = MonitorSeries::default();
        for (i, &v) in h.iter().enumerate() {
            s.time.push(i as f64);
            s.dt.push(1.0);
            s.mass.push(1.0);
            s.energy.push(0.0);
            s.h_half.push(v);
            s.h_one.push(v);
            s.h_two.push(v);
            s.tail.push(0.0);
        }
        let lo = check(&s, BlowupThresholds { h_half_factor: f1, tail_max: 0.01 }).unwrap();
        let hi = check(&s, BlowupThresholds { h_half_factor: f1 + extra, tail_max: 0.01 }).unwrap();
        prop_assert_eq!(lo.detected, lo.t_detect.is_some());
        if let Some(th) = hi.t_detect {
            prop_assert!(lo.t_detect.unwrap() <= th);
        }
    }

    #[test]
    fn radial_check_respects_axis_permutations(f in smooth_field(grid8()), lambda in 0.0..20.0f64) {
        let g = grid8();
        let n = g.n();
        let mut permuted = vec![Complex64::default(); g.len()];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    permuted[g.index(j, l, i)] = f.values()[g.index(i, j, l)];
                }
            }
        }
        let p = Field::new(g, permuted, Representation::Position).unwrap();
        let a = fl_check(&f, lambda, 0.0, 1e-6).unwrap();
        let b = fl_check(&p, lambda, 0.0, 1e-6).unwrap();
        prop_assert_eq!(a.eligible, b.eligible);
        prop_assert!((a.radial_deviation - b.radial_deviation).abs() < 1e-12);
    }
}
