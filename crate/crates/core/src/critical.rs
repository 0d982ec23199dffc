//! Variational estimate of the critical coupling as the reciprocal of
//! `sup ½ ∬|φ(x)|²|φ(y)|²/|x-y| / ∫||∇|^{1/2}φ|²` over unit-norm `φ`.

use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::interaction::{build_kernel, InteractionKernel};
use crate::spectral;
use num_complex::Complex64;

const MAX_HALVINGS: usize = 40;
const GAIN_WINDOW: usize = 10;

#[derive(Clone, Debug)]
pub struct RatioEstimate {
    pub ratio: f64,
    /// `1/ratio`. Any trial profile gives a ratio below the supremum, so this
    /// is an upper estimate of the critical coupling.
    pub lambda_upper: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `⟨|x|²⟩` held fixed during the ascent.
    pub second_moment: f64,
    pub profile: Field,
    /// Accepted ratio after each iteration, starting with the initial value.
    pub history: Vec<f64>,
}

/// Everything the ascent needs at one point of the unit sphere.
struct Evaluation {
    ratio: f64,
    /// `∬ ρρ/|x-y|`
    coulomb: f64,
    /// `Σ |k| |f̂|²`
    half_energy: f64,
    potential: Vec<f64>,
    freq: Field,
}

fn evaluate(kernel: &InteractionKernel, f: &Field) -> Result<Evaluation> {
    let freq = spectral::to_frequency(f)?;
    let k2 = f.grid().k_squared();
    let mut half_energy = 0.0;
    let mut mass = 0.0;
    for (v, &q) in freq.values().iter().zip(&k2) {
        let p = v.norm_sqr();
        half_energy += q.sqrt() * p;
        mass += p;
    }
    if !(mass > 0.0) {
        return Err(Error::Degenerate("zero field".into()));
    }
    if !(half_energy > 1e-14 * mass) {
        return Err(Error::Degenerate(
            "homogeneous H^1/2 seminorm vanishes (constant field)".into(),
        ));
    }
    let rho = f.density()?;
    let potential = kernel.potential(&rho)?;
    let coulomb =
        rho.iter().zip(&potential).map(|(a, b)| a * b).sum::<f64>() * f.grid().cell_volume();
    let ratio = 0.5 * coulomb / (half_energy * mass);
    if !ratio.is_finite() {
        return Err(Error::NonFinite("Weinstein ratio".into()));
    }
    Ok(Evaluation {
        ratio,
        coulomb,
        half_energy,
        potential,
        freq,
    })
}

fn as_position(f: &Field) -> Result<Field> {
    match f.representation() {
        Representation::Position => Ok(f.clone()),
        Representation::Frequency => spectral::to_position(f),
    }
}

/// `½ D(f) / (K(f) ‖f‖²)`, homogeneous of degree zero in `f`.
pub fn weinstein_ratio(f: &Field) -> Result<f64> {
    let f = as_position(f)?;
    let kernel = build_kernel(*f.grid(), 0.0)?;
    weinstein_ratio_with(&kernel, &f)
}

pub fn weinstein_ratio_with(kernel: &InteractionKernel, f: &Field) -> Result<f64> {
    if kernel.alpha() != Some(0.0) {
        return Err(Error::InvalidParameter(
            "ratio needs the bare kernel".into(),
        ));
    }
    Ok(evaluate(kernel, &as_position(f)?)?.ratio)
}

/// `|x|²` at every node, measured from the box centre.
fn squared_radius(f: &Field) -> Vec<f64> {
    let mut r2 = vec![0.0; f.grid().len()];
    f.grid()
        .for_each_node(|i, x| r2[i] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    r2
}

/// `⟨|x|²⟩` under the normalized density of `f`.
fn second_moment(f: &Field, r2: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, &q) in f.values().iter().zip(r2) {
        let p = v.norm_sqr();
        num += q * p;
        den += p;
    }
    num / den
}

/// L²-gradient of the ratio at a unit-norm `f`, projected onto the tangent
/// space of `{‖f‖ = 1, ⟨|x|²⟩ = target}`.
fn tangent_gradient(f: &Field, e: &Evaluation, r2: &[f64], target: f64) -> Result<Field> {
    let k = e.half_energy;
    let d = e.coulomb;
    let abs_k = spectral::Multiplier::radial(*f.grid(), |q| Complex64::new(q.sqrt(), 0.0))?;
    let kf = spectral::to_position(&abs_k.apply(&e.freq)?)?;
    let grad: Vec<Complex64> = f
        .values()
        .iter()
        .zip(&e.potential)
        .zip(kf.values())
        .map(|((v, &pot), w)| v * (2.0 * pot / k) - w * (d / (k * k)))
        .collect();
    let mut grad = Field::new(*f.grid(), grad, Representation::Position)?;
    // f and (|x|² - target) f are orthogonal on the constraint set
    let spread = Field::new(
        *f.grid(),
        f.values()
            .iter()
            .zip(r2)
            .map(|(v, &q)| v * (q - target))
            .collect(),
        Representation::Position,
    )?;
    for u in [f, &spread] {
        let nu = u.norm_sqr();
        if nu > 0.0 {
            let c = u.inner(&grad)?.re / nu;
            grad = grad.sub(&u.scaled(Complex64::new(c, 0.0)))?;
        }
    }
    Ok(grad)
}

/// Maps `h` back onto the constraint set: multiplies by `e^{-μ(|x|²-target)}`
/// with `μ` from Newton's method so that `⟨|x|²⟩ = target`, then normalizes.
fn retract(h: &Field, r2: &[f64], target: f64) -> Result<Field> {
    let p: Vec<f64> = h.values().iter().map(|v| v.norm_sqr()).collect();
    let mut mu = 0.0;
    let mut converged = false;
    for _ in 0..50 {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (&w, &q) in p.iter().zip(r2) {
            let d = q - target;
            let ww = w * (-2.0 * mu * d).exp();
            s0 += ww;
            s1 += ww * d;
            s2 += ww * d * d;
        }
        let mean = s1 / s0;
        if !mean.is_finite() {
            break;
        }
        if mean.abs() <= 1e-13 * target {
            converged = true;
            break;
        }
        let slope = -2.0 * (s2 / s0 - mean * mean);
        if !(slope < 0.0) {
            break;
        }
        mu -= mean / slope;
    }
    if !converged {
        return Err(Error::Degenerate(
            "second-moment retraction did not converge".into(),
        ));
    }
    Field::new(
        *h.grid(),
        h.values()
            .iter()
            .zip(r2)
            .map(|(v, &q)| v * (-mu * (q - target)).exp())
            .collect(),
        Representation::Position,
    )?
    .normalized()
}

/// Projected gradient ascent of [`weinstein_ratio`] on the unit L² sphere.
///
/// The ratio is invariant under dilations, so the ascent also holds the
/// second moment `⟨|x|²⟩` at its initial value; without that the grid
/// errors at large and small scales would push the profile to fill the box
/// or to collapse onto a single node.
///
/// A step is accepted only if it does not lower the ratio; otherwise the step
/// is halved (at most 40 times). Converged once the relative gain over the
/// last ten iterations drops below `tol`.
pub fn maximize_ratio(f0: &Field, max_iters: usize, step: f64, tol: f64) -> Result<RatioEstimate> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let mut f = as_position(f0)?.normalized()?;
    let r2 = squared_radius(&f);
    let target = second_moment(&f, &r2);
    let kernel = build_kernel(*f.grid(), 0.0)?;
    let mut eval = evaluate(&kernel, &f)?;
    let mut history = vec![eval.ratio];
    let mut current_step = step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        let grad = tangent_gradient(&f, &eval, &r2, target)?;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = f.add(&grad.scaled(Complex64::new(current_step, 0.0)))?;
            if let Ok(trial) = retract(&trial, &r2, target) {
                let te = evaluate(&kernel, &trial)?;
                if te.ratio >= eval.ratio {
                    accepted = Some((trial, te));
                    break;
                }
            }
            current_step *= 0.5;
        }
        let Some((trial, te)) = accepted else {
            break;
        };
        f = trial;
        eval = te;
        iterations += 1;
        history.push(eval.ratio);
        current_step = (current_step * 1.5).min(step);
        if history.len() > GAIN_WINDOW {
            let past = history[history.len() - 1 - GAIN_WINDOW];
            if (eval.ratio - past) / eval.ratio < tol {
                converged = true;
                break;
            }
        }
    }

    Ok(RatioEstimate {
        ratio: eval.ratio,
        lambda_upper: 1.0 / eval.ratio,
        iterations,
        converged,
        second_moment: target,
        profile: f,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profiles;

    #[test]
    fn ratio_is_scale_invariant() {
        let g = Grid::new(16, 12.0).unwrap();
        let f = profiles::gaussian(g, 1.2, [0.3, 0.0, -0.2]).unwrap();
        let a = weinstein_ratio(&f).unwrap();
        let b = weinstein_ratio(&f.scaled(Complex64::new(2.0, 0.0))).unwrap();
        let c = weinstein_ratio(&f.scaled(Complex64::new(0.0, -0.3))).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!((a - c).abs() < 1e-12 * a);
    }

    #[test]
    fn retraction_restores_the_second_moment() {
        let g = Grid::new(16, 12.0).unwrap();
        let f = profiles::gaussian(g, 1.0, [0.0; 3]).unwrap();
        let r2 = squared_radius(&f);
        let wide = profiles::gaussian(g, 1.3, [0.2, 0.0, 0.0]).unwrap();
        let out = retract(&wide, &r2, second_moment(&f, &r2)).unwrap();
        assert!((second_moment(&out, &r2) - second_moment(&f, &r2)).abs() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_rejected() {
        let g = Grid::new(8, 8.0).unwrap();
        let c = Field::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(weinstein_ratio(&c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tangent_gradient_matches_finite_differences() {
        let g = Grid::new(16, 12.0).unwrap();
        let f = profiles::gaussian(g, 1.0, [0.0; 3]).unwrap();
        let kernel = build_kernel(g, 0.0).unwrap();
        let e = evaluate(&kernel, &f).unwrap();
        let r2 = squared_radius(&f);
        let target = second_moment(&f, &r2);
        let grad = tangent_gradient(&f, &e, &r2, target).unwrap();
        // direction tangent to both constraints
        let h = Field::from_fn(g, |x| {
            Complex64::new(
                (-(x[0] - 0.5).powi(2) - x[1] * x[1] - x[2] * x[2]).exp(),
                0.1 * x[2],
            )
        });
        let spread = Field::from_fn(g, |x| {
            Complex64::new(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - target, 0.0)
        });
        let spread = Field::new(
            g,
            spread
                .values()
                .iter()
                .zip(f.values())
                .map(|(a, b)| a * b)
                .collect(),
            Representation::Position,
        )
        .unwrap();
        let mut h = h;
        for u in [&f, &spread] {
            let c = u.inner(&h).unwrap().re / u.norm_sqr();
            h = h.sub(&u.scaled(Complex64::new(c, 0.0))).unwrap();
        }
        let eps = 1e-5;
        let plus = f.add(&h.scaled(Complex64::new(eps, 0.0))).unwrap();
        let minus = f.add(&h.scaled(Complex64::new(-eps, 0.0))).unwrap();
        let fd = (weinstein_ratio_with(&kernel, &plus).unwrap()
            - weinstein_ratio_with(&kernel, &minus).unwrap())
            / (2.0 * eps);
        let analytic = grad.inner(&h).unwrap().re;
        assert!(
            (fd - analytic).abs() < 1e-6 * analytic.abs().max(1e-3),
            "{fd} vs {analytic}"
        );
    }
}
