//! Hartree energy `∫|(1-Δ)^{1/4}φ|² - (λ/2)∬|φ(x)|²|φ(y)|² K_α(x-y)` and mass.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::interaction::{build_kernel, InteractionKernel};
use crate::spectral;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub interaction: f64,
    pub total: f64,
    pub mass: f64,
    pub lambda: f64,
    pub alpha: f64,
}

pub fn mass(f: &Field) -> f64 {
    f.norm_sqr()
}

/// `∫ |(1-Δ)^{1/4} f|²`.
pub fn kinetic_energy(f: &Field) -> Result<f64> {
    spectral::weighted_spectral_sum(f, |q| (1.0 + q).sqrt())
}

/// `½ ∬ |f(x)|²|f(y)|² K(x-y)`, evaluated as `½⟨|f|², K ∗ |f|²⟩`.
pub fn interaction_energy(f: &Field, kernel: &InteractionKernel) -> Result<f64> {
    let rho = f.density()?;
    let v = kernel.potential(&rho)?;
    let s: f64 = rho.iter().zip(&v).map(|(a, b)| a * b).sum();
    Ok(0.5 * s * f.grid().cell_volume())
}

pub fn energy(f: &Field, lambda: f64, alpha: f64) -> Result<EnergyBreakdown> {
    let kernel = build_kernel(*f.grid(), alpha)?;
    energy_with_kernel(f, lambda, &kernel)
}

/// As [`energy`], with a prebuilt Coulomb-type kernel.
pub fn energy_with_kernel(
    f: &Field,
    lambda: f64,
    kernel: &InteractionKernel,
) -> Result<EnergyBreakdown> {
    let alpha = kernel
        .alpha()
        .ok_or_else(|| Error::InvalidParameter("energy needs a Coulomb-type kernel".into()))?;
    if f.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let kinetic = kinetic_energy(f)?;
    if !kinetic.is_finite() {
        return Err(Error::NonFinite("kinetic energy".into()));
    }
    let interaction = interaction_energy(f, kernel)?;
    if !interaction.is_finite() {
        return Err(Error::NonFinite("interaction energy".into()));
    }
    let total = kinetic - lambda * interaction;
    if !total.is_finite() {
        return Err(Error::NonFinite("total energy".into()));
    }
    Ok(EnergyBreakdown {
        kinetic,
        interaction,
        total,
        mass: mass(f),
        lambda,
        alpha,
    })
}

/// Coupling `λ* = kinetic / interaction` above which the energy of `f` is negative.
pub fn negative_energy_threshold(f: &Field, alpha: f64) -> Result<f64> {
    let e = energy(f, 0.0, alpha)?;
    if !(e.interaction > 0.0) {
        return Err(Error::Degenerate(
            "interaction energy vanishes; no negative-energy threshold".into(),
        ));
    }
    Ok(e.kinetic / e.interaction)
}
