//! Position/frequency transforms, Fourier multipliers and Sobolev norms.
//!
//! The forward transform is `f̂_k = dx³ L^{-3/2} Σ_x f(x) e^{-ik·x}` (phases
//! relative to the box corner), which makes it unitary between the
//! `dx³`-weighted position inner product and the plain frequency one.

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Field, Representation};
use crate::grid::Grid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Order `s ≥ 0` of an `H^s` norm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const HALF: SobolevIndex = SobolevIndex(0.5);
    pub const ONE: SobolevIndex = SobolevIndex(1.0);
    pub const TWO: SobolevIndex = SobolevIndex(2.0);

    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Sobolev order must be finite and non-negative, got {s}"
            )));
        }
        Ok(Self(s))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

fn forward_scale(grid: &Grid) -> f64 {
    grid.box_length().powf(1.5) / grid.len() as f64
}

pub fn to_frequency(f: &Field) -> Result<Field> {
    f.expect(Representation::Position)?;
    let grid = *f.grid();
    let mut data = f.values().to_vec();
    Fft3::forward(grid.n()).process(&mut data);
    let c = forward_scale(&grid);
    data.iter_mut().for_each(|v| *v *= c);
    Field::new(grid, data, Representation::Frequency)
}

pub fn to_position(f: &Field) -> Result<Field> {
    f.expect(Representation::Frequency)?;
    let grid = *f.grid();
    let mut data = f.values().to_vec();
    Fft3::inverse(grid.n()).process(&mut data);
    let c = 1.0 / grid.box_length().powf(1.5);
    data.iter_mut().for_each(|v| *v *= c);
    Field::new(grid, data, Representation::Position)
}

/// Frequency-space view of `f`, transforming only when needed.
pub(crate) fn frequency_view(f: &Field) -> Result<std::borrow::Cow<'_, Field>> {
    match f.representation() {
        Representation::Frequency => Ok(std::borrow::Cow::Borrowed(f)),
        Representation::Position => Ok(std::borrow::Cow::Owned(to_frequency(f)?)),
    }
}

/// Pointwise frequency factors tabulated on a grid.
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: Grid,
    table: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_fn(grid: Grid, m: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        let mut table = Vec::with_capacity(grid.len());
        grid.for_each_mode(|_, k| table.push(m(k)));
        if let Some(bad) = table
            .iter()
            .find(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFinite(format!("multiplier value {bad}")));
        }
        Ok(Self { grid, table })
    }

    /// Multiplier depending only on `|k|²`.
    pub fn radial(grid: Grid, m: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::from_fn(grid, |k| m(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
    }

    pub fn table(&self) -> &[Complex64] {
        &self.table
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        match f.representation() {
            Representation::Frequency => Ok(self.apply_frequency(f)),
            Representation::Position => to_position(&self.apply_frequency(&to_frequency(f)?)),
        }
    }

    fn apply_frequency(&self, f: &Field) -> Field {
        f.with_values(
            f.values()
                .iter()
                .zip(&self.table)
                .map(|(v, m)| v * m)
                .collect(),
        )
    }
}

/// Scales every frequency coefficient of `f` by `m(k)`; the output keeps the
/// representation of the input.
pub fn apply_multiplier(f: &Field, m: impl Fn([f64; 3]) -> Complex64) -> Result<Field> {
    Multiplier::from_fn(*f.grid(), m)?.apply(f)
}

/// `Σ_k w(|k|²) |f̂_k|²`.
pub(crate) fn weighted_spectral_sum(f: &Field, w: impl Fn(f64) -> f64) -> Result<f64> {
    let fh = frequency_view(f)?;
    let k2 = f.grid().k_squared();
    Ok(fh
        .values()
        .iter()
        .zip(&k2)
        .map(|(v, &q)| w(q) * v.norm_sqr())
        .sum())
}

/// `‖f‖_{H^s} = ‖(1+|k|²)^{s/2} f̂‖`.
pub fn sobolev_norm(f: &Field, s: SobolevIndex) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::NonFinite("field passed to sobolev_norm".into()));
    }
    let p = s.value();
    let sum = if p == 0.0 {
        weighted_spectral_sum(f, |_| 1.0)?
    } else {
        weighted_spectral_sum(f, |q| (1.0 + q).powf(p))?
    };
    Ok(sum.sqrt())
}

/// Homogeneous energy `Σ |k|^{2s} |f̂|²` (the squared `Ḣ^s` seminorm).
pub fn homogeneous_energy(f: &Field, s: SobolevIndex) -> Result<f64> {
    let p = s.value();
    weighted_spectral_sum(f, |q| if p == 0.0 { 1.0 } else { q.powf(p) })
}

/// Linear flow `e^{-it√(1-Δ)} f`.
pub fn free_propagator(f: &Field, t: f64) -> Result<Field> {
    Multiplier::radial(*f.grid(), |q| {
        Complex64::from_polar(1.0, -t * (1.0 + q).sqrt())
    })?
    .apply(f)
}
