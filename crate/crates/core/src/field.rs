use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Position,
    Frequency,
}

/// Complex samples of a one-particle wave function on a [`Grid`].
///
/// In position representation the values are point samples and the
/// L² norm carries the cell volume `dx³`. In frequency representation
/// the values are unitary-normalized coefficients and the L² norm is the
/// plain sum of squared moduli, so both norms agree (Plancherel).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    repr: Representation,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Length {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values, repr })
    }

    pub fn zeros(grid: Grid, repr: Representation) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            repr,
        }
    }

    /// Samples `f` at every node (position representation).
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        grid.for_each_node(|_, x| values.push(f(x)));
        Self {
            grid,
            values,
            repr: Representation::Position,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid,
            values,
            repr: self.repr,
        }
    }

    pub(crate) fn expect(&self, repr: Representation) -> Result<()> {
        if self.repr != repr {
            return Err(Error::Representation {
                expected: repr,
                found: self.repr,
            });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        other.expect(self.repr)
    }

    /// Quadrature weight attached to each sample.
    #[inline]
    pub fn weight(&self) -> f64 {
        match self.repr {
            Representation::Position => self.grid.cell_volume(),
            Representation::Frequency => 1.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.weight())
    }

    pub fn distance(&self, other: &Field) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.weight()).sqrt())
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Complex conjugate of a position-space field.
    pub fn conj(&self) -> Result<Field> {
        self.expect(Representation::Position)?;
        Ok(self.with_values(self.values.iter().map(|v| v.conj()).collect()))
    }

    /// Rescaled copy with unit L² norm.
    pub fn normalized(&self) -> Result<Field> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Degenerate(format!(
                "cannot normalize field of norm {n}"
            )));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// `|f|²` at every node of a position-space field.
    pub fn density(&self) -> Result<Vec<f64>> {
        self.expect(Representation::Position)?;
        Ok(self.values.iter().map(|v| v.norm_sqr()).collect())
    }
}
