//! Initial data commonly used by the experiments and tests.

use crate::error::Result;
use crate::field::Field;
use crate::grid::Grid;
use num_complex::Complex64;

/// Gaussian wave function whose density `|φ|²` is the normal density with
/// standard deviation `sigma` per axis, centred at `center`, rescaled to unit
/// discrete L² norm.
pub fn gaussian(grid: Grid, sigma: f64, center: [f64; 3]) -> Result<Field> {
    let a = 1.0 / (4.0 * sigma * sigma);
    Field::from_fn(grid, |x| {
        let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
        Complex64::new((-a * r2).exp(), 0.0)
    })
    .normalized()
}

/// Unit-norm plane wave `L^{-3/2} e^{i k·x}` with `k = (2π/L) m`.
pub fn plane_wave(grid: Grid, m: [i64; 3]) -> Field {
    let dk = grid.dk();
    let amp = grid.box_length().powf(-1.5);
    Field::from_fn(grid, |x| {
        let ph = dk * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
        Complex64::from_polar(amp, ph)
    })
}

/// Unit-norm `e^{-|x|/a}`-type profile (the hydrogen ground-state shape).
pub fn exponential(grid: Grid, a: f64) -> Result<Field> {
    Field::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        Complex64::new((-r / a).exp(), 0.0)
    })
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized() {
        let g = Grid::new(32, 16.0).unwrap();
        let f = gaussian(g, 1.0, [0.0; 3]).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        // the discrete rescaling is a tiny correction when the Gaussian is resolved
        let peak = f.values()[g.index(16, 16, 16)].re;
        let analytic = (2.0 * std::f64::consts::PI).powf(-0.75);
        assert!((peak - analytic).abs() < 1e-10);
    }

    #[test]
    fn plane_wave_has_unit_norm() {
        let g = Grid::new(8, 3.0).unwrap();
        assert!((plane_wave(g, [1, -2, 3]).norm() - 1.0).abs() < 1e-13);
    }
}
