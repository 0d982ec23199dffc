//! Free-space convolutions with radial kernels on a zero-padded grid.
//!
//! The density on the `n³` box is embedded in a `(2n)³` array so that the
//! circular convolution computed by FFT equals the aperiodic one on the
//! original nodes: no periodic images enter the potential.

use crate::error::{Error, Result};
use crate::fft::{Active, Fft3};
use crate::field::{Field, Representation};
use crate::grid::Grid;
use crate::spectral::{self, SobolevIndex};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Midpoint nodes per axis for the origin-cell average.
const ORIGIN_QUADRATURE: usize = 32;

/// Densities below this value are treated as round-off and clamped to zero.
pub const DENSITY_CLAMP: f64 = -1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelShape {
    /// `1/(|x| + α)`, with `α = 0` the bare Newtonian kernel.
    Coulomb { alpha: f64 },
    /// `1/|x|²`.
    InverseSquare,
}

impl KernelShape {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            KernelShape::Coulomb { alpha } => 1.0 / (r + alpha),
            KernelShape::InverseSquare => 1.0 / (r * r),
        }
    }
}

/// Regularized lattice sums `-Σ'_{m∈Z³} |m|^{-1}` and `-Σ'_{m∈Z³} |m|^{-2}`.
/// With origin weights `LATTICE_COULOMB/h` and `LATTICE_INVERSE_SQUARE/h²`
/// the punctured lattice sum of `f/|x|` (resp. `f/|x|²`) reproduces the
/// integral for smooth `f` up to `O(h²)` relative to the origin term.
pub const LATTICE_COULOMB: f64 = 2.837_297_479_480_62;
pub const LATTICE_INVERSE_SQUARE: f64 = 8.913_632_917_585_15;

/// Average of `shape` over the cube of side `dx` centred at the origin.
pub fn origin_cell_average(shape: KernelShape, dx: f64) -> f64 {
    // one octant, by symmetry
    let m = ORIGIN_QUADRATURE / 2;
    let h = 0.5 * dx / m as f64;
    let mut sum = 0.0;
    for a in 0..m {
        let x = (a as f64 + 0.5) * h;
        for b in 0..m {
            let y = (b as f64 + 0.5) * h;
            for c in 0..m {
                let z = (c as f64 + 0.5) * h;
                sum += shape.eval((x * x + y * y + z * z).sqrt());
            }
        }
    }
    sum / (m * m * m) as f64
}

/// Value stored at the origin node.
///
/// The singular kernels get the corrected-trapezoid weights above. For
/// `1/(|x|+α)` the bare weight is lowered by the cell average of
/// `1/|x| - 1/(|x|+α)`, rescaled so that its slope in `α` at `α = 0` is the
/// corrected `1/|x|²` weight; once that drops below the plain cell average
/// (α comparable to `dx`, where the kernel is smooth) the cell average is
/// used. The value never exceeds the kernel maximum `1/α`.
pub fn origin_value(shape: KernelShape, dx: f64) -> f64 {
    match shape {
        KernelShape::InverseSquare => LATTICE_INVERSE_SQUARE / (dx * dx),
        KernelShape::Coulomb { alpha } => {
            let bare = LATTICE_COULOMB / dx;
            if alpha == 0.0 {
                return bare;
            }
            let avg_bare = origin_cell_average(KernelShape::Coulomb { alpha: 0.0 }, dx);
            let avg_reg = origin_cell_average(shape, dx);
            let avg_square = origin_cell_average(KernelShape::InverseSquare, dx);
            let corrected =
                bare - (avg_bare - avg_reg) * LATTICE_INVERSE_SQUARE / (avg_square * dx * dx);
            corrected.min(1.0 / alpha).max(avg_reg)
        }
    }
}

/// Radial kernel tabulated on the doubled grid and transformed once.
#[derive(Clone, Debug)]
pub struct InteractionKernel {
    grid: Grid,
    shape: KernelShape,
    /// Real-space samples on the `(2n)³` grid, storage order.
    table: Vec<f64>,
    kernel_hat: Vec<Complex64>,
}

/// Regularized Newtonian kernel `1/(|x| + α)`.
///
/// Nonzero nodes hold the exact kernel value; the origin node holds the
/// finite weight from [`origin_value`].
pub fn build_kernel(grid: Grid, alpha: f64) -> Result<InteractionKernel> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be finite and non-negative, got {alpha}"
        )));
    }
    if alpha >= grid.box_length() {
        return Err(Error::InvalidParameter(format!(
            "regularization {alpha} must be smaller than the box length {}",
            grid.box_length()
        )));
    }
    InteractionKernel::new(grid, KernelShape::Coulomb { alpha })
}

/// Inverse-square kernel `1/|x|²` used by the Hardy-type estimates.
pub fn build_inverse_square_kernel(grid: Grid) -> Result<InteractionKernel> {
    InteractionKernel::new(grid, KernelShape::InverseSquare)
}

impl InteractionKernel {
    pub fn new(grid: Grid, shape: KernelShape) -> Result<Self> {
        let n = grid.n();
        let big = 2 * n;
        let dx = grid.dx();
        let dist: Vec<f64> = (0..big).map(|m| m.min(big - m) as f64 * dx).collect();
        let mut table = Vec::with_capacity(big * big * big);
        for &a in &dist {
            for &b in &dist {
                for &c in &dist {
                    table.push(shape.eval((a * a + b * b + c * c).sqrt()));
                }
            }
        }
        table[0] = origin_value(shape, dx);
        let mut kernel_hat: Vec<Complex64> =
            table.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft3::forward(big).process(&mut kernel_hat);
        if kernel_hat
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::NonFinite("kernel transform".into()));
        }
        Ok(Self {
            grid,
            shape,
            table,
            kernel_hat,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    /// Regularization length, `None` for the inverse-square kernel.
    pub fn alpha(&self) -> Option<f64> {
        match self.shape {
            KernelShape::Coulomb { alpha } => Some(alpha),
            KernelShape::InverseSquare => None,
        }
    }

    /// Tabulated kernel at lattice displacement `(a, b, c)` (each `|·| < n`).
    pub fn value_at(&self, a: i64, b: i64, c: i64) -> f64 {
        let big = 2 * self.grid.n() as i64;
        let wrap = |m: i64| m.rem_euclid(big) as usize;
        let big = big as usize;
        self.table[(wrap(a) * big + wrap(b)) * big + wrap(c)]
    }

    pub fn kernel_hat(&self) -> &[Complex64] {
        &self.kernel_hat
    }

    /// Aperiodic convolution `Σ_y K(x-y) ρ(y) dx³` of a real sample array,
    /// returned with its complex round-off still attached.
    fn convolve_raw(&self, rho: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let big = 2 * n;
        let mut buf = vec![Complex64::default(); big * big * big];
        for i in 0..n {
            for j in 0..n {
                let src = &rho[(i * n + j) * n..(i * n + j + 1) * n];
                let dst = &mut buf[(i * big + j) * big..(i * big + j) * big + n];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = Complex64::new(s, 0.0);
                }
            }
        }
        let fwd = Fft3::forward(big);
        fwd.axis2(&mut buf, Active { i: n, j: n, l: big });
        fwd.axis1(
            &mut buf,
            Active {
                i: n,
                j: big,
                l: big,
            },
        );
        fwd.axis0(&mut buf, Active::full(big));
        for (v, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *v *= k;
        }
        let inv = Fft3::inverse(big);
        inv.axis0(&mut buf, Active::full(big));
        inv.axis1(
            &mut buf,
            Active {
                i: n,
                j: big,
                l: big,
            },
        );
        inv.axis2(&mut buf, Active { i: n, j: n, l: big });
        let scale = self.grid.cell_volume() / (big * big * big) as f64;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let row = &buf[(i * big + j) * big..(i * big + j) * big + n];
                out.extend(row.iter().map(|v| v * scale));
            }
        }
        out
    }

    /// Real potential `K ∗ ρ` for a non-negative density sampled on the grid.
    pub fn potential(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let rho = clamp_density(rho, self.grid.len())?;
        Ok(self.convolve_raw(&rho).into_iter().map(|v| v.re).collect())
    }
}

fn clamp_density(rho: &[f64], len: usize) -> Result<Vec<f64>> {
    if rho.len() != len {
        return Err(Error::Length {
            expected: len,
            found: rho.len(),
        });
    }
    let mut out = Vec::with_capacity(len);
    for &v in rho {
        if !v.is_finite() {
            return Err(Error::NonFinite("density".into()));
        }
        if v < DENSITY_CLAMP {
            return Err(Error::NegativeDensity { value: v });
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

/// Convolves a real, non-negative position-space density with the kernel.
pub fn convolve(kernel: &InteractionKernel, density: &Field) -> Result<Field> {
    density.expect(Representation::Position)?;
    if density.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let scale = density
        .values()
        .iter()
        .map(|v| v.re.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut rho = Vec::with_capacity(density.values().len());
    for v in density.values() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("density".into()));
        }
        if v.im.abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "density must be real, found imaginary part {:e}",
                v.im
            )));
        }
        rho.push(v.re);
    }
    let rho = clamp_density(&rho, kernel.grid().len())?;
    Field::new(
        *kernel.grid(),
        kernel.convolve_raw(&rho),
        Representation::Position,
    )
}

/// Bare Newtonian potential through the periodic symbol `4π/|k|²`, with the
/// zero mode removed. Only meant for cross-checking the padded kernel.
pub fn coulomb_potential_symbol(density: &Field) -> Result<Field> {
    density.expect(Representation::Position)?;
    spectral::apply_multiplier(density, |k| {
        let q = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if q == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(4.0 * PI / q, 0.0)
        }
    })
}

fn sup_potential_ratio(kernel: &InteractionKernel, f: &Field, energy: f64) -> Result<f64> {
    if f.norm_sqr() == 0.0 {
        return Err(Error::Degenerate("zero field".into()));
    }
    if !(energy > 0.0) {
        return Err(Error::Degenerate(
            "homogeneous seminorm vanishes (constant field)".into(),
        ));
    }
    let v = kernel.potential(&f.density()?)?;
    let sup = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(sup / energy)
}

/// `sup_x (|·|⁻¹ ∗ |f|²)(x) / ‖|∇|^{1/2} f‖²`; bounded by `π/2` in the continuum.
pub fn kato_ratio(f: &Field) -> Result<f64> {
    let kernel = build_kernel(*f.grid(), 0.0)?;
    kato_ratio_with(&kernel, f)
}

/// As [`kato_ratio`], reusing a bare kernel built on the field's grid.
pub fn kato_ratio_with(kernel: &InteractionKernel, f: &Field) -> Result<f64> {
    if kernel.alpha() != Some(0.0) {
        return Err(Error::InvalidParameter(
            "kato ratio needs the bare kernel".into(),
        ));
    }
    f.expect(Representation::Position)?;
    let energy = spectral::homogeneous_energy(f, SobolevIndex::HALF)?;
    sup_potential_ratio(kernel, f, energy)
}

/// `sup_x (|·|⁻² ∗ |f|²)(x) / ‖∇f‖²`; bounded by `4` in the continuum.
pub fn hardy_ratio(f: &Field) -> Result<f64> {
    let kernel = build_inverse_square_kernel(*f.grid())?;
    hardy_ratio_with(&kernel, f)
}

pub fn hardy_ratio_with(kernel: &InteractionKernel, f: &Field) -> Result<f64> {
    if kernel.shape() != KernelShape::InverseSquare {
        return Err(Error::InvalidParameter(
            "hardy ratio needs the 1/|x|² kernel".into(),
        ));
    }
    f.expect(Representation::Position)?;
    let energy = spectral::homogeneous_energy(f, SobolevIndex::ONE)?;
    sup_potential_ratio(kernel, f, energy)
}
