//! Bosonic Fock space over `M` modes truncated at total occupation `n_max`.
//!
//! Ladder operators act on the occupation basis; raising past the cutoff is
//! dropped and the dropped norm is reported. The truncated `a*(f)` is the
//! exact adjoint of the truncated `a(f)`, so `a*(f) - a(f)` stays
//! anti-Hermitian and its exponential stays unitary.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug)]
pub struct FockSpace {
    modes: usize,
    n_max: usize,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    total: Vec<usize>,
    /// `lower[i][b]`: basis index of `b - e_i`, if `n_i > 0`.
    lower: Vec<Vec<Option<usize>>>,
    /// `raise[i][b]`: basis index of `b + e_i`, if still within the cutoff.
    raise: Vec<Vec<Option<usize>>>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation tuples with the given total, first mode descending.
fn compositions(total: u32, modes: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if modes == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, modes - 1, prefix, out);
        prefix.pop();
    }
}

impl FockSpace {
    pub fn new(modes: usize, n_max: usize) -> Result<Arc<Self>> {
        if modes == 0 || n_max == 0 {
            return Err(Error::InvalidParameter(format!(
                "need at least one mode and a positive cutoff, got M = {modes}, n_max = {n_max}"
            )));
        }
        let mut basis = Vec::with_capacity(binomial(n_max + modes, modes));
        for t in 0..=n_max as u32 {
            compositions(t, modes, &mut Vec::with_capacity(modes), &mut basis);
        }
        let index: HashMap<Vec<u32>, usize> = basis
            .iter()
            .enumerate()
            .map(|(i, b)| (b.clone(), i))
            .collect();
        let total: Vec<usize> = basis
            .iter()
            .map(|b| b.iter().map(|&x| x as usize).sum())
            .collect();
        let mut lower = vec![vec![None; basis.len()]; modes];
        let mut raise = vec![vec![None; basis.len()]; modes];
        for (bi, b) in basis.iter().enumerate() {
            for m in 0..modes {
                let mut t = b.clone();
                if t[m] > 0 {
                    t[m] -= 1;
                    lower[m][bi] = Some(index[&t]);
                    t[m] += 1;
                }
                t[m] += 1;
                raise[m][bi] = index.get(&t).copied();
            }
        }
        Ok(Arc::new(Self {
            modes,
            n_max,
            basis,
            index,
            total,
            lower,
            raise,
        }))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Total occupation of each basis state.
    pub fn totals(&self) -> &[usize] {
        &self.total
    }
}

/// One-particle vector in the mode basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeVector(pub Vec<Complex64>);

impl ModeVector {
    pub fn zeros(modes: usize) -> Self {
        Self(vec![ZERO; modes])
    }

    /// Unit vector along mode `i`.
    pub fn unit(modes: usize, i: usize) -> Self {
        let mut v = Self::zeros(modes);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &ModeVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &ModeVector) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

#[derive(Clone, Debug)]
pub struct FockVector {
    space: Arc<FockSpace>,
    coeffs: Vec<Complex64>,
}

impl FockVector {
    pub fn new(space: Arc<FockSpace>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::Length {
                expected: space.dim(),
                found: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: &Arc<FockSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            coeffs: vec![ZERO; space.dim()],
        }
    }

    pub fn vacuum(space: &Arc<FockSpace>) -> Self {
        Self::basis_state(space, &vec![0; space.modes()]).expect("vacuum is always in the space")
    }

    pub fn basis_state(space: &Arc<FockSpace>, occupation: &[u32]) -> Result<Self> {
        let idx = space.index_of(occupation).ok_or_else(|| {
            Error::InvalidParameter(format!("occupation {occupation:?} is outside the space"))
        })?;
        let mut v = Self::zeros(space);
        v.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &FockVector,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        same_space(&self.space, &other.space)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &FockVector) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FockVector) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Largest total occupation carrying a nonzero coefficient.
    pub fn max_occupation(&self) -> usize {
        self.coeffs
            .iter()
            .zip(self.space.totals())
            .filter(|(c, _)| c.norm_sqr() > 0.0)
            .map(|(_, &t)| t)
            .max()
            .unwrap_or(0)
    }

    /// Weight `Σ_{|n| = t} |c_n|²` of each particle-number sector `t`.
    pub fn sector_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.space.n_max() + 1];
        for (c, &t) in self.coeffs.iter().zip(self.space.totals()) {
            w[t] += c.norm_sqr();
        }
        w
    }
}

fn same_space(a: &Arc<FockSpace>, b: &Arc<FockSpace>) -> Result<()> {
    if Arc::ptr_eq(a, b) || (a.modes == b.modes && a.n_max == b.n_max) {
        Ok(())
    } else {
        Err(Error::Length {
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

fn check_modes(f: &ModeVector, space: &FockSpace) -> Result<()> {
    if f.0.len() != space.modes() {
        return Err(Error::Length {
            expected: space.modes(),
            found: f.0.len(),
        });
    }
    Ok(())
}

/// `a(f) v = Σ_i conj(f_i) a_i v`.
pub fn annihilate(f: &ModeVector, v: &FockVector) -> Result<FockVector> {
    let space = &v.space;
    check_modes(f, space)?;
    let mut out = vec![ZERO; space.dim()];
    for (m, fm) in f.0.iter().enumerate() {
        if *fm == ZERO {
            continue;
        }
        let c = fm.conj();
        for (b, target) in space.lower[m].iter().enumerate() {
            if let Some(t) = *target {
                let amp = (space.basis[b][m] as f64).sqrt();
                out[t] += c * amp * v.coeffs[b];
            }
        }
    }
    FockVector::new(Arc::clone(space), out)
}

/// `a*(f) v` restricted to the truncated space, together with the squared
/// norm of the part pushed past the cutoff.
pub fn create_with_dropped(f: &ModeVector, v: &FockVector) -> Result<(FockVector, f64)> {
    let space = &v.space;
    check_modes(f, space)?;
    let mut out = vec![ZERO; space.dim()];
    let mut overflow: HashMap<Vec<u32>, Complex64> = HashMap::new();
    for (m, &fm) in f.0.iter().enumerate() {
        if fm == ZERO {
            continue;
        }
        for (b, target) in space.raise[m].iter().enumerate() {
            let coeff = v.coeffs[b];
            if coeff == ZERO {
                continue;
            }
            let amp = (space.basis[b][m] as f64 + 1.0).sqrt();
            match *target {
                Some(t) => out[t] += fm * amp * coeff,
                None => {
                    let mut occ = space.basis[b].clone();
                    occ[m] += 1;
                    *overflow.entry(occ).or_insert(ZERO) += fm * amp * coeff;
                }
            }
        }
    }
    let dropped = overflow.values().map(|c| c.norm_sqr()).sum();
    Ok((FockVector::new(Arc::clone(space), out)?, dropped))
}

/// `a*(f) v`, with components beyond the cutoff dropped.
pub fn create(f: &ModeVector, v: &FockVector) -> Result<FockVector> {
    Ok(create_with_dropped(f, v)?.0)
}

/// `N v`.
pub fn number(v: &FockVector) -> FockVector {
    FockVector {
        space: Arc::clone(&v.space),
        coeffs: v
            .coeffs
            .iter()
            .zip(v.space.totals())
            .map(|(c, &t)| c * t as f64)
            .collect(),
    }
}

/// `⟨u, v⟩ = Σ conj(u_n) v_n`.
pub fn overlap(u: &FockVector, v: &FockVector) -> Result<Complex64> {
    same_space(&u.space, &v.space)?;
    Ok(u.coeffs
        .iter()
        .zip(&v.coeffs)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `‖([a(f), a*(g)] - ⟨f,g⟩) v‖ / ‖v‖`.
pub fn ccr_defect(f: &ModeVector, g: &ModeVector, v: &FockVector) -> Result<f64> {
    let nv = v.norm();
    if nv == 0.0 {
        return Err(Error::Degenerate(
            "commutator defect of the zero vector".into(),
        ));
    }
    let left = annihilate(f, &create(g, v)?)?;
    let right = create(g, &annihilate(f, v)?)?;
    let commutator = left.sub(&right)?;
    let defect = commutator.sub(&v.scaled(f.inner(g)))?;
    Ok(defect.norm() / nv)
}

/// `(‖a(f)v‖ - ‖f‖‖N^{1/2}v‖, ‖a*(f)v‖ - ‖f‖‖(N+1)^{1/2}v‖)`; both non-positive.
/// The creation norm includes the part beyond the cutoff.
pub fn number_bound_defect(f: &ModeVector, v: &FockVector) -> Result<(f64, f64)> {
    if v.norm() == 0.0 {
        return Err(Error::Degenerate("number bounds of the zero vector".into()));
    }
    let fn_ = f.norm();
    let n_half: f64 = v
        .coeffs
        .iter()
        .zip(v.space.totals())
        .map(|(c, &t)| t as f64 * c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let n1_half = (n_half * n_half + v.norm_sqr()).sqrt();
    let a = annihilate(f, v)?.norm();
    let (cv, dropped) = create_with_dropped(f, v)?;
    let c = (cv.norm_sqr() + dropped).sqrt();
    Ok((a - fn_ * n_half, c - fn_ * n1_half))
}

/// Truncation-safety heuristic shared by the Weyl-operator routines.
fn check_weyl_norm(f: &ModeVector, space: &FockSpace) -> Result<()> {
    let n2 = f.norm_sqr();
    if !n2.is_finite() {
        return Err(Error::NonFinite("mode vector".into()));
    }
    if n2 > space.n_max() as f64 / 4.0 {
        return Err(Error::TruncationRisk(format!(
            "‖f‖² = {n2} exceeds n_max/4 = {}",
            space.n_max() as f64 / 4.0
        )));
    }
    Ok(())
}

/// `(a*(f) - a(f)) v` on the truncated space.
fn displacement_generator(f: &ModeVector, v: &FockVector) -> Result<FockVector> {
    create(f, v)?.sub(&annihilate(f, v)?)
}

/// `W(f) v = exp(a*(f) - a(f)) v`.
///
/// The exponential is applied by a Taylor series on `s` substeps chosen so
/// that each substep generator has norm at most one; terms are summed until
/// they fall below machine precision relative to the vector.
pub fn weyl(f: &ModeVector, v: &FockVector) -> Result<FockVector> {
    check_modes(f, &v.space)?;
    check_weyl_norm(f, &v.space)?;
    let fn_ = f.norm();
    if fn_ == 0.0 {
        return Ok(v.clone());
    }
    // ‖a(f)‖, ‖a*(f)‖ ≤ ‖f‖ √(n_max+1) on the truncated space
    let bound = 2.0 * fn_ * ((v.space.n_max() + 1) as f64).sqrt();
    let substeps = bound.ceil().max(1.0) as usize;
    let h = 1.0 / substeps as f64;
    let fh = f.scaled(Complex64::new(h, 0.0));
    let mut x = v.clone();
    for _ in 0..substeps {
        let scale = x.norm().max(f64::MIN_POSITIVE);
        let mut term = x.clone();
        let mut sum = x.clone();
        for k in 1..=60 {
            term = displacement_generator(&fh, &term)?.scaled(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term)?;
            if term.norm() <= 1e-17 * scale {
                break;
            }
        }
        x = sum;
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("Weyl operator action".into()));
    }
    Ok(x)
}

/// Coherent state `ψ(f) = W(f) Ω`.
pub fn coherent(f: &ModeVector, space: &Arc<FockSpace>) -> Result<FockVector> {
    weyl(f, &FockVector::vacuum(space))
}

/// `e^{-‖f‖²/2} Σ_n f^{⊗n}/√(n!)` written out in the occupation basis.
pub fn coherent_series(f: &ModeVector, space: &Arc<FockSpace>) -> Result<FockVector> {
    check_modes(f, space)?;
    let pref = (-0.5 * f.norm_sqr()).exp();
    let coeffs = space
        .basis()
        .iter()
        .map(|occ| {
            occ.iter()
                .zip(&f.0)
                .fold(Complex64::new(pref, 0.0), |acc, (&n, &fi)| {
                    acc * fi.powu(n) / factorial(n as usize).sqrt()
                })
        })
        .collect();
    FockVector::new(Arc::clone(space), coeffs)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(a*(f))^N Ω / √(N!)` written out in the occupation basis.
pub fn product_state(
    f: &ModeVector,
    particles: usize,
    space: &Arc<FockSpace>,
) -> Result<FockVector> {
    check_modes(f, space)?;
    if particles > space.n_max() {
        return Err(Error::TruncationRisk(format!(
            "{particles} particles exceed the cutoff {}",
            space.n_max()
        )));
    }
    let nf = factorial(particles).sqrt();
    let coeffs = space
        .basis()
        .iter()
        .zip(space.totals())
        .map(|(occ, &t)| {
            if t != particles {
                return ZERO;
            }
            occ.iter()
                .zip(&f.0)
                .fold(Complex64::new(nf, 0.0), |acc, (&n, &fi)| {
                    acc * fi.powu(n) / factorial(n as usize).sqrt()
                })
        })
        .collect();
    FockVector::new(Arc::clone(space), coeffs)
}

/// `⟨v, N v⟩` and `⟨v, N² v⟩ - ⟨v, N v⟩²` for a unit vector.
pub fn number_moments(v: &FockVector) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (c, &t) in v.coeffs.iter().zip(v.space.totals()) {
        let p = c.norm_sqr();
        m1 += t as f64 * p;
        m2 += (t * t) as f64 * p;
    }
    (m1, m2 - m1 * m1)
}

/// `P(X > k)` for `X ~ Poisson(mean)`: the weight a coherent state with
/// `‖f‖² = mean` puts above `k` particles. Summed upward from `k+1`, so tiny
/// tails keep full relative precision.
pub fn poisson_tail(mean: f64, k: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut log_term = -mean;
    for n in 1..=k + 1 {
        log_term += mean.ln() - (n as f64).ln();
    }
    let mut term = log_term.exp();
    let mut sum = 0.0;
    let mut n = k + 1;
    while term > 1e-30 * sum || (n as f64) < mean {
        sum += term;
        n += 1;
        term *= mean / n as f64;
        if n > k + 10_000 {
            break;
        }
    }
    sum.min(1.0)
}

/// Outcome of the phase-averaged coherent-state representation.
#[derive(Clone, Debug)]
pub struct PhaseAverage {
    pub state: FockVector,
    pub nodes: usize,
    pub residual: f64,
}

/// Tolerance on the relative change between successive node doublings.
pub const PHASE_AVERAGE_TOL: f64 = 1e-6;

/// Second quantization of the phase `e^{-iθ}`: multiplies the `n`-particle
/// sector by `e^{-iθn}`. Since it fixes the vacuum and conjugates `W(g)` into
/// `W(e^{-iθ}g)`, `W(e^{-iθ}g)Ω = phase_rotate(W(g)Ω, θ)`.
pub fn phase_rotate(v: &FockVector, theta: f64) -> FockVector {
    let coeffs = v
        .coeffs
        .iter()
        .zip(v.space.totals())
        .map(|(c, &n)| c * Complex64::from_polar(1.0, -theta * n as f64))
        .collect();
    FockVector {
        space: Arc::clone(&v.space),
        coeffs,
    }
}

fn phase_average_with_nodes(
    base: &FockVector,
    particles: usize,
    nodes: usize,
) -> Result<FockVector> {
    let n = particles as f64;
    let d_n = factorial(particles).sqrt() / (n.powf(0.5 * n) * (-0.5 * n).exp());
    let mut acc = FockVector::zeros(&base.space);
    for q in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * q as f64 / nodes as f64;
        let w = phase_rotate(base, theta);
        acc = acc.add(&w.scaled(Complex64::from_polar(1.0, theta * n)))?;
    }
    Ok(acc.scaled(Complex64::new(d_n / nodes as f64, 0.0)))
}

/// `d_N ∫ dθ/2π e^{iθN} W(e^{-iθ}√N f) Ω` by the trapezoidal rule, starting
/// at `8N` nodes and doubling at most twice until successive results agree
/// to [`PHASE_AVERAGE_TOL`].
pub fn phase_average_product_state(
    f: &ModeVector,
    particles: usize,
    space: &Arc<FockSpace>,
) -> Result<PhaseAverage> {
    check_modes(f, space)?;
    if particles == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    if 2 * particles > space.n_max() {
        return Err(Error::TruncationRisk(format!(
            "N = {particles} exceeds n_max/2 = {}",
            space.n_max() / 2
        )));
    }
    if (f.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "one-particle vector must be normalized, ‖f‖ = {}",
            f.norm()
        )));
    }
    let base = weyl(
        &f.scaled(Complex64::new((particles as f64).sqrt(), 0.0)),
        &FockVector::vacuum(space),
    )?;
    let mut nodes = 8 * particles;
    let mut prev = phase_average_with_nodes(&base, particles, nodes)?;
    let mut residual = f64::INFINITY;
    for _ in 0..2 {
        nodes *= 2;
        let next = phase_average_with_nodes(&base, particles, nodes)?;
        residual = next.distance(&prev)? / next.norm().max(f64::MIN_POSITIVE);
        if residual <= PHASE_AVERAGE_TOL {
            return Ok(PhaseAverage {
                state: next,
                nodes,
                residual,
            });
        }
        prev = next;
    }
    Err(Error::Quadrature { residual, nodes })
}

/// Dense matrix of `a*(f) - a(f)` on the truncated space.
pub fn generator_matrix(f: &ModeVector, space: &Arc<FockSpace>) -> Result<DMatrix<Complex64>> {
    check_modes(f, space)?;
    let dim = space.dim();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let mut e = FockVector::zeros(space);
        e.coeffs[col] = Complex64::new(1.0, 0.0);
        let out = displacement_generator(f, &e)?;
        for (row, c) in out.coeffs.iter().enumerate() {
            m[(row, col)] = *c;
        }
    }
    Ok(m)
}

/// Dense `W(f)` by Padé scaling-and-squaring.
pub fn weyl_matrix(f: &ModeVector, space: &Arc<FockSpace>) -> Result<DMatrix<Complex64>> {
    check_weyl_norm(f, space)?;
    Ok(generator_matrix(f, space)?.exp())
}
