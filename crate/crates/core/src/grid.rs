//! Uniform periodic box `[-L/2, L/2)^3` sampled with `n` points per axis.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    /// `n` must be even so that every axis carries a single Nyquist row.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be even and >= 2, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    /// Signed lattice index of the FFT slot `m`; the Nyquist slot maps to `-n/2`.
    #[inline]
    pub fn signed_mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Spacing of the frequency lattice, `2π/L`.
    #[inline]
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Wavenumbers along one axis in FFT storage order.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|m| self.signed_mode(m) as f64 * self.dk())
            .collect()
    }

    /// Node coordinates along one axis, starting at `-L/2`.
    pub fn axis_positions(&self) -> Vec<f64> {
        let dx = self.dx();
        let half = 0.5 * self.box_length;
        (0..self.n).map(|j| -half + j as f64 * dx).collect()
    }

    /// `|k|^2` at every lattice frequency, in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.axis_wavenumbers();
        let mut out = Vec::with_capacity(self.len());
        for &kx in &k {
            for &ky in &k {
                for &kz in &k {
                    out.push(kx * kx + ky * ky + kz * kz);
                }
            }
        }
        out
    }

    /// Largest per-axis lattice index magnitude, `max(|m_x|, |m_y|, |m_z|)`, at every slot.
    pub fn max_abs_mode(&self) -> Vec<usize> {
        let m: Vec<usize> = (0..self.n)
            .map(|s| self.signed_mode(s).unsigned_abs() as usize)
            .collect();
        let mut out = Vec::with_capacity(self.len());
        for &a in &m {
            for &b in &m {
                for &c in &m {
                    out.push(a.max(b).max(c));
                }
            }
        }
        out
    }

    /// Calls `f(index, [x, y, z])` for every node.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let x = self.axis_positions();
        let mut idx = 0;
        for &a in &x {
            for &b in &x {
                for &c in &x {
                    f(idx, [a, b, c]);
                    idx += 1;
                }
            }
        }
    }

    /// Calls `f(index, [kx, ky, kz])` for every lattice frequency.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let k = self.axis_wavenumbers();
        let mut idx = 0;
        for &a in &k {
            for &b in &k {
                for &c in &k {
                    f(idx, [a, b, c]);
                    idx += 1;
                }
            }
        }
    }
}
