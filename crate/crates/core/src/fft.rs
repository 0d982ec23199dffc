//! Sequential 3D FFTs on cubic row-major arrays, with optional pruning of
//! lines known to be zero (or not needed) for zero-padded convolutions.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Range of active lines for one axis pass. Each entry bounds the index on
/// the corresponding axis; the transformed axis is always taken whole.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Active {
    pub i: usize,
    pub j: usize,
    pub l: usize,
}

impl Active {
    pub fn full(n: usize) -> Self {
        Self { i: n, j: n, l: n }
    }
}

pub(crate) struct Fft3 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize, direction: FftDirection) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft(n, direction);
        Self { n, fft }
    }

    pub fn forward(n: usize) -> Self {
        Self::new(n, FftDirection::Forward)
    }

    pub fn inverse(n: usize) -> Self {
        Self::new(n, FftDirection::Inverse)
    }

    /// Full unnormalized transform over all three axes.
    pub fn process(&self, data: &mut [Complex64]) {
        let a = Active::full(self.n);
        self.axis2(data, a);
        self.axis1(data, a);
        self.axis0(data, a);
    }

    /// Lines along the contiguous axis with `i < a.i`, `j < a.j`.
    pub fn axis2(&self, data: &mut [Complex64], a: Active) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for i in 0..a.i {
            let start = i * n * n;
            self.fft
                .process_with_scratch(&mut data[start..start + a.j * n], &mut scratch);
        }
    }

    /// Lines along the middle axis with `i < a.i`, `l < a.l`.
    pub fn axis1(&self, data: &mut [Complex64], a: Active) {
        let n = self.n;
        let mut buf = vec![Complex64::default(); a.l * n];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for i in 0..a.i {
            let plane = &mut data[i * n * n..(i + 1) * n * n];
            for j in 0..n {
                let row = &plane[j * n..j * n + a.l];
                for (l, v) in row.iter().enumerate() {
                    buf[l * n + j] = *v;
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                let row = &mut plane[j * n..j * n + a.l];
                for (l, v) in row.iter_mut().enumerate() {
                    *v = buf[l * n + j];
                }
            }
        }
    }

    /// Lines along the slowest axis with `j < a.j`, `l < a.l`.
    pub fn axis0(&self, data: &mut [Complex64], a: Active) {
        let n = self.n;
        let mut buf = vec![Complex64::default(); a.l * n];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for j in 0..a.j {
            for i in 0..n {
                let start = (i * n + j) * n;
                let row = &data[start..start + a.l];
                for (l, v) in row.iter().enumerate() {
                    buf[l * n + i] = *v;
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                let start = (i * n + j) * n;
                let row = &mut data[start..start + a.l];
                for (l, v) in row.iter_mut().enumerate() {
                    *v = buf[l * n + i];
                }
            }
        }
    }
}
