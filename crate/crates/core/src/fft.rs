//! n-dimensional DFT on the `N^n` tensor grid, built from 1D transforms.
//!
//! Normalization: the inverse transform carries the `1/N^n` factor, the
//! forward carries none, so `forward . inverse` is the identity. Axis lines
//! are transformed independently, which keeps results identical across
//! thread counts.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::kernels;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone)]
pub(crate) struct TensorFft {
    raised_dim: usize,
    modes: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TensorFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorFft")
            .field("raised_dim", &self.raised_dim)
            .field("modes", &self.modes)
            .finish()
    }
}

impl TensorFft {
    pub fn new(raised_dim: usize, modes: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            raised_dim,
            modes,
            len: modes.pow(raised_dim as u32),
            forward: planner.plan_fft_forward(modes),
            inverse: planner.plan_fft_inverse(modes),
        }
    }

    /// Unnormalized forward transform (`e^{-i k x}` analysis sum) in place.
    /// `work` must have length `len()`.
    pub fn forward(&self, data: &mut [Complex64], work: &mut [Complex64]) {
        for axis in 0..self.raised_dim {
            self.transform_axis(&self.forward, data, work, axis);
        }
    }

    /// Inverse transform (`e^{+i k x}` synthesis sum) carrying the `1/N^n`
    /// factor, in place.
    pub fn inverse(&self, data: &mut [Complex64], work: &mut [Complex64]) {
        for axis in 0..self.raised_dim {
            self.transform_axis(&self.inverse, data, work, axis);
        }
        kernels::scale(data, 1.0 / self.len as f64);
    }

    fn transform_axis(
        &self,
        fft: &Arc<dyn Fft<f64>>,
        data: &mut [Complex64],
        work: &mut [Complex64],
        axis: usize,
    ) {
        debug_assert_eq!(data.len(), self.len);
        debug_assert_eq!(work.len(), self.len);
        let n = self.modes;
        if n == 1 {
            return;
        }
        let inner = n.pow((self.raised_dim - 1 - axis) as u32);
        if inner == 1 {
            fft_lines(fft, data);
            return;
        }

        // Strided axis: gather lines contiguously into `work`, transform,
        // scatter back. Line `l = outer * inner + i` starts at
        // `data[outer * n * inner + i]` with stride `inner`.
        let gather = |(l, line): (usize, &mut [Complex64])| {
            let outer = l / inner;
            let i = l % inner;
            let base = outer * n * inner + i;
            for (a, slot) in line.iter_mut().enumerate() {
                *slot = data[base + a * inner];
            }
        };
        #[cfg(feature = "parallel")]
        work.par_chunks_exact_mut(n).enumerate().for_each(gather);
        #[cfg(not(feature = "parallel"))]
        work.chunks_exact_mut(n).enumerate().for_each(gather);

        fft_lines(fft, work);

        // data[outer*n*inner + a*inner + i] = work[(outer*inner + i)*n + a];
        // chunk c of length `inner` in data corresponds to (outer, a).
        let scatter = |(c, chunk): (usize, &mut [Complex64])| {
            let outer = c / n;
            let a = c % n;
            let base = outer * inner;
            for (i, slot) in chunk.iter_mut().enumerate() {
                *slot = work[(base + i) * n + a];
            }
        };
        #[cfg(feature = "parallel")]
        data.par_chunks_exact_mut(inner).enumerate().for_each(scatter);
        #[cfg(not(feature = "parallel"))]
        data.chunks_exact_mut(inner).enumerate().for_each(scatter);
    }
}

/// Runs the 1D transform over consecutive lines of `data`.
fn fft_lines(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
    let n = fft.len();
    let scratch_len = fft.get_inplace_scratch_len();
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_exact_mut(n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut scratch = vec![Complex64::default(); scratch_len];
        for line in data.chunks_exact_mut(n) {
            fft.process_with_scratch(line, &mut scratch);
        }
    }
}
