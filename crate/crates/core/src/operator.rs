//! Matrix-free application of the lifted Hamiltonian.
//!
//! On the Fourier index set the operator acts as a kinetic diagonal plus a
//! convolution with the potential's Fourier coefficients. The convolution is
//! evaluated by zero-filling the coefficients into the dense tensor grid,
//! transforming to real space, multiplying by the sampled potential, and
//! transforming back — the dense matrix is never stored in production paths.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::TensorFft;
use crate::lattice::{FrequencyIndexSet, ProjectionMatrix};
use crate::potential::{GridField, PotentialSpec};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Complex Fourier coefficients aligned to a [`FrequencyIndexSet`]'s order.
pub type CoefficientVector = Vec<Complex64>;

/// Default cap on the index-set size for [`HamiltonianOperator::dense_matrix`].
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// The discretized Hamiltonian `H = D + conv(V)` on an index set.
///
/// `apply` reuses internal grid buffers, so one operator instance must not be
/// shared between concurrent applications; clone the operator instead.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    index_set: FrequencyIndexSet,
    projection: ProjectionMatrix,
    kinetic: Vec<f64>,
    potential: GridField,
    fft: TensorFft,
    grid_buf: Vec<Complex64>,
    work_buf: Vec<Complex64>,
}

impl HamiltonianOperator {
    /// Builds the operator for a potential on an index set constructed
    /// against the same projection.
    pub fn build(
        projection: &ProjectionMatrix,
        spec: &PotentialSpec,
        index_set: FrequencyIndexSet,
    ) -> Result<Self> {
        if let Some(dim) = spec.raised_dim() {
            if dim != projection.raised_dim() {
                return Err(Error::DimensionMismatch {
                    expected: projection.raised_dim(),
                    actual: dim,
                });
            }
        }
        let potential = spec.sample_parent_grid(index_set.modes_per_axis())?;
        Self::from_samples(projection, index_set, potential)
    }

    /// Builds the operator from pre-sampled potential values.
    pub fn from_samples(
        projection: &ProjectionMatrix,
        index_set: FrequencyIndexSet,
        potential: GridField,
    ) -> Result<Self> {
        if projection.raised_dim() != index_set.raised_dim() {
            return Err(Error::DimensionMismatch {
                expected: index_set.raised_dim(),
                actual: projection.raised_dim(),
            });
        }
        if potential.raised_dim() != index_set.raised_dim()
            || potential.modes_per_axis() != index_set.modes_per_axis()
        {
            return Err(Error::DimensionMismatch {
                expected: index_set.grid_len(),
                actual: potential.len(),
            });
        }
        let kinetic = index_set.kinetic_diagonal(projection)?;
        let fft = TensorFft::new(index_set.raised_dim(), index_set.modes_per_axis());
        let grid_len = index_set.grid_len();
        Ok(Self {
            index_set,
            projection: projection.clone(),
            kinetic,
            potential,
            fft,
            grid_buf: vec![Complex64::default(); grid_len],
            work_buf: vec![Complex64::default(); grid_len],
        })
    }

    pub fn size(&self) -> usize {
        self.index_set.size()
    }

    pub fn index_set(&self) -> &FrequencyIndexSet {
        &self.index_set
    }

    pub fn projection(&self) -> &ProjectionMatrix {
        &self.projection
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential(&self) -> &GridField {
        &self.potential
    }

    /// Returns a copy whose potential is shifted by a constant.
    pub fn with_potential_offset(&self, offset: f64) -> Result<Self> {
        Self::from_samples(
            &self.projection,
            self.index_set.clone(),
            self.potential.shifted(offset),
        )
    }

    fn check_aligned(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.size() {
            return Err(Error::Misaligned {
                expected: self.size(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `out = H f`.
    pub fn apply_into(&mut self, f: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.check_aligned(f)?;
        self.check_aligned(out)?;

        let positions = self.index_set.grid_positions();
        self.grid_buf.iter_mut().for_each(|v| *v = Complex64::default());
        for (value, pos) in f.iter().zip(positions) {
            self.grid_buf[*pos] = *value;
        }
        self.fft.inverse(&mut self.grid_buf, &mut self.work_buf);

        let mult = |(u, v): (&mut Complex64, &f64)| *u *= *v;
        #[cfg(feature = "parallel")]
        self.grid_buf
            .par_iter_mut()
            .zip(self.potential.values().par_iter())
            .for_each(mult);
        #[cfg(not(feature = "parallel"))]
        self.grid_buf
            .iter_mut()
            .zip(self.potential.values().iter())
            .for_each(mult);

        self.fft.forward(&mut self.grid_buf, &mut self.work_buf);

        for ((slot, value), (kin, pos)) in out
            .iter_mut()
            .zip(f)
            .zip(self.kinetic.iter().zip(positions))
        {
            *slot = kin * value + self.grid_buf[*pos];
        }
        Ok(())
    }

    /// `H f`, allocating the result.
    pub fn apply(&mut self, f: &[Complex64]) -> Result<CoefficientVector> {
        let mut out = vec![Complex64::default(); self.size()];
        self.apply_into(f, &mut out)?;
        Ok(out)
    }

    /// `out = (H - shift) f`.
    pub fn apply_shifted_into(
        &mut self,
        shift: Complex64,
        f: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<()> {
        self.apply_into(f, out)?;
        for (slot, value) in out.iter_mut().zip(f) {
            *slot -= shift * value;
        }
        Ok(())
    }

    pub fn apply_shifted(&mut self, shift: Complex64, f: &[Complex64]) -> Result<CoefficientVector> {
        let mut out = vec![Complex64::default(); self.size()];
        self.apply_shifted_into(shift, f, &mut out)?;
        Ok(out)
    }

    /// Reference matvec evaluating the potential convolution as an explicit
    /// sum over index pairs, with the potential's Fourier coefficients
    /// obtained from a naive separable DFT. Independent of the FFT path;
    /// `O(size^2)` work.
    pub fn apply_reference(&self, f: &[Complex64]) -> Result<CoefficientVector> {
        self.check_aligned(f)?;
        let vhat = self.potential_coefficients_naive();
        let n = self.index_set.modes_per_axis() as i64;
        let dim = self.index_set.raised_dim();
        let size = self.size();

        let row = |i: usize| -> Complex64 {
            let ki = self.index_set.index(i);
            let mut acc = Complex64::new(self.kinetic[i], 0.0) * f[i];
            let mut diff_pos;
            for (j, fj) in f.iter().enumerate() {
                let kj = self.index_set.index(j);
                diff_pos = 0usize;
                for a in 0..dim {
                    let d = (ki[a] - kj[a]).rem_euclid(n);
                    diff_pos = diff_pos * n as usize + d as usize;
                }
                acc += vhat[diff_pos] * fj;
            }
            acc
        };
        #[cfg(feature = "parallel")]
        let out = (0..size).into_par_iter().map(row).collect();
        #[cfg(not(feature = "parallel"))]
        let out = (0..size).map(row).collect();
        Ok(out)
    }

    /// Potential Fourier coefficients on the dense grid via naive separable
    /// DFT (analysis normalization `1/N^n`).
    fn potential_coefficients_naive(&self) -> Vec<Complex64> {
        let n = self.index_set.modes_per_axis();
        let dim = self.index_set.raised_dim();
        let len = self.index_set.grid_len();
        let mut data: Vec<Complex64> = self
            .potential
            .values()
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .collect();
        // 1D DFT matrix entries e^{-2 pi i a b / N}.
        let twiddle: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let (a, b) = (i / n, i % n);
                Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * ((a * b) % n) as f64 / n as f64,
                )
            })
            .collect();
        let mut line_in = vec![Complex64::default(); n];
        for axis in 0..dim {
            let inner = n.pow((dim - 1 - axis) as u32);
            let outer = len / (n * inner);
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for (a, slot) in line_in.iter_mut().enumerate() {
                        *slot = data[base + a * inner];
                    }
                    for a in 0..n {
                        let mut acc = Complex64::default();
                        for (b, v) in line_in.iter().enumerate() {
                            acc += twiddle[a * n + b] * v;
                        }
                        data[base + a * inner] = acc;
                    }
                }
            }
        }
        let scale = 1.0 / len as f64;
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    /// Fourier coefficients of the potential restricted to the index set.
    pub fn potential_coefficient_vector(&mut self) -> CoefficientVector {
        let mut grid: Vec<Complex64> = self
            .potential
            .values()
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .collect();
        self.fft.forward(&mut grid, &mut self.work_buf);
        let scale = 1.0 / self.index_set.grid_len() as f64;
        self.index_set
            .grid_positions()
            .iter()
            .map(|pos| grid[*pos] * scale)
            .collect()
    }

    /// Dense form of the operator, column `j = H e_j`. Intended for oracles
    /// and small validation instances.
    pub fn dense_matrix(&mut self) -> Result<DMatrix<Complex64>> {
        self.dense_matrix_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn dense_matrix_with_cap(&mut self, cap: usize) -> Result<DMatrix<Complex64>> {
        let size = self.size();
        if size > cap {
            return Err(Error::BudgetExceeded {
                requested: size,
                budget: cap,
            });
        }
        let mut dense = DMatrix::<Complex64>::zeros(size, size);
        let mut unit = vec![Complex64::default(); size];
        let mut column = vec![Complex64::default(); size];
        for j in 0..size {
            unit[j] = Complex64::new(1.0, 0.0);
            self.apply_into(&unit, &mut column)?;
            for (i, v) in column.iter().enumerate() {
                dense[(i, j)] = *v;
            }
            unit[j] = Complex64::default();
        }
        Ok(dense)
    }
}
