//! Projection matrices and Fourier index sets.
//!
//! A quasiperiodic function in `d` physical dimensions is represented through
//! an `n`-dimensional periodic parent function via a `d x n` projection matrix
//! `P`: integer frequency indices `k` of the parent map to physical
//! wavevectors `q = P k`. The solver discretizes the parent problem on a
//! tensor grid of `N` Fourier modes per axis. The full index set holds all
//! `N^n` modes; the reduced set keeps only modes whose projected wavevector is
//! small, exploiting the rapid decay of eigenfunction coefficients in `|P k|`.
//!
//! Reduced-set membership uses the componentwise bound
//! `max_i |(P k)_i| <= D`. For `d = 1` this is the same as the Euclidean
//! bound `|P k| <= D`; for `d >= 2` it is the product-type truncation that the
//! degree-of-freedom counts of the reference 2D experiments correspond to.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default cap on dense tensor-grid sizes (`N^n` points).
pub const DEFAULT_GRID_BUDGET: usize = 1 << 27;

/// Relative singular-value cutoff for the row-rank check.
const RANK_TOL: f64 = 1e-10;

/// A `d x n` projection matrix with full row rank linking parent frequency
/// indices to physical wavevectors.
///
/// Rational independence of the columns is an assumption of the method; it is
/// not (and cannot be) verified in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    physical_dim: usize,
    raised_dim: usize,
    /// Row-major `d x n` entries.
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    /// Builds a projection matrix from row-major entries.
    pub fn new(physical_dim: usize, raised_dim: usize, entries: Vec<f64>) -> Result<Self> {
        if physical_dim == 0 || raised_dim < physical_dim {
            return Err(Error::InvalidArgument(format!(
                "projection matrix needs n >= d >= 1, got d={physical_dim}, n={raised_dim}"
            )));
        }
        if entries.len() != physical_dim * raised_dim {
            return Err(Error::DimensionMismatch {
                expected: physical_dim * raised_dim,
                actual: entries.len(),
            });
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::InvalidArgument(
                "projection matrix entries must be finite".into(),
            ));
        }
        for col in 0..raised_dim {
            let col_norm: f64 = (0..physical_dim)
                .map(|row| entries[row * raised_dim + col].powi(2))
                .sum();
            if col_norm == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "projection matrix column {col} is zero"
                )));
            }
        }
        let m = DMatrix::from_row_slice(physical_dim, raised_dim, &entries);
        let svals = m.singular_values();
        let smax = svals.max();
        let rank = svals.iter().filter(|s| **s > RANK_TOL * smax).count();
        if rank < physical_dim {
            return Err(Error::InvalidArgument(format!(
                "projection matrix is row-rank deficient (rank {rank} < d {physical_dim})"
            )));
        }
        Ok(Self {
            physical_dim,
            raised_dim,
            entries,
        })
    }

    /// 1 x n convenience constructor.
    pub fn row(entries: Vec<f64>) -> Result<Self> {
        let n = entries.len();
        Self::new(1, n, entries)
    }

    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    pub fn raised_dim(&self) -> usize {
        self.raised_dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.raised_dim + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn check_index(&self, index: &[i64]) -> Result<()> {
        if index.len() != self.raised_dim {
            return Err(Error::DimensionMismatch {
                expected: self.raised_dim,
                actual: index.len(),
            });
        }
        Ok(())
    }

    /// Physical wavevector `q = P k`.
    pub fn project(&self, index: &[i64]) -> Result<Vec<f64>> {
        self.check_index(index)?;
        let mut q = vec![0.0; self.physical_dim];
        self.project_into(index, &mut q);
        Ok(q)
    }

    pub(crate) fn project_into(&self, index: &[i64], q: &mut [f64]) {
        for (row, qi) in q.iter_mut().enumerate() {
            let base = row * self.raised_dim;
            *qi = index
                .iter()
                .enumerate()
                .map(|(col, k)| self.entries[base + col] * *k as f64)
                .sum();
        }
    }

    /// Euclidean norm `|P k|` of the projected wavevector.
    pub fn projected_norm(&self, index: &[i64]) -> Result<f64> {
        let q = self.project(index)?;
        Ok(q.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Componentwise norm `max_i |(P k)_i|`; the reduced-set membership bound.
    pub fn truncation_norm(&self, index: &[i64]) -> Result<f64> {
        let q = self.project(index)?;
        Ok(q.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Kinetic symbol `|P k|^2 / 2`, the diagonal of the lifted Laplacian.
    pub fn kinetic_value(&self, index: &[i64]) -> Result<f64> {
        let q = self.project(index)?;
        Ok(0.5 * q.iter().map(|v| v * v).sum::<f64>())
    }

    /// Exact maximum of `|P k|` over the `N`-modes-per-axis grid.
    ///
    /// The maximum of a convex function over a box is attained at a vertex,
    /// so it suffices to scan the `2^n` grid corners.
    pub fn max_projected_norm(&self, modes_per_axis: usize) -> f64 {
        let (lo, hi) = axis_frequency_range(modes_per_axis);
        let n = self.raised_dim;
        let mut best = 0.0f64;
        let mut corner = vec![0i64; n];
        for bits in 0..(1usize << n) {
            for (j, c) in corner.iter_mut().enumerate() {
                *c = if bits & (1 << j) != 0 { hi } else { lo };
            }
            let mut sq = 0.0;
            for row in 0..self.physical_dim {
                let base = row * n;
                let qi: f64 = corner
                    .iter()
                    .enumerate()
                    .map(|(col, k)| self.entries[base + col] * *k as f64)
                    .sum();
                sq += qi * qi;
            }
            best = best.max(sq.sqrt());
        }
        best
    }
}

/// Signed frequency range of one grid axis with `N` modes:
/// `{0, .., ceil(N/2)-1} U {-floor(N/2), .., -1}`.
pub fn axis_frequency_range(modes_per_axis: usize) -> (i64, i64) {
    let n = modes_per_axis as i64;
    (-(n / 2), (n + 1) / 2 - 1)
}

/// Whether an index set spans the full tensor grid or a reduced subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetKind {
    Full,
    /// Reduced with the stored truncation radius.
    Reduced(f64),
}

/// An ordered set of integer frequency indices together with each index's
/// linear position in the dense `N^n` DFT tensor grid.
///
/// Indices are stored flattened in lexicographic order of their components;
/// coefficient vectors aligned to a set follow the same order.
#[derive(Debug, Clone)]
pub struct FrequencyIndexSet {
    raised_dim: usize,
    modes_per_axis: usize,
    kind: SetKind,
    /// Flattened components, `size * raised_dim` entries.
    components: Vec<i64>,
    /// Linear dense-grid position per index.
    grid_positions: Vec<usize>,
}

impl FrequencyIndexSet {
    /// The full tensor set of `N^n` modes.
    pub fn full(raised_dim: usize, modes_per_axis: usize) -> Result<Self> {
        Self::full_with_budget(raised_dim, modes_per_axis, DEFAULT_GRID_BUDGET)
    }

    pub fn full_with_budget(
        raised_dim: usize,
        modes_per_axis: usize,
        budget: usize,
    ) -> Result<Self> {
        let size = checked_grid_len(raised_dim, modes_per_axis, budget)?;
        let mut components = Vec::with_capacity(size * raised_dim);
        let mut grid_positions = Vec::with_capacity(size);
        let mut scan = GridScan::new(raised_dim, modes_per_axis);
        while let Some((index, pos)) = scan.next() {
            components.extend_from_slice(index);
            grid_positions.push(pos);
        }
        Ok(Self {
            raised_dim,
            modes_per_axis,
            kind: SetKind::Full,
            components,
            grid_positions,
        })
    }

    /// The reduced set of grid modes with `max_i |(P k)_i| <= radius`.
    pub fn reduced(
        projection: &ProjectionMatrix,
        modes_per_axis: usize,
        radius: f64,
    ) -> Result<Self> {
        Self::reduced_with_budget(projection, modes_per_axis, radius, DEFAULT_GRID_BUDGET)
    }

    pub fn reduced_with_budget(
        projection: &ProjectionMatrix,
        modes_per_axis: usize,
        radius: f64,
        budget: usize,
    ) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation radius must be >= 0, got {radius}"
            )));
        }
        let raised_dim = projection.raised_dim();
        checked_grid_len(raised_dim, modes_per_axis, budget)?;
        let mut components = Vec::new();
        let mut grid_positions = Vec::new();
        let mut scan = GridScan::new(raised_dim, modes_per_axis);
        let mut q = vec![0.0; projection.physical_dim()];
        while let Some((index, pos)) = scan.next() {
            projection.project_into(index, &mut q);
            if q.iter().all(|v| v.abs() <= radius) {
                components.extend_from_slice(index);
                grid_positions.push(pos);
            }
        }
        Ok(Self {
            raised_dim,
            modes_per_axis,
            kind: SetKind::Reduced(radius),
            components,
            grid_positions,
        })
    }

    pub fn size(&self) -> usize {
        self.grid_positions.len()
    }

    pub fn raised_dim(&self) -> usize {
        self.raised_dim
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    /// Truncation radius for reduced sets.
    pub fn truncation_radius(&self) -> Option<f64> {
        match self.kind {
            SetKind::Full => None,
            SetKind::Reduced(d) => Some(d),
        }
    }

    /// Number of points in the dense tensor grid.
    pub fn grid_len(&self) -> usize {
        self.modes_per_axis.pow(self.raised_dim as u32)
    }

    /// Components of the `i`-th index.
    pub fn index(&self, i: usize) -> &[i64] {
        let n = self.raised_dim;
        &self.components[i * n..(i + 1) * n]
    }

    /// Linear dense-grid position of the `i`-th index.
    pub fn grid_position(&self, i: usize) -> usize {
        self.grid_positions[i]
    }

    pub fn grid_positions(&self) -> &[usize] {
        &self.grid_positions
    }

    /// Iterates over `(components, grid_position)` pairs in set order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], usize)> {
        self.components
            .chunks_exact(self.raised_dim)
            .zip(self.grid_positions.iter().copied())
    }

    /// True when the set contains an index with the given components.
    pub fn contains(&self, index: &[i64]) -> bool {
        if index.len() != self.raised_dim {
            return false;
        }
        let n = self.raised_dim;
        let mut lo = 0usize;
        let mut hi = self.size();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.components[mid * n..(mid + 1) * n].cmp(index) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Kinetic diagonal `|P k|^2 / 2` for every index, in set order.
    pub fn kinetic_diagonal(&self, projection: &ProjectionMatrix) -> Result<Vec<f64>> {
        if projection.raised_dim() != self.raised_dim {
            return Err(Error::DimensionMismatch {
                expected: self.raised_dim,
                actual: projection.raised_dim(),
            });
        }
        let n = self.raised_dim;
        let compute = |chunk: &[i64]| {
            let mut q = vec![0.0; projection.physical_dim()];
            projection.project_into(chunk, &mut q);
            0.5 * q.iter().map(|v| v * v).sum::<f64>()
        };
        #[cfg(feature = "parallel")]
        let diag = self.components.par_chunks(n).map(compute).collect();
        #[cfg(not(feature = "parallel"))]
        let diag = self.components.chunks(n).map(compute).collect();
        Ok(diag)
    }
}

/// Lexicographic odometer over the signed frequency grid, tracking the linear
/// DFT position incrementally.
struct GridScan {
    raised_dim: usize,
    modes: usize,
    lo: i64,
    hi: i64,
    current: Vec<i64>,
    /// Stride of each axis in the dense row-major grid.
    strides: Vec<usize>,
    done: bool,
    started: bool,
}

impl GridScan {
    fn new(raised_dim: usize, modes: usize) -> Self {
        let (lo, hi) = axis_frequency_range(modes);
        let mut strides = vec![0usize; raised_dim];
        let mut s = 1usize;
        for j in (0..raised_dim).rev() {
            strides[j] = s;
            s *= modes;
        }
        Self {
            raised_dim,
            modes,
            lo,
            hi,
            current: vec![lo; raised_dim],
            strides,
            done: modes == 0,
            started: false,
        }
    }

    fn position(&self) -> usize {
        let n = self.modes as i64;
        self.current
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| {
                let bin = if *c >= 0 { *c } else { *c + n } as usize;
                bin * s
            })
            .sum()
    }

    fn next(&mut self) -> Option<(&[i64], usize)> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some((&self.current, self.position()));
        }
        let mut axis = self.raised_dim;
        loop {
            if axis == 0 {
                self.done = true;
                return None;
            }
            axis -= 1;
            if self.current[axis] < self.hi {
                self.current[axis] += 1;
                for j in axis + 1..self.raised_dim {
                    self.current[j] = self.lo;
                }
                return Some((&self.current, self.position()));
            }
        }
    }
}

fn checked_grid_len(raised_dim: usize, modes_per_axis: usize, budget: usize) -> Result<usize> {
    if raised_dim == 0 || modes_per_axis == 0 {
        return Err(Error::InvalidArgument(
            "grid needs n >= 1 and N >= 1".into(),
        ));
    }
    let len = (modes_per_axis as u128).pow(raised_dim as u32);
    if len > budget as u128 {
        return Err(Error::BudgetExceeded {
            requested: len.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    Ok(len as usize)
}
