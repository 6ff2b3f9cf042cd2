//! Matrix-free spectral solver for quasiperiodic Schrödinger eigenvalue
//! problems.
//!
//! A quasiperiodic operator in `d` physical dimensions is lifted to an
//! `n`-dimensional periodic problem through a projection matrix and
//! discretized in Fourier modes. Two basis choices are supported: the full
//! tensor set of `N^n` modes, and a reduced set keeping only modes with small
//! projected wavevector, which cuts the degrees of freedom by an order of
//! magnitude or more at negligible accuracy cost. The smallest eigenpairs are
//! computed matrix-free with a thick-restart Lanczos iteration whose matvec
//! runs through FFTs; computed eigenvalues can be cross-checked with a
//! contour-integral spectral indicator.
//!
//! With the default `parallel` feature the grid sampling, FFT lines, and
//! vector kernels run on the rayon pool; disabling it yields a fully
//! sequential build with bitwise-identical results.

pub mod diagnostics;
pub mod eigensolver;
mod error;
mod fft;
pub mod gmres;
pub mod indicator;
mod kernels;
pub mod lattice;
pub mod operator;
pub mod potential;

pub use error::{Error, Result};
pub use lattice::{FrequencyIndexSet, ProjectionMatrix, SetKind};
pub use operator::{CoefficientVector, HamiltonianOperator};
pub use potential::{GridField, PotentialSpec};

pub use num_complex::Complex64;
