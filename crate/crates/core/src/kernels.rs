//! Vector kernels shared by the Krylov solvers.
//!
//! Reductions are accumulated over fixed-size chunks whose partial sums are
//! combined in chunk order. The summation tree is therefore identical whether
//! the chunks run on the rayon pool or on a single thread, which keeps solver
//! output bitwise reproducible across thread counts and across builds with or
//! without the `parallel` feature.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions and elementwise parallelism.
pub(crate) const CHUNK: usize = 8192;

/// Inner product `<a, b> = sum conj(a_i) b_i`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return dot_chunk(a, b);
    }
    let partials: Vec<Complex64> = {
        #[cfg(feature = "parallel")]
        {
            a.par_chunks(CHUNK)
                .zip(b.par_chunks(CHUNK))
                .map(|(ca, cb)| dot_chunk(ca, cb))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            a.chunks(CHUNK)
                .zip(b.chunks(CHUNK))
                .map(|(ca, cb)| dot_chunk(ca, cb))
                .collect()
        }
    };
    partials.into_iter().sum()
}

fn dot_chunk(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm.
pub(crate) fn norm_sq(a: &[Complex64]) -> f64 {
    if a.len() <= CHUNK {
        return norm_sq_chunk(a);
    }
    let partials: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            a.par_chunks(CHUNK).map(norm_sq_chunk).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            a.chunks(CHUNK).map(norm_sq_chunk).collect()
        }
    };
    partials.into_iter().sum()
}

fn norm_sq_chunk(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`.
pub(crate) fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    debug_assert_eq!(y.len(), x.len());
    #[cfg(feature = "parallel")]
    {
        y.par_chunks_mut(CHUNK)
            .zip(x.par_chunks(CHUNK))
            .for_each(|(cy, cx)| {
                for (yi, xi) in cy.iter_mut().zip(cx) {
                    *yi += alpha * xi;
                }
            });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }
}

/// `y *= alpha`.
pub(crate) fn scale(y: &mut [Complex64], alpha: f64) {
    #[cfg(feature = "parallel")]
    {
        y.par_chunks_mut(CHUNK).for_each(|cy| {
            for yi in cy.iter_mut() {
                *yi *= alpha;
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for yi in y.iter_mut() {
            *yi *= alpha;
        }
    }
}

/// Normalizes `v` in place and returns its original norm.
pub(crate) fn normalize(v: &mut [Complex64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        scale(v, 1.0 / n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_conjugates_left_argument() {
        let a = vec![Complex64::new(0.0, 1.0)];
        let b = vec![Complex64::new(0.0, 1.0)];
        assert_eq!(dot(&a, &b), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn chunked_reduction_matches_plain_sum_on_small_input() {
        let a: Vec<Complex64> = (0..100).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let plain: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm_sq(&a) - plain).abs() < 1e-9);
    }

    #[test]
    fn axpy_and_scale() {
        let mut y = vec![Complex64::new(1.0, 0.0); 3];
        let x = vec![Complex64::new(0.0, 2.0); 3];
        axpy(&mut y, Complex64::new(1.0, 0.0), &x);
        scale(&mut y, 0.5);
        for v in &y {
            assert!((v - Complex64::new(0.5, 1.0)).norm() < 1e-15);
        }
    }
}
