//! Restarted GMRES for complex shifted systems, matrix-free.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels;

/// Parameters for the restarted GMRES iteration.
#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Relative residual target.
    pub tol: f64,
    /// Inner (Arnoldi) dimension per restart cycle.
    pub restart: usize,
    /// Total matvec budget across restarts.
    pub max_iters: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restart: 50,
            max_iters: 2000,
        }
    }
}

impl GmresConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gmres tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.restart == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "gmres restart and max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Solves `A x = b` for the matrix-free operator `apply`, returning the
/// solution and its relative residual.
///
/// Modified Gram-Schmidt Arnoldi with complex Givens rotations; restarts
/// until the residual target or the matvec budget is reached.
pub fn solve<F>(mut apply: F, b: &[Complex64], cfg: &GmresConfig) -> Result<Vec<Complex64>>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    cfg.validate()?;
    let n = b.len();
    let bnorm = kernels::norm(b);
    let mut x = vec![Complex64::default(); n];
    if bnorm == 0.0 {
        return Ok(x);
    }

    let m = cfg.restart.min(n);
    let mut iters = 0usize;
    let mut scratch = vec![Complex64::default(); n];

    loop {
        // r = b - A x
        apply(&x, &mut scratch);
        let mut r: Vec<Complex64> = b.iter().zip(&scratch).map(|(bi, ax)| bi - ax).collect();
        let beta = kernels::norm(&r);
        if beta <= cfg.tol * bnorm {
            return Ok(x);
        }
        if iters >= cfg.max_iters {
            return Err(Error::SolverFailure(format!(
                "gmres stalled at relative residual {:.3e} after {iters} iterations",
                beta / bnorm
            )));
        }

        kernels::scale(&mut r, 1.0 / beta);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r);
        // Column-major upper Hessenberg after Givens elimination.
        let mut hess = vec![vec![Complex64::default(); m + 1]; m];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![Complex64::default(); m];
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut steps = 0usize;

        for j in 0..m {
            iters += 1;
            apply(&basis[j], &mut scratch);
            let mut w = scratch.clone();
            // Modified Gram-Schmidt with one refinement pass.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let proj = kernels::dot(v, &w);
                    if proj.norm_sqr() > 0.0 {
                        kernels::axpy(&mut w, -proj, v);
                        hess[j][i] += proj;
                    }
                }
            }
            let wnorm = kernels::norm(&w);
            hess[j][j + 1] = Complex64::new(wnorm, 0.0);

            // Apply the accumulated rotations to the new column.
            for i in 0..j {
                let hi = hess[j][i];
                let hip = hess[j][i + 1];
                hess[j][i] = cs[i] * hi + sn[i] * hip;
                hess[j][i + 1] = -sn[i].conj() * hi + cs[i] * hip;
            }
            let (c, s) = givens(hess[j][j], hess[j][j + 1]);
            cs[j] = c;
            sn[j] = s;
            hess[j][j] = c * hess[j][j] + s * hess[j][j + 1];
            hess[j][j + 1] = Complex64::default();
            let gj = g[j];
            g[j] = c * gj;
            g[j + 1] = -s.conj() * gj;
            steps = j + 1;

            let breakdown = wnorm <= f64::EPSILON * bnorm;
            let converged = g[j + 1].norm() <= cfg.tol * bnorm;
            if breakdown || converged || iters >= cfg.max_iters {
                break;
            }
            kernels::scale(&mut w, 1.0 / wnorm);
            basis.push(w);
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![Complex64::default(); steps];
        for i in (0..steps).rev() {
            let mut sum = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                sum -= hess[jj][i] * yj;
            }
            y[i] = sum / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            kernels::axpy(&mut x, *yj, &basis[j]);
        }
    }
}

/// Complex Givens rotation zeroing `b`: returns `(c, s)` with `c` real so
/// that `[c, s; -conj(s), c] [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::default());
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let t = (an * an + bn * bn).sqrt();
    let c = an / t;
    let s = (a / an) * b.conj() / t;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_apply(diag: &[Complex64]) -> impl FnMut(&[Complex64], &mut [Complex64]) + '_ {
        move |x, y| {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(diag) {
                *yi = di * xi;
            }
        }
    }

    #[test]
    fn solves_diagonal_system() {
        let diag: Vec<Complex64> = [1.0, 3.0]
            .iter()
            .map(|v| Complex64::new(*v, 0.0) - Complex64::new(0.0, 2.0))
            .collect();
        let b = vec![Complex64::new(1.0, 0.0); 2];
        let cfg = GmresConfig {
            tol: 1e-12,
            ..Default::default()
        };
        let x = solve(diag_apply(&diag), &b, &cfg).unwrap();
        for (xi, di) in x.iter().zip(&diag) {
            assert!((xi - 1.0 / di).norm() < 1e-10);
        }
    }

    #[test]
    fn solves_nonnormal_dense_system() {
        // Small non-Hermitian matrix, checked through the residual.
        let a = [
            [
                Complex64::new(2.0, 0.1),
                Complex64::new(0.5, -0.3),
                Complex64::default(),
            ],
            [
                Complex64::new(0.0, 0.7),
                Complex64::new(1.5, 0.0),
                Complex64::new(0.2, 0.2),
            ],
            [
                Complex64::new(0.3, 0.0),
                Complex64::default(),
                Complex64::new(3.0, -0.4),
            ],
        ];
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            }
        };
        let b = vec![
            Complex64::new(1.0, -1.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-0.5, 0.0),
        ];
        let cfg = GmresConfig {
            tol: 1e-11,
            ..Default::default()
        };
        let x = solve(apply, &b, &cfg).unwrap();
        let mut ax = vec![Complex64::default(); 3];
        apply(&x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(l, r)| (l - r).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-10 * kernels::norm(&b));
    }

    #[test]
    fn reports_nonconvergence() {
        // Singular system: A = 0.
        let apply = |_x: &[Complex64], y: &mut [Complex64]| {
            y.iter_mut().for_each(|v| *v = Complex64::default());
        };
        let b = vec![Complex64::new(1.0, 0.0); 4];
        let cfg = GmresConfig {
            tol: 1e-10,
            restart: 4,
            max_iters: 12,
        };
        assert!(matches!(
            solve(apply, &b, &cfg),
            Err(Error::SolverFailure(_))
        ));
    }

    #[test]
    fn restart_cycles_still_converge() {
        // 40-dim diagonal with spread eigenvalues, restart smaller than n.
        let diag: Vec<Complex64> = (1..=40)
            .map(|i| Complex64::new(i as f64, 1.0))
            .collect();
        let b: Vec<Complex64> = (0..40)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let cfg = GmresConfig {
            tol: 1e-10,
            restart: 8,
            max_iters: 2000,
        };
        let x = solve(diag_apply(&diag), &b, &cfg).unwrap();
        for ((xi, di), bi) in x.iter().zip(&diag).zip(&b) {
            assert!((xi * di - bi).norm() < 1e-8);
        }
    }
}
