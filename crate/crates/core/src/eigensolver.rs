//! Thick-restart Lanczos for the algebraically smallest eigenpairs.
//!
//! The operator is Hermitian and bounded below, so the smallest eigenpairs
//! are reachable by plain Lanczos on `H` without shift-invert; the matvec is
//! cheap and the bottom of the spectrum well separated for the potentials of
//! interest. Full reorthogonalization keeps the basis numerically orthonormal
//! (subspace sizes are modest), and converged eigenvectors are locked and
//! deflated from later cycles.
//!
//! After every lock the iteration restarts from a fresh seeded random vector
//! orthogonal to the locked space. A Krylov space contains one direction per
//! eigenspace, so this injection is what recovers the remaining copies of
//! degenerate (or tightly clustered) eigenvalues; kinetic-diagonal spectra
//! with their exact `k -> -k` pairs would otherwise lose every second copy.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels;
use crate::operator::{CoefficientVector, HamiltonianOperator};

/// Extra Ritz vectors carried across a thick restart beyond the wanted ones.
const THICK_SURPLUS: usize = 8;
/// Relative breakdown threshold for the Lanczos residual norm.
const BREAKDOWN_REL: f64 = 1e-13;

/// Parameters of the restarted Lanczos iteration.
#[derive(Debug, Clone)]
pub struct KrylovConfig {
    /// Number of smallest eigenpairs wanted.
    pub num_eigs: usize,
    /// Krylov basis size per cycle; 0 selects `max(2k + 10, 40)`.
    pub subspace_dim: usize,
    /// Relative residual tolerance: converged when
    /// `|H u - E u| <= tol * max(1, |E|)`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed for the random starting vectors.
    pub seed: u64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            num_eigs: 5,
            subspace_dim: 0,
            tol: 1e-12,
            max_restarts: 300,
            seed: 1,
        }
    }
}

impl KrylovConfig {
    pub fn for_eigs(num_eigs: usize) -> Self {
        Self {
            num_eigs,
            ..Default::default()
        }
    }

    fn effective_subspace(&self) -> usize {
        if self.subspace_dim == 0 {
            (2 * self.num_eigs + 10).max(40)
        } else {
            self.subspace_dim
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.num_eigs == 0 {
            return Err(Error::InvalidArgument("num_eigs must be >= 1".into()));
        }
        if self.num_eigs >= dim {
            return Err(Error::InvalidArgument(format!(
                "num_eigs {} must be smaller than the index set size {dim}",
                self.num_eigs
            )));
        }
        if self.subspace_dim != 0 && self.subspace_dim <= self.num_eigs {
            return Err(Error::InvalidArgument(
                "subspace_dim must exceed num_eigs".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_restarts == 0 {
            return Err(Error::InvalidArgument("max_restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// One computed eigenpair.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm coefficient vector.
    pub vector: CoefficientVector,
    /// Certified relative residual `|H u - E u| / |u|`.
    pub residual: f64,
    pub converged: bool,
}

/// Eigenpairs sorted ascending by eigenvalue.
#[derive(Debug, Clone, Default)]
pub struct EigenPairSet {
    pairs: Vec<EigenPair>,
}

impl EigenPairSet {
    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }

    pub fn from_pairs(mut pairs: Vec<EigenPair>) -> Self {
        pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
        Self { pairs }
    }
}

/// Relative residual `|H u - E u| / |u|` of a trial eigenpair.
pub fn residual_norm(h: &mut HamiltonianOperator, value: f64, u: &[Complex64]) -> Result<f64> {
    let unorm = kernels::norm(u);
    if unorm == 0.0 {
        return Err(Error::InvalidArgument(
            "residual of the zero vector is undefined".into(),
        ));
    }
    let mut hu = h.apply(u)?;
    kernels::axpy(&mut hu, Complex64::new(-value, 0.0), u);
    Ok(kernels::norm(&hu) / unorm)
}

/// Computes the `num_eigs` smallest eigenpairs of the operator.
///
/// Deterministic for a fixed `(operator, config, seed)`. On reaching
/// `max_restarts` the set is filled with the best available Ritz pairs and
/// their `converged` flags report honestly.
pub fn solve_smallest(
    h: &mut HamiltonianOperator,
    cfg: &KrylovConfig,
) -> Result<EigenPairSet> {
    cfg.validate(h.size())?;
    let dim = h.size();
    let raw = lanczos_smallest(&mut |f, out| h.apply_into(f, out), dim, cfg)?;
    let mut pairs = Vec::with_capacity(raw.len());
    for (value, vector) in raw {
        let residual = residual_norm(h, value, &vector)?;
        let converged = residual <= cfg.tol * value.abs().max(1.0);
        pairs.push(EigenPair {
            value,
            vector,
            residual,
            converged,
        });
    }
    Ok(EigenPairSet::from_pairs(pairs))
}

/// Estimated condition number `lambda_max / lambda_min` from extremal Ritz
/// values; errors when the smallest Ritz value is not positive.
pub fn condition_estimate(h: &mut HamiltonianOperator, cfg: &KrylovConfig) -> Result<f64> {
    let mut extremal_cfg = cfg.clone();
    extremal_cfg.num_eigs = 1;
    extremal_cfg.tol = cfg.tol.max(1e-9);
    extremal_cfg.validate(h.size())?;
    let dim = h.size();

    let smallest = lanczos_smallest(&mut |f, out| h.apply_into(f, out), dim, &extremal_cfg)?;
    let lambda_min = smallest[0].0;

    let largest = lanczos_smallest(
        &mut |f, out| {
            h.apply_into(f, out)?;
            for v in out.iter_mut() {
                *v = -*v;
            }
            Ok(())
        },
        dim,
        &extremal_cfg,
    )?;
    let lambda_max = -largest[0].0;

    if lambda_min <= 0.0 {
        return Err(Error::Indefinite(lambda_min));
    }
    Ok(lambda_max / lambda_min)
}

type ApplyFn<'a> = dyn FnMut(&[Complex64], &mut [Complex64]) -> Result<()> + 'a;

/// Matrix-free driver returning `num_eigs` (value, unit vector) pairs sorted
/// ascending. Pairs beyond the locked (converged) ones are the best Ritz
/// approximations available when the restart budget runs out.
fn lanczos_smallest(
    apply: &mut ApplyFn<'_>,
    dim: usize,
    cfg: &KrylovConfig,
) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let wanted = cfg.num_eigs;
    let m_budget = cfg.effective_subspace().min(dim).max((wanted + 2).min(dim));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut locked_vals: Vec<f64> = Vec::with_capacity(wanted);
    let mut locked_vecs: Vec<Vec<Complex64>> = Vec::with_capacity(wanted);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_budget + 1);
    let mut thick_vals: Vec<f64> = Vec::new();
    let mut border: Vec<f64> = Vec::new();
    basis.push(random_unit_vector(&mut rng, dim, &locked_vecs, &[]));

    let mut w = vec![Complex64::default(); dim];
    let mut op_scale = 1.0f64;
    // Best unconverged Ritz pairs from the latest cycle, used as fill-in if
    // the restart budget is exhausted.
    let mut last_ritz: Vec<(f64, Vec<Complex64>, f64)> = Vec::new();

    for _cycle in 0..cfg.max_restarts {
        let m = m_budget.min(dim - locked_vecs.len());
        let thick = thick_vals.len();
        debug_assert_eq!(basis.len(), thick + 1);

        let mut tmat = DMatrix::<f64>::zeros(m, m);
        for (i, theta) in thick_vals.iter().enumerate() {
            tmat[(i, i)] = *theta;
            tmat[(i, thick)] = border[i];
            tmat[(thick, i)] = border[i];
        }

        // Lanczos expansion from the continuation vector.
        let mut beta_prev = 0.0f64;
        let mut beta_last = 0.0f64;
        let mut rr_dim = m;
        let mut has_continuation = true;
        for j in thick..m {
            apply(&basis[j], &mut w)?;
            if j == thick {
                for (i, s) in border.iter().enumerate() {
                    kernels::axpy(&mut w, Complex64::new(-s, 0.0), &basis[i]);
                }
            } else {
                kernels::axpy(&mut w, Complex64::new(-beta_prev, 0.0), &basis[j - 1]);
            }
            let alpha = kernels::dot(&basis[j], &w).re;
            kernels::axpy(&mut w, Complex64::new(-alpha, 0.0), &basis[j]);
            tmat[(j, j)] = alpha;
            op_scale = op_scale.max(alpha.abs() + beta_prev);

            for _ in 0..2 {
                for locked in &locked_vecs {
                    let c = kernels::dot(locked, &w);
                    kernels::axpy(&mut w, -c, locked);
                }
                for v in basis.iter().take(j + 1) {
                    let c = kernels::dot(v, &w);
                    kernels::axpy(&mut w, -c, v);
                }
            }

            let beta = kernels::norm(&w);
            if beta <= BREAKDOWN_REL * op_scale {
                rr_dim = j + 1;
                has_continuation = false;
                break;
            }
            let mut next = w.clone();
            kernels::scale(&mut next, 1.0 / beta);
            basis.push(next);
            if j + 1 < m {
                tmat[(j + 1, j)] = beta;
                tmat[(j, j + 1)] = beta;
            } else {
                beta_last = beta;
            }
            beta_prev = beta;
        }

        // Rayleigh-Ritz on the projected matrix.
        let block = tmat.view((0, 0), (rr_dim, rr_dim)).into_owned();
        let eig = SymmetricEigen::new(block);
        let mut order: Vec<usize> = (0..rr_dim).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));

        let ritz_vector = |col: usize, basis: &[Vec<Complex64>]| -> Vec<Complex64> {
            let mut u = vec![Complex64::default(); dim];
            for (j, v) in basis.iter().take(rr_dim).enumerate() {
                let y = eig.eigenvectors[(j, col)];
                if y != 0.0 {
                    kernels::axpy(&mut u, Complex64::new(y, 0.0), v);
                }
            }
            u
        };

        // Lock converged pairs, smallest first, stopping at the first
        // unconverged one. Estimates are cheap; a true residual certifies
        // each lock.
        let mut locked_this_cycle = 0usize;
        let mut scan = 0usize;
        while locked_vecs.len() < wanted && scan < rr_dim {
            let col = order[scan];
            let theta = eig.eigenvalues[col];
            let estimate = if has_continuation {
                (beta_last * eig.eigenvectors[(rr_dim - 1, col)]).abs()
            } else {
                0.0
            };
            if estimate > cfg.tol * theta.abs().max(1.0) {
                break;
            }
            let mut u = ritz_vector(col, &basis);
            orthogonalize_against(&mut u, &locked_vecs);
            if kernels::normalize(&mut u) <= 0.5 {
                break; // candidate collapsed onto the locked space
            }
            apply(&u, &mut w)?;
            kernels::axpy(&mut w, Complex64::new(-theta, 0.0), &u);
            let true_res = kernels::norm(&w);
            if true_res > cfg.tol * theta.abs().max(1.0) {
                break;
            }
            locked_vals.push(theta);
            locked_vecs.push(u);
            locked_this_cycle += 1;
            scan += 1;
        }

        if locked_vecs.len() >= wanted {
            last_ritz.clear();
            break;
        }

        // Remember fill-in candidates in case the budget runs out.
        last_ritz.clear();
        for &col in order.iter().skip(scan).take(wanted - locked_vecs.len()) {
            let theta = eig.eigenvalues[col];
            let estimate = if has_continuation {
                (beta_last * eig.eigenvectors[(rr_dim - 1, col)]).abs()
            } else {
                0.0
            };
            let mut u = ritz_vector(col, &basis);
            orthogonalize_against(&mut u, &locked_vecs);
            if kernels::normalize(&mut u) > 0.5 {
                last_ritz.push((theta, u, estimate));
            }
        }

        if locked_this_cycle > 0 || !has_continuation {
            // Fresh deflated restart. A new random direction re-populates
            // eigenspace components the previous Krylov space could not
            // reach, including further copies of degenerate eigenvalues.
            basis.clear();
            thick_vals.clear();
            border.clear();
            basis.push(random_unit_vector(&mut rng, dim, &locked_vecs, &[]));
            continue;
        }

        // Thick restart: carry the smallest unconverged Ritz vectors plus the
        // continuation vector.
        let left = wanted - locked_vecs.len();
        let keep = (left + THICK_SURPLUS)
            .min(rr_dim.saturating_sub(1))
            .min(m.saturating_sub(2))
            .max(1);
        let mut new_basis: Vec<Vec<Complex64>> = Vec::with_capacity(keep + 1);
        let mut new_vals = Vec::with_capacity(keep);
        let mut new_border = Vec::with_capacity(keep);
        for &col in order.iter().skip(scan).take(keep) {
            let mut u = ritz_vector(col, &basis);
            orthogonalize_against(&mut u, &locked_vecs);
            orthogonalize_against(&mut u, &new_basis);
            if kernels::normalize(&mut u) <= 0.5 {
                continue;
            }
            new_vals.push(eig.eigenvalues[col]);
            new_border.push(beta_last * eig.eigenvectors[(rr_dim - 1, col)]);
            new_basis.push(u);
        }
        let mut cont = basis.pop().expect("continuation vector exists");
        orthogonalize_against(&mut cont, &locked_vecs);
        orthogonalize_against(&mut cont, &new_basis);
        if kernels::normalize(&mut cont) <= 1e-8 || new_basis.is_empty() {
            basis.clear();
            thick_vals.clear();
            border.clear();
            basis.push(random_unit_vector(&mut rng, dim, &locked_vecs, &[]));
            continue;
        }
        new_basis.push(cont);
        basis = new_basis;
        thick_vals = new_vals;
        border = new_border;
    }

    // Assemble: locked pairs first, then fill-in Ritz pairs.
    let mut out: Vec<(f64, Vec<Complex64>)> = locked_vals
        .into_iter()
        .zip(locked_vecs)
        .map(|(v, u)| (v, u))
        .collect();
    for (theta, u, _estimate) in last_ritz {
        if out.len() >= wanted {
            break;
        }
        out.push((theta, u));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.truncate(wanted);
    Ok(out)
}

fn orthogonalize_against(v: &mut [Complex64], others: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for u in others {
            let c = kernels::dot(u, v);
            kernels::axpy(v, -c, u);
        }
    }
}

/// Seeded complex Gaussian vector, orthogonalized and normalized.
fn random_unit_vector(
    rng: &mut ChaCha8Rng,
    dim: usize,
    locked: &[Vec<Complex64>],
    basis: &[Vec<Complex64>],
) -> Vec<Complex64> {
    loop {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
            .collect();
        orthogonalize_against(&mut v, locked);
        orthogonalize_against(&mut v, basis);
        if kernels::normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FrequencyIndexSet, ProjectionMatrix};
    use crate::potential::{GridField, PotentialSpec};

    fn free_operator(modes: usize) -> HamiltonianOperator {
        let p = ProjectionMatrix::row(vec![5.0f64.sqrt(), 1.0]).unwrap();
        let spec = PotentialSpec::Constant {
            value: 0.0,
            raised_dim: 2,
        };
        let set = FrequencyIndexSet::full(2, modes).unwrap();
        HamiltonianOperator::build(&p, &spec, set).unwrap()
    }

    fn sqrt5_operator(modes: usize, e0: f64) -> HamiltonianOperator {
        let spec = PotentialSpec::Qp1dSqrt5 { e0 };
        let p = spec.canonical_projection().unwrap();
        let set = FrequencyIndexSet::full(2, modes).unwrap();
        HamiltonianOperator::build(&p, &spec, set).unwrap()
    }

    fn dense_eigenvalues(h: &mut HamiltonianOperator) -> Vec<f64> {
        let dense = h.dense_matrix().unwrap();
        let eig = nalgebra::SymmetricEigen::new(dense);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    #[test]
    fn free_operator_ground_state_is_zero_mode() {
        let mut h = free_operator(8);
        let cfg = KrylovConfig {
            num_eigs: 1,
            ..Default::default()
        };
        let set = solve_smallest(&mut h, &cfg).unwrap();
        let pair = &set.pairs()[0];
        assert!(pair.converged);
        assert!(pair.value.abs() < 1e-10);
        let zero_idx = (0..h.size())
            .find(|i| h.index_set().index(*i).iter().all(|c| *c == 0))
            .unwrap();
        assert!((pair.vector[zero_idx].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_shift_moves_free_spectrum() {
        // The free spectrum contains exactly degenerate +/-k pairs, so this
        // also exercises multiplicity recovery.
        let p = ProjectionMatrix::row(vec![5.0f64.sqrt(), 1.0]).unwrap();
        let set = FrequencyIndexSet::full(2, 6).unwrap();
        let c = 0.75;
        let spec = PotentialSpec::Constant {
            value: c,
            raised_dim: 2,
        };
        let mut h = HamiltonianOperator::build(&p, &spec, set.clone()).unwrap();
        let cfg = KrylovConfig {
            num_eigs: 5,
            tol: 1e-11,
            ..Default::default()
        };
        let got = solve_smallest(&mut h, &cfg).unwrap();
        assert!(got.all_converged());

        let mut kin: Vec<f64> = h.kinetic().to_vec();
        kin.sort_by(f64::total_cmp);
        for (pair, want) in got.pairs().iter().zip(kin.iter()) {
            assert!(
                (pair.value - (want + c)).abs() < 1e-9,
                "{} vs {}",
                pair.value,
                want + c
            );
        }
    }

    #[test]
    fn matches_dense_oracle_on_quasiperiodic_instance() {
        let mut h = sqrt5_operator(12, 1.0);
        let cfg = KrylovConfig {
            num_eigs: 5,
            tol: 1e-12,
            ..Default::default()
        };
        let got = solve_smallest(&mut h, &cfg).unwrap();
        assert!(got.all_converged());
        let oracle = dense_eigenvalues(&mut h);
        for (pair, want) in got.pairs().iter().zip(oracle.iter()) {
            assert!(
                (pair.value - want).abs() < 1e-10,
                "{} vs {want}",
                pair.value
            );
        }
        // Residuals recomputed after the solve stay below tolerance.
        for pair in got.pairs() {
            let res = residual_norm(&mut h, pair.value, &pair.vector).unwrap();
            assert!(res <= cfg.tol * pair.value.abs().max(1.0) * 1.01);
        }
    }

    #[test]
    fn ritz_vectors_are_orthonormal() {
        let mut h = sqrt5_operator(10, 1.0);
        let cfg = KrylovConfig {
            num_eigs: 4,
            ..Default::default()
        };
        let set = solve_smallest(&mut h, &cfg).unwrap();
        for (i, a) in set.pairs().iter().enumerate() {
            for (j, b) in set.pairs().iter().enumerate() {
                let overlap = kernels::dot(&a.vector, &b.vector);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (overlap - Complex64::new(want, 0.0)).norm() <= 1e-10,
                    "({i},{j}) overlap {overlap}"
                );
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = KrylovConfig {
            num_eigs: 3,
            seed: 42,
            ..Default::default()
        };
        let mut h1 = sqrt5_operator(8, 1.0);
        let mut h2 = sqrt5_operator(8, 1.0);
        let a = solve_smallest(&mut h1, &cfg).unwrap();
        let b = solve_smallest(&mut h2, &cfg).unwrap();
        for (x, y) in a.pairs().iter().zip(b.pairs()) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.vector, y.vector);
        }
    }

    #[test]
    fn shift_equivariance_with_same_seed() {
        let c = 2.5;
        let mut base = sqrt5_operator(10, 1.0);
        let mut shifted = base.with_potential_offset(c).unwrap();
        let cfg = KrylovConfig {
            num_eigs: 4,
            tol: 1e-12,
            seed: 11,
            ..Default::default()
        };
        let a = solve_smallest(&mut base, &cfg).unwrap();
        let b = solve_smallest(&mut shifted, &cfg).unwrap();
        for (x, y) in a.pairs().iter().zip(b.pairs()) {
            assert!((y.value - x.value - c).abs() < 1e-10);
        }
        // Eigenvector spans agree: each shifted vector lies in the base span.
        for y in b.pairs() {
            let mut r = y.vector.clone();
            for x in a.pairs() {
                let overlap = kernels::dot(&x.vector, &r);
                kernels::axpy(&mut r, -overlap, &x.vector);
            }
            assert!(kernels::norm(&r) <= 1e-8);
        }
    }

    #[test]
    fn diagonal_toy_condition_number() {
        let p = ProjectionMatrix::row(vec![1.0, 0.5]).unwrap();
        let set = FrequencyIndexSet::full(2, 4).unwrap();
        let field = GridField::new(2, 4, vec![1.0; 16]).unwrap();
        let mut h = HamiltonianOperator::from_samples(&p, set, field).unwrap();
        // V = 1: spectrum = kinetic + 1, diagonal operator.
        let max_kin = h.kinetic().iter().cloned().fold(0.0, f64::max);
        let cfg = KrylovConfig::for_eigs(1);
        let cond = condition_estimate(&mut h, &cfg).unwrap();
        let want = max_kin + 1.0;
        assert!(
            (cond - want).abs() <= 0.01 * want,
            "cond {cond} vs {want}"
        );
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let p = ProjectionMatrix::row(vec![1.0, 0.5]).unwrap();
        let set = FrequencyIndexSet::full(2, 4).unwrap();
        let field = GridField::new(2, 4, vec![-5.0; 16]).unwrap();
        let mut h = HamiltonianOperator::from_samples(&p, set, field).unwrap();
        assert!(matches!(
            condition_estimate(&mut h, &KrylovConfig::for_eigs(1)),
            Err(Error::Indefinite(_))
        ));
    }

    #[test]
    fn residual_norm_identities() {
        let mut h = free_operator(6);
        // Exact eigenpair of the diagonal operator.
        let mut u = vec![Complex64::default(); h.size()];
        u[3] = Complex64::new(1.0, 0.0);
        let e = h.kinetic()[3];
        assert!(residual_norm(&mut h, e, &u).unwrap() < 1e-14);
        let delta = 0.37;
        let perturbed = residual_norm(&mut h, e + delta, &u).unwrap();
        assert!((perturbed - delta).abs() < 1e-12);
        let zero = vec![Complex64::default(); h.size()];
        assert!(residual_norm(&mut h, 1.0, &zero).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut h = free_operator(4);
        let mut cfg = KrylovConfig::for_eigs(0);
        assert!(solve_smallest(&mut h, &cfg).is_err());
        cfg.num_eigs = h.size();
        assert!(solve_smallest(&mut h, &cfg).is_err());
        cfg.num_eigs = 2;
        cfg.tol = 0.0;
        assert!(solve_smallest(&mut h, &cfg).is_err());
    }

    #[test]
    fn rpm_matches_pm_at_saturating_radius() {
        let spec = PotentialSpec::Qp1dSqrt5 { e0: 1.0 };
        let p = spec.canonical_projection().unwrap();
        let modes = 10;
        let d_sat = p.max_projected_norm(modes) + 1.0;
        let full = FrequencyIndexSet::full(2, modes).unwrap();
        let reduced = FrequencyIndexSet::reduced(&p, modes, d_sat).unwrap();
        assert_eq!(full.size(), reduced.size());
        let cfg = KrylovConfig {
            num_eigs: 3,
            seed: 5,
            ..Default::default()
        };
        let mut h_full = HamiltonianOperator::build(&p, &spec, full).unwrap();
        let mut h_red = HamiltonianOperator::build(&p, &spec, reduced).unwrap();
        let a = solve_smallest(&mut h_full, &cfg).unwrap();
        let b = solve_smallest(&mut h_red, &cfg).unwrap();
        for (x, y) in a.pairs().iter().zip(b.pairs()) {
            assert!((x.value - y.value).abs() <= 1e-12);
        }
    }
}
