//! Error metrics, physical-space reconstruction, and localization measures.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eigensolver::EigenPairSet;
use crate::kernels;
use crate::lattice::{FrequencyIndexSet, ProjectionMatrix};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Complex samples of a reconstructed state at physical points.
#[derive(Debug, Clone)]
pub struct PhysicalSamples {
    physical_dim: usize,
    /// Flattened coordinates, `len() * physical_dim` entries.
    points: Vec<f64>,
    values: Vec<Complex64>,
}

impl PhysicalSamples {
    pub fn new(physical_dim: usize, points: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if physical_dim == 0 || points.len() != values.len() * physical_dim {
            return Err(Error::DimensionMismatch {
                expected: values.len() * physical_dim.max(1),
                actual: points.len(),
            });
        }
        Ok(Self {
            physical_dim,
            points,
            values,
        })
    }

    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.physical_dim..(i + 1) * self.physical_dim]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    fn same_points(&self, other: &Self) -> bool {
        self.physical_dim == other.physical_dim && self.points == other.points
    }
}

/// `(|P k|, |U_k|)` pairs sorted by projected wavevector norm.
#[derive(Debug, Clone)]
pub struct DecayProfile {
    entries: Vec<(f64, f64)>,
}

impl DecayProfile {
    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }
}

/// Tail mass of a normalized coefficient vector outside the truncation
/// radius: `sum of |U_k|^2 over indices with truncation norm > radius`.
///
/// The input is normalized internally, so the result lies in `[0, 1]`.
pub fn truncation_error(
    u: &[Complex64],
    set: &FrequencyIndexSet,
    projection: &ProjectionMatrix,
    radius: f64,
) -> Result<f64> {
    check_alignment(u, set, projection)?;
    let total = kernels::norm_sq(u);
    if total == 0.0 {
        return Err(Error::InvalidArgument(
            "truncation error of the zero vector is undefined".into(),
        ));
    }
    let mut tail = 0.0;
    let mut q = vec![0.0; projection.physical_dim()];
    for (i, (k, _)) in set.iter().enumerate() {
        projection.project_into(k, &mut q);
        if q.iter().any(|v| v.abs() > radius) {
            tail += u[i].norm_sqr();
        }
    }
    Ok(tail / total)
}

/// Evaluates the generalized Fourier series `u(z) = sum U_k exp(i <P k, z>)`
/// at the given physical points by direct summation.
pub fn evaluate_physical(
    u: &[Complex64],
    set: &FrequencyIndexSet,
    projection: &ProjectionMatrix,
    points: &[Vec<f64>],
) -> Result<PhysicalSamples> {
    check_alignment(u, set, projection)?;
    let d = projection.physical_dim();
    for (i, z) in points.iter().enumerate() {
        if z.len() != d {
            return Err(Error::InvalidArgument(format!(
                "point {i} has dimension {}, expected {d}",
                z.len()
            )));
        }
    }
    // Precompute wavevectors once; the point loop is the hot side.
    let mut wavevectors = vec![0.0; set.size() * d];
    for (i, (k, _)) in set.iter().enumerate() {
        projection.project_into(k, &mut wavevectors[i * d..(i + 1) * d]);
    }
    let eval = |z: &Vec<f64>| -> Complex64 {
        let mut acc = Complex64::default();
        for (i, coeff) in u.iter().enumerate() {
            let phase: f64 = wavevectors[i * d..(i + 1) * d]
                .iter()
                .zip(z)
                .map(|(q, zi)| q * zi)
                .sum();
            acc += coeff * Complex64::from_polar(1.0, phase);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let values: Vec<Complex64> = points.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Complex64> = points.iter().map(eval).collect();

    let mut flat = Vec::with_capacity(points.len() * d);
    for z in points {
        flat.extend_from_slice(z);
    }
    PhysicalSamples::new(d, flat, values)
}

/// Maximum difference of the first `count` eigenvalues of two sets.
pub fn eigenvalue_error(a: &EigenPairSet, b: &EigenPairSet, count: usize) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    if a.len() < count || b.len() < count {
        return Err(Error::InvalidArgument(format!(
            "need {count} pairs, have {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.pairs()
        .iter()
        .zip(b.pairs())
        .take(count)
        .map(|(x, y)| (x.value - y.value).abs())
        .fold(0.0, f64::max))
}

/// Phase-aligned discrete L2 distance between two states on the same points.
///
/// Both inputs are normalized to unit discrete L2 norm, the first is rotated
/// by the phase of their inner product, and orthogonal states return sqrt(2).
pub fn eigenfunction_l2_error(
    a: &PhysicalSamples,
    b: &PhysicalSamples,
    cell_volume: f64,
) -> Result<f64> {
    if !a.same_points(b) {
        return Err(Error::InvalidArgument(
            "states are sampled on different point lists".into(),
        ));
    }
    if !(cell_volume > 0.0) {
        return Err(Error::InvalidArgument(
            "cell volume must be positive".into(),
        ));
    }
    let na = (kernels::norm_sq(a.values()) * cell_volume).sqrt();
    let nb = (kernels::norm_sq(b.values()) * cell_volume).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot compare a zero state".into(),
        ));
    }
    let inner = kernels::dot(b.values(), a.values()) * cell_volume / (na * nb);
    let phase = if inner.norm() <= 1e-14 {
        return Ok(2.0f64.sqrt());
    } else {
        inner.conj() / inner.norm()
    };
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x * phase / na - y / nb).norm_sqr())
        .sum();
    Ok((sum * cell_volume).sqrt())
}

/// One `(|P k|, |U_k|)` entry per index, sorted by `|P k|`.
pub fn decay_profile(
    u: &[Complex64],
    set: &FrequencyIndexSet,
    projection: &ProjectionMatrix,
) -> Result<DecayProfile> {
    check_alignment(u, set, projection)?;
    let mut entries: Vec<(f64, f64)> = Vec::with_capacity(set.size());
    let mut q = vec![0.0; projection.physical_dim()];
    for (i, (k, _)) in set.iter().enumerate() {
        projection.project_into(k, &mut q);
        let qnorm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        entries.push((qnorm, u[i].norm()));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DecayProfile { entries })
}

/// Participation ratio `(sum |u|^2 w)^2 / (sum |u|^4 w)`; smaller values mean
/// stronger localization. Uniform mass over `m` cells gives `m * w`.
pub fn participation_ratio(u: &PhysicalSamples, cell_volume: f64) -> Result<f64> {
    if !(cell_volume > 0.0) {
        return Err(Error::InvalidArgument(
            "cell volume must be positive".into(),
        ));
    }
    let mass2: f64 = u.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * cell_volume;
    let mass4: f64 = u
        .values()
        .iter()
        .map(|v| v.norm_sqr().powi(2))
        .sum::<f64>()
        * cell_volume;
    if mass4 == 0.0 {
        return Err(Error::InvalidArgument(
            "participation ratio of the zero field is undefined".into(),
        ));
    }
    Ok(mass2 * mass2 / mass4)
}

fn check_alignment(
    u: &[Complex64],
    set: &FrequencyIndexSet,
    projection: &ProjectionMatrix,
) -> Result<()> {
    if u.len() != set.size() {
        return Err(Error::Misaligned {
            expected: set.size(),
            actual: u.len(),
        });
    }
    if projection.raised_dim() != set.raised_dim() {
        return Err(Error::DimensionMismatch {
            expected: set.raised_dim(),
            actual: projection.raised_dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::EigenPair;

    fn theta_projection() -> ProjectionMatrix {
        let th = std::f64::consts::PI / 6.0;
        ProjectionMatrix::row(vec![2.0 * (th / 2.0).cos(), 2.0 * (th / 2.0).sin()]).unwrap()
    }

    fn pair(value: f64) -> EigenPair {
        EigenPair {
            value,
            vector: vec![Complex64::new(1.0, 0.0)],
            residual: 0.0,
            converged: true,
        }
    }

    #[test]
    fn truncation_error_cases() {
        let p = theta_projection();
        let set = FrequencyIndexSet::full(2, 8).unwrap();
        // Mass entirely at the origin mode: no tail for any radius.
        let mut u = vec![Complex64::default(); set.size()];
        let origin = (0..set.size())
            .find(|i| set.index(*i).iter().all(|c| *c == 0))
            .unwrap();
        u[origin] = Complex64::new(2.0, 0.0); // normalization is internal
        assert_eq!(truncation_error(&u, &set, &p, 0.5).unwrap(), 0.0);

        // Mass on a single far mode: tail is exactly 1 below its norm.
        let far = (0..set.size())
            .max_by(|a, b| {
                let qa = p.truncation_norm(set.index(*a)).unwrap();
                let qb = p.truncation_norm(set.index(*b)).unwrap();
                qa.total_cmp(&qb)
            })
            .unwrap();
        let mut u = vec![Complex64::default(); set.size()];
        u[far] = Complex64::new(1.0, 0.0);
        let qfar = p.truncation_norm(set.index(far)).unwrap();
        assert_eq!(truncation_error(&u, &set, &p, qfar - 0.1).unwrap(), 1.0);
        assert_eq!(truncation_error(&u, &set, &p, qfar + 0.1).unwrap(), 0.0);
    }

    #[test]
    fn truncation_error_is_monotone_and_vanishes_at_saturation() {
        let p = theta_projection();
        let set = FrequencyIndexSet::full(2, 6).unwrap();
        let u: Vec<Complex64> = (0..set.size())
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let radii = [0.0, 1.0, 2.0, 4.0, 8.0];
        let errs: Vec<f64> = radii
            .iter()
            .map(|d| truncation_error(&u, &set, &p, *d).unwrap())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        let sat = truncation_error(&u, &set, &p, p.max_projected_norm(6)).unwrap();
        assert_eq!(sat, 0.0);
    }

    #[test]
    fn evaluate_physical_single_mode_and_origin() {
        let p = theta_projection();
        let set = FrequencyIndexSet::full(2, 4).unwrap();
        let mode = 5usize;
        let mut u = vec![Complex64::default(); set.size()];
        u[mode] = Complex64::new(1.0, 0.0);
        let points = vec![vec![0.0], vec![0.7], vec![-1.3]];
        let samples = evaluate_physical(&u, &set, &p, &points).unwrap();
        let q = p.project(set.index(mode)).unwrap()[0];
        for (i, z) in points.iter().enumerate() {
            let want = Complex64::from_polar(1.0, q * z[0]);
            assert!((samples.values()[i] - want).norm() < 1e-14);
        }

        // At z = 0 any state sums its coefficients.
        let u: Vec<Complex64> = (0..set.size())
            .map(|i| Complex64::new(i as f64, -(i as f64) / 2.0))
            .collect();
        let sum: Complex64 = u.iter().sum();
        let samples = evaluate_physical(&u, &set, &p, &[vec![0.0]].to_vec()).unwrap();
        assert!((samples.values()[0] - sum).norm() < 1e-12);

        let zeros = vec![Complex64::default(); set.size()];
        let samples = evaluate_physical(&zeros, &set, &p, &points).unwrap();
        assert!(samples.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn eigenvalue_error_basics() {
        let a = EigenPairSet::from_pairs(vec![pair(1.0), pair(2.0), pair(3.0)]);
        let b = EigenPairSet::from_pairs(vec![pair(1.1), pair(2.0), pair(3.4)]);
        assert_eq!(eigenvalue_error(&a, &a, 3).unwrap(), 0.0);
        let e = eigenvalue_error(&a, &b, 3).unwrap();
        assert!((e - 0.4).abs() < 1e-15);
        assert_eq!(
            eigenvalue_error(&a, &b, 2).unwrap(),
            eigenvalue_error(&b, &a, 2).unwrap()
        );
        assert!(eigenvalue_error(&a, &b, 4).is_err());

        let shifted = EigenPairSet::from_pairs(vec![pair(1.25), pair(2.25), pair(3.25)]);
        assert!((eigenvalue_error(&a, &shifted, 3).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l2_error_is_phase_invariant() {
        let d = 1usize;
        let points: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let w = 0.1;
        let values: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64).sin() + 0.3, (i as f64).cos()))
            .collect();
        let a = PhysicalSamples::new(d, points.clone(), values.clone()).unwrap();
        assert!(eigenfunction_l2_error(&a, &a, w).unwrap() < 1e-14);

        let rotated: Vec<Complex64> = values
            .iter()
            .map(|v| v * Complex64::from_polar(1.0, 1.234))
            .collect();
        let b = PhysicalSamples::new(d, points.clone(), rotated).unwrap();
        assert!(eigenfunction_l2_error(&a, &b, w).unwrap() < 1e-13);

        // Orthogonal unit states return sqrt(2).
        let e0: Vec<Complex64> = (0..16)
            .map(|i| {
                if i == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        let e1: Vec<Complex64> = (0..16)
            .map(|i| {
                if i == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        let sa = PhysicalSamples::new(d, points.clone(), e0).unwrap();
        let sb = PhysicalSamples::new(d, points, e1).unwrap();
        let err = eigenfunction_l2_error(&sa, &sb, w).unwrap();
        assert!((err - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decay_profile_structure() {
        let p = theta_projection();
        let set = FrequencyIndexSet::full(2, 6).unwrap();
        let mut u = vec![Complex64::default(); set.size()];
        let origin = (0..set.size())
            .find(|i| set.index(*i).iter().all(|c| *c == 0))
            .unwrap();
        u[origin] = Complex64::new(1.0, 0.0);
        let profile = decay_profile(&u, &set, &p).unwrap();
        assert_eq!(profile.entries().len(), set.size());
        let nonzero: Vec<&(f64, f64)> =
            profile.entries().iter().filter(|(_, m)| *m > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, 0.0);
        for w in profile.entries().windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn participation_ratio_reference_values() {
        let d = 1;
        let m = 8usize;
        let points: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let w = 0.25;
        let uniform =
            PhysicalSamples::new(d, points.clone(), vec![Complex64::new(0.5, 0.5); m]).unwrap();
        let pr = participation_ratio(&uniform, w).unwrap();
        assert!((pr - m as f64 * w).abs() < 1e-12);

        let mut delta_values = vec![Complex64::default(); m];
        delta_values[3] = Complex64::new(0.0, 2.0);
        let delta = PhysicalSamples::new(d, points, delta_values).unwrap();
        let pr = participation_ratio(&delta, w).unwrap();
        assert!((pr - w).abs() < 1e-12);
    }
}
