//! Contour-integral spectral indicator for validating computed eigenvalues.
//!
//! A spectral projector onto the eigenspace inside a square region of the
//! complex plane is approximated by a quadrature over resolvent applications
//! `(H - s_j)^{-1} f`, each solved matrix-free with restarted GMRES. Two
//! projector applications yield an indicator close to 1 when the region
//! contains an eigenvalue and close to 0 when it does not; eigenvalues whose
//! region indicator falls below a threshold are flagged as spurious.

use num_complex::Complex64;

use crate::eigensolver::EigenPairSet;
use crate::error::{Error, Result};
use crate::gmres::{self, GmresConfig};
use crate::kernels;
use crate::operator::{CoefficientVector, HamiltonianOperator};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative cutoff below which a projected vector counts as zero.
const NULL_PROJECTION_REL: f64 = 1e-14;

/// A square region of the eigenvalue plane with quadrature nodes on its
/// boundary.
#[derive(Debug, Clone)]
pub struct IndicatorRegion {
    center: Complex64,
    half_width: f64,
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl IndicatorRegion {
    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }
}

/// Square region sampled at its four vertices, the cheapest usable rule.
pub fn make_square_region(center: Complex64, half_width: f64) -> Result<IndicatorRegion> {
    make_square_region_with_nodes(center, half_width, 4)
}

/// Square region with `node_count >= 4` quadrature nodes spread uniformly
/// along the boundary, counterclockwise starting from the top-right vertex.
/// Weights are the closed-contour trapezoidal differences
/// `(s_{j+1} - s_{j-1}) / 2`.
pub fn make_square_region_with_nodes(
    center: Complex64,
    half_width: f64,
    node_count: usize,
) -> Result<IndicatorRegion> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "half_width must be > 0, got {half_width}"
        )));
    }
    if node_count < 4 {
        return Err(Error::InvalidArgument(
            "a boundary rule needs at least 4 nodes".into(),
        ));
    }
    let h = half_width;
    let corners = [
        center + Complex64::new(h, h),
        center + Complex64::new(-h, h),
        center + Complex64::new(-h, -h),
        center + Complex64::new(h, -h),
    ];
    let perimeter = 8.0 * h;
    let step = perimeter / node_count as f64;
    let nodes: Vec<Complex64> = (0..node_count)
        .map(|j| {
            let t = j as f64 * step;
            let edge = ((t / (2.0 * h)) as usize).min(3);
            let frac = (t - edge as f64 * 2.0 * h) / (2.0 * h);
            let a = corners[edge];
            let b = corners[(edge + 1) % 4];
            a + (b - a) * frac
        })
        .collect();
    let weights: Vec<Complex64> = (0..node_count)
        .map(|j| {
            let next = nodes[(j + 1) % node_count];
            let prev = nodes[(j + node_count - 1) % node_count];
            (next - prev) * 0.5
        })
        .collect();
    Ok(IndicatorRegion {
        center,
        half_width,
        nodes,
        weights,
    })
}

/// Solves `(H - s) r = f` with restarted GMRES through the shifted matvec.
///
/// Non-convergence signals a shift too close to the spectrum; callers shrink
/// or move the region.
pub fn resolvent_apply(
    h: &mut HamiltonianOperator,
    shift: Complex64,
    f: &[Complex64],
    cfg: &GmresConfig,
) -> Result<CoefficientVector> {
    if f.len() != h.size() {
        return Err(Error::Misaligned {
            expected: h.size(),
            actual: f.len(),
        });
    }
    gmres::solve(
        |x, out| {
            h.apply_shifted_into(shift, x, out)
                .expect("aligned by construction");
        },
        f,
        cfg,
    )
}

/// Quadrature approximation of the spectral projector applied to `f`:
/// `(1 / 2 pi i) sum_j w_j (H - s_j)^{-1} f`.
///
/// The resolvent solves are independent; with the `parallel` feature they run
/// on worker-local clones of the operator and are combined in node order.
pub fn projector_apply(
    h: &HamiltonianOperator,
    region: &IndicatorRegion,
    f: &[Complex64],
    cfg: &GmresConfig,
) -> Result<CoefficientVector> {
    if f.len() != h.size() {
        return Err(Error::Misaligned {
            expected: h.size(),
            actual: f.len(),
        });
    }
    let solves: Vec<Result<CoefficientVector>> = {
        #[cfg(feature = "parallel")]
        {
            region
                .nodes()
                .par_iter()
                .map_init(
                    || h.clone(),
                    |op, s| resolvent_apply(op, *s, f, cfg),
                )
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut op = h.clone();
            region
                .nodes()
                .iter()
                .map(|s| resolvent_apply(&mut op, *s, f, cfg))
                .collect()
        }
    };
    // Orientation: with counterclockwise nodes and resolvents of (H - s),
    // the Riesz projector onto the enclosed eigenspace is
    // -(1/2πi) Σ w_j r_j; the leading -1/(2πi) = +i/(2π).
    let mut acc = vec![Complex64::default(); f.len()];
    let prefactor = Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI));
    for (weight, solve) in region.weights().iter().zip(solves) {
        let r = solve?;
        kernels::axpy(&mut acc, prefactor * weight, &r);
    }
    Ok(acc)
}

/// Two-stage indicator `|Q (Q f / |Q f|)|`; returns 0 when the first
/// projection is numerically zero.
pub fn indicator_value(
    h: &HamiltonianOperator,
    region: &IndicatorRegion,
    f: &[Complex64],
    cfg: &GmresConfig,
) -> Result<f64> {
    let fnorm = kernels::norm(f);
    if fnorm == 0.0 {
        return Err(Error::InvalidArgument(
            "indicator of the zero vector is undefined".into(),
        ));
    }
    let mut w = projector_apply(h, region, f, cfg)?;
    let wnorm = kernels::norm(&w);
    if wnorm <= NULL_PROJECTION_REL * fnorm {
        return Ok(0.0);
    }
    kernels::scale(&mut w, 1.0 / wnorm);
    let second = projector_apply(h, region, &w, cfg)?;
    Ok(kernels::norm(&second))
}

/// Options for [`validate_eigenvalues`].
#[derive(Debug, Clone)]
pub struct ValidationOptions {
    /// Half side length of the square centered at each eigenvalue.
    pub half_width: f64,
    /// Acceptance threshold on the indicator.
    pub threshold: f64,
    /// Boundary quadrature nodes per region.
    pub quadrature_nodes: usize,
    pub gmres: GmresConfig,
    /// Seed for the fallback probe when the potential coefficients vanish.
    pub fallback_seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            half_width: 0.1,
            threshold: 0.1,
            quadrature_nodes: 64,
            gmres: GmresConfig::default(),
            fallback_seed: 7,
        }
    }
}

/// Probe vector for validation: the potential's Fourier coefficients on the
/// operator's index set, or a seeded random vector when those vanish.
pub fn validation_probe(h: &mut HamiltonianOperator, fallback_seed: u64) -> CoefficientVector {
    let mut f = h.potential_coefficient_vector();
    let n = kernels::norm(&f);
    if n <= 1e-300 {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(fallback_seed);
        f = (0..h.size())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        kernels::normalize(&mut f);
    } else {
        kernels::scale(&mut f, 1.0 / n);
    }
    f
}

/// Flags each eigenpair: `true` when a region centered at its eigenvalue has
/// indicator at least `threshold`, `false` (spurious) otherwise.
pub fn validate_eigenvalues(
    h: &mut HamiltonianOperator,
    pairs: &EigenPairSet,
    opts: &ValidationOptions,
) -> Result<Vec<bool>> {
    let probe = validation_probe(h, opts.fallback_seed);
    let mut flags = Vec::with_capacity(pairs.len());
    for pair in pairs.pairs() {
        let region = make_square_region_with_nodes(
            Complex64::new(pair.value, 0.0),
            opts.half_width,
            opts.quadrature_nodes,
        )?;
        let ind = indicator_value(h, &region, &probe, &opts.gmres)?;
        flags.push(ind >= opts.threshold);
    }
    Ok(flags)
}
