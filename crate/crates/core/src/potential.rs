//! Built-in quasiperiodic potentials and their periodic parent functions.
//!
//! Each built-in potential ships the projection matrix that makes its parent
//! function 2π-periodic in every raised coordinate. Custom potentials enter
//! through pre-sampled grid files; there is no expression parser.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lattice::{ProjectionMatrix, DEFAULT_GRID_BUDGET};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A potential choice for the lifted eigenproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// 1D potential `E0 / (1 + (cos z + cos(sqrt(5) z))^2)` with `P = [sqrt(5), 1]`.
    Qp1dSqrt5 { e0: f64 },
    /// 1D potential `E0 / ((cos(2 cos(θ/2) z) + cos(2 sin(θ/2) z))^2 + 1)`
    /// with `P = [2 cos(θ/2), 2 sin(θ/2)]`.
    Qp1dTheta { e0: f64, theta: f64 },
    /// 2D moiré-type potential
    /// `E0 / ((cos z1 cos z2 + cos(sqrt(5) z1) cos(sqrt(5) z2))^2 + 1)`
    /// with the 2 x 4 projection whose columns are `(1,0),(0,1),(√5,0),(0,√5)`.
    Qp2dMoire { e0: f64 },
    /// Pre-sampled parent grid loaded from a file; no canonical projection.
    GridFile { path: PathBuf },
    /// Constant potential on an `n`-dimensional parent grid.
    Constant { value: f64, raised_dim: usize },
}

impl PotentialSpec {
    /// Response strength of the built-ins.
    pub fn e0(&self) -> Option<f64> {
        match self {
            Self::Qp1dSqrt5 { e0 } | Self::Qp1dTheta { e0, .. } | Self::Qp2dMoire { e0 } => {
                Some(*e0)
            }
            _ => None,
        }
    }

    /// Returns a copy with the response strength replaced (built-ins only).
    pub fn with_e0(&self, e0: f64) -> Result<Self> {
        match self {
            Self::Qp1dSqrt5 { .. } => Ok(Self::Qp1dSqrt5 { e0 }),
            Self::Qp1dTheta { theta, .. } => Ok(Self::Qp1dTheta { e0, theta: *theta }),
            Self::Qp2dMoire { .. } => Ok(Self::Qp2dMoire { e0 }),
            _ => Err(Error::InvalidArgument(
                "potential has no response strength".into(),
            )),
        }
    }

    /// Raised dimension of the parent function, when known without i/o.
    pub fn raised_dim(&self) -> Option<usize> {
        match self {
            Self::Qp1dSqrt5 { .. } | Self::Qp1dTheta { .. } => Some(2),
            Self::Qp2dMoire { .. } => Some(4),
            Self::Constant { raised_dim, .. } => Some(*raised_dim),
            Self::GridFile { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(e0) = self.e0() {
            if !(e0 >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "response strength must be >= 0, got {e0}"
                )));
            }
        }
        Ok(())
    }

    /// Parent-function value at a raised-space point `x`.
    pub fn parent_value(&self, x: &[f64]) -> Result<f64> {
        self.validate()?;
        let expect = |n: usize| -> Result<()> {
            if x.len() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    actual: x.len(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            Self::Qp1dSqrt5 { e0 } => {
                expect(2)?;
                Ok(e0 / (1.0 + (x[1].cos() + x[0].cos()).powi(2)))
            }
            Self::Qp1dTheta { e0, .. } => {
                expect(2)?;
                Ok(e0 / ((x[0].cos() + x[1].cos()).powi(2) + 1.0))
            }
            Self::Qp2dMoire { e0 } => {
                expect(4)?;
                Ok(e0 / ((x[0].cos() * x[1].cos() + x[2].cos() * x[3].cos()).powi(2) + 1.0))
            }
            Self::Constant { value, .. } => Ok(*value),
            Self::GridFile { .. } => Err(Error::InvalidArgument(
                "grid-file potentials have no pointwise parent function".into(),
            )),
        }
    }

    /// The projection matrix printed alongside each built-in potential.
    pub fn canonical_projection(&self) -> Result<ProjectionMatrix> {
        match self {
            Self::Qp1dSqrt5 { .. } => ProjectionMatrix::row(vec![5.0f64.sqrt(), 1.0]),
            Self::Qp1dTheta { theta, .. } => {
                ProjectionMatrix::row(vec![2.0 * (theta / 2.0).cos(), 2.0 * (theta / 2.0).sin()])
            }
            Self::Qp2dMoire { .. } => {
                let s5 = 5.0f64.sqrt();
                ProjectionMatrix::new(2, 4, vec![1.0, 0.0, s5, 0.0, 0.0, 1.0, 0.0, s5])
            }
            Self::GridFile { .. } | Self::Constant { .. } => Err(Error::InvalidArgument(
                "potential has no canonical projection; supply one explicitly".into(),
            )),
        }
    }

    /// Physical-space value `v(z) = V(P^T z)`.
    pub fn physical_value(&self, projection: &ProjectionMatrix, z: &[f64]) -> Result<f64> {
        if z.len() != projection.physical_dim() {
            return Err(Error::DimensionMismatch {
                expected: projection.physical_dim(),
                actual: z.len(),
            });
        }
        let n = projection.raised_dim();
        let mut x = vec![0.0; n];
        for (col, xj) in x.iter_mut().enumerate() {
            *xj = (0..projection.physical_dim())
                .map(|row| projection.entry(row, col) * z[row])
                .sum();
        }
        self.parent_value(&x)
    }

    /// Samples the parent function on the uniform `N^n` tensor grid
    /// `x_m = 2π m / N` per axis.
    pub fn sample_parent_grid(&self, modes_per_axis: usize) -> Result<GridField> {
        self.sample_parent_grid_with_budget(modes_per_axis, DEFAULT_GRID_BUDGET)
    }

    pub fn sample_parent_grid_with_budget(
        &self,
        modes_per_axis: usize,
        budget: usize,
    ) -> Result<GridField> {
        self.validate()?;
        if modes_per_axis == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        if let Self::GridFile { path } = self {
            let field = GridField::read_from(path)?;
            if field.modes_per_axis() != modes_per_axis {
                return Err(Error::InvalidArgument(format!(
                    "grid file has N={} but the run requests N={modes_per_axis}",
                    field.modes_per_axis()
                )));
            }
            return Ok(field);
        }
        let dim = self
            .raised_dim()
            .expect("non-grid-file potentials know their dimension");
        if dim == 0 || dim > 8 {
            return Err(Error::InvalidArgument(format!(
                "parent grids support 1..=8 raised dimensions, got {dim}"
            )));
        }
        let len = (modes_per_axis as u128).pow(dim as u32);
        if len > budget as u128 {
            return Err(Error::BudgetExceeded {
                requested: len.min(usize::MAX as u128) as usize,
                budget,
            });
        }
        let len = len as usize;
        let step = 2.0 * std::f64::consts::PI / modes_per_axis as f64;
        let eval = |m: usize| -> f64 {
            let mut x = [0.0f64; 8];
            let mut rem = m;
            for j in (0..dim).rev() {
                x[j] = (rem % modes_per_axis) as f64 * step;
                rem /= modes_per_axis;
            }
            self.parent_value(&x[..dim])
                .expect("built-in parent evaluation cannot fail")
        };
        #[cfg(feature = "parallel")]
        let values: Vec<f64> = (0..len).into_par_iter().map(eval).collect();
        #[cfg(not(feature = "parallel"))]
        let values: Vec<f64> = (0..len).map(eval).collect();
        GridField::new(dim, modes_per_axis, values)
    }
}

/// Real samples of a periodic parent function on the uniform tensor grid,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    raised_dim: usize,
    modes_per_axis: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(raised_dim: usize, modes_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        let expected = (modes_per_axis as u128).pow(raised_dim as u32);
        if expected != values.len() as u128 {
            return Err(Error::DimensionMismatch {
                expected: expected.min(usize::MAX as u128) as usize,
                actual: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid samples must be finite".into(),
            ));
        }
        Ok(Self {
            raised_dim,
            modes_per_axis,
            values,
        })
    }

    pub fn raised_dim(&self) -> usize {
        self.raised_dim
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy with `offset` added to every sample.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v += offset;
        }
        out
    }

    /// Reads the `"n N"` text header followed by raw little-endian f64
    /// samples in row-major order.
    pub fn read_from(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            let got = reader.read(&mut byte)?;
            if got == 0 {
                return Err(Error::MalformedGridFile("missing header line".into()));
            }
            if byte[0] == b'\n' {
                break;
            }
            if header.len() > 64 {
                return Err(Error::MalformedGridFile("header line too long".into()));
            }
            header.push(byte[0]);
        }
        let text = String::from_utf8(header)
            .map_err(|_| Error::MalformedGridFile("header is not utf-8".into()))?;
        let mut parts = text.split_whitespace();
        let dim: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedGridFile("header must be \"n N\"".into()))?;
        let modes: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedGridFile("header must be \"n N\"".into()))?;
        if parts.next().is_some() {
            return Err(Error::MalformedGridFile("header must be \"n N\"".into()));
        }
        let len = (modes as u128).pow(dim as u32);
        if len > DEFAULT_GRID_BUDGET as u128 {
            return Err(Error::BudgetExceeded {
                requested: len.min(usize::MAX as u128) as usize,
                budget: DEFAULT_GRID_BUDGET,
            });
        }
        let len = len as usize;
        let mut raw = vec![0u8; len * 8];
        reader.read_exact(&mut raw).map_err(|_| {
            Error::MalformedGridFile(format!("expected {len} little-endian f64 samples"))
        })?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(dim, modes, values)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        writeln!(writer, "{} {}", self.raised_dim, self.modes_per_axis)?;
        for v in &self.values {
            writer.write_all(&v.to_le_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_values_at_reference_points() {
        let moire = PotentialSpec::Qp2dMoire { e0: 1.0 };
        assert!((moire.parent_value(&[0.0; 4]).unwrap() - 0.2).abs() < 1e-15);

        let sqrt5 = PotentialSpec::Qp1dSqrt5 { e0: 1.0 };
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!((sqrt5.parent_value(&[half_pi, half_pi]).unwrap() - 1.0).abs() < 1e-15);

        let theta = PotentialSpec::Qp1dTheta {
            e0: 1.0,
            theta: std::f64::consts::PI / 6.0,
        };
        assert!((theta.parent_value(&[0.0, 0.0]).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn canonical_projections_match_published_matrices() {
        let p = PotentialSpec::Qp1dSqrt5 { e0: 1.0 }
            .canonical_projection()
            .unwrap();
        assert_eq!(p.entries(), &[5.0f64.sqrt(), 1.0]);

        let th = std::f64::consts::PI / 6.0;
        let p = PotentialSpec::Qp1dTheta { e0: 1.0, theta: th }
            .canonical_projection()
            .unwrap();
        assert!((p.entry(0, 0) - 2.0 * (th / 2.0).cos()).abs() < 1e-15);
        assert!((p.entry(0, 1) - 2.0 * (th / 2.0).sin()).abs() < 1e-15);

        let p = PotentialSpec::Qp2dMoire { e0: 1.0 }
            .canonical_projection()
            .unwrap();
        let s5 = 5.0f64.sqrt();
        assert_eq!(p.entries(), &[1.0, 0.0, s5, 0.0, 0.0, 1.0, 0.0, s5]);

        assert!(PotentialSpec::Constant {
            value: 1.0,
            raised_dim: 2
        }
        .canonical_projection()
        .is_err());
    }

    #[test]
    fn physical_value_composes_with_transposed_projection() {
        let spec = PotentialSpec::Qp1dSqrt5 { e0: 1.0 };
        let p = spec.canonical_projection().unwrap();
        assert!((spec.physical_value(&p, &[0.0]).unwrap() - 0.2).abs() < 1e-15);
        for z in [0.13, -2.7, 11.4] {
            let x = [5.0f64.sqrt() * z, z];
            let direct = spec.parent_value(&x).unwrap();
            assert!((spec.physical_value(&p, &[z]).unwrap() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn parent_functions_are_two_pi_periodic() {
        let tau = 2.0 * std::f64::consts::PI;
        let specs = [
            PotentialSpec::Qp1dSqrt5 { e0: 1.3 },
            PotentialSpec::Qp1dTheta { e0: 0.7, theta: 0.9 },
        ];
        for spec in specs {
            for x in [[0.3, -1.2], [2.0, 4.4]] {
                let base = spec.parent_value(&x).unwrap();
                for axis in 0..2 {
                    let mut shifted = x;
                    shifted[axis] += tau;
                    assert!((spec.parent_value(&shifted).unwrap() - base).abs() < 1e-12);
                }
            }
        }
        let moire = PotentialSpec::Qp2dMoire { e0: 2.0 };
        let x = [0.1, 0.2, 0.3, 0.4];
        let base = moire.parent_value(&x).unwrap();
        for axis in 0..4 {
            let mut shifted = x;
            shifted[axis] += tau;
            assert!((moire.parent_value(&shifted).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_grids_are_bounded_and_deterministic() {
        let spec = PotentialSpec::Qp1dSqrt5 { e0: 1.0 };
        let field = spec.sample_parent_grid(8).unwrap();
        assert_eq!(field.len(), 64);
        let min = field.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = field.values().iter().cloned().fold(0.0, f64::max);
        assert!(min >= 0.2 - 1e-15);
        assert!(max <= 1.0 + 1e-15);

        let again = spec.sample_parent_grid(8).unwrap();
        assert_eq!(field, again);

        let moire = PotentialSpec::Qp2dMoire { e0: 1.0 };
        let field = moire.sample_parent_grid(4).unwrap();
        assert!((field.values()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_grid_is_flat() {
        let spec = PotentialSpec::Constant {
            value: 2.5,
            raised_dim: 3,
        };
        let field = spec.sample_parent_grid(3).unwrap();
        assert_eq!(field.len(), 27);
        assert!(field.values().iter().all(|v| *v == 2.5));
    }

    #[test]
    fn grid_file_round_trip() {
        let dir = std::env::temp_dir().join("qpeig-gridfield-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        let field = PotentialSpec::Qp1dTheta { e0: 1.0, theta: 0.4 }
            .sample_parent_grid(6)
            .unwrap();
        field.write_to(&path).unwrap();
        let back = GridField::read_from(&path).unwrap();
        assert_eq!(field, back);

        let spec = PotentialSpec::GridFile { path: path.clone() };
        let sampled = spec.sample_parent_grid(6).unwrap();
        assert_eq!(sampled, field);
        assert!(spec.sample_parent_grid(7).is_err());
        std::fs::remove_file(path).ok();
    }
}
