//! Flat key-value run configuration.
//!
//! One dotted key per line, `key = value`, `#` starts a comment:
//!
//! ```text
//! potential.kind = qp1d_sqrt5
//! potential.e0   = 1.0
//! method         = rpm
//! grid.modes     = 30
//! truncation.d   = 20
//! solver.num_eigs = 5
//! outputs.dir    = out/run1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use qpeig::{PotentialSpec, ProjectionMatrix};

use crate::CliError;

/// Raw parsed key-value file with consumption tracking, so that unknown keys
/// can be reported by name.
pub struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected `key = value`, got `{raw_line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::config(format!("line {}: empty key", lineno + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::config(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            values,
            consumed: Default::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    fn get(&self, key: &str) -> Option<&str> {
        let hit = self.values.get(key).map(|s| s.as_str());
        if hit.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        hit
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::config(format!("missing required field `{key}`")))
    }

    fn parse_typed<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T, CliError> {
        value
            .parse()
            .map_err(|_| CliError::config(format!("field `{key}`: cannot parse `{value}`")))
    }

    fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            Some(v) => Ok(Some(self.parse_typed(key, v)?)),
            None => Ok(None),
        }
    }

    fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| self.parse_typed(key, item.trim()))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Errors on keys that were never consumed, naming the first offender.
    pub fn finish(&self) -> Result<(), CliError> {
        let consumed = self.consumed.borrow();
        for key in self.values.keys() {
            if !consumed.contains(key) {
                return Err(CliError::config(format!("unknown field `{key}`")));
            }
        }
        Ok(())
    }

    /// Errors on unconsumed keys under `prefix`; other keys are validated by
    /// the overlay configs built from this one.
    fn finish_prefix(&self, prefix: &str) -> Result<(), CliError> {
        let consumed = self.consumed.borrow();
        for key in self.values.keys() {
            if key.starts_with(prefix) && !consumed.contains(key) {
                return Err(CliError::config(format!("unknown field `{key}`")));
            }
        }
        Ok(())
    }

    /// View with a key prefix stripped, for `reference.`-style overlays.
    fn overlay(&self, prefix: &str, base: &BTreeMap<String, String>) -> BTreeMap<String, String> {
        let mut merged = base.clone();
        for (key, value) in &self.values {
            if let Some(stripped) = key.strip_prefix(prefix) {
                self.consumed.borrow_mut().insert(key.clone());
                merged.insert(stripped.to_string(), value.clone());
            }
        }
        merged
    }

    fn without_prefix(&self, prefixes: &[&str]) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| !prefixes.iter().any(|p| k.starts_with(p)))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pm,
    Rpm,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub num_eigs: usize,
    pub subspace_dim: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub samples: Vec<usize>,
}

impl DomainConfig {
    pub fn cell_volume(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .zip(&self.samples)
            .map(|((lo, hi), s)| (hi - lo) / *s as f64)
            .product()
    }

    pub fn total_samples(&self) -> usize {
        self.samples.iter().product()
    }

    /// Row-major tensor grid of sample points.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let d = self.min.len();
        let total = self.total_samples();
        let mut points = Vec::with_capacity(total);
        for lin in 0..total {
            let mut z = vec![0.0; d];
            let mut rem = lin;
            for axis in (0..d).rev() {
                let idx = rem % self.samples[axis];
                rem /= self.samples[axis];
                z[axis] = self.min[axis]
                    + idx as f64 * (self.max[axis] - self.min[axis]) / self.samples[axis] as f64;
            }
            points.push(z);
        }
        points
    }

    pub fn center(&self) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }
}

/// Serializable mirror of the resolved potential choice.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<f64>>,
}

/// A fully resolved single-run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub projection: ProjectionConfig,
    pub method: Method,
    /// Fourier modes per axis (N).
    pub modes: usize,
    /// Truncation radius (rpm only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    pub solver: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let kind = raw.require("potential.kind")?.to_string();
        let potential = match kind.as_str() {
            "qp1d_sqrt5" | "qp2d_moire" => PotentialConfig {
                kind: kind.clone(),
                e0: Some(raw.get_or("potential.e0", 1.0)?),
                theta: None,
                path: None,
                c: None,
                n: None,
            },
            "qp1d_theta" => PotentialConfig {
                kind: kind.clone(),
                e0: Some(raw.get_or("potential.e0", 1.0)?),
                theta: Some(raw.get_or("potential.theta", std::f64::consts::PI / 6.0)?),
                path: None,
                c: None,
                n: None,
            },
            "grid_file" => PotentialConfig {
                kind: kind.clone(),
                e0: None,
                theta: None,
                path: Some(PathBuf::from(raw.require("potential.path")?)),
                c: None,
                n: None,
            },
            "constant" => PotentialConfig {
                kind: kind.clone(),
                e0: None,
                theta: None,
                path: None,
                c: Some(raw.get_parsed("potential.c")?.ok_or_else(|| {
                    CliError::config("field `potential.c` required for constant potential")
                })?),
                n: Some(raw.get_parsed("potential.n")?.ok_or_else(|| {
                    CliError::config("field `potential.n` required for constant potential")
                })?),
            },
            other => {
                return Err(CliError::config(format!(
                    "field `potential.kind`: unknown kind `{other}`"
                )))
            }
        };

        let projection = match raw.get("projection").unwrap_or("canonical") {
            "canonical" => ProjectionConfig {
                kind: "canonical".into(),
                rows: None,
                cols: None,
                entries: None,
            },
            "explicit" => {
                let rows = raw.get_parsed("projection.rows")?.ok_or_else(|| {
                    CliError::config("field `projection.rows` required for explicit projection")
                })?;
                let cols = raw.get_parsed("projection.cols")?.ok_or_else(|| {
                    CliError::config("field `projection.cols` required for explicit projection")
                })?;
                let entries = raw.get_list("projection.entries")?.ok_or_else(|| {
                    CliError::config("field `projection.entries` required for explicit projection")
                })?;
                ProjectionConfig {
                    kind: "explicit".into(),
                    rows: Some(rows),
                    cols: Some(cols),
                    entries: Some(entries),
                }
            }
            other => {
                return Err(CliError::config(format!(
                    "field `projection`: expected canonical or explicit, got `{other}`"
                )))
            }
        };

        let method = match raw.require("method")? {
            "pm" => Method::Pm,
            "rpm" => Method::Rpm,
            other => {
                return Err(CliError::config(format!(
                    "field `method`: expected pm or rpm, got `{other}`"
                )))
            }
        };

        let modes: usize = raw
            .get_parsed("grid.modes")?
            .ok_or_else(|| CliError::config("missing required field `grid.modes`"))?;
        if modes < 2 {
            return Err(CliError::config(format!(
                "field `grid.modes`: N must be >= 2, got {modes}"
            )));
        }

        let truncation: Option<f64> = raw.get_parsed("truncation.d")?;
        match method {
            Method::Rpm => {
                let d = truncation.ok_or_else(|| {
                    CliError::config("field `truncation.d` required when method = rpm")
                })?;
                if !(d > 0.0) {
                    return Err(CliError::config(format!(
                        "field `truncation.d`: must be > 0, got {d}"
                    )));
                }
            }
            Method::Pm => {
                if truncation.is_some() {
                    return Err(CliError::config(
                        "field `truncation.d` is only valid when method = rpm",
                    ));
                }
            }
        }

        let solver = SolverConfig {
            num_eigs: raw.get_or("solver.num_eigs", 5)?,
            subspace_dim: raw.get_or("solver.subspace_dim", 0)?,
            tol: raw.get_or("solver.tol", 1e-12)?,
            max_restarts: raw.get_or("solver.max_restarts", 300)?,
            seed: raw.get_or("solver.seed", 1)?,
        };

        let output_dir = raw.get("outputs.dir").map(PathBuf::from);

        let domain = match (
            raw.get_list::<f64>("domain.min")?,
            raw.get_list::<f64>("domain.max")?,
            raw.get_list::<usize>("domain.samples")?,
        ) {
            (None, None, None) => None,
            (Some(min), Some(max), Some(samples)) => {
                if min.len() != max.len() || min.len() != samples.len() || min.is_empty() {
                    return Err(CliError::config(
                        "fields `domain.*` must share one length per physical axis",
                    ));
                }
                if min.iter().zip(&max).any(|(lo, hi)| !(hi > lo)) {
                    return Err(CliError::config("field `domain.max`: must exceed domain.min"));
                }
                if samples.iter().any(|s| *s == 0) {
                    return Err(CliError::config("field `domain.samples`: must be positive"));
                }
                Some(DomainConfig { min, max, samples })
            }
            _ => {
                return Err(CliError::config(
                    "fields `domain.min`, `domain.max`, `domain.samples` must appear together",
                ))
            }
        };

        Ok(Self {
            potential,
            projection,
            method,
            modes,
            truncation,
            solver,
            output_dir,
            domain,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = RawConfig::load(path)?;
        let cfg = Self::from_raw(&raw)?;
        raw.finish()?;
        Ok(cfg)
    }

    /// Core potential spec for this configuration.
    pub fn potential_spec(&self) -> Result<PotentialSpec, CliError> {
        let p = &self.potential;
        let spec = match p.kind.as_str() {
            "qp1d_sqrt5" => PotentialSpec::Qp1dSqrt5 {
                e0: p.e0.unwrap_or(1.0),
            },
            "qp1d_theta" => PotentialSpec::Qp1dTheta {
                e0: p.e0.unwrap_or(1.0),
                theta: p.theta.unwrap_or(std::f64::consts::PI / 6.0),
            },
            "qp2d_moire" => PotentialSpec::Qp2dMoire {
                e0: p.e0.unwrap_or(1.0),
            },
            "grid_file" => PotentialSpec::GridFile {
                path: p.path.clone().expect("validated at parse time"),
            },
            "constant" => PotentialSpec::Constant {
                value: p.c.expect("validated at parse time"),
                raised_dim: p.n.expect("validated at parse time"),
            },
            other => return Err(CliError::config(format!("unknown potential kind `{other}`"))),
        };
        Ok(spec)
    }

    /// Resolves the projection matrix (canonical or explicit).
    pub fn projection_matrix(&self, spec: &PotentialSpec) -> Result<ProjectionMatrix, CliError> {
        match self.projection.kind.as_str() {
            "canonical" => spec.canonical_projection().map_err(|e| {
                CliError::config(format!(
                    "projection = canonical is unavailable for this potential: {e}"
                ))
            }),
            "explicit" => {
                let rows = self.projection.rows.expect("validated");
                let cols = self.projection.cols.expect("validated");
                let entries = self.projection.entries.clone().expect("validated");
                ProjectionMatrix::new(rows, cols, entries)
                    .map_err(|e| CliError::config(format!("invalid explicit projection: {e}")))
            }
            other => Err(CliError::config(format!("unknown projection kind `{other}`"))),
        }
    }

    pub fn krylov_config(&self) -> qpeig::eigensolver::KrylovConfig {
        qpeig::eigensolver::KrylovConfig {
            num_eigs: self.solver.num_eigs,
            subspace_dim: self.solver.subspace_dim,
            tol: self.solver.tol,
            max_restarts: self.solver.max_restarts,
            seed: self.solver.seed,
        }
    }
}

/// Sweep axis for parameter studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    D,
    E0,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub with_condition: bool,
    pub reference: Option<RunConfig>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = RawConfig::load(path)?;
        let axis = match raw.require("sweep.axis")? {
            "n" | "N" => SweepAxis::N,
            "d" | "D" => SweepAxis::D,
            "e0" | "E0" => SweepAxis::E0,
            other => {
                return Err(CliError::config(format!(
                    "field `sweep.axis`: expected n, d, or e0, got `{other}`"
                )))
            }
        };
        let values: Vec<f64> = raw
            .get_list("sweep.values")?
            .ok_or_else(|| CliError::config("missing required field `sweep.values`"))?;
        if values.is_empty() {
            return Err(CliError::config("field `sweep.values`: must be non-empty"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config(
                "field `sweep.values`: must be strictly ascending",
            ));
        }
        let with_condition = raw.get_or("sweep.condition", false)?;

        let base_map = raw.without_prefix(&["sweep.", "reference."]);
        let base_raw = RawConfig {
            values: base_map.clone(),
            consumed: Default::default(),
        };
        let base = RunConfig::from_raw(&base_raw)?;
        base_raw.finish()?;

        let has_reference = raw.values.keys().any(|k| k.starts_with("reference."));
        let reference = if has_reference {
            let ref_map = raw.overlay("reference.", &base_map);
            let ref_raw = RawConfig {
                values: ref_map,
                consumed: Default::default(),
            };
            let cfg = RunConfig::from_raw(&ref_raw)?;
            ref_raw.finish()?;
            Some(cfg)
        } else {
            None
        };
        // Base and reference keys were validated through their overlay
        // configs; only stray sweep.* keys remain to be checked here.
        raw.finish_prefix("sweep.")?;
        Ok(Self {
            base,
            axis,
            values,
            with_condition,
            reference,
        })
    }

    /// The base configuration with the sweep axis set to `value`.
    pub fn row_config(&self, value: f64) -> Result<RunConfig, CliError> {
        let mut cfg = self.base.clone();
        match self.axis {
            SweepAxis::N => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(CliError::config(format!(
                        "sweep value {value} is not a valid mode count"
                    )));
                }
                cfg.modes = value as usize;
            }
            SweepAxis::D => {
                if cfg.method != Method::Rpm {
                    return Err(CliError::config(
                        "sweep.axis = d requires method = rpm in the base config",
                    ));
                }
                cfg.truncation = Some(value);
            }
            SweepAxis::E0 => {
                if cfg.potential.e0.is_none() {
                    return Err(CliError::config(
                        "sweep.axis = e0 requires a built-in potential",
                    ));
                }
                cfg.potential.e0 = Some(value);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
potential.kind = qp1d_sqrt5
potential.e0 = 1.0
method = rpm
grid.modes = 30
truncation.d = 20
solver.num_eigs = 5
outputs.dir = out/test
";

    #[test]
    fn parses_minimal_run_config() {
        let raw = RawConfig::parse(BASE).unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        raw.finish().unwrap();
        assert_eq!(cfg.method, Method::Rpm);
        assert_eq!(cfg.modes, 30);
        assert_eq!(cfg.truncation, Some(20.0));
        assert_eq!(cfg.solver.num_eigs, 5);
        assert_eq!(cfg.solver.tol, 1e-12);
        let spec = cfg.potential_spec().unwrap();
        assert!(matches!(spec, PotentialSpec::Qp1dSqrt5 { .. }));
        cfg.projection_matrix(&spec).unwrap();
    }

    #[test]
    fn rejects_unknown_and_malformed_fields() {
        let text = format!("{BASE}bogus.key = 1\n");
        let raw = RawConfig::parse(&text).unwrap();
        RunConfig::from_raw(&raw).unwrap();
        let err = raw.finish().unwrap_err();
        assert!(err.to_string().contains("bogus.key"), "{err}");

        let raw = RawConfig::parse("potential.kind = nope\nmethod = pm\ngrid.modes = 4\n").unwrap();
        let err = RunConfig::from_raw(&raw).unwrap_err();
        assert!(err.to_string().contains("potential.kind"), "{err}");

        assert!(RawConfig::parse("no equals sign here\n").is_err());
    }

    #[test]
    fn rpm_requires_truncation_and_pm_rejects_it() {
        let raw = RawConfig::parse(
            "potential.kind = qp1d_sqrt5\nmethod = rpm\ngrid.modes = 8\n",
        )
        .unwrap();
        let err = RunConfig::from_raw(&raw).unwrap_err();
        assert!(err.to_string().contains("truncation.d"), "{err}");

        let raw = RawConfig::parse(
            "potential.kind = qp1d_sqrt5\nmethod = pm\ngrid.modes = 8\ntruncation.d = 5\n",
        )
        .unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn explicit_projection_and_domain() {
        let text = "\
potential.kind = constant
potential.c = 1.5
potential.n = 2
projection = explicit
projection.rows = 1
projection.cols = 2
projection.entries = 2.236067977, 1.0
method = pm
grid.modes = 6
domain.min = 0
domain.max = 1
domain.samples = 64
";
        let raw = RawConfig::parse(text).unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        raw.finish().unwrap();
        let spec = cfg.potential_spec().unwrap();
        let p = cfg.projection_matrix(&spec).unwrap();
        assert_eq!(p.physical_dim(), 1);
        assert_eq!(p.raised_dim(), 2);
        let domain = cfg.domain.unwrap();
        assert_eq!(domain.total_samples(), 64);
        assert!((domain.cell_volume() - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(domain.points().len(), 64);
    }

    #[test]
    fn sweep_config_with_reference_overlay() {
        let text = format!(
            "{BASE}sweep.axis = d\nsweep.values = 5, 10, 15\nreference.truncation.d = 40\nreference.grid.modes = 60\n"
        );
        let dir = std::env::temp_dir().join("qpeig-shape-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.cfg");
        std::fs::write(&path, text).unwrap();
        let sweep = SweepConfig::load(&path).unwrap();
        assert_eq!(sweep.axis, SweepAxis::D);
        assert_eq!(sweep.values, vec![5.0, 10.0, 15.0]);
        let reference = sweep.reference.as_ref().unwrap();
        assert_eq!(reference.modes, 60);
        assert_eq!(reference.truncation, Some(40.0));
        assert_eq!(sweep.base.modes, 30);

        let row = sweep.row_config(10.0).unwrap();
        assert_eq!(row.truncation, Some(10.0));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn sweep_values_must_ascend() {
        let text = format!("{BASE}sweep.axis = d\nsweep.values = 10, 5\n");
        let dir = std::env::temp_dir().join("qpeig-shape-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep_bad.cfg");
        std::fs::write(&path, text).unwrap();
        assert!(SweepConfig::load(&path).is_err());
        std::fs::remove_file(path).ok();
    }
}
