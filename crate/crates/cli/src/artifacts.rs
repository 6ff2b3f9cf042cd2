//! Run artifacts: CSV tables and binary coefficient dumps.
//!
//! All numeric CSV fields print with 15 fractional digits of scientific
//! notation so that re-running a deterministic configuration reproduces files
//! byte-for-byte (wall-time columns excepted).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use qpeig::eigensolver::EigenPairSet;
use qpeig::FrequencyIndexSet;

use crate::CliError;

pub fn fmt(v: f64) -> String {
    format!("{v:.15e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::config(format!("cannot write {}: {e}", path.display()))
    })?))
}

pub fn write_eigenvalues_csv(path: &Path, pairs: &EigenPairSet) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "index,eigenvalue,residual,converged")?;
    for (i, pair) in pairs.pairs().iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{}",
            fmt(pair.value),
            fmt(pair.residual),
            pair.converged
        )?;
    }
    Ok(())
}

pub struct EigenvalueRow {
    pub eigenvalue: f64,
    pub residual: f64,
    pub converged: bool,
}

pub fn read_eigenvalues_csv(path: &Path) -> Result<Vec<EigenvalueRow>, CliError> {
    let file = File::open(path).map_err(|e| {
        CliError::config(format!(
            "missing solve artifacts: cannot open {}: {e}",
            path.display()
        ))
    })?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| CliError::config(format!("{}: empty file", path.display())))?;
    if header.trim() != "index,eigenvalue,residual,converged" {
        return Err(CliError::config(format!(
            "{}: unexpected header `{header}`",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::config(format!(
                "{}: malformed row `{line}`",
                path.display()
            )));
        }
        rows.push(EigenvalueRow {
            eigenvalue: fields[1]
                .parse()
                .map_err(|_| CliError::config(format!("bad eigenvalue `{}`", fields[1])))?,
            residual: fields[2]
                .parse()
                .map_err(|_| CliError::config(format!("bad residual `{}`", fields[2])))?,
            converged: fields[3].trim() == "true",
        });
    }
    Ok(rows)
}

pub fn write_indexset_csv(path: &Path, set: &FrequencyIndexSet) -> Result<(), CliError> {
    let mut w = create(path)?;
    let header: Vec<String> = (1..=set.raised_dim()).map(|j| format!("k{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for (index, _) in set.iter() {
        let row: Vec<String> = index.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Binary coefficient dump: one text header line `n N count`, then `count`
/// little-endian complex f64 values (re, im) in index-set order.
pub fn write_coefficients_bin(
    path: &Path,
    set: &FrequencyIndexSet,
    values: &[Complex64],
) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(
        w,
        "{} {} {}",
        set.raised_dim(),
        set.modes_per_axis(),
        values.len()
    )?;
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub struct CoefficientsBin {
    pub raised_dim: usize,
    pub modes_per_axis: usize,
    pub values: Vec<Complex64>,
}

pub fn read_coefficients_bin(path: &Path) -> Result<CoefficientsBin, CliError> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| {
        CliError::config(format!("cannot open {}: {e}", path.display()))
    })?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "{}: header must be `n N count`",
            path.display()
        )));
    }
    let raised_dim: usize = parts[0]
        .parse()
        .map_err(|_| CliError::config("bad coefficient header"))?;
    let modes_per_axis: usize = parts[1]
        .parse()
        .map_err(|_| CliError::config("bad coefficient header"))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config("bad coefficient header"))?;
    let mut raw = vec![0u8; count * 16];
    reader.read_exact(&mut raw).map_err(|e| {
        CliError::config(format!("{}: truncated coefficients: {e}", path.display()))
    })?;
    let values: Vec<Complex64> = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(CoefficientsBin {
        raised_dim,
        modes_per_axis,
        values,
    })
}

pub fn write_run_json(
    path: &Path,
    config: &crate::config::RunConfig,
    dof: usize,
    build_ms: f64,
    solve_ms: f64,
    all_converged: bool,
) -> Result<(), CliError> {
    let body = serde_json::json!({
        "config": config,
        "dof": dof,
        "timings_ms": {
            "build": build_ms,
            "solve": solve_ms,
            "total": build_ms + solve_ms,
        },
        "all_converged": all_converged,
    });
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &body)
        .map_err(|e| CliError::config(format!("cannot encode run.json: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Writes a simple CSV from a header and preformatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}

pub fn coefficients_path(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join(format!("coefficients_{index}.bin"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qpeig::eigensolver::EigenPair;
    use qpeig::ProjectionMatrix;

    #[test]
    fn eigenvalue_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eigenvalues.csv");
        let pairs = EigenPairSet::from_pairs(vec![
            EigenPair {
                value: 0.5945,
                vector: vec![Complex64::new(1.0, 0.0)],
                residual: 1e-13,
                converged: true,
            },
            EigenPair {
                value: 1.25,
                vector: vec![Complex64::new(0.0, 1.0)],
                residual: 2e-3,
                converged: false,
            },
        ]);
        write_eigenvalues_csv(&path, &pairs).unwrap();
        let rows = read_eigenvalues_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].eigenvalue, 0.5945);
        assert!(rows[0].converged);
        assert!(!rows[1].converged);
    }

    #[test]
    fn coefficients_bin_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coefficients_0.bin");
        let p = ProjectionMatrix::row(vec![5.0f64.sqrt(), 1.0]).unwrap();
        let set = FrequencyIndexSet::reduced(&p, 6, 3.0).unwrap();
        let values: Vec<Complex64> = (0..set.size())
            .map(|i| Complex64::new(i as f64 * 0.25, -(i as f64)))
            .collect();
        write_coefficients_bin(&path, &set, &values).unwrap();
        let back = read_coefficients_bin(&path).unwrap();
        assert_eq!(back.raised_dim, 2);
        assert_eq!(back.modes_per_axis, 6);
        assert_eq!(back.values, values);
    }

    #[test]
    fn indexset_csv_has_component_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("indexset.csv");
        let set = FrequencyIndexSet::full(2, 2).unwrap();
        write_indexset_csv(&path, &set).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k1,k2");
        assert_eq!(lines.len(), 1 + set.size());
        assert_eq!(lines[1], "-1,-1");
    }
}
