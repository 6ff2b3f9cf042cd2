//! The five experiment subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use qpeig::diagnostics::{
    decay_profile, eigenfunction_l2_error, eigenvalue_error, evaluate_physical,
    participation_ratio, truncation_error, PhysicalSamples,
};
use qpeig::eigensolver::{condition_estimate, solve_smallest, EigenPairSet};
use qpeig::gmres::GmresConfig;
use qpeig::indicator::{indicator_value, make_square_region_with_nodes, validation_probe};
use qpeig::{FrequencyIndexSet, HamiltonianOperator, ProjectionMatrix};

use crate::artifacts::{self, fmt};
use crate::config::{Method, RunConfig, SweepConfig};
use crate::CliError;

/// Sample density per physical axis for eigenfunction error norms.
const ERROR_SAMPLES_PER_AXIS: usize = 512;
/// Comparison box per physical axis for eigenfunction error norms.
const ERROR_DOMAIN: (f64, f64) = (0.0, 1.0);

pub struct SolveOutput {
    pub config: RunConfig,
    pub projection: ProjectionMatrix,
    pub operator: HamiltonianOperator,
    pub pairs: EigenPairSet,
    pub build_ms: f64,
    pub solve_ms: f64,
}

impl SolveOutput {
    pub fn dof(&self) -> usize {
        self.operator.size()
    }
}

/// Builds the operator for a run configuration and solves for the smallest
/// eigenpairs.
pub fn run_solve(config: &RunConfig) -> Result<SolveOutput, CliError> {
    let spec = config.potential_spec()?;
    let projection = config.projection_matrix(&spec)?;
    let started = Instant::now();
    let set = match config.method {
        Method::Pm => FrequencyIndexSet::full(projection.raised_dim(), config.modes),
        Method::Rpm => FrequencyIndexSet::reduced(
            &projection,
            config.modes,
            config.truncation.expect("validated: rpm carries truncation"),
        ),
    }?;
    let mut operator = HamiltonianOperator::build(&projection, &spec, set)?;
    let build_ms = started.elapsed().as_secs_f64() * 1e3;

    let started = Instant::now();
    let pairs = solve_smallest(&mut operator, &config.krylov_config())?;
    let solve_ms = started.elapsed().as_secs_f64() * 1e3;

    Ok(SolveOutput {
        config: config.clone(),
        projection,
        operator,
        pairs,
        build_ms,
        solve_ms,
    })
}

fn resolve_out_dir(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| {
            CliError::config("no output directory: set `outputs.dir` or pass --out")
        })?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_solve_artifacts(dir: &Path, output: &SolveOutput) -> Result<(), CliError> {
    artifacts::write_eigenvalues_csv(&dir.join("eigenvalues.csv"), &output.pairs)?;
    artifacts::write_indexset_csv(&dir.join("indexset.csv"), output.operator.index_set())?;
    for (i, pair) in output.pairs.pairs().iter().enumerate() {
        artifacts::write_coefficients_bin(
            &artifacts::coefficients_path(dir, i),
            output.operator.index_set(),
            &pair.vector,
        )?;
    }
    artifacts::write_run_json(
        &dir.join("run.json"),
        &output.config,
        output.dof(),
        output.build_ms,
        output.solve_ms,
        output.pairs.all_converged(),
    )?;
    Ok(())
}

pub fn cmd_solve(config_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = resolve_out_dir(&config, out)?;
    let output = run_solve(&config)?;
    write_solve_artifacts(&dir, &output)?;
    println!(
        "solved {} modes, {} eigenpairs in {:.1} ms -> {}",
        output.dof(),
        output.pairs.len(),
        output.build_ms + output.solve_ms,
        dir.display()
    );
    if !output.pairs.all_converged() {
        return Err(CliError::numerical(format!(
            "{} of {} eigenpairs left unconverged (artifacts written to {})",
            output
                .pairs
                .pairs()
                .iter()
                .filter(|p| !p.converged)
                .count(),
            output.pairs.len(),
            dir.display()
        )));
    }
    Ok(())
}

/// Uniform comparison grid on the standard error box.
fn error_grid(physical_dim: usize) -> (Vec<Vec<f64>>, f64) {
    let (lo, hi) = ERROR_DOMAIN;
    let n = ERROR_SAMPLES_PER_AXIS;
    let step = (hi - lo) / n as f64;
    let total = n.pow(physical_dim as u32);
    let mut points = Vec::with_capacity(total);
    for lin in 0..total {
        let mut z = vec![0.0; physical_dim];
        let mut rem = lin;
        for axis in (0..physical_dim).rev() {
            z[axis] = lo + (rem % n) as f64 * step;
            rem /= n;
        }
        points.push(z);
    }
    (points, step.powi(physical_dim as i32))
}

fn first_eigenfunction_samples(
    output: &SolveOutput,
    points: &[Vec<f64>],
) -> Result<PhysicalSamples, CliError> {
    let pair = output
        .pairs
        .pairs()
        .first()
        .ok_or_else(|| CliError::numerical("solve produced no eigenpairs"))?;
    Ok(evaluate_physical(
        &pair.vector,
        output.operator.index_set(),
        &output.projection,
        points,
    )?)
}

pub fn cmd_sweep(config_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let sweep = SweepConfig::load(config_path)?;
    let dir = resolve_out_dir(&sweep.base, out)?;

    let reference = match &sweep.reference {
        Some(ref_config) => {
            let output = run_solve(ref_config)?;
            let (points, cell) = error_grid(output.projection.physical_dim());
            let samples = first_eigenfunction_samples(&output, &points)?;
            Some(SweepReference {
                output,
                points,
                samples,
                cell,
            })
        }
        None => None,
    };

    let mut header = String::from("value,dof,time_ms");
    if reference.is_some() {
        header.push_str(",eigenvalue_error,l2_error");
    }
    if sweep.with_condition {
        header.push_str(",condition");
    }
    header.push_str(",status");

    let mut rows = Vec::with_capacity(sweep.values.len());
    for &value in &sweep.values {
        match sweep_row(&sweep, value, &reference) {
            Ok(row) => rows.push(row),
            Err(e) => {
                let blanks = 2 + if reference.is_some() { 2 } else { 0 }
                    + usize::from(sweep.with_condition);
                let row = format!(
                    "{}{},error: {}",
                    fmt(value),
                    ",".repeat(blanks),
                    e.to_string().replace(',', ";")
                );
                rows.push(row);
            }
        }
    }
    artifacts::write_csv(&dir.join("sweep.csv"), &header, &rows)?;
    println!("sweep of {} rows -> {}", sweep.values.len(), dir.display());
    Ok(())
}

struct SweepReference {
    output: SolveOutput,
    points: Vec<Vec<f64>>,
    samples: PhysicalSamples,
    cell: f64,
}

fn sweep_row(
    sweep: &SweepConfig,
    value: f64,
    reference: &Option<SweepReference>,
) -> Result<String, CliError> {
    let config = sweep.row_config(value)?;
    let started = Instant::now();
    let mut output = run_solve(&config)?;
    let time_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut row = format!("{},{},{}", fmt(value), output.dof(), fmt(time_ms));
    if let Some(reference) = reference {
        let count = config
            .solver
            .num_eigs
            .min(reference.output.config.solver.num_eigs);
        let eps = eigenvalue_error(&output.pairs, &reference.output.pairs, count)?;
        let samples = first_eigenfunction_samples(&output, &reference.points)?;
        let delta = eigenfunction_l2_error(&samples, &reference.samples, reference.cell)?;
        row.push_str(&format!(",{},{}", fmt(eps), fmt(delta)));
    }
    if sweep.with_condition {
        let cond = condition_estimate(&mut output.operator, &config.krylov_config())?;
        row.push_str(&format!(",{}", fmt(cond)));
    }
    row.push_str(",ok");
    Ok(row)
}

pub fn cmd_decay(
    config_path: &Path,
    out: Option<&Path>,
    indices: &[usize],
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = resolve_out_dir(&config, out)?;
    for &i in indices {
        if i >= config.solver.num_eigs {
            return Err(CliError::config(format!(
                "eigenfunction index {i} exceeds solver.num_eigs = {}",
                config.solver.num_eigs
            )));
        }
    }
    let output = run_solve(&config)?;
    let set = output.operator.index_set();
    let projection = &output.projection;

    let max_qnorm = (0..set.size())
        .map(|i| projection.projected_norm(set.index(i)).expect("aligned"))
        .fold(0.0f64, f64::max);

    for &i in indices {
        let pair = &output.pairs.pairs()[i];
        let profile = decay_profile(&pair.vector, set, projection)?;
        let rows: Vec<String> = profile
            .entries()
            .iter()
            .map(|(q, m)| format!("{},{}", fmt(*q), fmt(*m)))
            .collect();
        artifacts::write_csv(
            &dir.join(format!("decay_{i}.csv")),
            "qnorm,magnitude",
            &rows,
        )?;

        let mut err_rows = Vec::new();
        for d in 0..=(max_qnorm.ceil() as usize) {
            let err = truncation_error(&pair.vector, set, projection, d as f64)?;
            err_rows.push(format!("{d},{}", fmt(err)));
        }
        artifacts::write_csv(&dir.join(format!("errD_{i}.csv")), "d,err", &err_rows)?;
    }
    println!(
        "decay profiles for {} eigenfunctions -> {}",
        indices.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_field(config_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let domain = config
        .domain
        .clone()
        .ok_or_else(|| CliError::config("field emission needs `domain.*` in the config"))?;
    let dir = resolve_out_dir(&config, out)?;
    let output = run_solve(&config)?;
    let d = output.projection.physical_dim();
    if domain.min.len() != d {
        return Err(CliError::config(format!(
            "domain has {} axes but the problem is {d}-dimensional",
            domain.min.len()
        )));
    }

    let points = domain.points();
    let cell = domain.cell_volume();
    let center = vec![domain.center()];
    let mut pr_rows = Vec::new();
    for (i, pair) in output.pairs.pairs().iter().enumerate() {
        let mut samples = evaluate_physical(
            &pair.vector,
            output.operator.index_set(),
            &output.projection,
            &points,
        )?;
        // Normalize to unit discrete L2 and align the phase so the value at
        // the box center is real and positive.
        let norm = (samples.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt();
        if norm == 0.0 {
            return Err(CliError::numerical(format!(
                "eigenfunction {i} vanishes on the requested box"
            )));
        }
        let at_center = evaluate_physical(
            &pair.vector,
            output.operator.index_set(),
            &output.projection,
            &center,
        )?;
        let anchor = if at_center.values()[0].norm() > 1e-12 {
            at_center.values()[0]
        } else {
            *samples
                .values()
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("non-empty samples")
        };
        let phase = anchor.conj() / anchor.norm();
        for v in samples.values_mut() {
            *v *= phase / norm;
        }

        let rows: Vec<String> = (0..samples.len())
            .map(|j| {
                let z = samples.point(j);
                let v = samples.values()[j];
                let coords: Vec<String> = z.iter().map(|c| fmt(*c)).collect();
                format!("{},{},{},{}", coords.join(","), fmt(v.norm()), fmt(v.re), fmt(v.im))
            })
            .collect();
        let coord_header: Vec<String> = (1..=d).map(|a| format!("z{a}")).collect();
        artifacts::write_csv(
            &dir.join(format!("field_{i}.csv")),
            &format!("{},abs,re,im", coord_header.join(",")),
            &rows,
        )?;

        let pr = participation_ratio(&samples, cell)?;
        pr_rows.push(format!("{i},{}", fmt(pr)));
    }
    artifacts::write_csv(&dir.join("pr.csv"), "index,participation_ratio", &pr_rows)?;
    println!(
        "fields for {} eigenfunctions on {} points -> {}",
        output.pairs.len(),
        points.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_validate(
    config_path: &Path,
    out: Option<&Path>,
    half_width: f64,
    threshold: f64,
    nodes: usize,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = resolve_out_dir(&config, out)?;
    let rows_in = artifacts::read_eigenvalues_csv(&dir.join("eigenvalues.csv"))?;

    let spec = config.potential_spec()?;
    let projection = config.projection_matrix(&spec)?;
    let set = match config.method {
        Method::Pm => FrequencyIndexSet::full(projection.raised_dim(), config.modes),
        Method::Rpm => FrequencyIndexSet::reduced(
            &projection,
            config.modes,
            config.truncation.expect("validated"),
        ),
    }?;
    let mut operator = HamiltonianOperator::build(&projection, &spec, set)?;
    let probe = validation_probe(&mut operator, config.solver.seed);
    let gmres = GmresConfig::default();

    let mut rows = Vec::with_capacity(rows_in.len());
    for row in &rows_in {
        let region = make_square_region_with_nodes(
            Complex64::new(row.eigenvalue, 0.0),
            half_width,
            nodes,
        )?;
        match indicator_value(&operator, &region, &probe, &gmres) {
            Ok(ind) => rows.push(format!(
                "{},{},{},ok",
                fmt(row.eigenvalue),
                fmt(ind),
                ind >= threshold
            )),
            Err(e) => rows.push(format!(
                "{},nan,false,error: {}",
                fmt(row.eigenvalue),
                e.to_string().replace(',', ";")
            )),
        }
    }
    artifacts::write_csv(
        &dir.join("validate.csv"),
        "eigenvalue,indicator,accepted,status",
        &rows,
    )?;
    println!("validated {} eigenvalues -> {}", rows_in.len(), dir.display());
    Ok(())
}
