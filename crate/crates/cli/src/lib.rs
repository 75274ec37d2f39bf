//! Job dispatch for the `cp-bures` command-line tool.
//!
//! Map-consuming commands read CP maps from JSON files (see [`cp_bures::io`])
//! and produce a JSON report; `matrix` produces a CSV table of pairwise
//! distances.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use cp_bures::bures::identity_defect;
use cp_bures::gns::{build_gns, center_unit_vector};
use cp_bures::io::{matrix_to_json, read_map};
use cp_bures::matrix::herm_eig;
use cp_bures::suites::property_suites;
use cp_bures::{
    bound_report, bures_extension, bures_intertwiner, rigidity_decompose, BuresResult, CpMap,
    Witness,
};

pub const EXIT_OK: i32 = 0;
/// Property checks ran but at least one failed (`suite` only).
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Output(_) => EXIT_CHECKS_FAILED,
        }
    }
}

impl From<cp_bures::Error> for CliError {
    fn from(e: cp_bures::Error) -> Self {
        use cp_bures::Error as E;
        match e {
            E::Parse(msg) => CliError::Parse(msg),
            E::SolverFailure(_) | E::ResidualNotCp(_) | E::CenterNotScalarGram(_) => {
                CliError::Solver(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Bures,
    Cbnorm,
    Bounds,
    Rigidity,
    Verify,
    Suite,
    Matrix,
}

impl Command {
    /// Number of map files the command takes; `None` for "two or more".
    fn arity(self) -> Option<usize> {
        match self {
            Command::Bures | Command::Cbnorm | Command::Bounds => Some(2),
            Command::Rigidity | Command::Verify => Some(1),
            Command::Suite => Some(0),
            Command::Matrix => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationChoice {
    /// Both formulations, reporting both values and their difference.
    Auto,
    Intertwiner,
    Extension,
}

#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub formulation: FormulationChoice,
    pub tol: f64,
    pub seed: u64,
    /// Trial count for `suite`.
    pub trials: usize,
    pub output: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(command: Command, inputs: Vec<PathBuf>) -> Self {
        JobSpec {
            command,
            inputs,
            formulation: FormulationChoice::Auto,
            tol: 1e-8,
            seed: 0,
            trials: 50,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Validation(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        match self.command.arity() {
            Some(k) if self.inputs.len() != k => Err(CliError::Validation(format!(
                "{:?} takes {k} input file(s), got {}",
                self.command,
                self.inputs.len()
            ))),
            None if self.inputs.len() < 2 => Err(CliError::Validation(format!(
                "matrix takes at least 2 input files, got {}",
                self.inputs.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// JSON report for the map-consuming commands and `suite`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Command,
    pub inputs: Vec<String>,
    pub formulation: FormulationChoice,
    pub tol: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    /// Duality gap on the squared distance, when a solver produced the value.
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_ms: u64,
}

fn load(path: &Path) -> Result<CpMap, CliError> {
    read_map(path).map_err(|e| match CliError::from(e) {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn witness_json(w: &Option<Witness>) -> Option<Value> {
    match w {
        Some(Witness::Intertwiner(c)) => Some(json!({"kind": "intertwiner", "matrix": matrix_to_json(c)})),
        Some(Witness::Extension(j)) => Some(json!({"kind": "extension", "matrix": matrix_to_json(j)})),
        None => None,
    }
}

/// Distance between two maps under a formulation choice; `auto` uses the
/// intertwiner formulation.
pub fn distance(phi1: &CpMap, phi2: &CpMap, choice: FormulationChoice, tol: f64) -> Result<BuresResult, CliError> {
    Ok(match choice {
        FormulationChoice::Extension => bures_extension(phi1, phi2, tol)?,
        FormulationChoice::Auto | FormulationChoice::Intertwiner => bures_intertwiner(phi1, phi2, tol)?,
    })
}

/// Runs a map or suite job and returns its report, or the process exit code
/// to use alongside it.
pub fn run(job: &JobSpec) -> Result<(Report, i32), CliError> {
    job.validate()?;
    if job.command == Command::Matrix {
        return Err(CliError::Validation("use batch_matrix for the matrix command".into()));
    }
    let start = Instant::now();
    let maps = job.inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let mut report = Report {
        command: job.command,
        inputs: job.inputs.iter().map(|p| p.display().to_string()).collect(),
        formulation: job.formulation,
        tol: job.tol,
        seed: job.seed,
        value: None,
        values: None,
        witness: None,
        gap: None,
        details: None,
        elapsed_ms: 0,
    };
    let mut code = EXIT_OK;

    match job.command {
        Command::Bures => {
            let (a, b) = (&maps[0], &maps[1]);
            match job.formulation {
                FormulationChoice::Auto => {
                    let i = bures_intertwiner(a, b, job.tol)?;
                    let e = bures_extension(a, b, job.tol)?;
                    report.value = Some(i.value);
                    report.values = Some(json!({
                        "intertwiner": i.value,
                        "extension": e.value,
                        "difference": (i.value - e.value).abs(),
                    }));
                    report.gap = Some(i.report.gap.max(e.report.gap));
                    report.witness = witness_json(&i.witness);
                }
                choice => {
                    let r = distance(a, b, choice, job.tol)?;
                    report.value = Some(r.value);
                    report.gap = Some(r.report.gap);
                    report.witness = witness_json(&r.witness);
                }
            }
        }
        Command::Cbnorm => {
            let diff = maps[0].difference(&maps[1])?;
            report.value = Some(diff.cb_norm(job.tol)?);
        }
        Command::Bounds => {
            let b = bound_report(&maps[0], &maps[1], job.tol)?;
            report.value = Some(b.beta);
            report.details = Some(json!({
                "beta": b.beta,
                "cb": b.cb,
                "op_norm": b.op_norm,
                "lower": b.lower,
                "upper": b.upper,
                "ok": b.ok,
            }));
        }
        Command::Rigidity => {
            let phi = &maps[0];
            let d = rigidity_decompose(phi, job.tol)?;
            let center = center_unit_vector(&build_gns(phi))?;
            report.value = Some(d.beta_id);
            report.details = Some(json!({
                "beta_id": d.beta_id,
                "c": matrix_to_json(&d.c),
                "c_invertible": d.c_invertible,
                "smallest_singular_value": d.smallest_singular_value,
                "identity_defect": identity_defect(&d),
                "residual_min_eigenvalue": d.residual_min_eigenvalue,
                "psi_choi": d.psi.as_ref().map(|p| matrix_to_json(p.choi())),
                "center_present": center.is_some(),
            }));
        }
        Command::Verify => {
            let phi = &maps[0];
            let eig = herm_eig(phi.choi())?;
            report.details = Some(json!({
                "dim_in": phi.dim_in(),
                "dim_out": phi.dim_out(),
                "kraus_rank": phi.kraus_rank(),
                "cp_norm": phi.cp_norm(),
                "choi_min_eigenvalue": eig.min(),
                "choi_max_eigenvalue": eig.max(),
            }));
        }
        Command::Suite => {
            let r = property_suites(job.seed, job.trials);
            let suites: Vec<Value> = r
                .suites
                .iter()
                .map(|s| {
                    json!({
                        "name": s.name,
                        "trials": s.trials,
                        "failures": s.failures,
                        "worst_margin": if s.worst_margin.is_finite() { Some(s.worst_margin) } else { None },
                        "passed": s.passed,
                    })
                })
                .collect();
            report.details = Some(json!({"trials": job.trials, "passed": r.passed, "suites": suites}));
            if !r.passed {
                code = EXIT_CHECKS_FAILED;
            }
        }
        Command::Matrix => unreachable!("handled above"),
    }
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok((report, code))
}

/// Symmetric table of pairwise distances. The diagonal is zero.
pub fn batch_matrix(files: &[PathBuf], choice: FormulationChoice, tol: f64) -> Result<Vec<Vec<f64>>, CliError> {
    if files.len() < 2 {
        return Err(CliError::Validation(format!(
            "matrix takes at least 2 input files, got {}",
            files.len()
        )));
    }
    let maps = files.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    for (p, m) in files.iter().zip(&maps).skip(1) {
        if (m.dim_in(), m.dim_out()) != (maps[0].dim_in(), maps[0].dim_out()) {
            return Err(CliError::Validation(format!(
                "{}: M_{} -> M_{} does not match M_{} -> M_{}",
                p.display(),
                m.dim_in(),
                m.dim_out(),
                maps[0].dim_in(),
                maps[0].dim_out()
            )));
        }
    }
    let k = maps.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| distance(&maps[i], &maps[j], choice, tol).map(|r| r.value))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = vec![vec![0.0; k]; k];
    for (&(i, j), v) in pairs.iter().zip(values) {
        table[i][j] = v;
        table[j][i] = v;
    }
    Ok(table)
}

/// CSV with the file names as header row.
pub fn matrix_csv(files: &[PathBuf], table: &[Vec<f64>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(files.iter().map(|p| p.display().to_string()))
        .map_err(|e| CliError::Output(e.into()))?;
    for row in table {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Output(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Runs a job end to end, rendering JSON or CSV text.
pub fn execute(job: &JobSpec) -> Result<(String, i32), CliError> {
    if job.command == Command::Matrix {
        job.validate()?;
        let table = batch_matrix(&job.inputs, job.formulation, job.tol)?;
        return Ok((matrix_csv(&job.inputs, &table)?, EXIT_OK));
    }
    let (report, code) = run(job)?;
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    Ok((text, code))
}
