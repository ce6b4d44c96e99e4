//! Command execution: resolved config in, run record out.
//!
//! Every command emits the same envelope: a `record` holding the command
//! name, tool version, normalized config, and results payload, plus a `meta`
//! object for wall time. The record is a pure function of the config, so
//! re-running an invocation reproduces it byte for byte; anything that can
//! differ between runs stays in `meta`.

use std::fmt;
use std::fs;
use std::time::Instant;

use qei_core::qei;
use qei_core::spectrum::{nuclearity_index_series, LogMasses};
use qei_core::{fock, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BoundConfig, ConfigErrors, FitSpec, FockConfig, GffConfig, NuclearityConfig, ScalingConfig,
    SpectrumSpec, VacuumConfig,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Anything that should stop a run, mapped onto the process exit codes:
/// 1 for config and I/O problems, 2 for detected divergence, 3 for a
/// numerical method that failed to converge.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigErrors),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(Error::DivergenceDetected(_)) => 2,
            CliError::Core(Error::NonConvergence(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "error: {e}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: &'static str,
    pub config: Value,
    pub results: Value,
}

#[derive(Serialize)]
pub struct RunMeta {
    pub wall_time_ms: u64,
}

#[derive(Serialize)]
pub struct RunOutput {
    pub record: RunRecord,
    pub meta: RunMeta,
}

fn finish(
    command: &str,
    config: impl Serialize,
    results: Value,
    started: Instant,
) -> Result<RunOutput, CliError> {
    let config = serde_json::to_value(config)
        .map_err(|e| CliError::Io(format!("config serialization: {e}")))?;
    Ok(RunOutput {
        record: RunRecord { command: command.into(), version: TOOL_VERSION, config, results },
        meta: RunMeta { wall_time_ms: started.elapsed().as_millis() as u64 },
    })
}

pub fn run_bound(cfg: &BoundConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let bound = qei::worldline_qwei_bound(&cfg.weight, cfg.mass, cfg.rel_tol)?;
    let results = json!({
        "q_value": bound.q_value,
        "quadrature_error": bound.quadrature_error,
    });
    finish("bound", cfg, results, started)
}

pub fn run_gff(cfg: &GffConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let bound = qei::gff_qwei_bound(&cfg.weight, &cfg.spectrum, cfg.rel_tol)?;
    let results = json!({
        "q_value": bound.q_value,
        "quadrature_error": bound.quadrature_error,
    });
    finish("gff", cfg, results, started)
}

pub fn run_vacuum(cfg: &VacuumConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let reference = qei::vacuum_reference_bound(&cfg.weight, cfg.mass, cfg.rel_tol)?;
    let direct = qei::worldline_qwei_bound(&cfg.weight, cfg.mass, cfg.rel_tol)?;
    let results = json!({
        "q_value": reference.q_value,
        "quadrature_error": reference.quadrature_error,
        "worldline_q_value": direct.q_value,
        "worldline_quadrature_error": direct.quadrature_error,
        "ratio": reference.q_value / direct.q_value,
    });
    finish("vacuum-bound", cfg, results, started)
}

pub fn run_scaling(cfg: &ScalingConfig, csv_path: Option<&str>) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let grid = cfg.tau.log_spaced();
    let mut curve = qei::scaling_curve(&cfg.weight, &cfg.target, &grid, cfg.rel_tol)?;
    match cfg.fit {
        FitSpec::All => {
            qei::fit_scaling_exponent(&mut curve, (grid[0], grid[grid.len() - 1]))?;
        }
        FitSpec::None => {
            curve.fitted_slope = None;
            curve.fit_residual = None;
        }
        FitSpec::Window(a, b) => {
            qei::fit_scaling_exponent(&mut curve, (a, b))?;
        }
    }
    if let Some(path) = csv_path {
        fs::write(path, curve_csv(&curve))
            .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?;
    }
    let results = json!({
        "tau": curve.tau_values,
        "bound": curve.bound_values,
        "error": curve.bound_errors,
        "fitted_slope": curve.fitted_slope,
        "fit_residual": curve.fit_residual,
        "fit_window": [curve.fit_window.0, curve.fit_window.1],
    });
    finish("scaling", cfg, results, started)
}

/// `tau,bound,error` rows with 17 significant digits, enough for an exact
/// f64 round trip.
pub fn curve_csv(curve: &qei::ScalingCurve) -> String {
    let mut s = String::from("tau,bound,error\n");
    for i in 0..curve.tau_values.len() {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            curve.tau_values[i], curve.bound_values[i], curve.bound_errors[i]
        ));
    }
    s
}

pub fn run_nuclearity(cfg: &NuclearityConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let mut results = serde_json::Map::new();
    match &cfg.spectrum {
        SpectrumSpec::Core(s) => {
            if let Some(beta) = cfg.beta {
                let est = s.nuclearity_log_index(beta, cfg.r, cfg.c)?;
                results.insert("log_index_bound".into(), json!(est.log_index_bound));
                results.insert("truncation_error".into(), json!(est.truncation_error));
            }
            if let Some(grid) = &cfg.beta_grid {
                let mut betas = grid.log_spaced();
                betas.reverse();
                let fit = s.fit_nuclearity_exponent(&betas, cfg.r, cfg.c)?;
                results.insert(
                    "fit".into(),
                    json!({ "exponent": fit.exponent, "residual": fit.residual }),
                );
            }
        }
        SpectrumSpec::Log => {
            let beta = cfg.beta.expect("validated: log spectrum requires beta");
            let (series, err) = nuclearity_index_series(&LogMasses, beta)?;
            let prefactor = cfg.c * (cfg.r / beta).powi(3);
            results.insert("log_index_bound".into(), json!(prefactor * series));
            results.insert("truncation_error".into(), json!(prefactor * err));
        }
    }
    finish("nuclearity", cfg, Value::Object(results), started)
}

pub fn run_fock(cfg: &FockConfig) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let modes = fock::build_mode_set(cfg.l, cfg.lambda, cfg.mass)?;
    let form = fock::assemble_smeared_energy_form(&modes, &cfg.weight)?;
    let bound = qei::worldline_qwei_bound(&cfg.weight, cfg.mass, cfg.rel_tol)?;
    let report = fock::verify_qwei(&form, &bound, cfg.epsilon)?;
    let results = serde_json::to_value(report)
        .map_err(|e| CliError::Io(format!("report serialization: {e}")))?;
    finish("fock", cfg, results, started)
}
