//! Command line front end for the energy bound computations.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 detected divergence,
//! 3 numerical non-convergence.

mod config;
mod run;

use std::fs;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{
    raw_from_value, read_config_source, spectrum_from_flag, weight_from_flags, BoundConfig,
    ConfigErrors, FockConfig, GffConfig, NuclearityConfig, ScalingConfig, VacuumConfig,
};
use run::{CliError, RunOutput};

#[derive(Parser)]
#[command(
    name = "qei",
    version,
    about = "Lower bounds on weighted averages of the energy density of a free \
             scalar field, with Fock-space verification and nuclearity diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Worldline energy bound for a single field mass
    Bound(BoundArgs),
    /// Energy bound for a generalized free field over a mass spectrum
    Gff(GffArgs),
    /// Vacuum-subtracted reference route to the bound, with the ratio to the
    /// direct value
    VacuumBound(VacuumArgs),
    /// Bound values along a logarithmic scale grid, with a log-log slope fit
    Scaling(ScalingArgs),
    /// Nuclearity index diagnostics for a mass spectrum
    Nuclearity(NuclearityArgs),
    /// Truncated Fock-space check of the bound in a periodic box
    Fock(FockArgs),
    /// Schema-check a config and echo its normalized form
    Validate(ValidateArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    /// Weight family name (gaussian, cos2, bump) or weight JSON
    #[arg(long, conflicts_with = "config")]
    weight: Option<String>,
    /// Field mass, >= 0
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Multiplicative rescale applied to the weight
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Relative quadrature tolerance (default 1e-9)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    rel_tol: Option<f64>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GffArgs {
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    /// Weight family name (gaussian, cos2, bump) or weight JSON
    #[arg(long, conflicts_with = "config")]
    weight: Option<String>,
    /// Mass spectrum JSON, e.g. {"kind":"arithmetic","m0":1.0}
    #[arg(long, conflicts_with = "config")]
    spectrum: Option<String>,
    /// Multiplicative rescale applied to the weight
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Relative quadrature tolerance (default 1e-9)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    rel_tol: Option<f64>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VacuumArgs {
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    /// Weight family name (gaussian, cos2, bump) or weight JSON
    #[arg(long, conflicts_with = "config")]
    weight: Option<String>,
    /// Field mass, >= 0
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Multiplicative rescale applied to the weight
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Relative quadrature tolerance (default 1e-6)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    rel_tol: Option<f64>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    /// Weight family name (gaussian, cos2, bump) or weight JSON
    #[arg(long, conflicts_with = "config")]
    weight: Option<String>,
    /// Field mass, >= 0 (alternative: --spectrum)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Mass spectrum JSON (alternative: --mass)
    #[arg(long, conflicts_with = "config")]
    spectrum: Option<String>,
    /// Scale grid as min:max:count, logarithmically spaced
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    tau: Option<String>,
    /// Relative quadrature tolerance (default 1e-9)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    rel_tol: Option<f64>,
    /// Slope fit: all, none, or a min:max window
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    fit: Option<String>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
    /// Also write the curve as CSV (tau,bound,error) to this path
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct NuclearityArgs {
    /// Config file path or inline JSON object
    #[arg(long)]
    config: Option<String>,
    /// Mass spectrum JSON, e.g. {"kind":"list","masses":[1]}
    #[arg(long, conflicts_with = "config")]
    spectrum: Option<String>,
    /// Inverse temperature
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Localization radius constant (default 1)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    r: Option<f64>,
    /// Overall constant (default 1)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    c: Option<f64>,
    /// Fit the index growth exponent over this beta grid (min:max:count)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    beta_grid: Option<String>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct FockArgs {
    /// Config file path or inline JSON object with keys L, Lambda, mass,
    /// weight, epsilon, sector
    #[arg(long)]
    config: Option<String>,
    /// Box side length
    #[arg(long = "box-side", conflicts_with = "config", allow_hyphen_values = true)]
    box_side: Option<f64>,
    /// Momentum cutoff
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    cutoff: Option<f64>,
    /// Field mass, >= 0
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    mass: Option<f64>,
    /// Weight family name (gaussian, cos2, bump) or weight JSON
    #[arg(long, conflicts_with = "config")]
    weight: Option<String>,
    /// Multiplicative rescale applied to the weight
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Slack for the bound comparison (default 0.25)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// State sector; only "0+2" (vacuum + pairs) is implemented
    #[arg(long, conflicts_with = "config")]
    sector: Option<String>,
    /// Relative quadrature tolerance (default 1e-9)
    #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
    rel_tol: Option<f64>,
    /// Write the JSON run record here instead of stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config file path or inline JSON object; must carry a "command" field
    source: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and succeed; real usage
            // errors are config-class failures
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Bound(a) => {
            let cfg = bound_config(&a)?;
            emit(&run::run_bound(&cfg)?, a.out.as_deref())
        }
        Cmd::Gff(a) => {
            let cfg = gff_config(&a)?;
            emit(&run::run_gff(&cfg)?, a.out.as_deref())
        }
        Cmd::VacuumBound(a) => {
            let cfg = vacuum_config(&a)?;
            emit(&run::run_vacuum(&cfg)?, a.out.as_deref())
        }
        Cmd::Scaling(a) => {
            let cfg = scaling_config(&a)?;
            emit(&run::run_scaling(&cfg, a.csv.as_deref())?, a.out.as_deref())
        }
        Cmd::Nuclearity(a) => {
            let cfg = nuclearity_config(&a)?;
            emit(&run::run_nuclearity(&cfg)?, a.out.as_deref())
        }
        Cmd::Fock(a) => {
            let cfg = fock_config(&a)?;
            emit(&run::run_fock(&cfg)?, a.out.as_deref())
        }
        Cmd::Validate(a) => validate(&a),
    }
}

fn emit(out: &RunOutput, path: Option<&str>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(out)
        .map_err(|e| CliError::Io(format!("output serialization: {e}")))?;
    text.push('\n');
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {p}: {e}")))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Weight flag + optional tau rescale, folded into a JSON value for the raw
/// config so that flag and file invocations resolve identically.
fn weight_value(
    weight: &Option<String>,
    tau: Option<f64>,
) -> Result<Option<Value>, ConfigErrors> {
    match weight {
        None => {
            if tau.is_some() {
                return Err(ConfigErrors::single("tau", "needs --weight"));
            }
            Ok(None)
        }
        Some(w) => {
            let parsed = weight_from_flags(w, tau)?;
            let v = serde_json::to_value(&parsed)
                .map_err(|e| ConfigErrors::single("weight", e))?;
            Ok(Some(v))
        }
    }
}

fn spectrum_value(spectrum: &Option<String>) -> Result<Option<Value>, ConfigErrors> {
    match spectrum {
        None => Ok(None),
        Some(s) => {
            let parsed = spectrum_from_flag(s)?;
            let v = serde_json::to_value(&parsed)
                .map_err(|e| ConfigErrors::single("spectrum", e))?;
            Ok(Some(v))
        }
    }
}

fn bound_config(a: &BoundArgs) -> Result<BoundConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawBound {
            command: None,
            weight: weight_value(&a.weight, a.tau)?,
            mass: a.mass,
            rel_tol: a.rel_tol,
        },
    };
    Ok(BoundConfig::resolve(raw)?)
}

fn gff_config(a: &GffArgs) -> Result<GffConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawGff {
            command: None,
            weight: weight_value(&a.weight, a.tau)?,
            spectrum: spectrum_value(&a.spectrum)?,
            rel_tol: a.rel_tol,
        },
    };
    Ok(GffConfig::resolve(raw)?)
}

fn vacuum_config(a: &VacuumArgs) -> Result<VacuumConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawVacuum {
            command: None,
            weight: weight_value(&a.weight, a.tau)?,
            mass: a.mass,
            rel_tol: a.rel_tol,
        },
    };
    Ok(VacuumConfig::resolve(raw)?)
}

fn scaling_config(a: &ScalingArgs) -> Result<ScalingConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawScaling {
            command: None,
            weight: weight_value(&a.weight, None)?,
            mass: a.mass,
            spectrum: spectrum_value(&a.spectrum)?,
            tau: a.tau.clone().map(Value::String),
            rel_tol: a.rel_tol,
            fit: a.fit.clone().map(Value::String),
        },
    };
    Ok(ScalingConfig::resolve(raw)?)
}

fn nuclearity_config(a: &NuclearityArgs) -> Result<NuclearityConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawNuclearity {
            command: None,
            spectrum: spectrum_value(&a.spectrum)?,
            beta: a.beta,
            r: a.r,
            c: a.c,
            beta_grid: a.beta_grid.clone().map(Value::String),
        },
    };
    Ok(NuclearityConfig::resolve(raw)?)
}

fn fock_config(a: &FockArgs) -> Result<FockConfig, CliError> {
    let raw = match &a.config {
        Some(src) => raw_from_value(read_config_source(src)?)?,
        None => config::RawFock {
            command: None,
            l: a.box_side,
            lambda: a.cutoff,
            mass: a.mass,
            weight: weight_value(&a.weight, a.tau)?,
            epsilon: a.epsilon,
            sector: a.sector.clone(),
            rel_tol: a.rel_tol,
        },
    };
    Ok(FockConfig::resolve(raw)?)
}

fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    let value = read_config_source(&a.source)?;
    let command = value
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| {
            ConfigErrors::single("command", "missing; validate needs it to pick the schema")
        })?
        .to_string();
    let normalized = match command.as_str() {
        "bound" => serde_json::to_value(BoundConfig::resolve(raw_from_value(value)?)?),
        "gff" => serde_json::to_value(GffConfig::resolve(raw_from_value(value)?)?),
        "vacuum-bound" => serde_json::to_value(VacuumConfig::resolve(raw_from_value(value)?)?),
        "scaling" => serde_json::to_value(ScalingConfig::resolve(raw_from_value(value)?)?),
        "nuclearity" => serde_json::to_value(NuclearityConfig::resolve(raw_from_value(value)?)?),
        "fock" => serde_json::to_value(FockConfig::resolve(raw_from_value(value)?)?),
        other => {
            return Err(ConfigErrors::single(
                "command",
                format!(
                    "unknown command `{other}`; allowed: bound, gff, vacuum-bound, \
                     scaling, nuclearity, fock"
                ),
            )
            .into())
        }
    }
    .map_err(|e| CliError::Io(format!("config serialization: {e}")))?;
    let mut text = serde_json::to_string_pretty(&normalized)
        .map_err(|e| CliError::Io(format!("config serialization: {e}")))?;
    text.push('\n');
    print!("{text}");
    Ok(())
}
