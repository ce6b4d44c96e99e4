//! Config ingestion, validation, and normalization.
//!
//! Every run is described by one flat JSON object. `--config` supplies it
//! whole, as a file path or an inline `{...}` string; the per-command flags
//! are shorthand that assembles the same object. Validation collects every
//! bad field in one pass, each error tagged with the field path, and the
//! normalized config (defaults filled) is echoed verbatim into the run
//! record.

use std::fmt;
use std::fs;

use qei_core::fock::DEFAULT_EPSILON;
use qei_core::qei::BoundTarget;
use qei_core::spectrum::MassSpectrum;
use qei_core::weights::Weight;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// The vacuum-subtracted route needs a nested integral per point, so its
/// default tolerance trades accuracy for runtime.
pub const VACUUM_DEFAULT_REL_TOL: f64 = 1e-6;

/// Itemized validation failures, one `path: message` entry per bad field.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl ConfigErrors {
    pub fn new() -> Self {
        ConfigErrors(Vec::new())
    }

    pub fn push(&mut self, path: &str, msg: impl fmt::Display) {
        if path.is_empty() {
            self.0.push(format!("config: {msg}"));
        } else {
            self.0.push(format!("config.{path}: {msg}"));
        }
    }

    pub fn single(path: &str, msg: impl fmt::Display) -> Self {
        let mut e = ConfigErrors::new();
        e.push(path, msg);
        e
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Reads `--config`: an inline JSON object if the argument starts with `{`,
/// otherwise the content of the file at that path.
pub fn read_config_source(arg: &str) -> Result<Value, ConfigErrors> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)
            .map_err(|e| ConfigErrors::single("", format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| ConfigErrors::single("", format!("not JSON: {e}")))
}

pub fn raw_from_value<T: DeserializeOwned>(v: Value) -> Result<T, ConfigErrors> {
    serde_json::from_value(v).map_err(|e| ConfigErrors::single("", e))
}

/// A weight given either as a family name with default parameters
/// (`"gaussian"`, `"cos2"`, `"bump"`) or as a full weight object.
pub fn parse_weight_value(v: &Value) -> Result<Weight, String> {
    let w = match v {
        Value::String(name) => weight_by_name(name)?,
        Value::Object(_) => serde_json::from_value::<Weight>(v.clone()).map_err(|e| e.to_string())?,
        other => return Err(format!("expected a family name or weight object, got {other}")),
    };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

fn weight_by_name(name: &str) -> Result<Weight, String> {
    match name {
        "gaussian" => Ok(Weight::gaussian(1.0, 0.0).expect("default gaussian")),
        "cos2" => Ok(Weight::cos2(1.0, 0.0).expect("default cos2")),
        "bump" => Ok(Weight::bump(1.0, 0.0).expect("default bump")),
        other => Err(format!(
            "unknown weight family `{other}`; allowed: gaussian, cos2, bump, \
             samples (as a JSON object)"
        )),
    }
}

/// `--weight` flag: family name or inline JSON, with `--tau` applied as a
/// multiplicative rescale.
pub fn weight_from_flags(weight: &str, tau: Option<f64>) -> Result<Weight, ConfigErrors> {
    let v: Value = if weight.trim_start().starts_with('{') {
        serde_json::from_str(weight)
            .map_err(|e| ConfigErrors::single("weight", format!("not JSON: {e}")))?
    } else {
        Value::String(weight.to_string())
    };
    let w = parse_weight_value(&v).map_err(|e| ConfigErrors::single("weight", e))?;
    match tau {
        Some(s) => w.rescale(s).map_err(|e| ConfigErrors::single("tau", e)),
        None => Ok(w),
    }
}

/// A logarithmically spaced grid, `min:max:count` on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridRange {
    pub fn from_flag(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:count, got `{s}`"));
        }
        let min: f64 = parts[0].parse().map_err(|_| format!("bad min `{}`", parts[0]))?;
        let max: f64 = parts[1].parse().map_err(|_| format!("bad max `{}`", parts[1]))?;
        let count: usize = parts[2].parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
        Ok(GridRange { min, max, count })
    }

    pub fn check(&self, path: &str, errs: &mut ConfigErrors) {
        if !(self.min.is_finite() && self.min > 0.0) {
            errs.push(path, format!("min must be positive, got {}", self.min));
        }
        if !(self.max.is_finite() && self.max > self.min) {
            errs.push(path, format!("max must exceed min, got {}", self.max));
        }
        if self.count < 2 {
            errs.push(path, format!("count must be at least 2, got {}", self.count));
        }
        if self.count > 100_000 {
            errs.push(path, format!("count cap is 100000, got {}", self.count));
        }
    }

    /// `count` points from `min` to `max`, equally spaced in the log;
    /// endpoints are set exactly.
    pub fn log_spaced(&self) -> Vec<f64> {
        let n = self.count;
        let (a, b) = (self.min.ln(), self.max.ln());
        let mut grid: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        grid[0] = self.min;
        grid[n - 1] = self.max;
        grid
    }
}

/// Grid field in config files: either the `min:max:count` string or the
/// normalized object form.
pub fn parse_grid_value(v: &Value) -> Result<GridRange, String> {
    match v {
        Value::String(s) => GridRange::from_flag(s),
        Value::Object(_) => {
            serde_json::from_value::<GridRange>(v.clone()).map_err(|e| e.to_string())
        }
        other => Err(format!("expected min:max:count or an object, got {other}")),
    }
}

/// Mass spectrum selector: the counting spectra, plus the `log` diagnostic
/// sequence m_j = log(j + 1), whose partition sum converges only for beta
/// above 1 and which therefore exercises the divergence detectors.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumSpec {
    Core(MassSpectrum),
    Log,
}

impl Serialize for SpectrumSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            SpectrumSpec::Core(s) => s.serialize(ser),
            SpectrumSpec::Log => {
                use serde::ser::SerializeMap;
                let mut m = ser.serialize_map(Some(1))?;
                m.serialize_entry("kind", "log")?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for SpectrumSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        if v.get("kind").and_then(Value::as_str) == Some("log") {
            if let Some(extra) = v.as_object().and_then(|o| o.keys().find(|k| *k != "kind")) {
                return Err(serde::de::Error::custom(format!(
                    "the log spectrum takes no parameters, got field `{extra}`"
                )));
            }
            return Ok(SpectrumSpec::Log);
        }
        serde_json::from_value::<MassSpectrum>(v)
            .map(SpectrumSpec::Core)
            .map_err(serde::de::Error::custom)
    }
}

fn parse_spectrum_value(v: &Value) -> Result<SpectrumSpec, String> {
    let spec: SpectrumSpec = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
    if let SpectrumSpec::Core(s) = &spec {
        s.validate().map_err(|e| e.to_string())?;
    }
    Ok(spec)
}

pub fn spectrum_from_flag(s: &str) -> Result<SpectrumSpec, ConfigErrors> {
    let v: Value = serde_json::from_str(s)
        .map_err(|e| ConfigErrors::single("spectrum", format!("not JSON: {e}")))?;
    parse_spectrum_value(&v).map_err(|e| ConfigErrors::single("spectrum", e))
}

/// What the `scaling` command fits: the whole grid, nothing, or a window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitSpec {
    All,
    None,
    Window(f64, f64),
}

impl Serialize for FitSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            FitSpec::All => ser.serialize_str("all"),
            FitSpec::None => ser.serialize_str("none"),
            FitSpec::Window(a, b) => {
                use serde::ser::SerializeMap;
                let mut m = ser.serialize_map(Some(1))?;
                m.serialize_entry("window", &[a, b])?;
                m.end()
            }
        }
    }
}

impl FitSpec {
    pub fn from_flag(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(FitSpec::All),
            "none" => Ok(FitSpec::None),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                if parts.len() != 2 {
                    return Err(format!("expected all, none, or min:max, got `{other}`"));
                }
                let a: f64 = parts[0].parse().map_err(|_| format!("bad min `{}`", parts[0]))?;
                let b: f64 = parts[1].parse().map_err(|_| format!("bad max `{}`", parts[1]))?;
                Ok(FitSpec::Window(a, b))
            }
        }
    }

    fn from_value(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) if s == "all" || s == "none" => FitSpec::from_flag(s),
            Value::Object(o) => {
                let w = o
                    .get("window")
                    .ok_or_else(|| "expected \"all\", \"none\", or {\"window\": [min, max]}".to_string())?;
                let pair: (f64, f64) =
                    serde_json::from_value(w.clone()).map_err(|e| format!("window: {e}"))?;
                if o.len() != 1 {
                    return Err("the fit object takes only the window field".into());
                }
                Ok(FitSpec::Window(pair.0, pair.1))
            }
            other => Err(format!("expected \"all\", \"none\", or a window object, got {other}")),
        }
    }

    fn check(&self, errs: &mut ConfigErrors) {
        if let FitSpec::Window(a, b) = self {
            if !(a.is_finite() && b.is_finite() && a < b) {
                errs.push("fit.window", format!("must be an ordered finite interval, got [{a}, {b}]"));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// per-command configs: a Raw form straight out of serde and a resolved form
// with defaults filled, the latter echoed into every run record

fn check_command(found: &Option<String>, expect: &str, errs: &mut ConfigErrors) {
    if let Some(name) = found {
        if name != expect {
            errs.push("command", format!("config is for `{name}` but the command is `{expect}`"));
        }
    }
}

fn need_weight(v: &Option<Value>, errs: &mut ConfigErrors) -> Option<Weight> {
    match v {
        None => {
            errs.push("weight", "missing required field");
            None
        }
        Some(v) => match parse_weight_value(v) {
            Ok(w) => Some(w),
            Err(e) => {
                errs.push("weight", e);
                None
            }
        },
    }
}

fn need_mass(m: Option<f64>, errs: &mut ConfigErrors) -> Option<f64> {
    match m {
        None => {
            errs.push("mass", "missing required field");
            None
        }
        Some(m) if m.is_finite() && m >= 0.0 => Some(m),
        Some(m) => {
            errs.push("mass", format!("must be finite and >= 0, got {m}"));
            None
        }
    }
}

fn tol_or_default(t: Option<f64>, default: f64, errs: &mut ConfigErrors) -> f64 {
    let t = t.unwrap_or(default);
    if !(t.is_finite() && (1e-13..1.0).contains(&t)) {
        errs.push("rel_tol", format!("must lie in [1e-13, 1), got {t}"));
    }
    t
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBound {
    pub command: Option<String>,
    pub weight: Option<Value>,
    pub mass: Option<f64>,
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundConfig {
    pub command: String,
    pub weight: Weight,
    pub mass: f64,
    pub rel_tol: f64,
}

impl BoundConfig {
    pub fn resolve(raw: RawBound) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "bound", &mut errs);
        let weight = need_weight(&raw.weight, &mut errs);
        let mass = need_mass(raw.mass, &mut errs);
        let rel_tol = tol_or_default(raw.rel_tol, DEFAULT_REL_TOL, &mut errs);
        match (weight, mass) {
            (Some(weight), Some(mass)) if errs.0.is_empty() => {
                Ok(BoundConfig { command: "bound".into(), weight, mass, rel_tol })
            }
            _ => Err(errs),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGff {
    pub command: Option<String>,
    pub weight: Option<Value>,
    pub spectrum: Option<Value>,
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GffConfig {
    pub command: String,
    pub weight: Weight,
    pub spectrum: MassSpectrum,
    pub rel_tol: f64,
}

fn need_counting_spectrum(v: &Option<Value>, errs: &mut ConfigErrors) -> Option<MassSpectrum> {
    match v {
        None => {
            errs.push("spectrum", "missing required field");
            None
        }
        Some(v) => match parse_spectrum_value(v) {
            Ok(SpectrumSpec::Core(s)) => Some(s),
            Ok(SpectrumSpec::Log) => {
                errs.push(
                    "spectrum",
                    "the log diagnostic sequence has no counting function; \
                     use kind list, arithmetic, or power_law",
                );
                None
            }
            Err(e) => {
                errs.push("spectrum", e);
                None
            }
        },
    }
}

impl GffConfig {
    pub fn resolve(raw: RawGff) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "gff", &mut errs);
        let weight = need_weight(&raw.weight, &mut errs);
        let spectrum = need_counting_spectrum(&raw.spectrum, &mut errs);
        let rel_tol = tol_or_default(raw.rel_tol, DEFAULT_REL_TOL, &mut errs);
        match (weight, spectrum) {
            (Some(weight), Some(spectrum)) if errs.0.is_empty() => {
                Ok(GffConfig { command: "gff".into(), weight, spectrum, rel_tol })
            }
            _ => Err(errs),
        }
    }
}

pub type RawVacuum = RawBound;

#[derive(Clone, Debug, Serialize)]
pub struct VacuumConfig {
    pub command: String,
    pub weight: Weight,
    pub mass: f64,
    pub rel_tol: f64,
}

impl VacuumConfig {
    pub fn resolve(raw: RawVacuum) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "vacuum-bound", &mut errs);
        let weight = need_weight(&raw.weight, &mut errs);
        let mass = need_mass(raw.mass, &mut errs);
        let rel_tol = tol_or_default(raw.rel_tol, VACUUM_DEFAULT_REL_TOL, &mut errs);
        match (weight, mass) {
            (Some(weight), Some(mass)) if errs.0.is_empty() => {
                Ok(VacuumConfig { command: "vacuum-bound".into(), weight, mass, rel_tol })
            }
            _ => Err(errs),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScaling {
    pub command: Option<String>,
    pub weight: Option<Value>,
    pub mass: Option<f64>,
    pub spectrum: Option<Value>,
    pub tau: Option<Value>,
    pub rel_tol: Option<f64>,
    pub fit: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingConfig {
    pub command: String,
    pub weight: Weight,
    /// Flattened so the normalized form re-enters the raw schema: it
    /// serializes as a top-level `mass` or `spectrum` field.
    #[serde(flatten)]
    pub target: BoundTarget,
    pub tau: GridRange,
    pub rel_tol: f64,
    pub fit: FitSpec,
}

impl ScalingConfig {
    pub fn resolve(raw: RawScaling) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "scaling", &mut errs);
        let weight = need_weight(&raw.weight, &mut errs);
        let target = match (raw.mass, &raw.spectrum) {
            (Some(_), Some(_)) => {
                errs.push("mass", "give either mass or spectrum, not both");
                None
            }
            (Some(m), None) => need_mass(Some(m), &mut errs).map(BoundTarget::Mass),
            (None, Some(_)) => {
                need_counting_spectrum(&raw.spectrum, &mut errs).map(BoundTarget::Spectrum)
            }
            (None, None) => {
                errs.push("mass", "missing required field (or give spectrum)");
                None
            }
        };
        let tau = match &raw.tau {
            None => {
                errs.push("tau", "missing required field (min:max:count)");
                None
            }
            Some(v) => match parse_grid_value(v) {
                Ok(g) => {
                    g.check("tau", &mut errs);
                    Some(g)
                }
                Err(e) => {
                    errs.push("tau", e);
                    None
                }
            },
        };
        let rel_tol = tol_or_default(raw.rel_tol, DEFAULT_REL_TOL, &mut errs);
        let fit = match &raw.fit {
            None => FitSpec::All,
            Some(v) => match FitSpec::from_value(v) {
                Ok(f) => {
                    f.check(&mut errs);
                    f
                }
                Err(e) => {
                    errs.push("fit", e);
                    FitSpec::All
                }
            },
        };
        match (weight, target, tau) {
            (Some(weight), Some(target), Some(tau)) if errs.0.is_empty() => Ok(ScalingConfig {
                command: "scaling".into(),
                weight,
                target,
                tau,
                rel_tol,
                fit,
            }),
            _ => Err(errs),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNuclearity {
    pub command: Option<String>,
    pub spectrum: Option<Value>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub beta_grid: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NuclearityConfig {
    pub command: String,
    pub spectrum: SpectrumSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub r: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<GridRange>,
}

fn positive_or_default(
    v: Option<f64>,
    default: f64,
    path: &str,
    errs: &mut ConfigErrors,
) -> f64 {
    let v = v.unwrap_or(default);
    if !(v.is_finite() && v > 0.0) {
        errs.push(path, format!("must be positive, got {v}"));
    }
    v
}

impl NuclearityConfig {
    pub fn resolve(raw: RawNuclearity) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "nuclearity", &mut errs);
        let spectrum = match &raw.spectrum {
            None => {
                errs.push("spectrum", "missing required field");
                None
            }
            Some(v) => match parse_spectrum_value(v) {
                Ok(s) => Some(s),
                Err(e) => {
                    errs.push("spectrum", e);
                    None
                }
            },
        };
        let beta = match raw.beta {
            Some(b) if !(b.is_finite() && b > 0.0) => {
                errs.push("beta", format!("must be positive, got {b}"));
                None
            }
            other => other,
        };
        let r = positive_or_default(raw.r, 1.0, "r", &mut errs);
        let c = positive_or_default(raw.c, 1.0, "c", &mut errs);
        let beta_grid = match &raw.beta_grid {
            None => None,
            Some(v) => match parse_grid_value(v) {
                Ok(g) => {
                    g.check("beta_grid", &mut errs);
                    Some(g)
                }
                Err(e) => {
                    errs.push("beta_grid", e);
                    None
                }
            },
        };
        if raw.beta.is_none() && raw.beta_grid.is_none() {
            errs.push("beta", "give beta, beta_grid, or both");
        }
        if beta_grid.is_some() && matches!(spectrum, Some(SpectrumSpec::Log)) {
            errs.push(
                "beta_grid",
                "the exponent fit needs a counting spectrum (list, arithmetic, power_law)",
            );
        }
        match spectrum {
            Some(spectrum) if errs.0.is_empty() => Ok(NuclearityConfig {
                command: "nuclearity".into(),
                spectrum,
                beta,
                r,
                c,
                beta_grid,
            }),
            _ => Err(errs),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFock {
    pub command: Option<String>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    pub mass: Option<f64>,
    pub weight: Option<Value>,
    pub epsilon: Option<f64>,
    pub sector: Option<String>,
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FockConfig {
    pub command: String,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub mass: f64,
    pub weight: Weight,
    pub epsilon: f64,
    pub sector: String,
    pub rel_tol: f64,
}

impl FockConfig {
    pub fn resolve(raw: RawFock) -> Result<Self, ConfigErrors> {
        let mut errs = ConfigErrors::new();
        check_command(&raw.command, "fock", &mut errs);
        let l = match raw.l {
            None => {
                errs.push("L", "missing required field");
                None
            }
            Some(l) if l.is_finite() && l > 0.0 => Some(l),
            Some(l) => {
                errs.push("L", format!("must be positive, got {l}"));
                None
            }
        };
        let lambda = match raw.lambda {
            None => {
                errs.push("Lambda", "missing required field");
                None
            }
            Some(v) if v.is_finite() && v > 0.0 => Some(v),
            Some(v) => {
                errs.push("Lambda", format!("must be positive, got {v}"));
                None
            }
        };
        let mass = need_mass(raw.mass, &mut errs);
        let weight = need_weight(&raw.weight, &mut errs);
        let epsilon = raw.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            errs.push("epsilon", format!("must be >= 0, got {epsilon}"));
        }
        let sector = raw.sector.unwrap_or_else(|| "0+2".into());
        if sector != "0+2" {
            errs.push("sector", format!("only the vacuum + pair sector \"0+2\" is implemented, got \"{sector}\""));
        }
        let rel_tol = tol_or_default(raw.rel_tol, DEFAULT_REL_TOL, &mut errs);
        match (l, lambda, mass, weight) {
            (Some(l), Some(lambda), Some(mass), Some(weight)) if errs.0.is_empty() => {
                Ok(FockConfig {
                    command: "fock".into(),
                    l,
                    lambda,
                    mass,
                    weight,
                    epsilon,
                    sector,
                    rel_tol,
                })
            }
            _ => Err(errs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_round_trip() {
        let g = GridRange::from_flag("0.25:4:16").unwrap();
        assert_eq!(g, GridRange { min: 0.25, max: 4.0, count: 16 });
        let pts = g.log_spaced();
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[0], 0.25);
        assert_eq!(pts[15], 4.0);
        assert!(pts.windows(2).all(|p| p[1] > p[0]));
        // equal ratios on a log grid
        let r0 = pts[1] / pts[0];
        for w in pts.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert!(GridRange::from_flag("1:2").is_err());
        assert!(GridRange::from_flag("a:2:3").is_err());
    }

    #[test]
    fn weight_shorthand_and_json_agree() {
        let short = weight_from_flags("gaussian", None).unwrap();
        let long = weight_from_flags(
            r#"{"family":"gaussian","params":{"width":1.0,"center":0.0},"tau":1.0}"#,
            None,
        )
        .unwrap();
        assert_eq!(short, long);
        let scaled = weight_from_flags("gaussian", Some(2.0)).unwrap();
        assert_eq!(scaled.tau, 2.0);
        let err = weight_from_flags("triangle", None).unwrap_err();
        assert!(err.0[0].contains("gaussian"), "{err}");
    }

    #[test]
    fn missing_mass_is_reported_by_name() {
        let raw: RawBound =
            serde_json::from_value(serde_json::json!({"weight": "gaussian"})).unwrap();
        let err = BoundConfig::resolve(raw).unwrap_err();
        assert!(err.0.iter().any(|e| e.starts_with("config.mass:")), "{err}");
    }

    #[test]
    fn spectrum_spec_accepts_log_and_core_kinds() {
        let log: SpectrumSpec = serde_json::from_str(r#"{"kind":"log"}"#).unwrap();
        assert_eq!(log, SpectrumSpec::Log);
        let list: SpectrumSpec = serde_json::from_str(r#"{"kind":"list","masses":[1.0]}"#).unwrap();
        assert!(matches!(list, SpectrumSpec::Core(MassSpectrum::List { .. })));
        assert!(serde_json::from_str::<SpectrumSpec>(r#"{"kind":"log","m0":1}"#).is_err());
        assert!(serde_json::from_str::<SpectrumSpec>(r#"{"kind":"harmonic"}"#).is_err());
    }

    #[test]
    fn normalized_configs_reenter_their_schema() {
        use serde_json::json;

        fn normalize(v: Value) -> Result<Value, ConfigErrors> {
            let command = v.get("command").and_then(Value::as_str).unwrap().to_string();
            let out = match command.as_str() {
                "bound" => serde_json::to_value(BoundConfig::resolve(raw_from_value(v)?)?),
                "gff" => serde_json::to_value(GffConfig::resolve(raw_from_value(v)?)?),
                "vacuum-bound" => serde_json::to_value(VacuumConfig::resolve(raw_from_value(v)?)?),
                "scaling" => serde_json::to_value(ScalingConfig::resolve(raw_from_value(v)?)?),
                "nuclearity" => {
                    serde_json::to_value(NuclearityConfig::resolve(raw_from_value(v)?)?)
                }
                "fock" => serde_json::to_value(FockConfig::resolve(raw_from_value(v)?)?),
                other => panic!("unexpected command {other}"),
            };
            Ok(out.expect("serializable config"))
        }

        let cases: Vec<Value> = vec![
            json!({"command":"bound","weight":"gaussian","mass":0.5}),
            json!({"command":"gff","weight":"cos2","spectrum":{"kind":"arithmetic","m0":1.0}}),
            json!({"command":"vacuum-bound","weight":"bump","mass":0.0}),
            json!({"command":"scaling","weight":"gaussian","mass":0.0,"tau":"0.5:2:4","fit":"none"}),
            json!({"command":"scaling","weight":"gaussian",
                   "spectrum":{"kind":"power_law","c":1.0,"p":2.0},
                   "tau":{"min":1.0,"max":2.0,"count":3},"fit":{"window":[1.0,2.0]}}),
            json!({"command":"nuclearity","spectrum":{"kind":"list","masses":[1.0]},"beta":1.0}),
            json!({"command":"nuclearity","spectrum":{"kind":"log"},"beta":2.0}),
            json!({"command":"fock","L":8.0,"Lambda":1.25,"mass":1.0,"weight":"gaussian"}),
        ];
        for v in cases {
            let label = v.to_string();
            let first = normalize(v).unwrap_or_else(|e| panic!("{label}: {e}"));
            let second = normalize(first.clone()).unwrap_or_else(|e| panic!("echo of {label}: {e}"));
            assert_eq!(first, second, "{label}");
        }
    }

    #[test]
    fn fock_sector_is_restricted() {
        let raw: RawFock = serde_json::from_value(serde_json::json!({
            "L": 8.0, "Lambda": 1.25, "mass": 1.0, "weight": "gaussian", "sector": "0+1+2"
        }))
        .unwrap();
        let err = FockConfig::resolve(raw).unwrap_err();
        assert!(err.0.iter().any(|e| e.contains("sector")), "{err}");
    }
}
