//! Configuration parsing and validation for the command line.
//!
//! A run is described by a small TOML document with six sections:
//!
//! ```toml
//! [lattice]
//! sites = 1          # periodic sites (required)
//! spacing = 1.0      # lattice spacing dx (default 1.0)
//! mass = 1.0         # dispersion mass, strictly positive (default 1.0)
//!
//! [fock]
//! cutoff = 14        # total particle-number cutoff (required)
//! probe_cap = 4      # probe-block particle cap (default 2)
//!
//! [polynomial]
//! coefficients = [0.0, 0.0, 0.0, 0.0, 1.0]   # monic even, constant first
//!
//! [functions]        # all optional, default zero; one entry per site
//! lambda = [0.1]     # nonnegative coupling profile
//! f = [0.15]         # entries are reals or [re, im] pairs
//! h = [[0.15, 0.0]]
//! g = [0.0]
//!
//! [evolution]
//! beta = 0.25        # inverse-temperature horizon (required)
//! steps = 400        # integrator steps (default 400)
//! method = "rk4"     # "rk4" or "midpoint" (default "rk4")
//!
//! [run]              # all optional
//! identities = ["all"]
//! output = "reports"
//! format = "json"    # "json" or "csv"
//! seed = 7
//! timing = false     # true trades byte-identical reports for real times
//! wick_scale = 1.0   # debug: rescale the normal-ordering constant
//! field_scale = 1.0  # debug: rescale the field-smearing vectors
//! [run.tolerances]   # per-identity overrides, keyed by identity name
//! exchange = 1e-5
//! ```
//!
//! Unknown keys anywhere are rejected, and every constraint violation
//! names the offending key. Command-line flags of the form
//! `--section.key=value` patch the document before validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use focklab_core::evolution::{EvolutionConfig, Method};
use focklab_core::harness::Scenario;
use focklab_core::interaction::Polynomial;
use focklab_core::lattice::{LatticeFunction, LatticeSpec};
use focklab_core::suite::{IdentityKind, Tolerances};
use num_complex::Complex64;
use serde::Deserialize;

/// A configuration problem; the message names the offending key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSection {
    sites: usize,
    #[serde(default = "default_one")]
    spacing: f64,
    #[serde(default = "default_one")]
    mass: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FockSection {
    cutoff: usize,
    #[serde(default = "default_probe_cap")]
    probe_cap: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialSection {
    coefficients: Vec<f64>,
}

/// One complex entry, written either as a plain real or as `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexEntry {
    fn value(self) -> Complex64 {
        match self {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionsSection {
    lambda: Option<Vec<f64>>,
    f: Option<Vec<ComplexEntry>>,
    h: Option<Vec<ComplexEntry>>,
    g: Option<Vec<ComplexEntry>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolutionSection {
    beta: f64,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_method")]
    method: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    identities: Vec<String>,
    output: String,
    format: String,
    seed: u64,
    timing: bool,
    wick_scale: f64,
    field_scale: f64,
    tolerances: BTreeMap<String, f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            identities: vec!["all".to_string()],
            output: "reports".to_string(),
            format: "json".to_string(),
            seed: 7,
            timing: false,
            wick_scale: 1.0,
            field_scale: 1.0,
            tolerances: BTreeMap::new(),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_probe_cap() -> usize {
    2
}

fn default_steps() -> usize {
    400
}

fn default_method() -> String {
    "rk4".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lattice: LatticeSection,
    fock: FockSection,
    polynomial: PolynomialSection,
    #[serde(default)]
    functions: FunctionsSection,
    evolution: EvolutionSection,
    #[serde(default)]
    run: RunSection,
}

/// Where report files go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

/// A fully validated run: the scenario plus everything the driver needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub identities: Vec<IdentityKind>,
    pub tolerances: Tolerances,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub timing: bool,
}

/// Parses and fully validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
    validate(raw)
}

/// Parses a document with `--section.key=value` patches applied first.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[String],
) -> Result<RunConfig, ConfigError> {
    if overrides.is_empty() {
        return parse_config(text);
    }
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ConfigError(format!("config: {e}")))?;
    for entry in overrides {
        apply_override(&mut table, entry)?;
    }
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError(format!("config: {e}")))?;
    validate(raw)
}

/// Applies one `--section.key=value` (or `section.key=value`) patch.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<(), ConfigError> {
    let body = entry.strip_prefix("--").unwrap_or(entry);
    let Some((path, raw_value)) = body.split_once('=') else {
        return err(format!("override \"{entry}\": expected section.key=value"));
    };
    let segments: Vec<&str> = path.split('.').collect();
    if segments.len() < 2 || segments.iter().any(|s| s.is_empty()) {
        return err(format!("override \"{entry}\": expected section.key=value"));
    }
    // Parse the right-hand side as a TOML value; bare words become strings.
    let value = match format!("v = {raw_value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw_value.to_string()),
    };
    let mut current = table;
    for segment in &segments[..segments.len() - 1] {
        current = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError(format!("override \"{entry}\": {segment} is not a section")))?;
    }
    current.insert(segments.last().unwrap().to_string(), value);
    Ok(())
}

fn complex_function(
    entries: &Option<Vec<ComplexEntry>>,
    sites: usize,
    key: &str,
) -> Result<LatticeFunction, ConfigError> {
    match entries {
        None => Ok(LatticeFunction::zeros(sites)),
        Some(list) => {
            if list.len() != sites {
                return err(format!("{key}: expected {sites} entries, got {}", list.len()));
            }
            let values: Vec<Complex64> = list.iter().map(|e| e.value()).collect();
            if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return err(format!("{key}: entries must be finite"));
            }
            Ok(LatticeFunction::new(values))
        }
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let sites = raw.lattice.sites;
    if sites == 0 {
        return err("lattice.sites: need at least one site");
    }
    if !(raw.lattice.spacing > 0.0 && raw.lattice.spacing.is_finite()) {
        return err("lattice.spacing: spacing must be strictly positive");
    }
    if !(raw.lattice.mass > 0.0 && raw.lattice.mass.is_finite()) {
        return err("lattice.mass: mass must be strictly positive");
    }
    let spec = LatticeSpec::new(sites, raw.lattice.spacing, raw.lattice.mass)
        .map_err(|e| ConfigError(format!("lattice: {e}")))?;

    let poly = Polynomial::monic_even(raw.polynomial.coefficients.clone())
        .map_err(|e| ConfigError(format!("polynomial.coefficients: {e}")))?;

    let lambda = match &raw.functions.lambda {
        None => LatticeFunction::zeros(sites),
        Some(list) => {
            if list.len() != sites {
                return err(format!(
                    "functions.lambda: expected {sites} entries, got {}",
                    list.len()
                ));
            }
            if list.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return err("functions.lambda: couplings must be nonnegative and finite");
            }
            LatticeFunction::from_real(list)
        }
    };
    let f = complex_function(&raw.functions.f, sites, "functions.f")?;
    let h = complex_function(&raw.functions.h, sites, "functions.h")?;
    let g = complex_function(&raw.functions.g, sites, "functions.g")?;

    if !(raw.evolution.beta > 0.0 && raw.evolution.beta.is_finite()) {
        return err("evolution.beta: the horizon must be strictly positive");
    }
    if raw.evolution.steps == 0 {
        return err("evolution.steps: need at least one step");
    }
    let method = match raw.evolution.method.as_str() {
        "rk4" => Method::RungeKutta4,
        "midpoint" => Method::Midpoint,
        other => return err(format!("evolution.method: unknown integrator \"{other}\"")),
    };

    if raw.fock.probe_cap + poly.degree() + 2 > raw.fock.cutoff {
        return err(format!(
            "fock.probe_cap: the guard band requires probe_cap + degree + 2 <= cutoff \
             ({} + {} + 2 > {})",
            raw.fock.probe_cap,
            poly.degree(),
            raw.fock.cutoff
        ));
    }

    if !(raw.run.wick_scale > 0.0 && raw.run.wick_scale.is_finite()) {
        return err("run.wick_scale: must be strictly positive");
    }
    if !(raw.run.field_scale > 0.0 && raw.run.field_scale.is_finite()) {
        return err("run.field_scale: must be strictly positive");
    }

    let mut scenario = Scenario::new(
        spec,
        raw.fock.cutoff,
        poly,
        lambda,
        f,
        h,
        g,
        raw.evolution.beta,
        EvolutionConfig { steps: raw.evolution.steps, method },
        raw.fock.probe_cap,
    )
    .map_err(|e| ConfigError(format!("config: {e}")))?;
    scenario.seed = raw.run.seed;
    scenario.wick_scale = raw.run.wick_scale;
    scenario.field_scale = raw.run.field_scale;
    scenario.validate().map_err(|e| ConfigError(format!("config: {e}")))?;

    let identities = if raw.run.identities.iter().any(|name| name == "all") {
        IdentityKind::ALL.to_vec()
    } else {
        if raw.run.identities.is_empty() {
            return err("run.identities: select at least one identity or \"all\"");
        }
        let mut picked = Vec::new();
        for name in &raw.run.identities {
            let kind = IdentityKind::from_name(name)
                .map_err(|_| ConfigError(format!("run.identities: unknown identity \"{name}\"")))?;
            if !picked.contains(&kind) {
                picked.push(kind);
            }
        }
        picked
    };

    let mut tolerances = Tolerances::default();
    for (name, value) in &raw.run.tolerances {
        let kind = IdentityKind::from_name(name)
            .map_err(|_| ConfigError(format!("run.tolerances: unknown identity \"{name}\"")))?;
        if !(*value > 0.0 && value.is_finite()) {
            return err(format!("run.tolerances.{name}: must be strictly positive"));
        }
        tolerances.set(kind, *value);
    }

    let format = match raw.run.format.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => return err(format!("run.format: unknown format \"{other}\"")),
    };

    Ok(RunConfig {
        scenario,
        identities,
        tolerances,
        output: PathBuf::from(&raw.run.output),
        format,
        timing: raw.run.timing,
    })
}

/// The built-in demonstration scenario: quartic interaction on a single
/// site with matched creation/annihilation functions.
pub const DEMO_CONFIG: &str = r#"
[lattice]
sites = 1
spacing = 1.0
mass = 1.0

[fock]
cutoff = 14
probe_cap = 4

[polynomial]
coefficients = [0.0, 0.0, 0.0, 0.0, 1.0]

[functions]
lambda = [0.1]
f = [0.15]
h = [0.15]
g = [0.0]

[evolution]
beta = 0.25
steps = 400
method = "rk4"

[run]
identities = ["all"]
output = "reports"
format = "json"
seed = 7
"#;
