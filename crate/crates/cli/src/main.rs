//! `focklab` — drives the identity-verification suite from the shell.
//!
//! Subcommands:
//! - `verify --config run.toml` runs the configured identity checks and
//!   writes one report file per identity.
//! - `sweep --config run.toml --identity exchange --axis steps` refines a
//!   convergence axis and emits plot-ready CSV.
//! - `demo` runs the built-in demonstration scenario.
//!
//! Any flag of the form `--section.key=value` patches the configuration
//! document before validation, e.g. `--evolution.steps=800` or
//! `--run.format=csv`.
//!
//! Exit codes: 0 when every check passes, 1 when an identity misses its
//! tolerance (or a sweep fails to converge), 2 for configuration errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use focklab_core::error::Error;
use focklab_core::harness::SweepAxis;
use focklab_core::suite::{
    outcome_json, run_identity, run_suite, suite_csv, IdentityKind, ScenarioEcho, SuiteOptions,
    SuiteReport,
};

use crate::config::{parse_config_with_overrides, ConfigError, OutputFormat, RunConfig, DEMO_CONFIG};

const OVERRIDE_HELP: &str = "Configuration overrides:\n  \
    --<section>.<key>=<value>  patch any config key before validation,\n  \
    e.g. --evolution.steps=800, --functions.f=[0.2], --run.format=csv";

#[derive(Parser)]
#[command(name = "focklab", version, about = "Verifies operator identities for self-interacting lattice heat kernels", after_help = OVERRIDE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite described by a configuration file.
    Verify {
        /// Path to the TOML configuration document.
        #[arg(long)]
        config: PathBuf,
    },
    /// Refine one convergence axis for a single identity and emit CSV.
    Sweep {
        /// Path to the TOML configuration document.
        #[arg(long)]
        config: PathBuf,
        /// Identity to sweep, e.g. "exchange" or "free-exchange".
        #[arg(long)]
        identity: String,
        /// Refinement axis: "cutoff", "steps", or "both".
        #[arg(long, default_value = "cutoff")]
        axis: String,
        /// Number of refinement levels (at least 2).
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the built-in demonstration scenario.
    Demo,
}

fn main() -> ExitCode {
    // Dynamic `--section.key=value` patches are filtered out before the
    // regular argument parser sees the command line.
    let mut overrides = Vec::new();
    let mut args = Vec::new();
    for arg in std::env::args() {
        let is_override = arg
            .strip_prefix("--")
            .and_then(|body| body.split('=').next())
            .map_or(false, |flag| flag.contains('.'));
        if is_override {
            overrides.push(arg);
        } else {
            args.push(arg);
        }
    }
    let cli = Cli::parse_from(args);
    let outcome = match cli.command {
        Command::Verify { config } => read_config(&config)
            .and_then(|text| parse_config_with_overrides(&text, &overrides))
            .and_then(|cfg| run_verify(&cfg)),
        Command::Demo => parse_config_with_overrides(DEMO_CONFIG, &overrides)
            .and_then(|cfg| run_verify(&cfg)),
        Command::Sweep { config, identity, axis, levels } => read_config(&config)
            .and_then(|text| parse_config_with_overrides(&text, &overrides))
            .and_then(|cfg| run_sweep(&cfg, &identity, &axis, levels)),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_config(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))
}

fn run_verify(cfg: &RunConfig) -> Result<ExitCode, ConfigError> {
    let options = SuiteOptions {
        identities: cfg.identities.clone(),
        tolerances: cfg.tolerances.clone(),
        timing: cfg.timing,
    };
    let suite = run_suite(&cfg.scenario, &options)
        .map_err(|e| ConfigError(format!("suite setup failed: {e}")))?;
    let echo = ScenarioEcho::new(&cfg.scenario);

    fs::create_dir_all(&cfg.output)
        .map_err(|e| ConfigError(format!("cannot create {}: {e}", cfg.output.display())))?;
    for outcome in &suite.outcomes {
        let path = cfg
            .output
            .join(format!("{}.{}", outcome.kind.name(), cfg.format.extension()));
        let content = match cfg.format {
            OutputFormat::Json => outcome_json(&echo, outcome),
            OutputFormat::Csv => suite_csv(&SuiteReport { outcomes: vec![outcome.clone()] }),
        };
        fs::write(&path, content)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
    }

    println!("scenario {}", cfg.scenario.id());
    println!("{:<20} {:>13} {:>10} {:>6} {:>11}", "identity", "residual", "tolerance", "result", "wall");
    let mut passed = 0;
    for outcome in &suite.outcomes {
        let residual = outcome.kind.decision_metric().pick(&outcome.report);
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        if outcome.pass {
            passed += 1;
        }
        println!(
            "{:<20} {:>13.3e} {:>10.0e} {:>6} {:>8.1} ms",
            outcome.kind.name(),
            residual,
            outcome.tolerance,
            verdict,
            outcome.real_wall_ms
        );
    }
    let total = suite.outcomes.len();
    println!(
        "suite result: {} ({passed}/{total} identities within tolerance); reports in {}",
        if suite.all_pass() { "PASS" } else { "FAIL" },
        cfg.output.display()
    );
    Ok(if suite.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_sweep(
    cfg: &RunConfig,
    identity: &str,
    axis_name: &str,
    levels: usize,
) -> Result<ExitCode, ConfigError> {
    let kind = IdentityKind::from_name(identity)
        .map_err(|_| ConfigError(format!("--identity: unknown identity \"{identity}\"")))?;
    let axis = match axis_name {
        "cutoff" => SweepAxis::Cutoff,
        "steps" => SweepAxis::Steps,
        "both" => SweepAxis::Both,
        other => return Err(ConfigError(format!("--axis: unknown axis \"{other}\""))),
    };
    if levels < 2 {
        return Err(ConfigError("--levels: need at least two refinement levels".into()));
    }

    let result = focklab_core::harness::convergence_sweep(
        &cfg.scenario,
        axis,
        levels,
        kind.decision_metric(),
        |refined| run_identity(refined, kind),
    );
    match result {
        Ok(report) => {
            fs::create_dir_all(&cfg.output)
                .map_err(|e| ConfigError(format!("cannot create {}: {e}", cfg.output.display())))?;
            let path = cfg.output.join(format!("sweep-{}-{axis_name}.csv", kind.name()));
            let mut csv = String::from("parameter,residual\n");
            println!("sweep of {} along {axis_name} ({} levels)", kind.name(), levels);
            println!("{:>12} {:>14}", "parameter", "residual");
            for point in &report.convergence {
                csv.push_str(&format!("{:.16e},{:.16e}\n", point.0, point.1));
                println!("{:>12} {:>14.3e}", point.0, point.1);
            }
            fs::write(&path, csv)
                .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
            println!("residuals decrease along the axis; data in {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::ResidualNotDecreasing { axis, series }) => {
            eprintln!(
                "sweep of {} along {axis} did not converge; residuals {:?}",
                kind.name(),
                series
            );
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(ConfigError(format!("sweep failed: {e}"))),
    }
}
