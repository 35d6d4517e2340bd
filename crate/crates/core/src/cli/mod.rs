//! Experiment runner behind the `ladder` binary.
//!
//! Each subcommand reads a [`RunConfig`] (TOML or JSON, or the built-in
//! default), writes its tables as CSV or JSON into the output directory and
//! finishes with `manifest.json`. Failures print a JSON error record on
//! stderr, also saved as `error.json` when the output directory is usable.

pub mod commands;
pub mod config;
pub mod output;

#[cfg(test)]
mod end_to_end;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use config::{Grid, HamiltonianSpec, RunConfig, FORMAT_VERSION};
pub use output::{Format, RunManifest, RunOutput, Table};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "LADDER_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ladder", version, about = "Driven two-leg fermionic ladder experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML or JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// RG strong-coupling threshold.
    #[arg(long, global = true, value_name = "Y")]
    pub threshold: Option<f64>,
    /// RG local error tolerance.
    #[arg(long, global = true, value_name = "X")]
    pub tolerance: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Stroboscopic Rabi oscillation between two Fock states.
    Rabi,
    /// Mean leg-parity change probability for several schemes.
    Parity,
    /// Parity change inside the period against stroboscopic samples.
    Micromotion,
    /// Bosonization RG scan of the inverse correlation length.
    Rgscan,
    /// Charge gaps and the topological gap.
    Gaps,
    /// Entanglement spectrum of leg-parity ground states.
    Entspec,
    /// Single-particle correlations and the inter-leg order parameter.
    Correlations,
    /// Finite-duration pulses against their effective Hamiltonian.
    ImpurePulse,
    /// Cosine drive, Bessel couplings and the first-order correction.
    ContinuousDrive,
    /// Kitaev-chain validation suite.
    KitaevValidate,
    /// Invariant suite.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rabi => "rabi",
            Command::Parity => "parity",
            Command::Micromotion => "micromotion",
            Command::Rgscan => "rgscan",
            Command::Gaps => "gaps",
            Command::Entspec => "entspec",
            Command::Correlations => "correlations",
            Command::ImpurePulse => "impure-pulse",
            Command::ContinuousDrive => "continuous-drive",
            Command::KitaevValidate => "kitaev-validate",
            Command::Selftest => "selftest",
        }
    }
}

/// Config after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_for(cli.command),
    };
    cfg.check_experiment(cli.command)?;
    cfg.experiment = Some(cli.command.name().to_string());
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.threshold.is_some() || cli.tolerance.is_some() {
        if cli.command != Command::Rgscan {
            log::warn!("--threshold and --tolerance only affect rgscan");
        }
        let flow = cfg.flow.get_or_insert_with(Default::default);
        if let Some(y) = cli.threshold {
            flow.threshold = y;
        }
        if let Some(x) = cli.tolerance {
            flow.tolerance = x;
        }
    }
    Ok(cfg)
}

/// `--out`, then the environment override, then the config, then
/// `out/<subcommand>`.
pub fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(cli.command.name()))
}

/// Runs one subcommand and writes its outputs; returns the manifest.
pub fn execute(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| commands::run(cli.command, cfg))?;
    let outputs = output::write_tables(dir, &out.tables, cli.format)?;
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        subcommand: cli.command.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        status: if out.passed { "ok" } else { "failed_checks" }.into(),
        config: cfg.clone(),
        threads: pool.current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        summary: out.summary,
    };
    output::write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = cli.command.name();
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let dir = cli.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
            return fail(name, &e, dir.as_deref());
        }
    };
    if cli.print_config {
        return match cfg.to_toml() {
            Ok(text) => {
                print!("{text}");
                0
            }
            Err(e) => fail(name, &e, None),
        };
    }
    let dir = output_dir(&cli, &cfg);
    match execute(&cli, &cfg, &dir) {
        Ok(m) => {
            log::info!("{name}: wrote {} file(s) to {} in {:.2} s", m.outputs.len(), dir.display(), m.wall_time_s);
            println!("{}", serde_json::to_string(&m.summary).unwrap_or_default());
            if m.status == "ok" {
                0
            } else {
                eprintln!("{name}: validation checks failed, see {}", dir.join("manifest.json").display());
                1
            }
        }
        Err(e) => fail(name, &e, Some(&dir)),
    }
}

fn fail(name: &str, err: &Error, dir: Option<&Path>) -> i32 {
    let record = output::error_record(name, err);
    let text = serde_json::to_string_pretty(&record).unwrap_or_default();
    eprintln!("{text}");
    if let Some(dir) = dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
        }
    }
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ladder").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn subcommand_names_match_clap() {
        for name in [
            "rabi",
            "parity",
            "micromotion",
            "rgscan",
            "gaps",
            "entspec",
            "correlations",
            "impure-pulse",
            "continuous-drive",
            "kitaev-validate",
            "selftest",
        ] {
            assert_eq!(parse(&[name]).command.name(), name);
        }
    }

    #[test]
    fn flags_override_flow() {
        let cli = parse(&["rgscan", "--threshold", "5", "--tolerance", "1e-8", "--threads", "2"]);
        let cfg = resolve_config(&cli).unwrap();
        let flow = cfg.flow.unwrap();
        assert_eq!(flow.threshold, 5.0);
        assert_eq!(flow.tolerance, 1e-8);
        assert_eq!(cfg.threads, Some(2));
    }

    #[test]
    fn out_flag_wins() {
        let cli = parse(&["selftest", "--out", "/tmp/x"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(output_dir(&cli, &cfg), PathBuf::from("/tmp/x"));
    }
}
