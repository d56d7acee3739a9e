use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lslab_cli::commands::run;
use lslab_cli::config::{canonicalize, load, preset, Command, ExperimentConfig};
use lslab_cli::output::write_atomic;
use lslab_cli::CliError;

/// Reproducible experiments on boundary symbols, beam spectra and null control.
///
/// Exit status: 0 success, 1 check not passed, 2 bad input, 3 numeric failure.
#[derive(Parser)]
#[command(name = "lslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample a boundary pair on the quartic sphere.
    LsCheck {
        #[command(flatten)]
        common: Common,
        /// Succeed only when the pair is not certified.
        #[arg(long)]
        expect_violation: bool,
    },
    /// Sweep the weight parameter at one frequency.
    Conjugate(Common),
    /// Eigenvalues of the discrete beam operator.
    Eigs(Common),
    /// Observability constants over a window.
    Probe(Common),
    /// Staged null control of the beam heat equation.
    Control(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long)]
    preset: Option<String>,
    /// Grid size, sphere samples (ls-check) or weight steps (conjugate).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn resolve(command: Command, common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => load(path)?,
        (None, Some(name)) => preset(command, name)?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.n {
        match command {
            Command::LsCheck => cfg.ls_check.samples = n,
            Command::Conjugate => cfg.conjugate.tau_steps = n,
            Command::Eigs => cfg.eigs.grid.n = n,
            Command::Probe => cfg.probe.grid.n = n,
            Command::Control => cfg.control.grid.n = n,
        }
    }
    canonicalize(&mut cfg)?;
    Ok(cfg)
}

fn execute(command: Command, common: &Common, expect_violation: bool) -> Result<u8, CliError> {
    let cfg = resolve(command, common)?;
    let outcome = run(command, &cfg, expect_violation)?;
    let out: &Path = &common.out;
    fs::create_dir_all(out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
    for (name, contents) in &outcome.files {
        write_atomic(&out.join(name), contents)?;
    }
    println!("{}", outcome.summary);
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, expect) = match &cli.command {
        Sub::LsCheck { common, expect_violation } => (Command::LsCheck, common, *expect_violation),
        Sub::Conjugate(c) => (Command::Conjugate, c, false),
        Sub::Eigs(c) => (Command::Eigs, c, false),
        Sub::Probe(c) => (Command::Probe, c, false),
        Sub::Control(c) => (Command::Control, c, false),
    };
    match execute(command, common, expect) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("lslab {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
