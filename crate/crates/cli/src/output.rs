//! Report envelope, CSV formatting and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{config_hash, section, Command, ExperimentConfig};
use crate::CliError;

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    if x == 0.0 || (x.is_finite() && (1e-4..1e15).contains(&x.abs())) {
        format!("{x}")
    } else if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width differs from header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// What every JSON report carries besides the command's own result.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub result: &'a T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: Command, cfg: &ExperimentConfig, result: &'a T) -> Self {
        Self {
            command: command.name(),
            config_hash: config_hash(command, cfg),
            seed: cfg.seed,
            config: section(command, cfg),
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn command_by_name(name: &str) -> Option<Command> {
    [Command::LsCheck, Command::Conjugate, Command::Eigs, Command::Probe, Command::Control]
        .into_iter()
        .find(|c| c.name() == name)
}

/// Recomputes the hash of the configuration embedded in a report and
/// compares it with the recorded one.
pub fn verify_report(json: &str) -> Result<(), CliError> {
    let doc: serde_json::Value = serde_json::from_str(json).map_err(|e| CliError::Input(format!("report: {e}")))?;
    let field = |k: &str| doc.get(k).ok_or_else(|| CliError::Input(format!("report lacks `{k}`")));
    let name = field("command")?.as_str().unwrap_or_default();
    let command = command_by_name(name).ok_or_else(|| CliError::Input(format!("unknown command `{name}`")))?;
    let recorded = field("config_hash")?.as_str().unwrap_or_default().to_string();
    let seed = field("seed")?.as_u64().ok_or_else(|| CliError::Input("seed is not a natural number".into()))?;
    // Rebuild through the typed config so defaults and field order match.
    let mut table = serde_json::Map::new();
    table.insert("seed".into(), seed.into());
    table.insert(section_key(command).into(), field("config")?.clone());
    let cfg: ExperimentConfig = serde_json::from_value(serde_json::Value::Object(table))
        .map_err(|e| CliError::Input(format!("embedded config: {e}")))?;
    let actual = config_hash(command, &cfg);
    if actual == recorded {
        Ok(())
    } else {
        Err(CliError::HashMismatch { recorded, actual })
    }
}

fn section_key(command: Command) -> &'static str {
    match command {
        Command::LsCheck => "ls_check",
        Command::Conjugate => "conjugate",
        Command::Eigs => "eigs",
        Command::Probe => "probe",
        Command::Control => "control",
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::Output(format!("bad output path {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents.as_bytes()).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}
