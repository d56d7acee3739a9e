//! Experiment configuration: TOML schema, presets and the config hash.
//!
//! A file holds a top-level `seed` and one table per command. Every table
//! and field is optional and falls back to the defaults below.
//!
//! ```toml
//! seed = 11
//!
//! [ls_check]
//! mode = "augmented"          # or "static"
//! samples = 4096
//! threshold = 1e-6
//! [ls_check.pair]
//! preset = "obs-alpha=-2"     # or b1/b2 inline text, or b1_file/b2_file
//!
//! [control]
//! window = [0.0, 0.3141592653589793]
//! horizon = 1.0
//! [control.grid]
//! n = 64
//! left = "hinged"
//! right = "hinged"
//! ```

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use lslab::biharmonic::BcKind;
use lslab::symbol::presets::{clamped_pair, free_pair, hinged_pair, neumann_pair, observation_pair};
use lslab::symbol::{format_symbol, parse_symbol, BoundarySymbol};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    LsCheck,
    Conjugate,
    Eigs,
    Probe,
    Control,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LsCheck => "ls-check",
            Command::Conjugate => "conjugate",
            Command::Eigs => "eigs",
            Command::Probe => "probe",
            Command::Control => "control",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub ls_check: LsCheckConfig,
    pub conjugate: ConjugateConfig,
    pub eigs: EigsConfig,
    pub probe: ProbeConfig,
    pub control: ControlConfig,
}

/// A boundary pair: a named preset, or two symbols in the text format,
/// inline or from files. Files are read once and stored inline so that the
/// hash covers their content. The `clamped` default applies only when the
/// table is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2_file: Option<String>,
    /// Tangential dimension for presets.
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl Default for PairConfig {
    fn default() -> Self {
        Self::preset("clamped")
    }
}

impl PairConfig {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.to_string()), b1: None, b2: None, b1_file: None, b2_file: None, dim: 1 }
    }

    fn inline_files(&mut self, base: &Path) -> Result<(), CliError> {
        for (file, text) in [(&mut self.b1_file, &mut self.b1), (&mut self.b2_file, &mut self.b2)] {
            if let Some(path) = file.take() {
                if text.is_some() {
                    return Err(CliError::Input("give a symbol inline or as a file, not both".into()));
                }
                let path = base.join(path);
                let content = fs::read_to_string(&path)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                *text = Some(content);
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<(BoundarySymbol, BoundarySymbol), CliError> {
        match (&self.preset, &self.b1, &self.b2) {
            (Some(name), None, None) => pair_preset(name, self.dim),
            (None, Some(b1), Some(b2)) => {
                let b1 = parse_symbol(b1).map_err(|e| CliError::Input(format!("b1: {e}")))?;
                let b2 = parse_symbol(b2).map_err(|e| CliError::Input(format!("b2: {e}")))?;
                if b1.dim() != b2.dim() {
                    return Err(CliError::Input("b1 and b2 have different dimensions".into()));
                }
                Ok((b1, b2))
            }
            _ => Err(CliError::Input("a pair needs either `preset` or both `b1` and `b2`".into())),
        }
    }
}

/// `clamped`, `hinged`, `neumann`, `free-type` and `obs-alpha=<value>`.
pub fn pair_preset(name: &str, dim: usize) -> Result<(BoundarySymbol, BoundarySymbol), CliError> {
    if dim == 0 {
        return Err(CliError::Input("pair dimension must be at least 1".into()));
    }
    Ok(match name {
        "clamped" => clamped_pair(dim),
        "hinged" => hinged_pair(dim),
        "neumann" => neumann_pair(dim),
        "free-type" => free_pair(dim),
        _ => match name.strip_prefix("obs-alpha=") {
            Some(v) => {
                let alpha: f64 = v.parse().map_err(|_| CliError::Input(format!("bad alpha in preset `{name}`")))?;
                if !alpha.is_finite() {
                    return Err(CliError::Input(format!("bad alpha in preset `{name}`")));
                }
                observation_pair(alpha, dim)
            }
            None => return Err(CliError::Input(format!("unknown pair preset `{name}`"))),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Augmented,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsCheckConfig {
    pub pair: PairConfig,
    pub mode: ScanMode,
    pub samples: usize,
    pub threshold: f64,
    /// Direction of `ξ′`; the first axis when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    pub write_csv: bool,
}

impl Default for LsCheckConfig {
    fn default() -> Self {
        Self {
            pair: PairConfig::default(),
            mode: ScanMode::Augmented,
            samples: 4096,
            threshold: lslab::ls::DEFAULT_THRESHOLD,
            direction: None,
            write_csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugateConfig {
    pub pair: PairConfig,
    pub sigma: f64,
    pub xi_prime: Vec<f64>,
    pub phi_s: f64,
    pub phi_xp: Vec<f64>,
    pub phi_d: f64,
    pub tau_max: f64,
    /// Number of `τ` values, `0..=tau_max` inclusive.
    pub tau_steps: usize,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        Self {
            pair: PairConfig::default(),
            sigma: 0.5,
            xi_prime: vec![1.0],
            phi_s: 0.2,
            phi_xp: vec![0.1],
            phi_d: 1.0,
            tau_max: 4.0,
            tau_steps: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
    pub left: BcKind,
    pub right: BcKind,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 200, length: PI, left: BcKind::Hinged, right: BcKind::Hinged }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    pub grid: GridConfig,
    /// Rows in the CSV; all eigenvalues when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Also write the first `count` eigenvectors, one row per grid node.
    pub vectors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub grid: GridConfig,
    /// Observation interval `[a, b]` in domain coordinates.
    pub window: [f64; 2],
    /// Thresholds are the first `modes` eigenvalues.
    pub modes: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { grid: GridConfig::default(), window: [0.0, 0.1 * PI], modes: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub grid: GridConfig,
    pub window: [f64; 2],
    pub horizon: f64,
    /// Cutoff of the first stage; later stages multiply it by 16.
    pub base: f64,
    pub control_fraction: f64,
    pub samples: usize,
    /// Substeps per stored sample when re-simulating; 0 skips it.
    pub refinement: usize,
    /// Start from this single mode (1-based) instead of a seeded random
    /// unit state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_mode: Option<usize>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { n: 64, ..GridConfig::default() },
            window: [0.0, 0.1 * PI],
            horizon: 1.0,
            base: 1.0,
            control_fraction: 0.5,
            samples: lslab::control::DEFAULT_SAMPLES,
            refinement: 10,
            initial_mode: None,
        }
    }
}

/// Presets by command. Pair presets work for `ls-check` and `conjugate`.
pub fn preset(command: Command, name: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    match command {
        Command::LsCheck => {
            pair_preset(name, 1)?;
            cfg.ls_check.pair = PairConfig::preset(name);
        }
        Command::Conjugate => {
            pair_preset(name, 1)?;
            cfg.conjugate.pair = PairConfig::preset(name);
            if name.starts_with("obs-alpha=") {
                // On the augmented zero for α = −2 when τ = 0.
                cfg.conjugate.sigma = 0.75f64.powf(0.25);
                cfg.conjugate.xi_prime = vec![0.25f64.powf(0.25)];
            }
        }
        Command::Eigs => match name {
            "hinged-pi" => {}
            "clamped-unit" => {
                cfg.eigs.grid = GridConfig { n: 400, length: 1.0, left: BcKind::Clamped, right: BcKind::Clamped }
            }
            "free-unit" => cfg.eigs.grid = GridConfig { n: 400, length: 1.0, left: BcKind::Free, right: BcKind::Free },
            _ => return Err(unknown(command, name)),
        },
        Command::Probe => match name {
            "sweep" => {}
            "short-window" => {
                cfg.probe.grid.n = 400;
                cfg.probe.window = [0.0, 0.3];
                cfg.probe.modes = 5;
            }
            "full-window" => cfg.probe.window = [0.0, PI],
            _ => return Err(unknown(command, name)),
        },
        Command::Control => match name {
            "beam64" => {}
            "beam32" => cfg.control.grid.n = 32,
            _ => return Err(unknown(command, name)),
        },
    }
    Ok(cfg)
}

fn unknown(command: Command, name: &str) -> CliError {
    CliError::Input(format!("unknown {} preset `{name}`", command.name()))
}

/// Parses a config file; symbol files are resolved relative to its directory.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.ls_check.pair.inline_files(base)?;
    cfg.conjugate.pair.inline_files(base)?;
    Ok(cfg)
}

/// Rewrites inline symbols in canonical form so equivalent spellings hash
/// alike.
pub fn canonicalize(cfg: &mut ExperimentConfig) -> Result<(), CliError> {
    for pair in [&mut cfg.ls_check.pair, &mut cfg.conjugate.pair] {
        if pair.preset.is_none() {
            let (b1, b2) = pair.build()?;
            pair.b1 = Some(format_symbol(&b1));
            pair.b2 = Some(format_symbol(&b2));
        }
    }
    Ok(())
}

/// Hex SHA-256 of the JSON form of the command's section and the seed.
pub fn config_hash(command: Command, cfg: &ExperimentConfig) -> String {
    let section = section(command, cfg);
    let doc = serde_json::json!({ "command": command.name(), "seed": cfg.seed, "config": section });
    let bytes = serde_json::to_vec(&doc).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

/// The part of the configuration a command reads.
pub fn section(command: Command, cfg: &ExperimentConfig) -> serde_json::Value {
    let value = match command {
        Command::LsCheck => serde_json::to_value(&cfg.ls_check),
        Command::Conjugate => serde_json::to_value(&cfg.conjugate),
        Command::Eigs => serde_json::to_value(&cfg.eigs),
        Command::Probe => serde_json::to_value(&cfg.probe),
        Command::Control => serde_json::to_value(&cfg.control),
    };
    value.expect("config serializes")
}
