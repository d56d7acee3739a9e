//! Batch front-end: each command reads an [`config::ExperimentConfig`],
//! runs one experiment and writes a JSON report plus CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use lslab::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Numeric(#[from] LabError),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("config hash mismatch: report says {recorded}, content hashes to {actual}")]
    HashMismatch { recorded: String, actual: String },
}

impl CliError {
    /// 2 for bad input, 3 for failures while computing or writing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::HashMismatch { .. } => 2,
            CliError::Numeric(LabError::Parse { .. } | LabError::Precondition(_)) => 2,
            CliError::Numeric(_) | CliError::Output(_) => 3,
        }
    }
}
