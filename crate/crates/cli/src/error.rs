use std::path::Path;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Symbol(#[from] latdisp::symbol::SymbolError),
    #[error(transparent)]
    Quadrature(#[from] latdisp::oscillatory::QuadratureError),
    #[error(transparent)]
    Decay(#[from] latdisp::decay::DecayError),
    #[error(transparent)]
    Newton(#[from] latdisp::newton::NewtonError),
    #[error(transparent)]
    Nls(#[from] latdisp::nls::NlsError),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Symbol(_) => "symbol",
            CliError::Quadrature(_) => "quadrature",
            CliError::Decay(_) => "decay",
            CliError::Newton(_) => "newton",
            CliError::Nls(_) => "nls",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}
