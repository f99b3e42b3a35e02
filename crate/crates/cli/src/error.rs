use std::fmt::Debug;

use brwre_core::{LimitError, ModelError, SimError, StatsError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{message}")]
    Runtime { kind: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Runtime { kind, .. } => kind,
            CliError::Io(_) => "IoError",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        let record = ErrorRecord { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&record).expect("plain record")
    }

    pub fn runtime(kind: &str, message: impl Into<String>) -> Self {
        CliError::Runtime { kind: kind.into(), message: message.into() }
    }
}

/// Name of the enum variant, from its `Debug` form.
fn variant<T: Debug>(value: &T) -> String {
    let text = format!("{value:?}");
    let end = text.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(text.len());
    text[..end].to_string()
}

fn model_kind(e: &ModelError) -> String {
    variant(e)
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let kind = match &e {
            SimError::Model(m) => model_kind(m),
            other => variant(other),
        };
        CliError::Runtime { kind, message: e.to_string() }
    }
}

impl From<LimitError> for CliError {
    fn from(e: LimitError) -> Self {
        let kind = match &e {
            LimitError::Model(m) => model_kind(m),
            other => variant(other),
        };
        CliError::Runtime { kind, message: e.to_string() }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Runtime { kind: variant(&e), message: e.to_string() }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::runtime("IoError", e.to_string())
    }
}
