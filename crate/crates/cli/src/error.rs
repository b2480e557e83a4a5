use std::path::Path;

use tkgforge::cluster::ClusterError;
use tkgforge::describe::{BackendError, DescribeError};
use tkgforge::generator::GeneratorError;
use tkgforge::metrics::MetricsError;
use tkgforge::rules::RuleError;
use tkgforge::schema::SchemaError;
use tkgforge::tkg::TkgError;

/// Failure of one run, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Backend(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<TkgError> for CliError {
    fn from(e: TkgError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RuleError> for CliError {
    fn from(e: RuleError) -> Self {
        match e {
            RuleError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Config(_) | GeneratorError::InvalidRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<DescribeError> for CliError {
    fn from(e: DescribeError) -> Self {
        match e {
            DescribeError::Config(_) => CliError::Config(e.to_string()),
            DescribeError::Backend(b) => b.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::NoResamples => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
