use qsde_core::model::ValidationReport;
use qsde_core::Error as CoreError;
use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or an unreadable or malformed model file: exit 2.
    #[error("error: {0}")]
    Usage(String),
    /// A well-formed request whose numerics fail: exit 1.
    #[error("failed: {message}")]
    Domain { message: String, report: Option<Box<ValidationReport>> },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain { message: msg.into(), report: None }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain { .. } => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InsufficientData(_)
            | CoreError::InvalidArgument(_)
            | CoreError::ChannelMismatch { .. }
            | CoreError::DimensionMismatch(_)
            | CoreError::NonFinite
            | CoreError::NegativeTime(_)
            | CoreError::DomainMismatch(_) => CliError::Usage(e.to_string()),
            CoreError::PreconditionFailed(report) => CliError::Domain {
                message: format!("preconditions failed: {}", report.failing_names().join(", ")),
                report: Some(report),
            },
            other => CliError::domain(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
