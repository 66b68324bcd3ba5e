use sepmdp_core::Error as CoreError;
use thiserror::Error;

/// Errors surfaced by the tool, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Invalid(violations) => Self::Validation(violations.iter().map(ToString::to_string).collect()),
            other => Self::Core(other),
        }
    }
}

impl CliError {
    /// 2 validation, 3 irreducibility, 4 infeasible ε, 5 internal failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation(_) | Self::Usage(_) | Self::Io { .. } => 2,
            Self::Core(e) => match e {
                CoreError::Invalid(_) | CoreError::Dimension(_) => 2,
                CoreError::NotIrreducible
                | CoreError::ActionsNotIrreducible(_)
                | CoreError::PolicyNotIrreducible(_) => 3,
                CoreError::EpsilonOutOfRange { .. } | CoreError::AssemblyInfeasible { .. } => 4,
                CoreError::SingularSystem
                | CoreError::CompatibilityViolation { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::CapExceeded { .. }
                | CoreError::CrossCheck { .. } => 5,
            },
        }
    }
}
