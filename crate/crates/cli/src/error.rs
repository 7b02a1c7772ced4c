use thiserror::Error;

use chaintrial_core::Error as CoreError;
use chaintrial_optics::OpticsError;
use chaintrial_scenarios::ScenarioError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}, column {column}: {message}")]
    Config {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Optics(#[from] OpticsError),

    #[error("invariant breached: {}", .0.join("; "))]
    Invariant(Vec<String>),

    #[error("failed criteria: {}", .0.join(", "))]
    CriteriaFailed(Vec<String>),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn core_is_numerical(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::NotHermitian(_)
            | CoreError::NullEvent { .. }
            | CoreError::ConditioningOnNull(_)
            | CoreError::ResampleExhausted(_)
            | CoreError::MissingTime(_)
    )
}

impl CliError {
    /// 2 for bad input, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::Core(e) | CliError::Scenario(ScenarioError::Core(e)) => {
                if core_is_numerical(e) {
                    EXIT_NUMERICAL
                } else {
                    EXIT_VALIDATION
                }
            }
            CliError::Scenario(_) | CliError::Optics(_) => EXIT_VALIDATION,
            CliError::Invariant(_) | CliError::CriteriaFailed(_) => EXIT_NUMERICAL,
        }
    }
}
