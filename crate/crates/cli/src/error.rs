use thiserror::Error;

use cornerflow::FlowError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_AUDIT: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Hypothesis(_) => EXIT_HYPOTHESIS,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io(_) => EXIT_IO,
        }
    }

    /// Sorts a core error raised while setting up or solving a scenario.
    pub fn from_flow(e: FlowError) -> Self {
        match e {
            FlowError::Parameter(_)
            | FlowError::Range { .. }
            | FlowError::Domain { .. }
            | FlowError::SubsonicInflow { .. }
            | FlowError::Convexity { .. } => CliError::Config(e.to_string()),
            FlowError::HypothesisViolation { .. } | FlowError::KappaSingular { .. } => CliError::Hypothesis(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}
