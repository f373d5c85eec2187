//! CLI error type and the exit-code contract.
//!
//! Exit codes: 0 success, 1 generic runtime failure, 2 infeasible game or
//! payoff design, 3 configuration/input error, 4 integration instability,
//! 5 verification failure.

use taskgame::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid configuration or input file.
    #[error("configuration error: {0}")]
    Config(String),
    /// The game has no feasible equilibrium or no payoff matrix with a
    /// positive margin exists.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The integrator left its validity envelope.
    #[error("integration failed: {0}")]
    Unstable(String),
    /// A requested certification did not hold.
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    /// Anything else (i/o, exhausted sampler budgets, internal numerics).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Config(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::VerifyFailed(_) => 5,
        }
    }

    /// Wraps a core error raised while building model objects from the
    /// configuration; everything at that stage is the configuration's fault.
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }

    /// Maps core errors from equilibrium search and payoff design:
    /// infeasibility keeps its own exit code, argument problems are
    /// configuration errors, the rest is generic.
    pub fn design_stage(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::DesignInfeasible { .. }
            | CoreError::GameInfeasible { .. }
            | CoreError::StationaryInfeasible { .. } => CliError::Infeasible(msg),
            CoreError::Dimension { .. } | CoreError::Invalid { .. } | CoreError::Unsupported { .. } => {
                CliError::Config(msg)
            }
            _ => CliError::Runtime(msg),
        }
    }

    /// Maps core errors from trajectory integration: blow-ups keep their own
    /// exit code; dimension/domain problems trace back to the configuration
    /// (e.g. recording energy from a zero task level).
    pub fn simulate_stage(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Unstable { .. } | CoreError::Unbounded { .. } => CliError::Unstable(msg),
            CoreError::Dimension { .. }
            | CoreError::Invalid { .. }
            | CoreError::Domain { .. }
            | CoreError::Singular { .. } => CliError::Config(msg),
            _ => CliError::Runtime(msg),
        }
    }
}
