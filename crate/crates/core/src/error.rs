//! Error type shared by every fallible operation in the crate.

use thiserror::Error;

/// Errors produced by model construction, solvers, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A slice or matrix had the wrong length for the operation.
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A value violated a constructor or argument invariant.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// An operation hit a point where the math degenerates (division by a
    /// vanishing rate, derivative of `x^beta` at `x = 0` with `beta < 1`, ...).
    #[error("singular {what}: {detail}")]
    Singular { what: &'static str, detail: String },

    /// A distribution left the support of the reference distribution, so a
    /// divergence or storage value is undefined.
    #[error("support violation: {detail}")]
    Domain { detail: String },

    /// No nonnegative population profile sustains the requested growth at the
    /// given task state (the stationary-population system `F(q, y) = w` has no
    /// solution `y >= 0`).
    #[error("no nonnegative stationary population sustains the growth rate (residual {residual:.3e})")]
    StationaryInfeasible { residual: f64 },

    /// No population state in the simplex can hold every task stationary, so
    /// the equilibrium optimizer has nothing to optimize over.
    #[error("game infeasible: {detail}")]
    GameInfeasible { detail: String },

    /// The payoff-design program has no matrix with a positive margin.
    /// `worst_samples` lists the sample indices pinning the margin down.
    #[error("payoff design infeasible: best margin {margin:.3e} (tight samples: {worst_samples:?})")]
    DesignInfeasible {
        margin: f64,
        worst_samples: Vec<usize>,
    },

    /// The requested combination of family, structure, or parameters is
    /// outside what the designer or solver supports.
    #[error("unsupported: {detail}")]
    Unsupported { detail: String },

    /// The rejection sampler ran out of redraws before collecting the
    /// requested number of feasible samples.
    #[error("sampler exhausted its redraw budget ({attempts} draws for {wanted} samples)")]
    SamplerBudget { attempts: usize, wanted: usize },

    /// The integrator produced a state outside its validity envelope
    /// (negative mass beyond clamping tolerance, non-finite values, ...).
    #[error("integration unstable at t = {t}: {detail}")]
    Unstable { t: f64, detail: String },

    /// The task state grew past the divergence guard.
    #[error("state unbounded at t = {t}: max |q_i| = {norm:.3e}")]
    Unbounded { t: f64, norm: f64 },
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Shorthand for an [`Error::Invalid`] with a formatted detail string.
    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}
