use crate::optimizer::StepResult;
use crate::stepper::Trajectory;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A field did not match the grid (or another field) in size.
    #[error("size mismatch: expected {expected} cells, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    /// The requested operation is not defined for these model parameters.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// The time step fails the coercivity condition `mu * tau^(1-p) >= p`;
    /// the caller should halve `tau` and retry.
    #[error("time step too large for coercivity: tau = {tau:e}, mu = {mu:e}")]
    StepTooLarge { tau: f64, mu: f64 },

    /// The step minimizer ran out of iterations. Carries the best iterate
    /// found so far.
    #[error("step minimizer did not converge after {iters} iterations (projected gradient {residual:e})")]
    NonConverged {
        iters: usize,
        residual: f64,
        best: Box<StepResult>,
    },

    /// A trajectory could not be continued; carries the partial data.
    #[error("trajectory aborted at t = {time}: {reason}")]
    Aborted {
        time: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    /// Malformed caller input (configuration, test profiles, ...).
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
