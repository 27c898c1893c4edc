use thiserror::Error;

/// Errors raised by the analytic layers, samplers and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("assumption IV violated at rho = {rho}: {inequality} has slack {slack:.3e}")]
    AssumptionIv {
        inequality: &'static str,
        rho: f64,
        slack: f64,
    },

    #[error("empty feasible set: {0}")]
    EmptyFeasible(String),

    #[error("optimizer did not converge after {iters} iterations (best psi = {best_value})")]
    NonConvergence { iters: usize, best_value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
