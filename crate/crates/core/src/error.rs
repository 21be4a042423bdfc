use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kinetic model: {0}")]
    InvalidKinetic(String),

    #[error("invalid supply field: {0}")]
    InvalidSupply(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("scheme failure: {0}")]
    SchemeFailure(String),

    /// `half_width` is `None` when the solvability set is empty.
    #[error("P = {p} is outside the solvability set ({})", describe_half_width(*.half_width))]
    NotSolvable { p: f64, half_width: Option<f64> },

    #[error("CFL number {cfl} outside (0, 1]")]
    Cfl { cfl: f64 },

    #[error("grid under-resolves the oscillation: {cells} cells per period, need at least {required}")]
    UnderResolved { cells: f64, required: usize },

    #[error("homogenization assumptions not met: {0}")]
    AssumptionRefused(String),

    #[error("gradient {gradient:.4} left the effective table range (radius {radius:.4})")]
    OutOfTable { gradient: f64, radius: f64 },
}

fn describe_half_width(w: Option<f64>) -> String {
    match w {
        None => "D is empty".to_string(),
        Some(w) => format!("D = (-{w}, {w})"),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
