use thiserror::Error;

use crate::hermite::CensorWindow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("Hermite degree {degree} exceeds the configured maximum {max}; check ell and j_max")]
    Capacity { degree: usize, max: usize },

    #[error("basis matrix is numerically singular for ell={ell} on window {window} ({reason})")]
    IllConditioned {
        ell: usize,
        window: CensorWindow,
        reason: String,
    },

    #[error("window {window} captures probability mass {alpha:e}; estimation is impossible")]
    DegenerateWindow { window: CensorWindow, alpha: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("moment vector of order {got} is too short; need at least {needed}")]
    Arity { needed: usize, got: usize },

    #[error("moment projection did not converge after {iterations} iterations (infeasibility {infeasibility:e})")]
    NonConvergence {
        iterations: usize,
        last_iterate: Vec<f64>,
        infeasibility: f64,
    },

    #[error("leading coefficient {leading:e} of the moment polynomial is degenerate; fewer than k distinguishable atoms")]
    DegenerateDeterminant { leading: f64 },

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid window [{lower}, {upper}]")]
    InvalidWindow { lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample file: {0}")]
    Parse(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the pipeline stage at which an error surfaced.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Errors caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::IllConditioned { .. }
            | Error::NonConvergence { .. }
            | Error::DegenerateDeterminant { .. }
            | Error::DegenerateSupport(_)
            | Error::DegenerateWindow { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
