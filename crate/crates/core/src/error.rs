use thiserror::Error;

/// Errors produced by the modelling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "wavelength {wavelength_nm:.4} nm is outside the valid range \
         [{min_nm}, {max_nm}] nm of Sellmeier set '{set}'"
    )]
    OutOfRange {
        set: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("filter does not overlap the frequency grid: {0}")]
    EmptyFilter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("tomography data are not informationally complete; missing settings: {}", missing.join(", "))]
    RankDeficient { missing: Vec<String> },
    #[error("search failed: {reason}")]
    Search {
        reason: String,
        /// Every (argument, objective) pair evaluated before giving up.
        trace: Vec<(f64, f64)>,
    },
    #[error("dispersion registry: {0}")]
    Registry(String),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidInput(_) => "invalid_input",
            Error::NoSolution(_) => "no_solution",
            Error::Degenerate(_) => "degenerate",
            Error::EmptyFilter(_) => "empty_filter",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::InvalidState(_) => "invalid_state",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Search { .. } => "search",
            Error::Registry(_) => "registry",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
