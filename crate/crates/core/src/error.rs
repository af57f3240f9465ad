use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("resonators {first} and {second} share alpha = {value} (relative tolerance 1e-12)")]
    DuplicateAlpha {
        first: usize,
        second: usize,
        value: f64,
    },

    #[error("F(lambda) evaluated at its pole alpha_{index} = {lambda}")]
    PoleEvaluation { index: usize, lambda: f64 },

    #[error("no sign change of F on bracket {index} ({lo}, {hi})")]
    RootNotBracketed { index: usize, lo: f64, hi: f64 },

    #[error("targets violate interlacing at index {index}: {detail}")]
    Interlacing { index: usize, detail: String },

    #[error("volume ratio rho_{index} = {value} is not positive")]
    NonPositiveRho { index: usize, value: f64 },

    #[error("singular linear system for the volume ratios")]
    SingularSystem,

    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),

    #[error(
        "gamma too large: resonator {index} has clearance d = {clearance} but passage constant eta = {eta}"
    )]
    GammaTooLarge {
        index: usize,
        clearance: f64,
        eta: f64,
    },

    #[error("roundtrip mismatch at {quantity}_{index}: relative deviation {deviation:e}")]
    RoundtripMismatch {
        quantity: &'static str,
        index: usize,
        deviation: f64,
    },

    #[error("passage {index} is {cells:.3} cells wide, at least 3 are required")]
    UnresolvedPassage { index: usize, cells: f64 },

    #[error("passage {index} width {width} exceeds its clearance {clearance}")]
    PassageExceedsClearance {
        index: usize,
        width: f64,
        clearance: f64,
    },

    #[error("fluid region has {components} connected components")]
    DisconnectedFluid { components: usize },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        partial: Vec<f64>,
    },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("min-max bracketing violated at theta = ({theta_x}, {theta_y}), k = {k}: {detail}")]
    Bracketing {
        theta_x: f64,
        theta_y: f64,
        k: usize,
        detail: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::DuplicateAlpha { .. }
            | Error::PoleEvaluation { .. }
            | Error::Interlacing { .. }
            | Error::UnresolvedPassage { .. }
            | Error::PassageExceedsClearance { .. }
            | Error::DisconnectedFluid { .. }
            | Error::Json(_) => 2,
            Error::InfeasibleLayout(_) | Error::GammaTooLarge { .. } => 3,
            Error::NoConvergence { .. } | Error::Factorization(_) => 4,
            Error::RootNotBracketed { .. }
            | Error::NonPositiveRho { .. }
            | Error::SingularSystem
            | Error::RoundtripMismatch { .. }
            | Error::Bracketing { .. } => 5,
            Error::Csv(_) | Error::Io(_) => 1,
        }
    }
}
