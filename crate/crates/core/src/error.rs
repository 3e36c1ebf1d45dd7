use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("unsupported dimension {dim} for {op}")]
    UnsupportedDimension { op: &'static str, dim: usize },

    #[error("length mismatch in {op}: expected {expected}, got {got}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid grid function: {0}")]
    InvalidGrid(String),

    #[error("function is identically zero")]
    TrivialFunction,

    #[error("support profile degenerate: min/max = {ratio:e}")]
    DegenerateProfile { ratio: f64 },

    #[error("unbounded halfspace intersection: {0}")]
    Unbounded(String),

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("measure is concentrated on a closed hemisphere (min mass {min_mass:e})")]
    Hemisphere { min_mass: f64 },

    #[error("atom direction {index} missing from polytope normals")]
    MissingDirection { index: usize },

    #[error("unknown analytic family `{0}`")]
    UnknownFamily(String),

    #[error("grid captures only {captured:.6} of the mass (need 0.999)")]
    MassNotCaptured { captured: f64 },

    #[error("profile is not radially decreasing around the grid centre: {0}")]
    NotRadial(String),

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
