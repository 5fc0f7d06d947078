use roughpath_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: t = {t} is not the grid point {expected}")]
    NonDyadicGrid { row: usize, t: f64, expected: f64 },
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize)]
pub struct ErrorPayload {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Schema(_) => "schema_error",
            CliError::NonDyadicGrid { .. } => "non_dyadic_grid",
            CliError::Core(e) => core_kind(e),
            CliError::NotConverged(_) => "not_converged",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }

    /// 3 for numerical failures, 2 for everything the caller can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged(_) => 3,
            CliError::Core(e) if is_numerical(e) => 3,
            _ => 2,
        }
    }

    pub fn payload(&self) -> ErrorPayload {
        ErrorPayload {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

fn is_numerical(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::QuadratureFailure { .. }
            | CoreError::NonFiniteIntegrand { .. }
            | CoreError::WindowUnderflow { .. }
            | CoreError::NonFiniteIterate { .. }
    )
}

fn core_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::LengthMismatch { .. } => "length_mismatch",
        CoreError::NonFinite { .. } => "non_finite",
        CoreError::BadResolution(_) => "bad_resolution",
        CoreError::LevelOutOfRange { .. } => "level_out_of_range",
        CoreError::BadInterval { .. } => "bad_interval",
        CoreError::EmptyLevel { .. } => "empty_level",
        CoreError::BadExponents { .. } => "bad_exponents",
        CoreError::ResolutionTooCoarse { .. } => "resolution_too_coarse",
        CoreError::InvalidParameter(_) => "invalid_parameter",
        CoreError::QuadratureFailure { .. } => "quadrature_failure",
        CoreError::NonFiniteIntegrand { .. } => "non_finite_integrand",
        CoreError::MissingDerivative => "missing_derivative",
        CoreError::MissingConstants => "missing_constants",
        CoreError::DimensionMismatch(_) => "dimension_mismatch",
        CoreError::WindowUnderflow { .. } => "window_underflow",
        CoreError::NonFiniteIterate { .. } => "non_finite_iterate",
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
