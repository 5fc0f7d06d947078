use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("resolution level {level} needs {expected} samples, got {actual}")]
    LengthMismatch {
        level: u32,
        expected: usize,
        actual: usize,
    },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("resolution level {0} is outside 1..=28")]
    BadResolution(u32),
    #[error("level {level} is outside the resolvable range {min}..={max}")]
    LevelOutOfRange { level: u32, min: u32, max: u32 },
    #[error("interval [{a}, {b}] is not a valid subinterval of [0, 1]")]
    BadInterval { a: f64, b: f64 },
    #[error("level {level} has no cell whose parent lies in [{a}, {b}]")]
    EmptyLevel { level: u32, a: f64, b: f64 },
    #[error("exponents alpha = {alpha}, beta = {beta} must be positive with alpha + beta < 1")]
    BadExponents { alpha: f64, beta: f64 },
    #[error("resolution level {have} is too coarse, at least {need} is required")]
    ResolutionTooCoarse { need: u32, have: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("quadrature on [{a}, {b}] exceeded {max_splits} bisections")]
    QuadratureFailure { a: f64, b: f64, max_splits: usize },
    #[error("integrand is not finite at t = {t}, x = {x}")]
    NonFiniteIntegrand { t: f64, x: f64 },
    #[error("field does not provide its t-partial derivative")]
    MissingDerivative,
    #[error("field does not declare its Hölder constants")]
    MissingConstants,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("window [{start}, {end}] reached the minimum width without contracting")]
    WindowUnderflow { start: f64, end: f64 },
    #[error("Picard iterate is not finite on window [{start}, {end}]")]
    NonFiniteIterate { start: f64, end: f64 },
}
