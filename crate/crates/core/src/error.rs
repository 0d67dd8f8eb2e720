use thiserror::Error;

/// Failure modes of the geometric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("not strongly convex: {0}")]
    NotStronglyConvex(String),
    #[error("norm evaluation failed")]
    NormEvaluationFailed,
    #[error("strong convexity violated at y = {y:?}")]
    ConvexityViolated { y: Vec<f64> },
    #[error("vector too short for tensor operations (|y| = {norm:e})")]
    DegenerateVector { norm: f64 },
    #[error("jet evaluation unavailable for {0}")]
    JetUnavailable(&'static str),
    #[error("flow left chart at t = {t}")]
    FlowLeftChart { t: f64 },
    #[error("flow integration failed: {0}")]
    FlowIntegrationFailed(String),
    #[error("indicatrix unbounded")]
    IndicatrixUnbounded,
    #[error("navigation undefined: F(x,-V(x)) >= 1 (value {value})")]
    NavigationUndefined { value: f64 },
    #[error("navigation root not found")]
    NavigationRootNotFound,
    #[error("insufficient stencil room at x = {x:?}")]
    InsufficientStencil { x: Vec<f64> },
    #[error("degenerate flag (denominator {denominator:e})")]
    DegenerateFlag { denominator: f64 },
    #[error("S-curvature requires deterministic density")]
    NoisyDensity,
    #[error("extend base geodesic: warped time {needed} outside [{start}, {end}]")]
    ExtendBaseGeodesic { needed: f64, start: f64, end: f64 },
    #[error("time {t} outside span [{start}, {end}]")]
    TimeOutsideSpan { t: f64, start: f64, end: f64 },
    #[error("ODE integration failed: {0}")]
    IntegrationFailed(String),
    #[error("geodesic speed drifted by {drift:e} (tolerance {tolerance:e})")]
    SpeedDrift { drift: f64, tolerance: f64 },
    #[error("Legendre solve failed (residual {residual:e})")]
    LegendreSolveFailed { residual: f64 },
    #[error("function is not transnormal within tolerance (spread {spread:e})")]
    NotTransnormal { spread: f64 },
    #[error("outside correspondence neighborhood")]
    OutsideCorrespondence,
    #[error("field is not homothetic within tolerance (residual {residual:e})")]
    NotHomothetic { residual: f64 },
    #[error("declared dilation {declared} does not match measured {measured}")]
    DilationMismatch { declared: f64, measured: f64 },
    #[error("regular function expected: |df| = {norm:e} at x = {x:?}")]
    CriticalPoint { norm: f64, x: Vec<f64> },
    #[error("level {level} could not be sampled: {reason}")]
    LevelSampling { level: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

pub(crate) fn to_f64s<T: crate::Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.approx()).collect()
}
