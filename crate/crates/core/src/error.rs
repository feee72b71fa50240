use thiserror::Error;

/// Errors raised by the model maps and the analyses built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("orbit escaped the section at ({x}, {y})")]
    Escaped { x: f64, y: f64 },

    #[error("invalid winding index {0} (must be >= 1)")]
    InvalidIndex(i64),

    #[error("point is not a fixed point (residual {residual:e})")]
    NotAFixedPoint { residual: f64 },

    #[error("no sink window: det = {det} >= 1")]
    WindowEmpty { det: f64 },

    #[error("complex eigenvalues; focus exponent {exponent}")]
    ComplexEigenvalues { exponent: f64 },

    #[error("winding index {ell} has no real-eigenvalue fixed point at this lambda")]
    RangeInvalid { ell: u32 },

    #[error("orbit terminated at step {step}")]
    OrbitTerminated { step: usize },

    #[error("closed-form threshold {name} disagrees with bisection ({closed} vs {bisected})")]
    ThresholdVerification {
        name: &'static str,
        closed: f64,
        bisected: f64,
    },

    #[error("no strip fits inside the rectangle for the requested range")]
    EmptyRange,

    #[error("strip sampling too coarse: image jump {jump} exceeds rectangle width {width}")]
    SamplingTooCoarse { jump: f64, width: f64 },

    #[error("grid too coarse near x = {x}")]
    GridTooCoarse { x: f64 },

    #[error("no coalescing root pair inside the lambda bracket")]
    NoCoalescenceInBracket,

    #[error("cell diameter {diameter} exceeds epsilon/2 = {half_epsilon}")]
    ResolutionTooCoarse { diameter: f64, half_epsilon: f64 },

    #[error("seed set is empty")]
    EmptySeed,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
