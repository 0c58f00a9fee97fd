use crate::Vec3;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures across the synthesis and verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lambda must be nonzero and finite (got {0}); irrotational fields carry no periodic stream lines")]
    InvalidLambda(f64),

    #[error("curve is not embedded: parameters {t1:.6} and {t2:.6} are {distance:.3e} apart")]
    NotEmbedded { t1: f64, t2: f64, distance: f64 },

    #[error("degenerate tangent at sample {index} (|c'| = {speed:.3e})")]
    DegenerateTangent { index: usize, speed: f64 },

    #[error("components {a} and {b} are too close: gap {gap:.3e} below resolution {resolution:.3e}")]
    ComponentsTooClose {
        a: usize,
        b: usize,
        gap: f64,
        resolution: f64,
    },

    #[error("pulled-back Cauchy form is not closed: residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotClosed { residual: f64, tolerance: f64 },

    #[error("strip monodromy did not reach tolerance: estimated error {estimate:.3e}")]
    MonodromyTolerance { estimate: f64 },

    #[error("step size underflow at t = {t:.6e} (state {state:?})")]
    StepUnderflow { t: f64, state: Vec<f64> },

    #[error("marching step rejected at rho = {rho:.4e}: level norm grew by {growth:.3e}")]
    MarchGrowth { rho: f64, growth: f64 },

    #[error("basis is empty")]
    EmptyBasis,

    #[error("fit over budget on tube {tube}: residual {residual:.3e} >= tolerance {tolerance:.3e}; enlarge the direction set")]
    BudgetExceeded {
        tube: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("field is not transverse to the section at the start point")]
    NotTransverse,

    #[error("trajectory did not return to the section within t = {t_max:.3e}")]
    Escape { t_max: f64 },

    #[error("orbit left the tube of component {component} at {witness:?}")]
    LeftTube { component: usize, witness: Vec3 },

    #[error("seed lies outside the tube of component {component}")]
    SeedOutsideTube { component: usize },

    #[error("Newton iteration failed after {iterations} steps: residual {residual:.3e}")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("curves are too close for the Gauss integral: gap {gap:.3e}")]
    CurvesTooClose { gap: f64 },

    #[error("Gauss integral {raw:.6} is {defect:.3} away from an integer; refine the curves")]
    LinkingDefect { raw: f64, defect: f64 },

    #[error("curve is not closed: endpoints {gap:.3e} apart")]
    NotClosedCurve { gap: f64 },

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("field file invariant violated in member {member}: {message}")]
    CorruptField { member: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}
