use thiserror::Error;

/// Every numeric failure the library reports.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate lattice: |D| = {disc:e} below threshold {threshold:e}; use the trigonometric limit")]
    DegenerateLattice { disc: f64, threshold: f64 },
    #[error("invalid invariants: {0}")]
    InvalidInvariants(String),
    #[error("argument within {distance:e} of a lattice point")]
    Pole { distance: f64 },
    #[error("negative radicand {value:e} at x = {x}")]
    NegativeRadicand { x: f64, value: f64 },
    #[error("orbit did not return to its initial point within span {span}")]
    NoReturn { span: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("derivative degenerate: |dM/drho| = {value:e}")]
    DerivativeDegenerate { value: f64 },
    #[error("constraint violated: {what} (residual {residual:e})")]
    ConstraintViolation { what: &'static str, residual: f64 },
    #[error("curve not closed: endpoint gap {gap:e}")]
    OpenCurve { gap: f64 },
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("horizontal lift drift {drift:e} exceeds tolerance")]
    Drift { drift: f64 },
    #[error("insufficient samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("continuation step failed after {halvings} halvings at parameter {at}")]
    Continuation { halvings: usize, at: f64 },
    #[error("projection pole lies on the surface (distance {distance:e})")]
    PoleOnSurface { distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
