use thiserror::Error;

/// Errors raised anywhere in the key-rate pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A parameter set violates one of its documented invariants.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// The target value is not enclosed by the supplied bracket.
    #[error("bracket error: target {target} not enclosed by f({lo}), f({hi})")]
    BracketError { lo: f64, hi: f64, target: f64 },

    /// The root finder ran out of iterations before meeting its tolerance.
    #[error("no convergence after {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    /// The channel produced no effective events, so the Z error rate is undefined.
    #[error("degenerate channel: no effective Z-window events")]
    DegenerateChannel,

    /// A decoy source required for estimation has zero instances.
    #[error("empty source: {0} has zero instances")]
    EmptySource(&'static str),

    /// Division by a vanishing single-photon counting rate.
    #[error("zero denominator: lower bound of s1^Z is zero")]
    ZeroDenominator,

    /// Monte Carlo run requested beyond the desk-scale pulse cap.
    #[error("scale guard: {requested} pulses exceeds the Monte Carlo cap of {cap}")]
    ScaleGuard { requested: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
