//! Finite-key security analysis for the sending-or-not-sending (SNS)
//! twin-field QKD protocol.
//!
//! The pipeline: a linear channel model produces the detection
//! statistics an experiment would observe ([`channel`]), two-sided
//! Chernoff bounds bridge observed and expected values ([`chernoff`]),
//! decoy-state estimation turns the tallies into the untagged-bit count
//! and phase-flip error bounds ([`estimator`]), the composable key
//! length and per-pulse rate follow ([`keyrate`]), and a multi-start
//! simplex search maximizes the rate over the source parameters
//! ([`optimizer`]). A per-pulse Monte Carlo sampler ([`mc`]) validates
//! the statistical machinery at desk scale.

pub mod channel;
pub mod chernoff;
pub mod error;
pub mod estimator;
pub mod keyrate;
pub mod mc;
pub mod numerics;
pub mod optimizer;
pub mod types;

pub use channel::{asymptotic_statistics, simulate_observations, window_counts, ChannelPoint};
pub use chernoff::{expected_bounds, observed_bounds, IntervalBound};
pub use error::{Error, Result};
pub use estimator::{estimate, FluctuationMode, UntaggedEstimate};
pub use keyrate::{asymptotic_rate, key_length, leak_ec, plob_bound, security_budget};
pub use optimizer::{
    evaluate_rate, optimize, optimize_with_hints, OptimizationReport, SearchSpace, StartHints,
};
pub use types::{
    validate, ExperimentParams, KeyRateResult, ObservedCounts, ProtocolParams, SecurityBudget,
};
