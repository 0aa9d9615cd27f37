//! Simulation and estimation library for pulsed QND probing of a collective
//! atomic spin in the Gaussian regime.
//!
//! The crate is organized around four layers:
//!
//! - [`gaussian`]: the spin-oscillator state and its elementary channels
//!   (rotation, pulsed readout, back-action, loss);
//! - [`pqs`]: forward filtering, backward effect propagation, and the
//!   retrodicted (past-quantum-state) outcome laws, with closed-form two-
//!   and three-pulse predictors;
//! - [`oracle`]: independent brute-force evaluators of the exact outcome
//!   chain by dense quadrature and by Monte Carlo regression;
//! - [`experiment`]: strobe scheduling, anchor calibration, trajectory
//!   Monte Carlo for the two- versus three-pulse squeezing comparison, and
//!   the stroboscopic back-action-evasion demonstration.
//!
//! All Monte Carlo entry points take an explicit seed and produce
//! bit-identical results for any worker-thread count.

pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod oracle;
pub mod pqs;
pub mod rng;

pub use error::{Error, Result};
pub use experiment::{
    bae_trace, calibrate, compare_total_duration, run_three_pulse, run_two_pulse, sweep_grid,
    BaeTracePoint, CalibrationAnchors, CalibrationResult, ComparePoint, DecoherenceConfig,
    ProbeMode, SequenceConfig, SplitRule, SqueezingMetrics, SweepCell,
};
pub use gaussian::{EnsembleConfig, GaussianState, MeasurementModel, CSS_VARIANCE};
pub use oracle::{monte_carlo_conditional, GridOracle, GridSpec, JointSample, McConditional};
pub use pqs::{
    predict_three_pulse, predict_two_pulse, retrodict, EffectState, OutcomePrediction,
};
