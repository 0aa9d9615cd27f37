//! Pulse-sequence scheduling, calibration, Monte Carlo experiment runners,
//! and squeezing metrics.

pub mod bae;
pub mod calibrate;
pub mod chain;
pub mod config;
pub mod metrics;
pub mod runner;

pub use bae::{bae_trace, ideal_qnd_variance, BaeTracePoint, ProbeMode};
pub use calibrate::{calibrate, CalibrationAnchors, CalibrationResult};
pub use chain::{evaluate as evaluate_chain, optimal_split, ChainSummary};
pub use config::{DecoherenceConfig, SegmentPlan, SequenceConfig, SequencePlan};
pub use metrics::{angular_variance, reduction_db, wineland_xi2, SqueezingMetrics};
pub use runner::{
    compare_total_duration, run_three_pulse, run_two_pulse, sweep_grid, ComparePoint, SplitRule,
    SweepCell,
};
