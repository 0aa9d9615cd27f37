//! Stroboscopic back-action evasion versus continuous probing.
//!
//! Simulated in the lab frame: the state precesses at the Larmor frequency
//! between probe windows, each probe slice measures the lab-frame p
//! quadrature and kicks the conjugate one. Synchronized strobing at twice
//! the Larmor frequency keeps the kicks in the unmeasured rotating-frame
//! quadrature; continuous probing spreads them into the measured one and
//! the conditional variance saturates well above the ideal QND limit.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{EnsembleConfig, GaussianState, MeasurementModel, CSS_VARIANCE};
use crate::rng::{block_ranges, block_rng, TRAJECTORY_BLOCKS};

use super::config::SequenceConfig;

/// Sub-slices used to resolve the rotation across one probe-on window.
const WINDOW_SLICES: usize = 9;
/// Slices per strobe period used for continuous probing.
const CONTINUOUS_SLICES_PER_PERIOD: usize = 32;

/// Probing mode of the demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeMode {
    /// Synchronized windows of `duty_factor` times the strobe period.
    Stroboscopic,
    /// Probe always on, measurement phase sweeping freely.
    Continuous,
}

/// One sample of the variance-versus-time trace.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BaeTracePoint {
    /// Time at the end of the strobe period, seconds.
    pub time: f64,
    /// Coupling budget spent so far.
    pub kappa_sq_accumulated: f64,
    /// Filter variance of the rotating-frame measured quadrature.
    pub predicted_variance: f64,
    /// Mean-square estimation error across trajectories.
    pub empirical_variance: f64,
    /// Batch-means standard error of `empirical_variance`.
    pub empirical_stderr: f64,
    /// Ideal QND filter variance at the same spent budget.
    pub ideal_variance: f64,
}

/// Measurement phases (radians, relative to the window centre) and the
/// per-slice coupling of one strobe period.
struct SlicePlan {
    /// Phase of each measurement slice within one period.
    phases: Vec<f64>,
    kappa_slice: f64,
    periods: usize,
}

fn plan_slices(seq: &SequenceConfig, mode: ProbeMode) -> Result<SlicePlan> {
    let spacing = seq.strobe_spacing();
    let window = seq.strobe_window();
    if window > spacing {
        return Err(Error::config(
            "probe window longer than the strobe spacing",
        ));
    }
    // Consecutive windows must sit an integer number of half turns apart so
    // they probe the same rotating-frame quadrature (up to sign); this holds
    // for strobe multipliers 1 and 2.
    let half_turns = spacing * seq.larmor_frequency / std::f64::consts::PI;
    if (half_turns - half_turns.round()).abs() > 1e-9 {
        return Err(Error::config(
            "strobe_multiplier must space windows by whole half Larmor periods",
        ));
    }
    let periods = seq.strobe_count(seq.tau1);
    let kappa_sq_period = seq.kappa_squared(seq.tau1) / periods.max(1) as f64;
    match mode {
        ProbeMode::Stroboscopic => {
            let window_angle = window * seq.larmor_frequency;
            let phases = (0..WINDOW_SLICES)
                .map(|j| ((j as f64 + 0.5) / WINDOW_SLICES as f64 - 0.5) * window_angle)
                .collect();
            Ok(SlicePlan {
                phases,
                kappa_slice: (kappa_sq_period / WINDOW_SLICES as f64).sqrt(),
                periods,
            })
        }
        ProbeMode::Continuous => {
            let period_angle = spacing * seq.larmor_frequency;
            let phases = (0..CONTINUOUS_SLICES_PER_PERIOD)
                .map(|j| {
                    ((j as f64 + 0.5) / CONTINUOUS_SLICES_PER_PERIOD as f64 - 0.5) * period_angle
                })
                .collect();
            Ok(SlicePlan {
                phases,
                kappa_slice: (kappa_sq_period / CONTINUOUS_SLICES_PER_PERIOD as f64).sqrt(),
                periods,
            })
        }
    }
}

/// Ideal QND filter variance after spending `kappa_sq` on a static quadrature.
pub fn ideal_qnd_variance(initial_variance: f64, kappa_sq: f64) -> f64 {
    initial_variance * CSS_VARIANCE / (kappa_sq * initial_variance + CSS_VARIANCE)
}

struct TruthState {
    x: f64,
    p: f64,
}

impl TruthState {
    fn rotate(&mut self, theta: f64) {
        let (sin, cos) = theta.sin_cos();
        let (x, p) = (self.x, self.p);
        self.x = cos * x - sin * p;
        self.p = sin * x + cos * p;
    }
}

/// Runs the demonstration and samples the measured-quadrature conditional
/// variance at the end of every strobe period.
pub fn bae_trace(
    seq: &SequenceConfig,
    ens: &EnsembleConfig,
    mode: ProbeMode,
    n_trajectories: usize,
    seed: u64,
) -> Result<Vec<BaeTracePoint>> {
    seq.validate()?;
    ens.validate()?;
    if n_trajectories == 0 {
        return Err(Error::statistics("at least one trajectory required"));
    }
    let plan = plan_slices(seq, mode)?;
    let model = MeasurementModel::new(plan.kappa_slice);
    let initial = GaussianState::css(ens)?;
    let initial_variance = ens.initial_variance();

    // Deterministic trace: the filter covariance does not depend on the
    // outcomes, so a single pass with zero outcomes yields it exactly.
    let mut predicted = Vec::with_capacity(plan.periods);
    {
        let mut state = initial;
        let mut phase = 0.0_f64;
        for _ in 0..plan.periods {
            for &slice_phase in &plan.phases {
                state = state.rotate(slice_phase - phase);
                phase = slice_phase;
                state = state.filter_update(&model, 0.0).backaction_kick(&model);
            }
            // Realign to the window centre (phase 0 mod pi) for reporting,
            // then carry on into the next period.
            state = state.rotate(-phase);
            phase = 0.0;
            predicted.push(state.var_p());
        }
    }

    // Empirical trace: ground-truth trajectories filtered on their own
    // sampled readouts; the mean-square error of the filter mean estimates
    // the same conditional variance.
    let ranges = block_ranges(n_trajectories, TRAJECTORY_BLOCKS);
    let per_block: Vec<(Vec<f64>, f64)> = (0..TRAJECTORY_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let mut err_sq = vec![0.0; plan.periods];
            let count = ranges[b].len();
            for _ in 0..count {
                let mut truth = TruthState {
                    x: initial_variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
                    p: initial_variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
                };
                let mut state = initial;
                let mut phase = 0.0_f64;
                for errs in err_sq.iter_mut() {
                    for &slice_phase in &plan.phases {
                        let delta = slice_phase - phase;
                        truth.rotate(delta);
                        state = state.rotate(delta);
                        phase = slice_phase;
                        let m = plan.kappa_slice * truth.p
                            + CSS_VARIANCE.sqrt() * rng.sample::<f64, _>(StandardNormal);
                        state = state.filter_update(&model, m).backaction_kick(&model);
                        truth.x +=
                            plan.kappa_slice * CSS_VARIANCE.sqrt() * rng.sample::<f64, _>(StandardNormal);
                    }
                    truth.rotate(-phase);
                    state = state.rotate(-phase);
                    phase = 0.0;
                    let e = truth.p - state.mean_p();
                    *errs += e * e;
                }
            }
            (err_sq, count as f64)
        })
        .collect();

    let totals = {
        let mut acc = vec![0.0; plan.periods];
        for (errs, _) in &per_block {
            for (a, e) in acc.iter_mut().zip(errs) {
                *a += e;
            }
        }
        acc
    };
    let n = n_trajectories as f64;

    let kappa_sq_period = seq.kappa_squared(seq.tau1) / plan.periods.max(1) as f64;
    let spacing = seq.strobe_spacing();
    let mut trace = Vec::with_capacity(plan.periods);
    for k in 0..plan.periods {
        let empirical = totals[k] / n;
        // Batch-means error over the per-block mean-square errors.
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for (errs, count) in &per_block {
            let v = errs[k] / count;
            sum += v;
            sumsq += v * v;
        }
        let b = per_block.len() as f64;
        let mean = sum / b;
        let stderr = (((sumsq / b - mean * mean) * b / (b - 1.0)) / b).sqrt();

        let kappa_sq = kappa_sq_period * (k + 1) as f64;
        trace.push(BaeTracePoint {
            time: spacing * (k + 1) as f64,
            kappa_sq_accumulated: kappa_sq,
            predicted_variance: predicted[k],
            empirical_variance: empirical,
            empirical_stderr: stderr,
            ideal_variance: ideal_qnd_variance(initial_variance, kappa_sq),
        });
    }
    Ok(trace)
}
