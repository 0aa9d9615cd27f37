//! Deterministic second-moment propagation of a full pulse sequence.
//!
//! In the linear-Gaussian model every conditional variance is independent of
//! the measurement record, so the forward filter variance, the backward
//! effect precision, and the retrodicted variance can be evaluated exactly
//! by a single sweep over the strobe schedule. The Monte Carlo runner uses
//! this for split optimization and the tests use it as the closed-form
//! reference for the sampled estimates.

use crate::error::Result;
use crate::gaussian::{EnsembleConfig, CSS_VARIANCE};

use super::config::{DecoherenceConfig, SegmentPlan, SequenceConfig, SequencePlan};
use super::metrics::{reduction_db, wineland_xi2};

const SHOT: f64 = CSS_VARIANCE;

/// Closed-form summary of one sequence, anchored at the start of the
/// verification train.
#[derive(Clone, Copy, Debug)]
pub struct ChainSummary {
    /// Filter variance of the measured quadrature given the first record.
    pub forward_variance: f64,
    /// Effect precision accumulated from the third record, back-propagated
    /// to the anchor.
    pub backward_precision: f64,
    /// Retrodicted variance combining both.
    pub retrodicted_variance: f64,
    /// Mean-spin fraction surviving to the anchor.
    pub jx_survival: f64,
    /// Wineland parameter at the anchor.
    pub xi2: f64,
    /// Wineland squeezing in dB.
    pub wineland_db: f64,
    /// Conditional noise reduction of the retrodicted variance, dB.
    pub conditional_reduction_db: f64,
}

fn forward_step(v: f64, plan: &SegmentPlan, reset: f64) -> f64 {
    let lost = (1.0 - plan.beta_strobe) * v + plan.beta_strobe * reset;
    lost * SHOT / (plan.kappa_sq_strobe * lost + SHOT)
}

fn backward_step(lambda: f64, plan: &SegmentPlan, reset: f64) -> f64 {
    let absorbed = lambda + plan.kappa_sq_strobe / SHOT;
    backward_loss(absorbed, plan.beta_strobe, reset)
}

fn backward_loss(lambda: f64, beta: f64, reset: f64) -> f64 {
    if lambda == 0.0 || beta == 0.0 {
        return lambda;
    }
    (1.0 - beta) * lambda / (1.0 + lambda * beta * reset)
}

/// Evaluates the sequence (two-pulse when `tau3` is zero, three-pulse
/// otherwise) without sampling.
pub fn evaluate(
    seq: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
) -> Result<ChainSummary> {
    let plan = SequencePlan::new(seq, dec, ens)?;
    let reset = plan.reset_variance;

    // Forward filter variance through the squeezing train and the gap.
    let mut v = plan.initial_variance;
    for _ in 0..plan.squeezing.n_strobes {
        v = forward_step(v, &plan.squeezing, reset);
    }
    v = (1.0 - plan.beta_gap) * v + plan.beta_gap * reset;
    let forward_variance = v;

    // Backward effect precision from the retrodiction train, through the
    // second gap and the verification train's own decoherence, back to the
    // anchor. The verification readouts themselves are excluded: the
    // retrodicted law conditions on records one and three only.
    let mut lambda = 0.0;
    for _ in 0..plan.retrodiction.n_strobes {
        lambda = backward_step(lambda, &plan.retrodiction, reset);
    }
    if plan.retrodiction.n_strobes > 0 {
        lambda = backward_loss(lambda, plan.beta_gap, reset);
        for _ in 0..plan.verification.n_strobes {
            lambda = backward_loss(lambda, plan.verification.beta_strobe, reset);
        }
    }

    let retrodicted_variance = 1.0 / (1.0 / forward_variance + lambda);
    let jx_survival = plan.jx_survival_at_verification();
    let jx_initial = ens.mean_spin();
    let xi2 = wineland_xi2(
        retrodicted_variance,
        ens,
        jx_initial,
        jx_initial * jx_survival,
    )?;

    Ok(ChainSummary {
        forward_variance,
        backward_precision: lambda,
        retrodicted_variance,
        jx_survival,
        xi2,
        wineland_db: reduction_db(xi2),
        conditional_reduction_db: reduction_db(retrodicted_variance / plan.initial_variance),
    })
}

/// Scans split fractions of a total squeezing+retrodiction budget and
/// returns the (tau1, tau3) pair minimizing the deterministic Wineland
/// parameter.
pub fn optimal_split(
    total: f64,
    fractions: &[f64],
    seq_template: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
) -> Result<(f64, f64)> {
    let mut best = (total, 0.0);
    let mut best_xi2 = f64::INFINITY;
    for &fraction in fractions {
        if !(0.0..=1.0).contains(&fraction) {
            continue;
        }
        let tau1 = fraction * total;
        let tau3 = total - tau1;
        let seq = SequenceConfig {
            tau1,
            tau3,
            ..*seq_template
        };
        let summary = evaluate(&seq, dec, ens)?;
        if summary.xi2 < best_xi2 {
            best_xi2 = summary.xi2;
            best = (tau1, tau3);
        }
    }
    Ok(best)
}

/// Default split-fraction scan grid.
pub fn default_split_fractions() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}
