//! Squeezing figures of merit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::EnsembleConfig;

/// Converts a variance ratio to decibels of noise reduction.
pub fn reduction_db(ratio: f64) -> f64 {
    -10.0 * ratio.log10()
}

/// Metrological squeezing parameter by the Wineland criterion.
///
/// `conditional_variance` is the conditional variance of the measured
/// quadrature in oscillator units; it converts back to spin units through
/// the mean spin at the verification time, Var(J_z) = V * J_x(t_ver):
/// xi^2 = 2 J_x(0) Var(J_z) / J_x(t_ver)^2.
pub fn wineland_xi2(
    conditional_variance: f64,
    ens: &EnsembleConfig,
    jx_initial: f64,
    jx_at_verification: f64,
) -> Result<f64> {
    ens.validate()?;
    if !(jx_initial > 0.0 && jx_at_verification > 0.0) {
        return Err(Error::parameter("mean spin values must be positive"));
    }
    let var_jz = conditional_variance * jx_at_verification;
    Ok(2.0 * jx_initial * var_jz / (jx_at_verification * jx_at_verification))
}

/// Squared angular uncertainty of the collective spin direction,
/// Var(J_z) / <J_x>^2, in rad^2.
pub fn angular_variance(conditional_variance: f64, jx_at_verification: f64) -> f64 {
    conditional_variance / jx_at_verification
}

/// Squeezing metrics of one simulated scheme.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SqueezingMetrics {
    /// Conditional variance of the measured quadrature at verification time
    /// (oscillator units squared), estimated from the mean-square
    /// estimation error across trajectories.
    pub conditional_variance: f64,
    /// Batch-means standard error of `conditional_variance`.
    pub conditional_variance_stderr: f64,
    /// The same quantity extracted from the verification readout instead:
    /// (Var(m2 | record) - shot) / kappa2^2, by cross-trajectory regression.
    pub readout_variance: f64,
    /// Batch-means standard error of `readout_variance`.
    pub readout_variance_stderr: f64,
    /// Conditional noise reduction relative to the prepared state, dB.
    pub noise_reduction_db: f64,
    /// Wineland squeezing parameter.
    pub wineland_xi2: f64,
    /// -10 log10(xi^2), dB.
    pub wineland_db: f64,
    /// Standard error of `wineland_db`, propagated from the conditional
    /// variance.
    pub wineland_db_stderr: f64,
    /// Angular spin variance at verification, rad^2.
    pub angular_variance: f64,
}

impl SqueezingMetrics {
    /// Assembles the derived figures from a conditional-variance estimate.
    pub fn from_conditional_variance(
        conditional_variance: f64,
        conditional_variance_stderr: f64,
        readout_variance: f64,
        readout_variance_stderr: f64,
        ens: &EnsembleConfig,
        jx_survival_at_verification: f64,
    ) -> Result<Self> {
        let jx_initial = ens.mean_spin();
        let jx_ver = jx_initial * jx_survival_at_verification;
        let xi2 = wineland_xi2(conditional_variance, ens, jx_initial, jx_ver)?;
        if xi2 <= 0.0 {
            return Err(Error::parameter("wineland parameter must be positive"));
        }
        let db_per_rel = 10.0 / std::f64::consts::LN_10;
        Ok(Self {
            conditional_variance,
            conditional_variance_stderr,
            readout_variance,
            readout_variance_stderr,
            noise_reduction_db: reduction_db(conditional_variance / ens.initial_variance()),
            wineland_xi2: xi2,
            wineland_db: reduction_db(xi2),
            wineland_db_stderr: db_per_rel
                * (conditional_variance_stderr / conditional_variance).abs(),
            angular_variance: angular_variance(conditional_variance, jx_ver),
        })
    }
}
