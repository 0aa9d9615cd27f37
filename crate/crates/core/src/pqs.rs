//! Forward/backward estimation for the pulsed QND chain.
//!
//! The forward-conditioned state is a [`GaussianState`]; the backward
//! accumulation of later measurement operators is an [`EffectState`] kept in
//! information form, so the flat (no-posterior-data) effect is representable
//! without infinities. Combining the two with [`retrodict`] yields the
//! past-quantum-state distribution of the measured quadrature, and the
//! closed-form predictors give the two- and three-pulse outcome laws for an
//! ideal CSS prior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, MeasurementModel, CSS_VARIANCE};

/// Loss fractions this close to 1 destroy all pre-loss information; the
/// back-propagated effect degenerates to flat instead of dividing by ~0.
pub const LOSS_DEGENERACY_THRESHOLD: f64 = 1.0 - 1e-9;

// ---------------------------------------------------------------------------
// Effect state
// ---------------------------------------------------------------------------

/// Gaussian effect operator on p_A in information form.
///
/// `precision` is the accumulated measurement information (lambda >= 0) and
/// `weighted_mean` is lambda * mu. The flat effect (lambda = 0) is the
/// identity of composition and represents "no later data".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectState {
    precision: f64,
    weighted_mean: f64,
}

impl EffectState {
    /// The uninformative effect: composing it with anything is a no-op.
    pub fn flat() -> Self {
        Self {
            precision: 0.0,
            weighted_mean: 0.0,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.precision == 0.0
    }

    /// Accumulated information lambda.
    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// lambda * mu; zero for the flat effect.
    pub fn weighted_mean(&self) -> f64 {
        self.weighted_mean
    }

    /// Centre of the effect Gaussian, if it is informative.
    pub fn mean(&self) -> Option<f64> {
        (!self.is_flat()).then(|| self.weighted_mean / self.precision)
    }

    /// Variance of the effect Gaussian, if it is informative.
    pub fn variance(&self) -> Option<f64> {
        (!self.is_flat()).then(|| 1.0 / self.precision)
    }

    /// Folds the likelihood of a later readout `m = kappa p_A + n` into the
    /// effect. Information adds: lambda += kappa^2 / s, lambda mu += kappa m / s.
    pub fn absorb(&self, model: &MeasurementModel, outcome: f64) -> Self {
        let s = model.shot_variance;
        Self {
            precision: self.precision + model.kappa * model.kappa / s,
            weighted_mean: self.weighted_mean + model.kappa * outcome / s,
        }
    }

    /// Adjoint of [`GaussianState::loss_channel`]: rewrites the effect as a
    /// function of p_A *before* the loss step `p' = sqrt(1-beta) p + noise`.
    ///
    /// An informative effect with variance v and mean mu becomes one with
    /// variance (v + beta * reset_variance) / (1-beta) and mean mu / sqrt(1-beta).
    /// Flat stays flat; beta ~ 1 destroys all information and returns flat.
    pub fn backpropagate_loss(&self, beta: f64, reset_variance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::parameter(format!(
                "loss fraction beta = {beta} outside [0, 1]"
            )));
        }
        if self.is_flat() {
            return Ok(*self);
        }
        if beta >= LOSS_DEGENERACY_THRESHOLD {
            return Ok(Self::flat());
        }
        let keep = 1.0 - beta;
        let variance = (1.0 / self.precision + beta * reset_variance) / keep;
        let mean = self.mean().expect("non-flat effect") / keep.sqrt();
        let precision = 1.0 / variance;
        Ok(Self {
            precision,
            weighted_mean: precision * mean,
        })
    }
}

// ---------------------------------------------------------------------------
// Retrodiction
// ---------------------------------------------------------------------------

/// Combines the forward filter with a backward effect into the retrodicted
/// mean and variance of p_A.
///
/// Gaussian product in information form: 1/V = 1/V_p + lambda. With a flat
/// effect this returns the filter marginal exactly.
pub fn retrodict(filter: &GaussianState, effect: &EffectState) -> (f64, f64) {
    let var_p = filter.var_p();
    let mean_p = filter.mean_p();
    if effect.is_flat() {
        return (mean_p, var_p);
    }
    if var_p == 0.0 {
        // A perfectly known quadrature cannot be sharpened further.
        return (mean_p, 0.0);
    }
    let precision = 1.0 / var_p + effect.precision();
    let variance = 1.0 / precision;
    let mean = variance * (mean_p / var_p + effect.weighted_mean());
    (mean, variance)
}

// ---------------------------------------------------------------------------
// Closed-form outcome predictors (ideal CSS prior, coherent probe)
// ---------------------------------------------------------------------------

/// Gaussian law of an upcoming readout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomePrediction {
    pub mean: f64,
    pub variance: f64,
}

impl OutcomePrediction {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean.is_finite() && self.variance.is_finite()) {
            return Err(Error::parameter("prediction moments must be finite"));
        }
        if self.variance < CSS_VARIANCE {
            return Err(Error::parameter(
                "outcome variance below the light shot-noise floor",
            ));
        }
        Ok(())
    }
}

/// Forward-conditioned law of the second readout after observing the first:
/// mean = k2 k1 m1 / (1 + k1^2), variance = 1/2 + (1/2) k2^2 / (1 + k1^2).
pub fn predict_two_pulse(kappa1: f64, kappa2: f64, m1: f64) -> OutcomePrediction {
    let info = 1.0 + kappa1 * kappa1;
    OutcomePrediction {
        mean: kappa2 * (m1 * kappa1) / info,
        variance: CSS_VARIANCE + CSS_VARIANCE * kappa2 * kappa2 / info,
    }
}

/// Retrodicted law of the middle readout given the first and the last:
/// mean = k2 (m1 k1 + m3 k3) / (1 + k1^2 + k3^2),
/// variance = 1/2 + (1/2) k2^2 / (1 + k1^2 + k3^2).
///
/// A vanished third pulse reduces this to the forward prediction.
pub fn predict_three_pulse(
    kappa1: f64,
    kappa2: f64,
    kappa3: f64,
    m1: f64,
    m3: f64,
) -> OutcomePrediction {
    if kappa3 == 0.0 {
        return predict_two_pulse(kappa1, kappa2, m1);
    }
    let info = 1.0 + kappa1 * kappa1 + kappa3 * kappa3;
    OutcomePrediction {
        mean: kappa2 * (m1 * kappa1 + m3 * kappa3) / info,
        variance: CSS_VARIANCE + CSS_VARIANCE * kappa2 * kappa2 / info,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::EnsembleConfig;
    use approx::assert_abs_diff_eq;

    fn ideal_css() -> GaussianState {
        GaussianState::css(&EnsembleConfig {
            thermal_factor: 1.0,
            polarization: 1.0,
            ..EnsembleConfig::default()
        })
        .unwrap()
    }

    // Dense-grid product of Gaussian likelihoods; independent route for the
    // information-form bookkeeping. Returns (mean, variance) of the
    // normalized product function of p.
    fn grid_moments(f: impl Fn(f64) -> f64, half: f64, n: usize) -> (f64, f64) {
        let step = 2.0 * half / (n - 1) as f64;
        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for i in 0..n {
            let p = -half + i as f64 * step;
            let w = f(p);
            mass += w;
            first += w * p;
            second += w * p * p;
        }
        let mean = first / mass;
        (mean, second / mass - mean * mean)
    }

    #[test]
    fn flat_effect_is_identity() {
        let flat = EffectState::flat();
        assert!(flat.is_flat());
        let filter = ideal_css().filter_update(&MeasurementModel::new(0.9), 0.4);
        let (mean, var) = retrodict(&filter, &flat);
        assert_eq!(mean, filter.mean_p());
        assert_eq!(var, filter.var_p());
        // Back-propagating a flat effect keeps it flat, and so does
        // absorbing an uncoupled readout.
        assert!(flat.backpropagate_loss(0.7, 0.5).unwrap().is_flat());
        assert!(flat.absorb(&MeasurementModel::new(0.0), 3.0).is_flat());
    }

    #[test]
    fn absorb_substitution_values() {
        let model = MeasurementModel::new(1.0);
        let e = EffectState::flat().absorb(&model, 0.0);
        assert_abs_diff_eq!(e.precision(), 2.0, epsilon = 1e-15);
        assert_eq!(e.weighted_mean(), 0.0);

        let strong = MeasurementModel::new(2.0);
        let e = EffectState::flat().absorb(&strong, 1.0);
        assert_abs_diff_eq!(e.precision(), 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.weighted_mean(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.mean().unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn absorb_matches_grid_likelihood_product() {
        let strong = MeasurementModel::new(2.0);
        let e = EffectState::flat().absorb(&strong, 1.0);
        let (mean, var) = grid_moments(
            |p| {
                let r = 1.0 - 2.0 * p;
                (-r * r / (2.0 * 0.5)).exp()
            },
            12.0,
            60_001,
        );
        assert_abs_diff_eq!(e.mean().unwrap(), mean, epsilon = 1e-9);
        assert_abs_diff_eq!(e.variance().unwrap(), var, epsilon = 1e-9);
    }

    #[test]
    fn absorbing_twice_adds_information() {
        let ma = MeasurementModel::new(1.3);
        let mb = MeasurementModel::new(0.6);
        let e = EffectState::flat().absorb(&ma, 0.7).absorb(&mb, -0.2);
        let expected_precision = (1.3_f64.powi(2) + 0.6_f64.powi(2)) / 0.5;
        assert_abs_diff_eq!(e.precision(), expected_precision, epsilon = 1e-12);
        let expected_weighted = (1.3 * 0.7 + 0.6 * (-0.2)) / 0.5;
        assert_abs_diff_eq!(e.weighted_mean(), expected_weighted, epsilon = 1e-12);
    }

    #[test]
    fn backpropagation_example_values() {
        // lambda = 2, mu = 1, beta = 0.5, reset = 0.5.
        let e = EffectState {
            precision: 2.0,
            weighted_mean: 2.0,
        };
        let back = e.backpropagate_loss(0.5, 0.5).unwrap();
        assert_abs_diff_eq!(back.variance().unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(back.mean().unwrap(), 1.0 / 0.5_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn backpropagation_matches_channel_convolution() {
        // E_prev(p) = integral over p' of N(p'; sqrt(1-b) p, b r) E(p').
        let (beta, reset) = (0.5, 0.5);
        let (lambda, mu) = (2.0, 1.0);
        let conv = |p: f64| {
            let n = 8001;
            let half = 14.0;
            let step = 2.0 * half / (n - 1) as f64;
            let keep = 1.0_f64 - beta;
            let mut acc = 0.0;
            for i in 0..n {
                let pp = -half + i as f64 * step;
                let d = pp - keep.sqrt() * p;
                let channel = (-d * d / (2.0 * beta * reset)).exp();
                let e = (-lambda * (pp - mu) * (pp - mu) / 2.0).exp();
                acc += channel * e;
            }
            acc * step
        };
        let (mean, var) = grid_moments(conv, 14.0, 1201);
        let back = EffectState {
            precision: lambda,
            weighted_mean: lambda * mu,
        }
        .backpropagate_loss(beta, reset)
        .unwrap();
        assert_abs_diff_eq!(back.mean().unwrap(), mean, epsilon = 1e-6);
        assert_abs_diff_eq!(back.variance().unwrap(), var, epsilon = 1e-6);
    }

    #[test]
    fn backpropagation_degeneracies() {
        let e = EffectState {
            precision: 3.0,
            weighted_mean: 1.5,
        };
        assert_eq!(e.backpropagate_loss(0.0, 0.5).unwrap(), e);
        assert!(e.backpropagate_loss(1.0, 0.5).unwrap().is_flat());
        assert!(e.backpropagate_loss(1.0 - 1e-12, 0.5).unwrap().is_flat());
        assert!(e.backpropagate_loss(1.5, 0.5).is_err());
    }

    #[test]
    fn retrodict_substitution_values() {
        let filter = ideal_css();
        let effect = EffectState::flat().absorb(&MeasurementModel::new(1.0), 0.0);
        let (_, var) = retrodict(&filter, &effect);
        assert_abs_diff_eq!(var, 0.25, epsilon = 1e-15);

        let effect = EffectState::flat().absorb(&MeasurementModel::new(1.0), 2.0);
        let (mean, var) = retrodict(&filter, &effect);
        assert_abs_diff_eq!(var, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn retrodict_matches_grid_conditional() {
        // Posterior of p given m1 (forward) times likelihood of m3 (backward),
        // evaluated by brute force on a grid.
        let (k1, m1) = (0.8, 0.6);
        let (k3, m3) = (1.0, 2.0);
        let filter = ideal_css().filter_update(&MeasurementModel::new(k1), m1);
        let effect = EffectState::flat().absorb(&MeasurementModel::new(k3), m3);
        let (mean, var) = retrodict(&filter, &effect);

        let (gmean, gvar) = grid_moments(
            |p| {
                let prior = (-p * p).exp(); // variance 1/2
                let l1 = -(m1 - k1 * p) * (m1 - k1 * p);
                let l3 = -(m3 - k3 * p) * (m3 - k3 * p);
                prior * (l1 + l3).exp()
            },
            12.0,
            60_001,
        );
        assert_abs_diff_eq!(mean, gmean, epsilon = 1e-9);
        assert_abs_diff_eq!(var, gvar, epsilon = 1e-9);
    }

    #[test]
    fn two_pulse_prediction_examples() {
        let p = predict_two_pulse(1.0, 1.0, 1.0);
        assert_abs_diff_eq!(p.mean, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.variance, 0.75, epsilon = 1e-15);

        let unconditioned = predict_two_pulse(0.0, 1.5, 3.0);
        assert_eq!(unconditioned.mean, 0.0);
        assert_abs_diff_eq!(
            unconditioned.variance,
            (1.0 + 1.5 * 1.5) / 2.0,
            epsilon = 1e-15
        );

        let p = predict_two_pulse(2.0, 1.0, 5.0);
        assert_abs_diff_eq!(p.mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.variance, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn three_pulse_prediction_examples() {
        let p = predict_three_pulse(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(p.mean, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.variance, 2.0 / 3.0, epsilon = 1e-15);

        let p = predict_three_pulse(1.0, 1.0, 2.0, 0.0, 3.0);
        assert_abs_diff_eq!(p.mean, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.variance, 0.5 + 0.5 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn third_pulse_off_reduces_bitwise() {
        for (k1, k2, m1, m3) in [
            (0.7, 1.2, 0.4, -2.0),
            (0.0, 0.3, -1.0, 5.0),
            (2.0, 0.0, 0.0, 0.1),
        ] {
            let two = predict_two_pulse(k1, k2, m1);
            let three = predict_three_pulse(k1, k2, 0.0, m1, m3);
            assert_eq!(two.mean.to_bits(), three.mean.to_bits());
            assert_eq!(two.variance.to_bits(), three.variance.to_bits());
        }
    }

    #[test]
    fn swap_symmetry_of_variance() {
        let a = predict_three_pulse(0.7, 1.1, 1.9, 0.2, -0.5);
        let b = predict_three_pulse(1.9, 1.1, 0.7, -0.5, 0.2);
        assert_eq!(a.variance.to_bits(), b.variance.to_bits());
        assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-15);
    }

    #[test]
    fn retrodiction_never_exceeds_filter_variance() {
        let filter = ideal_css().filter_update(&MeasurementModel::new(0.9), 1.0);
        for k3 in [0.0, 0.3, 1.0, 4.0] {
            let effect = EffectState::flat().absorb(&MeasurementModel::new(k3), -0.7);
            let (_, var) = retrodict(&filter, &effect);
            if k3 == 0.0 {
                assert_eq!(var, filter.var_p());
            } else {
                assert!(var < filter.var_p());
            }
        }
    }

    #[test]
    fn chain_composition_reproduces_three_pulse_closed_form() {
        let (k1, k2, k3) = (0.9, 1.4, 1.1);
        let (m1, m3) = (0.8, -0.3);
        let filter = ideal_css().filter_update(&MeasurementModel::new(k1), m1);
        let effect = EffectState::flat().absorb(&MeasurementModel::new(k3), m3);
        let (mean_p, var_p) = retrodict(&filter, &effect);
        let chained_mean = k2 * mean_p;
        let chained_var = k2 * k2 * var_p + CSS_VARIANCE;
        let closed = predict_three_pulse(k1, k2, k3, m1, m3);
        assert_abs_diff_eq!(chained_mean, closed.mean, epsilon = 1e-12 * closed.mean.abs());
        assert_abs_diff_eq!(chained_var, closed.variance, epsilon = 1e-12 * closed.variance);
    }
}
