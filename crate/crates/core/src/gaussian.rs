//! Gaussian state of the collective-spin oscillator and its elementary
//! channels: Larmor rotation, pulsed QND readout, measurement back-action,
//! and phenomenological loss.
//!
//! The transverse collective-spin components are mapped onto oscillator
//! quadratures (x_A, p_A) around the large mean spin, so the states reached
//! by pulsed probing stay Gaussian: a 2-vector mean plus a 2x2 covariance.
//! Conventions: the ideal coherent spin state (CSS) has variance 1/2 per
//! quadrature, and a coherent probe contributes shot variance 1/2 to each
//! integrated readout.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature variance of the vacuum / ideal CSS.
pub const CSS_VARIANCE: f64 = 0.5;

/// Variance of the probe quadrature that drives back-action (coherent input).
pub const PROBE_BACKACTION_VARIANCE: f64 = 0.5;

/// Absolute tolerance on covariance eigenvalue positivity.
pub const EIGENVALUE_TOL: f64 = 1e-9;

/// Absolute slack allowed below the Heisenberg determinant bound of 1/4.
pub const HEISENBERG_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Ensemble configuration
// ---------------------------------------------------------------------------

/// Parameters of the prepared atomic ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of atoms in the probed volume.
    pub atom_count: f64,
    /// Total spin per atom (2 for the stretched ground state used here).
    pub spin_per_atom: f64,
    /// Fraction of atoms pumped into the stretched state, in [0, 1].
    pub polarization: f64,
    /// Ratio of the prepared transverse variance to the ideal CSS variance
    /// (>= 1; 1 is a perfect CSS, 1.06 models the measured excess noise at
    /// 97.9% polarization).
    pub thermal_factor: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            atom_count: 1.87e11,
            spin_per_atom: 2.0,
            polarization: 0.979,
            thermal_factor: 1.06,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.atom_count.is_finite() && self.atom_count > 0.0) {
            return Err(Error::config("atom_count must be positive"));
        }
        if !(self.spin_per_atom.is_finite() && self.spin_per_atom > 0.0) {
            return Err(Error::config("spin_per_atom must be positive"));
        }
        if !(0.0..=1.0).contains(&self.polarization) {
            return Err(Error::config("polarization must lie in [0, 1]"));
        }
        if !(self.thermal_factor.is_finite() && self.thermal_factor >= 1.0) {
            return Err(Error::config("thermal_factor must be >= 1"));
        }
        Ok(())
    }

    /// Mean collective spin J_x = p * N_at * F, in units of hbar.
    pub fn mean_spin(&self) -> f64 {
        self.polarization * self.atom_count * self.spin_per_atom
    }

    /// Transverse quadrature variance of the prepared state.
    pub fn initial_variance(&self) -> f64 {
        self.thermal_factor * CSS_VARIANCE
    }
}

// ---------------------------------------------------------------------------
// Measurement model
// ---------------------------------------------------------------------------

/// One integrated QND pulse: readout m = kappa * p_A + n, Var(n) = shot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// Dimensionless coupling strength of the integrated pulse.
    pub kappa: f64,
    /// Variance of the probe readout quadrature; 1/2 for a coherent probe.
    pub shot_variance: f64,
}

impl MeasurementModel {
    /// Coherent-probe model with the given coupling strength.
    pub fn new(kappa: f64) -> Self {
        Self {
            kappa,
            shot_variance: CSS_VARIANCE,
        }
    }

    pub fn with_shot_variance(kappa: f64, shot_variance: f64) -> Self {
        Self {
            kappa,
            shot_variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::config("kappa must be finite and >= 0"));
        }
        if !(self.shot_variance.is_finite() && self.shot_variance >= CSS_VARIANCE - 1e-12) {
            return Err(Error::config(
                "shot_variance must be >= 1/2 (coherent-probe floor)",
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Gaussian state
// ---------------------------------------------------------------------------

/// Mean and covariance of the quadratures (x_A, p_A).
///
/// The covariance is stored by its three independent entries, so it is
/// symmetric by construction; positivity and the Heisenberg bound are
/// checked by [`GaussianState::check_invariants`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    mean: [f64; 2],
    var_x: f64,
    cov_xp: f64,
    var_p: f64,
}

impl GaussianState {
    /// Builds a state from explicit moments, rejecting non-physical input.
    pub fn new(mean: [f64; 2], var_x: f64, cov_xp: f64, var_p: f64) -> Result<Self> {
        let state = Self {
            mean,
            var_x,
            cov_xp,
            var_p,
        };
        state.check_invariants()?;
        Ok(state)
    }

    /// The coherent spin state of a configured ensemble: zero mean and
    /// isotropic transverse variance `thermal_factor / 2`.
    pub fn css(config: &EnsembleConfig) -> Result<Self> {
        config.validate()?;
        let v = config.initial_variance();
        Ok(Self {
            mean: [0.0, 0.0],
            var_x: v,
            cov_xp: 0.0,
            var_p: v,
        })
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn mean_x(&self) -> f64 {
        self.mean[0]
    }

    pub fn mean_p(&self) -> f64 {
        self.mean[1]
    }

    pub fn var_x(&self) -> f64 {
        self.var_x
    }

    pub fn var_p(&self) -> f64 {
        self.var_p
    }

    pub fn cov_xp(&self) -> f64 {
        self.cov_xp
    }

    /// The full 2x2 covariance matrix.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        [[self.var_x, self.cov_xp], [self.cov_xp, self.var_p]]
    }

    pub fn det_cov(&self) -> f64 {
        self.var_x * self.var_p - self.cov_xp * self.cov_xp
    }

    /// Smallest eigenvalue of the covariance matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let half_trace = 0.5 * (self.var_x + self.var_p);
        let half_gap = 0.5 * (self.var_x - self.var_p);
        half_trace - (half_gap * half_gap + self.cov_xp * self.cov_xp).sqrt()
    }

    /// Verifies positivity and the Heisenberg bound det >= 1/4.
    pub fn check_invariants(&self) -> Result<()> {
        let finite = self.mean.iter().all(|m| m.is_finite())
            && self.var_x.is_finite()
            && self.cov_xp.is_finite()
            && self.var_p.is_finite();
        if !finite {
            return Err(Error::parameter("state moments must be finite"));
        }
        if self.min_eigenvalue() < -EIGENVALUE_TOL {
            return Err(Error::parameter(format!(
                "covariance not positive semidefinite (min eigenvalue {:e})",
                self.min_eigenvalue()
            )));
        }
        if self.det_cov() < 0.25 - HEISENBERG_TOL {
            return Err(Error::parameter(format!(
                "covariance below the Heisenberg bound (det {:e})",
                self.det_cov()
            )));
        }
        Ok(())
    }

    /// Rotates the quadratures by `theta` (Larmor precession by Omega_L * t).
    pub fn rotate(&self, theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let [mx, mp] = self.mean;
        Self {
            mean: [cos * mx - sin * mp, sin * mx + cos * mp],
            var_x: cos * cos * self.var_x - 2.0 * cos * sin * self.cov_xp
                + sin * sin * self.var_p,
            cov_xp: cos * sin * (self.var_x - self.var_p)
                + (cos * cos - sin * sin) * self.cov_xp,
            var_p: sin * sin * self.var_x + 2.0 * cos * sin * self.cov_xp
                + cos * cos * self.var_p,
        }
    }

    /// Conditions the state on an observed readout `m = kappa p_A + n`.
    ///
    /// Standard linear-Gaussian conditioning on p_A; the x_A row and column
    /// follow from the joint-Gaussian cross-covariance rule. Back-action on
    /// x_A is applied separately by [`GaussianState::backaction_kick`].
    pub fn filter_update(&self, model: &MeasurementModel, outcome: f64) -> Self {
        let kappa = model.kappa;
        if kappa == 0.0 {
            return *self;
        }
        let denom = kappa * kappa * self.var_p + model.shot_variance;
        let innovation = outcome - kappa * self.mean[1];
        let scale = model.shot_variance / denom;
        Self {
            mean: [
                self.mean[0] + kappa * self.cov_xp * innovation / denom,
                self.mean[1] + kappa * self.var_p * innovation / denom,
            ],
            var_x: self.var_x - kappa * kappa * self.cov_xp * self.cov_xp / denom,
            cov_xp: self.cov_xp * scale,
            var_p: self.var_p * scale,
        }
    }

    /// Mean and variance of the next readout under `model`.
    pub fn predictive(&self, model: &MeasurementModel) -> (f64, f64) {
        let kappa = model.kappa;
        (
            kappa * self.mean[1],
            kappa * kappa * self.var_p + model.shot_variance,
        )
    }

    /// Draws a readout from the predictive law and returns the conditioned
    /// state. The marginal law over many draws is exactly the Gaussian
    /// predictive distribution.
    pub fn sample_outcome<R: Rng + ?Sized>(
        &self,
        model: &MeasurementModel,
        rng: &mut R,
    ) -> (f64, Self) {
        let (mean, variance) = self.predictive(model);
        let noise: f64 = rng.sample(StandardNormal);
        let outcome = mean + variance.sqrt() * noise;
        (outcome, self.filter_update(model, outcome))
    }

    /// Measurement back-action: the probe quadrature conjugate to the
    /// readout drives x_A, adding kappa^2 * 1/2 to Var(x_A). The measured
    /// quadrature p_A escapes untouched (QND).
    pub fn backaction_kick(&self, model: &MeasurementModel) -> Self {
        let mut out = *self;
        out.var_x += model.kappa * model.kappa * PROBE_BACKACTION_VARIANCE;
        out
    }

    /// Gaussian attenuation-plus-reset channel modelling decoherence:
    /// mean -> sqrt(1-beta) mean, cov -> (1-beta) cov + beta reset I.
    pub fn loss_channel(&self, beta: f64, reset_variance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::parameter(format!(
                "loss fraction beta = {beta} outside [0, 1]"
            )));
        }
        if !(reset_variance.is_finite() && reset_variance >= CSS_VARIANCE - 1e-12) {
            return Err(Error::parameter("reset_variance must be >= 1/2"));
        }
        let keep = 1.0 - beta;
        let amp = keep.sqrt();
        Ok(Self {
            mean: [amp * self.mean[0], amp * self.mean[1]],
            var_x: keep * self.var_x + beta * reset_variance,
            cov_xp: keep * self.cov_xp,
            var_p: keep * self.var_p + beta * reset_variance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ideal_css() -> GaussianState {
        GaussianState::css(&EnsembleConfig {
            thermal_factor: 1.0,
            polarization: 1.0,
            ..EnsembleConfig::default()
        })
        .unwrap()
    }

    // Brute-force Bayes update of p_A on a dense grid; the independent
    // route against which the closed-form filter is checked.
    fn grid_posterior(prior_var: f64, kappa: f64, shot: f64, outcome: f64) -> (f64, f64) {
        let n = 40_001;
        let half = 12.0 * prior_var.sqrt().max(1.0);
        let step = 2.0 * half / (n - 1) as f64;
        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for i in 0..n {
            let p = -half + i as f64 * step;
            let prior = (-p * p / (2.0 * prior_var)).exp();
            let resid = outcome - kappa * p;
            let like = (-resid * resid / (2.0 * shot)).exp();
            let w = prior * like;
            mass += w;
            first += w * p;
            second += w * p * p;
        }
        let mean = first / mass;
        (mean, second / mass - mean * mean)
    }

    #[test]
    fn css_examples() {
        let s = ideal_css();
        assert_eq!(s.var_x(), 0.5);
        assert_eq!(s.var_p(), 0.5);
        assert_eq!(s.mean(), [0.0, 0.0]);

        let measured = GaussianState::css(&EnsembleConfig::default()).unwrap();
        assert_abs_diff_eq!(measured.var_x(), 0.53, epsilon = 1e-15);
        assert_abs_diff_eq!(measured.var_p(), 0.53, epsilon = 1e-15);

        let unpolarized = GaussianState::css(&EnsembleConfig {
            thermal_factor: 1.25,
            polarization: 0.0,
            ..EnsembleConfig::default()
        })
        .unwrap();
        assert_abs_diff_eq!(unpolarized.var_p(), 0.625, epsilon = 1e-15);
    }

    #[test]
    fn css_rejects_bad_config() {
        let bad = EnsembleConfig {
            atom_count: 0.0,
            ..EnsembleConfig::default()
        };
        assert!(GaussianState::css(&bad).is_err());
        let cold = EnsembleConfig {
            thermal_factor: 0.9,
            ..EnsembleConfig::default()
        };
        assert!(GaussianState::css(&cold).is_err());
    }

    #[test]
    fn rotation_identity_and_period() {
        let s = GaussianState::new([0.3, -0.7], 0.8, 0.1, 0.4).unwrap();
        let r0 = s.rotate(0.0);
        assert_eq!(r0, s);
        let full = s.rotate(2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(full.mean_x(), s.mean_x(), epsilon = 1e-12);
        assert_abs_diff_eq!(full.mean_p(), s.mean_p(), epsilon = 1e-12);
        assert_abs_diff_eq!(full.var_x(), s.var_x(), epsilon = 1e-12);
        assert_abs_diff_eq!(full.var_p(), s.var_p(), epsilon = 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_quadratures() {
        let s = GaussianState::new([1.0, 2.0], 0.1, 0.0, 2.5).unwrap();
        let r = s.rotate(std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(r.var_x(), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.var_p(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean_x(), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean_p(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_preserves_determinant() {
        let s = GaussianState::new([0.2, 0.4], 0.9, 0.2, 0.5).unwrap();
        let det = s.det_cov();
        for theta in [0.1, 0.7, 1.9, 4.4] {
            let r = s.rotate(theta);
            assert_abs_diff_eq!(r.det_cov(), det, epsilon = 1e-12 * det.abs());
        }
    }

    #[test]
    fn filter_update_matches_substitution() {
        let s = ideal_css();
        let updated = s.filter_update(&MeasurementModel::new(1.0), 0.37);
        assert_abs_diff_eq!(updated.var_p(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn filter_update_matches_grid_bayes() {
        let s = ideal_css();
        let model = MeasurementModel::new(2.0);
        let updated = s.filter_update(&model, 1.0);
        assert_abs_diff_eq!(updated.mean_p(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(updated.var_p(), 0.1, epsilon = 1e-15);
        let (grid_mean, grid_var) = grid_posterior(0.5, 2.0, 0.5, 1.0);
        assert_abs_diff_eq!(updated.mean_p(), grid_mean, epsilon = 1e-9);
        assert_abs_diff_eq!(updated.var_p(), grid_var, epsilon = 1e-9);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let s = GaussianState::new([0.1, -0.2], 0.6, 0.05, 0.7).unwrap();
        let updated = s.filter_update(&MeasurementModel::new(0.0), 123.0);
        assert_eq!(updated, s);
        let kicked = s.backaction_kick(&MeasurementModel::new(0.0));
        assert_eq!(kicked, s);
    }

    #[test]
    fn squeezed_prior_stays_squeezed() {
        // A perfectly squeezed p is legal and the update leaves it at zero.
        let s = GaussianState {
            mean: [0.0, 0.3],
            var_x: 10.0,
            cov_xp: 0.0,
            var_p: 0.0,
        };
        let updated = s.filter_update(&MeasurementModel::new(1.5), 2.0);
        assert_eq!(updated.var_p(), 0.0);
        assert_eq!(updated.mean_p(), 0.3);
    }

    #[test]
    fn backaction_example_values() {
        let s = ideal_css();
        let model = MeasurementModel::new(1.0);
        let once = s.backaction_kick(&model);
        assert_abs_diff_eq!(once.var_x(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(once.var_p(), 0.5, epsilon = 1e-15);
        let twice = once.backaction_kick(&model);
        assert_abs_diff_eq!(twice.var_x(), 1.5, epsilon = 1e-15);
        assert!(twice.det_cov() >= 0.25 - HEISENBERG_TOL);
    }

    // Two-mode oracle: atom (x_A, p_A) and probe (x_L, p_L) evolve under the
    // QND symplectic map, then the probe readout x_L is conditioned away.
    // The reduced atom state must match filter_update + backaction_kick.
    fn two_mode_measurement(
        state: &GaussianState,
        kappa: f64,
        shot: f64,
        outcome: f64,
    ) -> GaussianState {
        // Indices: 0 x_A, 1 p_A, 2 x_L, 3 p_L.
        let mut cov = [[0.0_f64; 4]; 4];
        cov[0][0] = state.var_x();
        cov[0][1] = state.cov_xp();
        cov[1][0] = state.cov_xp();
        cov[1][1] = state.var_p();
        cov[2][2] = shot;
        cov[3][3] = PROBE_BACKACTION_VARIANCE;
        let mut mean = [state.mean_x(), state.mean_p(), 0.0, 0.0];

        // x_A -> x_A + kappa p_L ; x_L -> x_L + kappa p_A.
        let mut s = [[0.0_f64; 4]; 4];
        for (i, row) in s.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        s[0][3] = kappa;
        s[2][1] = kappa;

        let mut new_mean = [0.0_f64; 4];
        let mut tmp = [[0.0_f64; 4]; 4];
        let mut new_cov = [[0.0_f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                new_mean[i] += s[i][j] * mean[j];
                for k in 0..4 {
                    tmp[i][j] += s[i][k] * cov[k][j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    new_cov[i][j] += tmp[i][k] * s[j][k];
                }
            }
        }
        mean = new_mean;

        // Condition on x_L' = outcome.
        let vm = new_cov[2][2];
        let innov = outcome - mean[2];
        let mx = mean[0] + new_cov[0][2] * innov / vm;
        let mp = mean[1] + new_cov[1][2] * innov / vm;
        GaussianState {
            mean: [mx, mp],
            var_x: new_cov[0][0] - new_cov[0][2] * new_cov[0][2] / vm,
            cov_xp: new_cov[0][1] - new_cov[0][2] * new_cov[1][2] / vm,
            var_p: new_cov[1][1] - new_cov[1][2] * new_cov[1][2] / vm,
        }
    }

    #[test]
    fn kick_plus_filter_matches_two_mode_model() {
        let state = GaussianState::new([0.4, -0.1], 0.8, 0.12, 0.45).unwrap();
        for (kappa, outcome) in [(0.7, 0.3), (1.0, -1.2), (2.0, 0.9)] {
            let model = MeasurementModel::new(kappa);
            let ours = state.filter_update(&model, outcome).backaction_kick(&model);
            let oracle = two_mode_measurement(&state, kappa, 0.5, outcome);
            assert_abs_diff_eq!(ours.mean_x(), oracle.mean_x(), epsilon = 1e-12);
            assert_abs_diff_eq!(ours.mean_p(), oracle.mean_p(), epsilon = 1e-12);
            assert_abs_diff_eq!(ours.var_x(), oracle.var_x(), epsilon = 1e-12);
            assert_abs_diff_eq!(ours.cov_xp(), oracle.cov_xp(), epsilon = 1e-12);
            assert_abs_diff_eq!(ours.var_p(), oracle.var_p(), epsilon = 1e-12);
        }
    }

    #[test]
    fn loss_channel_examples() {
        let s = ideal_css();
        assert_eq!(s.loss_channel(0.0, 0.5).unwrap(), s);

        let squeezed = GaussianState {
            mean: [0.0, 0.0],
            var_x: 0.1,
            cov_xp: 0.0,
            var_p: 0.1,
        };
        let half = squeezed.loss_channel(0.5, 0.5).unwrap();
        assert_abs_diff_eq!(half.var_x(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(half.var_p(), 0.3, epsilon = 1e-15);

        let displaced = GaussianState::new([2.0, -1.0], 0.7, 0.0, 0.6).unwrap();
        let reset = displaced.loss_channel(1.0, 0.5).unwrap();
        assert_eq!(reset.mean(), [0.0, 0.0]);
        assert_abs_diff_eq!(reset.var_x(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(reset.var_p(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn loss_channel_rejects_bad_beta() {
        let s = ideal_css();
        assert!(s.loss_channel(-0.1, 0.5).is_err());
        assert!(s.loss_channel(1.1, 0.5).is_err());
        assert!(s.loss_channel(0.5, 0.1).is_err());
    }

    #[test]
    fn loss_contracts_distance_to_reset_exactly() {
        let s = GaussianState::new([0.0, 0.0], 0.9, 0.2, 0.35).unwrap();
        let reset = 0.6;
        for beta in [0.1, 0.4, 0.9] {
            let out = s.loss_channel(beta, reset).unwrap();
            assert_abs_diff_eq!(
                out.var_x() - reset,
                (1.0 - beta) * (s.var_x() - reset),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                out.var_p() - reset,
                (1.0 - beta) * (s.var_p() - reset),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(out.cov_xp(), (1.0 - beta) * s.cov_xp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let s = ideal_css();
        let model = MeasurementModel::new(1.3);
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let (m1, s1) = s.sample_outcome(&model, &mut r1);
        let (m2, s2) = s.sample_outcome(&model, &mut r2);
        assert_eq!(m1.to_bits(), m2.to_bits());
        assert_eq!(s1, s2);
    }

    #[test]
    fn outcome_variance_matches_predictive_law() {
        let s = ideal_css();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;

        for (kappa, expected) in [(1.0, 1.0), (0.0, 0.5)] {
            let model = MeasurementModel::new(kappa);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let (m, _) = s.sample_outcome(&model, &mut rng);
                sum += m;
                sumsq += m * m;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            assert!(
                (var - expected).abs() < 0.01 * expected,
                "kappa={kappa}: empirical {var} vs expected {expected}"
            );
        }
    }

    #[test]
    fn information_adds_across_sequential_updates() {
        let s = ideal_css();
        let (k1, k2) = (0.8, 1.7);
        let chained = s
            .filter_update(&MeasurementModel::new(k1), 0.4)
            .filter_update(&MeasurementModel::new(k2), -0.9);
        let keff = (k1 * k1 + k2 * k2).sqrt();
        let single = s.filter_update(&MeasurementModel::new(keff), 0.0);
        assert_abs_diff_eq!(
            chained.var_p(),
            single.var_p(),
            epsilon = 1e-12 * single.var_p()
        );
    }
}
