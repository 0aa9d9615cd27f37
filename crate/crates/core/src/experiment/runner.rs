//! Trajectory Monte Carlo for the two- and three-pulse schemes.
//!
//! Each trajectory simulates the hidden measured quadrature through the
//! strobe schedule (loss noise per strobe) and draws every readout from it.
//! Two estimators of the conditional variance at the verification anchor are
//! accumulated:
//!
//! - the mean-square error of the forward (two-pulse) or retrodicted
//!   (three-pulse) estimate of the hidden quadrature, which is the
//!   conditional variance itself and carries a relative standard error of
//!   sqrt(2/N);
//! - the residual variance of the cross-trajectory regression of the
//!   integrated verification readout on the record statistics, converted
//!   back through the verification coupling. This reproduces what a real
//!   experiment measures and is reported alongside.
//!
//! Trajectories are split over fixed blocks with per-block RNG streams and
//! reduced in block order, so results are bit-identical for any worker
//! thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{EnsembleConfig, CSS_VARIANCE};
use crate::rng::{block_ranges, block_rng, derive_seed, TRAJECTORY_BLOCKS};

use super::chain;
use super::config::{DecoherenceConfig, SequenceConfig, SequencePlan};
use super::metrics::SqueezingMetrics;

const SHOT: f64 = CSS_VARIANCE;

// ---------------------------------------------------------------------------
// Precomputed per-run constants
// ---------------------------------------------------------------------------

/// Per-strobe truth-evolution constants of one segment.
#[derive(Clone, Copy, Debug, Default)]
struct SegmentNoise {
    n: usize,
    kappa: f64,
    /// Amplitude decay per strobe, sqrt(1 - beta).
    amp: f64,
    /// Loss-noise standard deviation per strobe, sqrt(beta * reset).
    noise: f64,
}

impl SegmentNoise {
    fn from_plan(plan: &super::config::SegmentPlan, reset: f64) -> Self {
        Self {
            n: plan.n_strobes,
            kappa: plan.kappa_strobe,
            amp: (1.0 - plan.beta_strobe).sqrt(),
            noise: (plan.beta_strobe * reset).sqrt(),
        }
    }
}

struct RunSetup {
    plan: SequencePlan,
    seg1: SegmentNoise,
    seg2: SegmentNoise,
    seg3: SegmentNoise,
    gap_amp: f64,
    gap_noise: f64,
    /// Forward filter gains of the squeezing strobes.
    gains: Vec<f64>,
    /// Deterministic filter variance at the anchor.
    forward_variance: f64,
    /// Weight of each retrodiction readout in the effect statistic,
    /// back-propagated to the anchor (forward strobe order).
    effect_weights: Vec<f64>,
    /// Deterministic retrodicted variance at the anchor.
    retrodicted_variance: f64,
    /// Squared coupling of the integrated verification readout.
    kappa2_eff_sq: f64,
    shot_std: f64,
    initial_std: f64,
    three_pulse: bool,
}

impl RunSetup {
    fn new(
        seq: &SequenceConfig,
        dec: &DecoherenceConfig,
        ens: &EnsembleConfig,
        three_pulse: bool,
    ) -> Result<Self> {
        let plan = SequencePlan::new(seq, dec, ens)?;
        let reset = plan.reset_variance;

        // Forward filter variance recursion; gains reproduce the per-strobe
        // conditional mean update.
        let mut v = plan.initial_variance;
        let mut gains = Vec::with_capacity(plan.squeezing.n_strobes);
        for _ in 0..plan.squeezing.n_strobes {
            let lost = (1.0 - plan.squeezing.beta_strobe) * v + plan.squeezing.beta_strobe * reset;
            let kappa = plan.squeezing.kappa_strobe;
            let denom = kappa * kappa * lost + SHOT;
            gains.push(kappa * lost / denom);
            v = lost * SHOT / denom;
        }
        v = (1.0 - plan.beta_gap) * v + plan.beta_gap * reset;
        let forward_variance = v;

        // Backward effect bookkeeping: the precision recursion is
        // record-independent, and the record enters as a fixed linear
        // combination of the retrodiction readouts. Walking the strobes
        // backward, each absorbed readout is later attenuated by every
        // remaining backward loss step, so its weight is kappa/shot times
        // the product of the attenuation factors of all earlier strobes,
        // the gap, and the verification train.
        let mut lambda = 0.0;
        let mut att = Vec::with_capacity(plan.retrodiction.n_strobes);
        for _ in 0..plan.retrodiction.n_strobes {
            lambda += plan.retrodiction.kappa_sq_strobe / SHOT;
            let keep = 1.0 - plan.retrodiction.beta_strobe;
            let g = nu_attenuation(lambda, plan.retrodiction.beta_strobe, reset);
            att.push(g);
            lambda = keep * lambda / (1.0 + lambda * plan.retrodiction.beta_strobe * reset);
        }
        let mut tail = 1.0;
        if plan.retrodiction.n_strobes > 0 {
            let g = nu_attenuation(lambda, plan.beta_gap, reset);
            tail *= g;
            lambda = (1.0 - plan.beta_gap) * lambda / (1.0 + lambda * plan.beta_gap * reset);
            for _ in 0..plan.verification.n_strobes {
                let beta = plan.verification.beta_strobe;
                let g = nu_attenuation(lambda, beta, reset);
                tail *= g;
                lambda = (1.0 - beta) * lambda / (1.0 + lambda * beta * reset);
            }
        }
        // att[j] is the attenuation applied at backward step j, which absorbs
        // forward strobe n3-1-j. A readout absorbed at step j is attenuated
        // by att[j..] and then by the tail, so the forward-order weight of
        // strobe f uses the suffix product starting at j = n3-1-f: the
        // earliest strobe sits closest to the anchor and decays least.
        let n3 = plan.retrodiction.n_strobes;
        let mut suffix = vec![1.0; n3 + 1];
        for j in (0..n3).rev() {
            suffix[j] = suffix[j + 1] * att[j];
        }
        let mut effect_weights = vec![0.0; n3];
        for (f, weight) in effect_weights.iter_mut().enumerate() {
            *weight = plan.retrodiction.kappa_strobe / SHOT * tail * suffix[n3 - 1 - f];
        }

        let retrodicted_variance = 1.0 / (1.0 / forward_variance + lambda);
        let kappa2_eff_sq = plan.verification.kappa_squared_total();

        Ok(Self {
            seg1: SegmentNoise::from_plan(&plan.squeezing, reset),
            seg2: SegmentNoise::from_plan(&plan.verification, reset),
            seg3: SegmentNoise::from_plan(&plan.retrodiction, reset),
            gap_amp: (1.0 - plan.beta_gap).sqrt(),
            gap_noise: (plan.beta_gap * reset).sqrt(),
            gains,
            forward_variance,
            effect_weights,
            retrodicted_variance,
            kappa2_eff_sq,
            shot_std: SHOT.sqrt(),
            initial_std: plan.initial_variance.sqrt(),
            plan,
            three_pulse,
        })
    }
}

/// Attenuation of the effect statistic nu = lambda * mu through one backward
/// loss step at the given precision: nu' = nu * sqrt(1-beta) / (1 + lambda beta reset).
fn nu_attenuation(lambda: f64, beta: f64, reset: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    (1.0 - beta).sqrt() / (1.0 + lambda * beta * reset)
}

// ---------------------------------------------------------------------------
// Per-block accumulation
// ---------------------------------------------------------------------------

/// Streaming sums of one trajectory block.
#[derive(Clone, Copy, Debug, Default)]
struct BlockSums {
    n: f64,
    // Mean-square estimation error of the hidden quadrature at the anchor.
    err_sq: f64,
    // Regression of the integrated verification readout y on the filter
    // mean u and the effect statistic w.
    su: f64,
    sw: f64,
    sy: f64,
    suu: f64,
    suw: f64,
    sww: f64,
    suy: f64,
    swy: f64,
    syy: f64,
}

impl BlockSums {
    fn add(&mut self, other: &BlockSums) {
        self.n += other.n;
        self.err_sq += other.err_sq;
        self.su += other.su;
        self.sw += other.sw;
        self.sy += other.sy;
        self.suu += other.suu;
        self.suw += other.suw;
        self.sww += other.sww;
        self.suy += other.suy;
        self.swy += other.swy;
        self.syy += other.syy;
    }

    fn mse(&self) -> f64 {
        self.err_sq / self.n
    }

    /// Residual variance of y on (1, u) or (1, u, w).
    fn residual_variance(&self, three_pulse: bool) -> f64 {
        if three_pulse {
            let a = [
                [self.n, self.su, self.sw],
                [self.su, self.suu, self.suw],
                [self.sw, self.suw, self.sww],
            ];
            let b = [self.sy, self.suy, self.swy];
            let coef = solve3(a, b);
            let ssr = self.syy - coef[0] * self.sy - coef[1] * self.suy - coef[2] * self.swy;
            ssr / (self.n - 3.0)
        } else {
            let det = self.n * self.suu - self.su * self.su;
            let b1 = (self.n * self.suy - self.su * self.sy) / det;
            let b0 = (self.sy - b1 * self.su) / self.n;
            let ssr = self.syy - b0 * self.sy - b1 * self.suy;
            ssr / (self.n - 2.0)
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    let mut index = [0usize, 1, 2];
    for col in 0..3 {
        let mut best = col;
        for row in (col + 1)..3 {
            if a[index[row]][col].abs() > a[index[best]][col].abs() {
                best = row;
            }
        }
        index.swap(col, best);
        let pivot = a[index[col]][col];
        for row in (col + 1)..3 {
            let factor = a[index[row]][col] / pivot;
            for k in col..3 {
                a[index[row]][k] -= factor * a[index[col]][k];
            }
            b[index[row]] -= factor * b[index[col]];
        }
    }
    let mut coef = [0.0; 3];
    for i in (0..3).rev() {
        let mut sum = b[index[i]];
        for j in (i + 1)..3 {
            sum -= a[index[i]][j] * coef[j];
        }
        coef[i] = sum / a[index[i]][i];
    }
    coef
}

fn simulate_block(setup: &RunSetup, count: usize, seed: u64, block: u64) -> BlockSums {
    let mut rng = block_rng(seed, block);
    let mut sums = BlockSums::default();
    let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    for _ in 0..count {
        // Hidden measured quadrature of this trajectory.
        let mut p = setup.initial_std * normal(&mut rng);
        let mut filter_mean = 0.0;

        // Squeezing train: readouts update the filter mean.
        let seg = setup.seg1;
        for i in 0..seg.n {
            p = seg.amp * p + seg.noise * normal(&mut rng);
            let m = seg.kappa * p + setup.shot_std * normal(&mut rng);
            filter_mean *= seg.amp;
            filter_mean += setup.gains[i] * (m - seg.kappa * filter_mean);
        }

        // Gap before verification.
        p = setup.gap_amp * p + setup.gap_noise * normal(&mut rng);
        filter_mean *= setup.gap_amp;

        // Anchor: the quantity every estimator targets.
        let p_anchor = p;

        // Verification train: integrated readout only.
        let seg = setup.seg2;
        let mut m2_acc = 0.0;
        for _ in 0..seg.n {
            p = seg.amp * p + seg.noise * normal(&mut rng);
            m2_acc += seg.kappa * p + setup.shot_std * normal(&mut rng);
        }
        let m2 = m2_acc / (seg.n as f64).sqrt();

        // Retrodiction train: readouts accumulate the effect statistic.
        let mut nu = 0.0;
        if setup.three_pulse {
            p = setup.gap_amp * p + setup.gap_noise * normal(&mut rng);
            let seg = setup.seg3;
            for weight in setup.effect_weights.iter().take(seg.n) {
                p = seg.amp * p + seg.noise * normal(&mut rng);
                let m = seg.kappa * p + setup.shot_std * normal(&mut rng);
                nu += weight * m;
            }
        }

        let estimate = if setup.three_pulse {
            setup.retrodicted_variance * (filter_mean / setup.forward_variance + nu)
        } else {
            filter_mean
        };
        let err = p_anchor - estimate;

        sums.n += 1.0;
        sums.err_sq += err * err;
        sums.su += filter_mean;
        sums.sw += nu;
        sums.sy += m2;
        sums.suu += filter_mean * filter_mean;
        sums.suw += filter_mean * nu;
        sums.sww += nu * nu;
        sums.suy += filter_mean * m2;
        sums.swy += nu * m2;
        sums.syy += m2 * m2;
    }
    sums
}

// ---------------------------------------------------------------------------
// Public runners
// ---------------------------------------------------------------------------

fn run_sequence(
    seq: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
    n_trajectories: usize,
    seed: u64,
    three_pulse: bool,
) -> Result<SqueezingMetrics> {
    if n_trajectories < 10_000 {
        return Err(Error::statistics(format!(
            "{n_trajectories} trajectories; at least 10000 required"
        )));
    }
    let setup = RunSetup::new(seq, dec, ens, three_pulse)?;

    let ranges = block_ranges(n_trajectories, TRAJECTORY_BLOCKS);
    let blocks: Vec<BlockSums> = (0..TRAJECTORY_BLOCKS)
        .into_par_iter()
        .map(|b| simulate_block(&setup, ranges[b].len(), seed, b as u64))
        .collect();

    let mut total = BlockSums::default();
    for block in &blocks {
        total.add(block);
    }

    // Primary estimator: mean-square estimation error at the anchor.
    let conditional_variance = total.mse();
    let conditional_variance_stderr = batch_stderr(&blocks, |b| b.mse());

    // Readout-route estimator: regression residual converted through the
    // verification coupling. Undefined when the probe is off.
    let (readout_variance, readout_variance_stderr) = if setup.kappa2_eff_sq > 0.0 {
        let to_readout =
            |b: &BlockSums| (b.residual_variance(three_pulse) - SHOT) / setup.kappa2_eff_sq;
        (to_readout(&total), batch_stderr(&blocks, to_readout))
    } else {
        (f64::NAN, f64::NAN)
    };

    SqueezingMetrics::from_conditional_variance(
        conditional_variance,
        conditional_variance_stderr,
        readout_variance,
        readout_variance_stderr,
        ens,
        setup.plan.jx_survival_at_verification(),
    )
}

fn batch_stderr(blocks: &[BlockSums], statistic: impl Fn(&BlockSums) -> f64) -> f64 {
    let values: Vec<f64> = blocks.iter().map(&statistic).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Simulates the squeezing-and-verification scheme. `tau3` must be zero.
pub fn run_two_pulse(
    seq: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
    n_trajectories: usize,
    seed: u64,
) -> Result<SqueezingMetrics> {
    if seq.tau3 != 0.0 {
        return Err(Error::config("two-pulse scheme requires tau3 = 0"));
    }
    run_sequence(seq, dec, ens, n_trajectories, seed, false)
}

/// Simulates the full scheme with retrodiction over the third record.
pub fn run_three_pulse(
    seq: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
    n_trajectories: usize,
    seed: u64,
) -> Result<SqueezingMetrics> {
    if !(seq.tau1 > 0.0 && seq.tau2 > 0.0 && seq.tau3 > 0.0) {
        return Err(Error::config(
            "three-pulse scheme requires tau1, tau2, tau3 > 0",
        ));
    }
    run_sequence(seq, dec, ens, n_trajectories, seed, true)
}

// ---------------------------------------------------------------------------
// Sweeps and comparisons
// ---------------------------------------------------------------------------

/// One cell of a duration sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepCell {
    pub tau1: f64,
    pub tau3: f64,
    pub metrics: SqueezingMetrics,
}

/// Cartesian sweep over squeezing and retrodiction durations. Cells with
/// `tau3 = 0` run the two-pulse scheme.
pub fn sweep_grid(
    tau1_values: &[f64],
    tau3_values: &[f64],
    seq_template: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
    n_trajectories: usize,
    seed: u64,
) -> Result<Vec<SweepCell>> {
    if tau1_values.is_empty() || tau3_values.is_empty() {
        return Err(Error::config("sweep duration lists must be non-empty"));
    }
    let mut cells = Vec::with_capacity(tau1_values.len() * tau3_values.len());
    for (i, &tau1) in tau1_values.iter().enumerate() {
        for (j, &tau3) in tau3_values.iter().enumerate() {
            let seq = SequenceConfig {
                tau1,
                tau3,
                ..*seq_template
            };
            let cell_seed = derive_seed(seed, (i * tau3_values.len() + j) as u64);
            let metrics = if tau3 == 0.0 {
                run_two_pulse(&seq, dec, ens, n_trajectories, cell_seed)?
            } else {
                run_three_pulse(&seq, dec, ens, n_trajectories, cell_seed)?
            };
            cells.push(SweepCell {
                tau1,
                tau3,
                metrics,
            });
        }
    }
    Ok(cells)
}

/// How the three-pulse scheme divides a total probing budget.
#[derive(Clone, Debug)]
pub enum SplitRule {
    /// Scan the deterministic chain over split fractions and take the best.
    OptimalScan,
    /// Fixed fraction of the total assigned to the squeezing train.
    Fixed(f64),
}

/// Two- versus three-pulse comparison at one total duration.
#[derive(Clone, Copy, Debug)]
pub struct ComparePoint {
    pub total: f64,
    pub tau1_split: f64,
    pub tau3_split: f64,
    pub two_pulse: SqueezingMetrics,
    pub three_pulse: SqueezingMetrics,
}

/// Runs both schemes at every total duration: the two-pulse scheme spends
/// the whole budget on the squeezing train, the three-pulse scheme splits it
/// per `rule`.
pub fn compare_total_duration(
    totals: &[f64],
    rule: &SplitRule,
    seq_template: &SequenceConfig,
    dec: &DecoherenceConfig,
    ens: &EnsembleConfig,
    n_trajectories: usize,
    seed: u64,
) -> Result<Vec<ComparePoint>> {
    if totals.is_empty() {
        return Err(Error::config("total duration list must be non-empty"));
    }
    let fractions = chain::default_split_fractions();
    let mut points = Vec::with_capacity(totals.len());
    for (i, &total) in totals.iter().enumerate() {
        if total <= 0.0 {
            return Err(Error::config("total durations must be positive"));
        }
        let (tau1_split, tau3_split) = match rule {
            SplitRule::OptimalScan => {
                chain::optimal_split(total, &fractions, seq_template, dec, ens)?
            }
            SplitRule::Fixed(f) => {
                if !(*f > 0.0 && *f < 1.0) {
                    return Err(Error::config("split fraction must lie in (0, 1)"));
                }
                (f * total, (1.0 - f) * total)
            }
        };
        let two_seq = SequenceConfig {
            tau1: total,
            tau3: 0.0,
            ..*seq_template
        };
        let three_seq = SequenceConfig {
            tau1: tau1_split,
            tau3: tau3_split,
            ..*seq_template
        };
        let two = run_two_pulse(&two_seq, dec, ens, n_trajectories, derive_seed(seed, 2 * i as u64))?;
        let three = run_three_pulse(
            &three_seq,
            dec,
            ens,
            n_trajectories,
            derive_seed(seed, 2 * i as u64 + 1),
        )?;
        points.push(ComparePoint {
            total,
            tau1_split,
            tau3_split,
            two_pulse: two,
            three_pulse: three,
        });
    }
    Ok(points)
}
