//! Brute-force evaluators of the exact three-measurement outcome chain.
//!
//! The pulse measurement operators are diagonal in p_A, so the joint outcome
//! law collapses to a one-dimensional integral over the hidden quadrature
//! eigenvalue. This module evaluates that integral by dense trapezoid
//! quadrature and, independently, by Monte Carlo regression, so every closed
//! form in [`crate::pqs`] can be validated against routes that share none of
//! its algebra.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CSS_VARIANCE;
use crate::pqs::OutcomePrediction;
use crate::rng::{block_ranges, block_rng, TRAJECTORY_BLOCKS};

/// Largest tolerated probability-mass defect of the quadrature grid.
pub const MASS_DEFECT_TOL: f64 = 1e-6;

/// Readout shot variance of the measurement kernel (coherent probe).
const SHOT: f64 = CSS_VARIANCE;

// ---------------------------------------------------------------------------
// Grid quadrature
// ---------------------------------------------------------------------------

/// Resolution of the quadrature grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-extent of each grid, in standard deviations of the prepared state.
    pub half_width: f64,
    /// Node count per grid (odd, so zero is a node).
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            points: 2001,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width >= 6.0) {
            return Err(Error::config("grid half_width must be >= 6"));
        }
        if self.points < 401 || self.points.is_multiple_of(2) {
            return Err(Error::config("grid points must be odd and >= 401"));
        }
        Ok(())
    }
}

fn gauss_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Trapezoid weights: half weight at the two end nodes.
fn trapz_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Precomputed quadrature state for one coupling triple.
#[derive(Clone, Debug)]
pub struct GridOracle {
    kappas: [f64; 3],
    prior_variance: f64,
    grid: GridSpec,
    nodes: Vec<f64>,
    prior_weights: Vec<f64>,
    mass_defect: f64,
}

impl GridOracle {
    /// Builds the hidden-quadrature grid and verifies that the configured
    /// grids capture all but [`MASS_DEFECT_TOL`] of the joint probability.
    pub fn new(kappas: [f64; 3], prior_variance: f64, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        for k in kappas {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::config("couplings must be finite and >= 0"));
            }
        }
        if !(prior_variance.is_finite() && prior_variance > 0.0) {
            return Err(Error::config("prior variance must be positive"));
        }
        let span = grid.half_width * prior_variance.sqrt();
        Self::with_span(kappas, prior_variance, grid, span)
    }

    /// Internal constructor with an explicit hidden-variable span; exposed to
    /// tests so the mass-defect guard can be exercised.
    pub(crate) fn with_span(
        kappas: [f64; 3],
        prior_variance: f64,
        grid: GridSpec,
        span: f64,
    ) -> Result<Self> {
        let n = grid.points;
        let step = 2.0 * span / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -span + i as f64 * step).collect();
        let prior_weights: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(i, &a)| trapz_weight(i, n) * gauss_pdf(a, 0.0, prior_variance) * step)
            .collect();

        let mut oracle = Self {
            kappas,
            prior_variance,
            grid,
            nodes,
            prior_weights,
            mass_defect: 0.0,
        };
        oracle.mass_defect = oracle.compute_mass_defect();
        if oracle.mass_defect > MASS_DEFECT_TOL {
            return Err(Error::accuracy(format!(
                "grid mass defect {:.3e} exceeds {:.0e}",
                oracle.mass_defect, MASS_DEFECT_TOL
            )));
        }
        Ok(oracle)
    }

    pub fn kappas(&self) -> [f64; 3] {
        self.kappas
    }

    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    /// Joint normalization error, integrated by Fubini: for each hidden value
    /// the three readout kernels are integrated over their own grids, then
    /// the prior over the hidden grid.
    fn compute_mass_defect(&self) -> f64 {
        let m_nodes = 801;
        let mut total = 0.0;
        for (i, &a) in self.nodes.iter().enumerate() {
            let mut product = 1.0;
            for &kappa in &self.kappas {
                let sigma = (kappa * kappa * self.prior_variance + SHOT).sqrt();
                let span = self.grid.half_width * sigma;
                let step = 2.0 * span / (m_nodes - 1) as f64;
                let mut mass = 0.0;
                for j in 0..m_nodes {
                    let m = -span + j as f64 * step;
                    mass += trapz_weight(j, m_nodes) * gauss_pdf(m, kappa * a, SHOT) * step;
                }
                product *= mass;
            }
            total += self.prior_weights[i] * product;
        }
        (1.0 - total).abs()
    }

    /// Pr(m1, m2, m3): the hidden-variable integral of the prior times the
    /// three readout kernels, normalized as a density over the outcomes.
    pub fn joint_density(&self, m1: f64, m2: f64, m3: f64) -> f64 {
        let [k1, k2, k3] = self.kappas;
        self.nodes
            .iter()
            .zip(&self.prior_weights)
            .map(|(&a, &w)| {
                w * gauss_pdf(m1, k1 * a, SHOT)
                    * gauss_pdf(m2, k2 * a, SHOT)
                    * gauss_pdf(m3, k3 * a, SHOT)
            })
            .sum()
    }

    /// Mean and variance of the normalized slice Pr(m2 | m1, m3), computed
    /// by quadrature over the m2 grid.
    pub fn conditional(&self, m1: f64, m3: f64) -> Result<OutcomePrediction> {
        let [k1, k2, k3] = self.kappas;

        // Posterior weight of each hidden node given the two fixed readouts.
        let posterior: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.prior_weights)
            .map(|(&a, &w)| w * gauss_pdf(m1, k1 * a, SHOT) * gauss_pdf(m3, k3 * a, SHOT))
            .collect();
        let posterior_mass: f64 = posterior.iter().sum();
        if !(posterior_mass.is_finite() && posterior_mass > 0.0) {
            return Err(Error::accuracy(
                "conditioning readouts fall outside the resolvable grid",
            ));
        }
        let hidden_mean: f64 = self
            .nodes
            .iter()
            .zip(&posterior)
            .map(|(&a, &w)| w * a)
            .sum::<f64>()
            / posterior_mass;

        // m2 grid centred on the oracle's own posterior prediction.
        let n = self.grid.points;
        let sigma = (k2 * k2 * self.prior_variance + SHOT).sqrt();
        let span = self.grid.half_width * sigma;
        let centre = k2 * hidden_mean;
        let step = 2.0 * span / (n - 1) as f64;

        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for j in 0..n {
            let m2 = centre - span + j as f64 * step;
            let mut f = 0.0;
            for (&a, &w) in self.nodes.iter().zip(&posterior) {
                f += w * gauss_pdf(m2, k2 * a, SHOT);
            }
            let wj = trapz_weight(j, n) * step;
            mass += wj * f;
            first += wj * f * m2;
            second += wj * f * m2 * m2;
        }
        let mean = first / mass;
        let variance = second / mass - mean * mean;
        Ok(OutcomePrediction { mean, variance })
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo regression
// ---------------------------------------------------------------------------

/// One simulated trajectory of the three-readout chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Hidden p_A eigenvalue drawn for the trajectory.
    pub hidden: f64,
}

/// Draws one trajectory: hidden value from the prior, readouts from the
/// measurement kernel.
pub fn sample_joint<R: Rng + ?Sized>(
    kappas: [f64; 3],
    prior_variance: f64,
    rng: &mut R,
) -> JointSample {
    let hidden = prior_variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let shot = SHOT.sqrt();
    let m1 = kappas[0] * hidden + shot * rng.sample::<f64, _>(StandardNormal);
    let m2 = kappas[1] * hidden + shot * rng.sample::<f64, _>(StandardNormal);
    let m3 = kappas[2] * hidden + shot * rng.sample::<f64, _>(StandardNormal);
    JointSample { m1, m2, m3, hidden }
}

/// Sufficient statistics of the regression of m2 on (1, m1, m3).
#[derive(Clone, Copy, Debug, Default)]
struct RegressionSums {
    n: f64,
    s1: f64,
    s3: f64,
    sy: f64,
    s11: f64,
    s13: f64,
    s33: f64,
    s1y: f64,
    s3y: f64,
    syy: f64,
}

impl RegressionSums {
    fn push(&mut self, sample: &JointSample) {
        let (x1, x3, y) = (sample.m1, sample.m3, sample.m2);
        self.n += 1.0;
        self.s1 += x1;
        self.s3 += x3;
        self.sy += y;
        self.s11 += x1 * x1;
        self.s13 += x1 * x3;
        self.s33 += x3 * x3;
        self.s1y += x1 * y;
        self.s3y += x3 * y;
        self.syy += y * y;
    }

    fn add(&mut self, other: &RegressionSums) {
        self.n += other.n;
        self.s1 += other.s1;
        self.s3 += other.s3;
        self.sy += other.sy;
        self.s11 += other.s11;
        self.s13 += other.s13;
        self.s33 += other.s33;
        self.s1y += other.s1y;
        self.s3y += other.s3y;
        self.syy += other.syy;
    }

    fn subtract(&self, other: &RegressionSums) -> RegressionSums {
        RegressionSums {
            n: self.n - other.n,
            s1: self.s1 - other.s1,
            s3: self.s3 - other.s3,
            sy: self.sy - other.sy,
            s11: self.s11 - other.s11,
            s13: self.s13 - other.s13,
            s33: self.s33 - other.s33,
            s1y: self.s1y - other.s1y,
            s3y: self.s3y - other.s3y,
            syy: self.syy - other.syy,
        }
    }

    /// Least-squares fit; exact conditional moments for jointly Gaussian
    /// variables. Returns (coefficients, residual variance).
    #[allow(clippy::needless_range_loop)]
    fn solve(&self) -> ([f64; 3], f64) {
        let mut a = [
            [self.n, self.s1, self.s3],
            [self.s1, self.s11, self.s13],
            [self.s3, self.s13, self.s33],
        ];
        let mut b = [self.sy, self.s1y, self.s3y];
        // Gaussian elimination with partial pivoting on the 3x3 system.
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
                    let lead = a[index[col]][k];
                    a[index[row]][k] -= factor * lead;
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
        let ssr = self.syy - coef[0] * self.sy - coef[1] * self.s1y - coef[2] * self.s3y;
        let residual = ssr / (self.n - 3.0);
        (coef, residual)
    }
}

/// Cross-check estimate from trajectories falling in a window around fixed
/// conditioning readouts.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BinnedEstimate {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Options for the Monte Carlo estimator.
#[derive(Clone, Copy, Debug, Default)]
pub struct McOptions {
    /// Also estimate the conditional law by binning trajectories with
    /// |m1 - target.0| and |m3 - target.1| below the window half-width.
    pub binning: Option<BinWindow>,
}

#[derive(Clone, Copy, Debug)]
pub struct BinWindow {
    pub m1: f64,
    pub m3: f64,
    pub half_width: f64,
}

/// Monte Carlo estimate of the conditional law of m2 given (m1, m3).
///
/// The conditional variance is the residual variance of the least-squares
/// regression of m2 on (m1, m3) and the conditional mean is the fitted
/// linear predictor; both are exact for jointly Gaussian outcomes. Standard
/// errors come from delete-one-block jackknife over the trajectory blocks.
#[derive(Clone, Debug)]
pub struct McConditional {
    kappas: [f64; 3],
    coefficients: [f64; 3],
    residual_variance: f64,
    residual_stderr: f64,
    n_trajectories: usize,
    total: RegressionSums,
    blocks: Vec<RegressionSums>,
    pub binned: Option<BinnedEstimate>,
}

impl McConditional {
    pub fn kappas(&self) -> [f64; 3] {
        self.kappas
    }

    pub fn coefficients(&self) -> [f64; 3] {
        self.coefficients
    }

    pub fn residual_variance(&self) -> f64 {
        self.residual_variance
    }

    pub fn residual_stderr(&self) -> f64 {
        self.residual_stderr
    }

    pub fn n_trajectories(&self) -> usize {
        self.n_trajectories
    }

    /// Conditional law at specific conditioning readouts.
    pub fn predict(&self, m1: f64, m3: f64) -> OutcomePrediction {
        OutcomePrediction {
            mean: self.coefficients[0] + self.coefficients[1] * m1 + self.coefficients[2] * m3,
            variance: self.residual_variance,
        }
    }

    /// Jackknife standard error of the predicted conditional mean.
    pub fn mean_stderr(&self, m1: f64, m3: f64) -> f64 {
        jackknife_stderr(&self.total, &self.blocks, |sums| {
            let (coef, _) = sums.solve();
            coef[0] + coef[1] * m1 + coef[2] * m3
        })
    }
}

fn jackknife_stderr(
    total: &RegressionSums,
    blocks: &[RegressionSums],
    statistic: impl Fn(&RegressionSums) -> f64,
) -> f64 {
    let b = blocks.len() as f64;
    let leave_outs: Vec<f64> = blocks
        .iter()
        .map(|block| statistic(&total.subtract(block)))
        .collect();
    let mean = leave_outs.iter().sum::<f64>() / b;
    let ss: f64 = leave_outs.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

pub fn monte_carlo_conditional(
    kappas: [f64; 3],
    prior_variance: f64,
    n_trajectories: usize,
    seed: u64,
    options: McOptions,
) -> Result<McConditional> {
    if n_trajectories < 10_000 {
        return Err(Error::statistics(format!(
            "{n_trajectories} trajectories; at least 10000 required"
        )));
    }
    for k in kappas {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::config("couplings must be finite and >= 0"));
        }
    }

    let ranges = block_ranges(n_trajectories, TRAJECTORY_BLOCKS);
    struct BlockOut {
        sums: RegressionSums,
        bin_count: usize,
        bin_sum: f64,
        bin_sumsq: f64,
    }
    let per_block: Vec<BlockOut> = (0..TRAJECTORY_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let mut sums = RegressionSums::default();
            let mut bin_count = 0usize;
            let mut bin_sum = 0.0;
            let mut bin_sumsq = 0.0;
            for _ in ranges[b].clone() {
                let sample = sample_joint(kappas, prior_variance, &mut rng);
                sums.push(&sample);
                if let Some(window) = options.binning {
                    if (sample.m1 - window.m1).abs() <= window.half_width
                        && (sample.m3 - window.m3).abs() <= window.half_width
                    {
                        bin_count += 1;
                        bin_sum += sample.m2;
                        bin_sumsq += sample.m2 * sample.m2;
                    }
                }
            }
            BlockOut {
                sums,
                bin_count,
                bin_sum,
                bin_sumsq,
            }
        })
        .collect();

    let mut total = RegressionSums::default();
    let mut blocks = Vec::with_capacity(TRAJECTORY_BLOCKS);
    let mut bin_count = 0usize;
    let mut bin_sum = 0.0;
    let mut bin_sumsq = 0.0;
    for out in &per_block {
        total.add(&out.sums);
        blocks.push(out.sums);
        bin_count += out.bin_count;
        bin_sum += out.bin_sum;
        bin_sumsq += out.bin_sumsq;
    }

    let (coefficients, residual_variance) = total.solve();
    let residual_stderr = jackknife_stderr(&total, &blocks, |sums| sums.solve().1);

    let binned = options.binning.and_then(|_| {
        (bin_count >= 2).then(|| {
            let mean = bin_sum / bin_count as f64;
            BinnedEstimate {
                count: bin_count,
                mean,
                variance: (bin_sumsq - bin_count as f64 * mean * mean)
                    / (bin_count as f64 - 1.0),
            }
        })
    });

    Ok(McConditional {
        kappas,
        coefficients,
        residual_variance,
        residual_stderr,
        n_trajectories,
        total,
        blocks,
        binned,
    })
}
