//! Gaussian-process regression with a squared-exponential kernel.
//!
//! Used on the domain by the expected-improvement sampler and in one
//! dimension on the empirical range distribution by the range strategy.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::domain::BoxDomain;
use crate::math;
use crate::{Error, Point, Result};

/// Constant the posterior mean reverts to away from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMean {
    Zero,
    SampleMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    /// Per-dimension lengthscales. When `None`, `lengthscale_factor` times
    /// `reference_widths` (or the input range) is used.
    pub lengthscales: Option<Vec<f64>>,
    pub reference_widths: Option<Vec<f64>>,
    pub lengthscale_factor: f64,
    /// When `None`, the sample variance of the targets.
    pub signal_variance: Option<f64>,
    /// Diagonal jitter relative to the signal variance. Escalated by 10x
    /// up to [`MAX_JITTER`] when the Cholesky factorization fails.
    pub jitter: f64,
    /// Observation noise added to the diagonal. Without it the mean
    /// interpolates the targets.
    pub noise: Noise,
    pub prior_mean: PriorMean,
    /// Pick the lengthscale multiplier from a small grid by log marginal
    /// likelihood.
    pub refine_lengthscale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    None,
    Constant(f64),
    /// One variance per training point.
    PerPoint(Vec<f64>),
}

impl Noise {
    fn at(&self, i: usize) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Constant(v) => v.max(0.0),
            Noise::PerPoint(v) => v.get(i).copied().unwrap_or(0.0).max(0.0),
        }
    }
}

pub const MAX_JITTER: f64 = 1e-4;
const REFINE_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            lengthscales: None,
            reference_widths: None,
            lengthscale_factor: 0.3,
            signal_variance: None,
            jitter: 1e-10,
            noise: Noise::None,
            prior_mean: PriorMean::SampleMean,
            refine_lengthscale: false,
        }
    }
}

impl GpConfig {
    /// Lengthscales tied to the widths of `domain`.
    pub fn for_box(domain: &BoxDomain) -> Self {
        Self {
            reference_widths: Some(domain.widths()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    train_inputs: Vec<Point>,
    train_targets: Vec<f64>,
    lengthscales: Vec<f64>,
    signal_variance: f64,
    jitter: f64,
    prior_mean: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }
}

fn sq_exp(a: &[f64], b: &[f64], lengthscales: &[f64], signal_variance: f64) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| {
            let t = (x - y) / l;
            t * t
        })
        .sum();
    signal_variance * libm::exp(-0.5 * r2)
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

fn factorize(
    inputs: &[Point],
    centered: &DVector<f64>,
    lengthscales: &[f64],
    signal_variance: f64,
    noise: &Noise,
    jitter: f64,
) -> Result<Factorized> {
    let n = inputs.len();
    let base = DMatrix::from_fn(n, n, |i, j| {
        sq_exp(&inputs[i], &inputs[j], lengthscales, signal_variance)
    });
    let mut jitter = jitter.max(f64::MIN_POSITIVE);
    loop {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += noise.at(i) + jitter * signal_variance;
        }
        if let Some(chol) = k.cholesky() {
            let alpha = chol.solve(centered);
            if alpha.iter().all(|v| v.is_finite()) {
                return Ok(Factorized { chol, alpha, jitter });
            }
        }
        if jitter >= MAX_JITTER {
            return Err(Error::SingularCovariance(jitter));
        }
        jitter = (jitter * 10.0).min(MAX_JITTER);
    }
}

fn log_marginal_likelihood(f: &Factorized, centered: &DVector<f64>) -> f64 {
    let n = centered.len() as f64;
    let log_det: f64 = f.chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum();
    -0.5 * centered.dot(&f.alpha) - log_det - 0.5 * n * libm::log(2.0 * core::f64::consts::PI)
}

/// Fits a GP to `inputs`/`targets`. Needs at least two samples.
pub fn fit(inputs: &[Point], targets: &[f64], config: &GpConfig) -> Result<GpModel> {
    if inputs.len() < 2 || inputs.len() != targets.len() {
        return Err(Error::NotEnoughSamples {
            need: 2,
            got: inputs.len().min(targets.len()),
        });
    }
    let dim = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }

    let base_lengthscales: Vec<f64> = match (&config.lengthscales, &config.reference_widths) {
        (Some(ls), _) => ls.clone(),
        (None, Some(w)) => w.iter().map(|w| config.lengthscale_factor * w).collect(),
        (None, None) => (0..dim)
            .map(|j| {
                let (lo, hi) = inputs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, x| {
                    (acc.0.min(x[j]), acc.1.max(x[j]))
                });
                hi - lo
            })
            .map(|w| config.lengthscale_factor * w)
            .collect(),
    };
    if base_lengthscales.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: base_lengthscales.len(),
        });
    }
    let base_lengthscales: Vec<f64> = base_lengthscales
        .into_iter()
        .map(|l| if l > 0.0 && l.is_finite() { l } else { 1.0 })
        .collect();

    let signal_variance = config
        .signal_variance
        .unwrap_or_else(|| math::sample_variance(targets));
    let signal_variance = if signal_variance > 0.0 && signal_variance.is_finite() {
        signal_variance
    } else {
        1.0
    };
    let prior_mean = match config.prior_mean {
        PriorMean::Zero => 0.0,
        PriorMean::SampleMean => math::mean(targets),
    };
    let centered = DVector::from_iterator(targets.len(), targets.iter().map(|t| t - prior_mean));

    let multipliers: &[f64] = if config.refine_lengthscale {
        &REFINE_GRID
    } else {
        &[1.0]
    };
    let mut best: Option<(f64, Vec<f64>, Factorized)> = None;
    let mut last_err = None;
    for &m in multipliers {
        let ls: Vec<f64> = base_lengthscales.iter().map(|l| l * m).collect();
        match factorize(inputs, &centered, &ls, signal_variance, &config.noise, config.jitter) {
            Ok(f) => {
                let lml = log_marginal_likelihood(&f, &centered);
                if best.as_ref().is_none_or(|(b, _, _)| lml > *b) {
                    best = Some((lml, ls, f));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (_, lengthscales, f) = best.ok_or_else(|| last_err.unwrap_or(Error::SingularCovariance(MAX_JITTER)))?;
    Ok(GpModel {
        train_inputs: inputs.to_vec(),
        train_targets: targets.to_vec(),
        lengthscales,
        signal_variance,
        jitter: f.jitter,
        prior_mean,
        chol: f.chol,
        alpha: f.alpha,
    })
}

impl GpModel {
    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn train_inputs(&self) -> &[Point] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.train_targets
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    /// Jitter (relative to the signal variance) that made the factorization
    /// succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance at `x`. The variance is clamped at zero.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let n = self.train_inputs.len();
        let kstar = DVector::from_iterator(
            n,
            self.train_inputs
                .iter()
                .map(|t| sq_exp(x, t, &self.lengthscales, self.signal_variance)),
        );
        let mean = self.prior_mean + kstar.dot(&self.alpha);
        let mut v = kstar;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let variance = (self.signal_variance - v.norm_squared()).max(0.0);
        Prediction { mean, variance }
    }
}

/// Model of a subregion's cumulative range distribution `F(y)`.
#[derive(Debug, Clone)]
pub enum RangeCdf {
    Gp { model: GpModel, max_value: f64 },
    /// All observed values equal: the step CDF is used directly.
    Step { value: f64 },
}

/// Empirical CDF targets `(y_j, #{y <= y_j} / N)` in input order.
pub fn range_cdf_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .map(|&y| (y, math::empirical_cdf(values, y)))
        .collect()
}

/// Fits a one-dimensional GP from observed values to their empirical CDF.
///
/// The GP has a zero prior mean, so it decays towards 0 below the data;
/// at or above the largest observed value the model returns exactly 1.
/// Each target carries the sampling variance `F (1 - F) / N` of an
/// empirical CDF over `N` values, and the lengthscale is refined by
/// marginal likelihood.
pub fn fit_range_cdf(values: &[f64]) -> Result<RangeCdf> {
    if values.len() < 2 {
        return Err(Error::NotEnoughSamples {
            need: 2,
            got: values.len(),
        });
    }
    let sorted = math::sorted_copy(values);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        return Ok(RangeCdf::Step { value: lo });
    }
    let mut pairs = range_cdf_pairs(&sorted);
    pairs.dedup_by(|a, b| a.0 == b.0);
    if pairs.len() < 2 {
        return Ok(RangeCdf::Step { value: lo });
    }
    let inputs: Vec<Point> = pairs.iter().map(|p| alloc::vec![p.0]).collect();
    let targets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let n = values.len() as f64;
    let config = GpConfig {
        reference_widths: Some(alloc::vec![hi - lo]),
        noise: Noise::PerPoint(targets.iter().map(|f| f * (1.0 - f) / n).collect()),
        prior_mean: PriorMean::Zero,
        refine_lengthscale: true,
        ..GpConfig::default()
    };
    let model = fit(&inputs, &targets, &config)?;
    Ok(RangeCdf::Gp {
        model,
        max_value: hi,
    })
}

impl RangeCdf {
    /// Predicted `F(y)`, clamped to `[0, 1]`.
    pub fn evaluate(&self, y: f64) -> f64 {
        match self {
            RangeCdf::Step { value } => {
                if y >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            RangeCdf::Gp { model, max_value } => {
                if y >= *max_value {
                    1.0
                } else {
                    model.predict(&[y]).mean.clamp(0.0, 1.0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    fn tight() -> GpConfig {
        GpConfig {
            jitter: 1e-8,
            ..GpConfig::default()
        }
    }

    #[test]
    fn interpolates_two_points() {
        let m = fit(&pts(&[0.0, 1.0]), &[1.0, 2.0], &tight()).unwrap();
        assert!((m.predict(&[0.0]).mean - 1.0).abs() < 1e-4);
        assert!(m.predict(&[0.0]).variance <= 1e-6);
    }

    #[test]
    fn single_sample_is_rejected() {
        assert!(matches!(
            fit(&pts(&[0.0]), &[1.0], &tight()),
            Err(Error::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn variance_grows_away_from_data() {
        let xs = [0.0, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| libm::sin(*x)).collect();
        let m = fit(&pts(&xs), &ys, &tight()).unwrap();
        assert!(m.predict(&[0.25]).variance < m.predict(&[3.0]).variance);
    }

    #[test]
    fn extrapolation_is_finite() {
        let m = fit(&pts(&[0.0, 0.3, 0.9]), &[1.0, -2.0, 0.5], &tight()).unwrap();
        for x in [-1e3, -10.0, 5.0, 1e3] {
            let p = m.predict(&[x]);
            assert!(p.mean.is_finite() && p.variance.is_finite());
        }
    }

    #[test]
    fn symmetric_data_gives_symmetric_mean() {
        let m = fit(&pts(&[-1.0, 1.0]), &[1.0, 1.0], &tight()).unwrap();
        let mirrored = fit(&pts(&[1.0, -1.0]), &[1.0, 1.0], &tight()).unwrap();
        assert!((m.predict(&[0.0]).mean - mirrored.predict(&[0.0]).mean).abs() < 1e-6);
        assert!((m.predict(&[0.3]).mean - m.predict(&[-0.3]).mean).abs() < 1e-6);
    }

    #[test]
    fn duplicate_inputs_still_fit() {
        let m = fit(&pts(&[0.2, 0.2, 0.7]), &[1.0, 1.0, 3.0], &GpConfig::default()).unwrap();
        assert!(m.jitter() >= 1e-10 && m.jitter() <= MAX_JITTER);
        assert!((m.predict(&[0.2]).mean - 1.0).abs() < 1e-3);
        assert!(m.predict(&[0.2]).mean.is_finite());
    }

    #[test]
    fn refinement_keeps_interpolation() {
        let xs = [0.0, 0.2, 0.5, 0.8, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let cfg = GpConfig {
            refine_lengthscale: true,
            ..tight()
        };
        let m = fit(&pts(&xs), &ys, &cfg).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(&[*x]).mean - y).abs() < 1e-4);
        }
    }

    #[test]
    fn range_cdf_targets() {
        let t: Vec<f64> = range_cdf_pairs(&[1.0, 2.0, 3.0]).iter().map(|p| p.1).collect();
        assert_eq!(t, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let t: Vec<f64> = range_cdf_pairs(&[5.0, 5.0, 7.0]).iter().map(|p| p.1).collect();
        assert_eq!(t, vec![2.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn degenerate_range_uses_step_cdf() {
        let cdf = fit_range_cdf(&[4.0, 4.0, 4.0]).unwrap();
        assert!(matches!(cdf, RangeCdf::Step { .. }));
        assert_eq!(cdf.evaluate(3.9), 0.0);
        assert_eq!(cdf.evaluate(4.0), 1.0);
    }

    #[test]
    fn range_cdf_at_minimum_is_near_one_over_n() {
        let mut rng = crate::rng::RngStream::new(17, 0);
        let values: Vec<f64> = (0..20).map(|_| rng.uniform()).collect();
        let cdf = fit_range_cdf(&values).unwrap();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        // brute-force empirical CDF at the minimum
        let brute = values.iter().filter(|&&v| v <= min).count() as f64 / 20.0;
        assert!((cdf.evaluate(min) - brute).abs() < 0.15);
        assert_eq!(cdf.evaluate(2.0), 1.0);
        assert!(cdf.evaluate(-5.0) < 0.05);
    }
}
