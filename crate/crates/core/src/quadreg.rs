//! L1-regularized quadratic regression and its box-constrained minimizer.
//!
//! The model is `q(x) = b0 + sum_l b_l x_l + sum_{l <= m} b_lm x_l x_m`,
//! fitted by cyclic coordinate descent on
//! `(1 / 2N) sum_j (q(x_j) - y_j)^2 + lambda * sum |b|` where the intercept
//! is not penalized.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::domain::{BoxDomain, Sample};
use crate::math;
use crate::rng::RngStream;
use crate::{Error, Point, Result};

pub const MAX_SWEEPS: usize = 10_000;
pub const SWEEP_TOLERANCE: f64 = 1e-8;
/// Subregions with at most this many samples use `lambda = 1`.
pub const CV_THRESHOLD: usize = 50;
pub const CV_FOLDS: usize = 5;
pub const CV_GRID_LEN: usize = 20;
pub const CV_GRID_MIN: f64 = 1e-4;
pub const CV_GRID_MAX: f64 = 1e2;

/// Number of quadratic features in dimension `d`: `1 + 2d + d(d-1)/2`.
pub fn feature_count(d: usize) -> usize {
    1 + 2 * d + d * d.saturating_sub(1) / 2
}

/// `[1, x_1..x_d, x_1^2..x_d^2, x_l x_m for l < m in lexicographic order]`.
pub fn quad_features(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut q = Vec::with_capacity(feature_count(d));
    q.push(1.0);
    q.extend_from_slice(x);
    q.extend(x.iter().map(|v| v * v));
    for l in 0..d {
        for m in l + 1..d {
            q.push(x[l] * x[m]);
        }
    }
    q
}

/// The log-spaced cross-validation grid, ascending.
pub fn lambda_grid() -> Vec<f64> {
    math::log_space(CV_GRID_MIN, CV_GRID_MAX, CV_GRID_LEN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadModel {
    dim: usize,
    /// Coefficients in feature order; `beta[0]` is the intercept.
    beta: Vec<f64>,
    lambda: f64,
    mse: f64,
    train_points: Vec<Point>,
    sweeps: usize,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_samples(samples: &[Sample]) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let d = samples[0].point.len();
    if let Some(s) = samples.iter().find(|s| s.point.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s.point.len(),
        });
    }
    Ok(d)
}

/// Fits the penalized quadratic by coordinate descent on standardized
/// features. `warm` holds standardized coefficients to start from and is
/// overwritten with the solution.
fn fit_inner(samples: &[Sample], lambda: f64, warm: Option<&mut Vec<f64>>) -> Result<QuadModel> {
    let d = check_samples(samples)?;
    let n = samples.len();
    let p = feature_count(d) - 1;
    let nf = n as f64;

    // Column-major non-intercept features.
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| quad_features(&s.point)).collect();
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j + 1]).collect()).collect();
    let means: Vec<f64> = cols.iter().map(|c| math::mean(c)).collect();
    let scales: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| libm::sqrt(c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf))
        .collect();
    for ((c, m), s) in cols.iter_mut().zip(&means).zip(&scales) {
        for v in c.iter_mut() {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    }
    let ys: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let y_mean = math::mean(&ys);
    let y_scale = libm::sqrt(ys.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / nf);
    let tol = SWEEP_TOLERANCE * y_scale.max(1e-12);

    let mut local = vec![0.0; p];
    let gamma: &mut Vec<f64> = match warm {
        Some(w) if w.len() == p => w,
        Some(w) => {
            *w = vec![0.0; p];
            w
        }
        None => &mut local,
    };
    let mut resid: Vec<f64> = ys.iter().map(|y| y - y_mean).collect();
    for (j, g) in gamma.iter().enumerate() {
        if *g != 0.0 {
            for (r, z) in resid.iter_mut().zip(&cols[j]) {
                *r -= z * g;
            }
        }
    }

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if scales[j] <= 0.0 {
                gamma[j] = 0.0;
                continue;
            }
            let col = &cols[j];
            let old = gamma[j];
            let rho = col.iter().zip(&resid).map(|(z, r)| z * r).sum::<f64>() / nf + old;
            let new = soft_threshold(rho, lambda / scales[j]);
            let delta = new - old;
            if delta != 0.0 {
                for (r, z) in resid.iter_mut().zip(col) {
                    *r -= z * delta;
                }
                gamma[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            break;
        }
    }

    let mut beta = vec![0.0; p + 1];
    let mut intercept = y_mean;
    for j in 0..p {
        if scales[j] > 0.0 {
            beta[j + 1] = gamma[j] / scales[j];
            intercept -= beta[j + 1] * means[j];
        }
    }
    beta[0] = intercept;

    let mut model = QuadModel {
        dim: d,
        beta,
        lambda,
        mse: 0.0,
        train_points: samples.iter().map(|s| s.point.clone()).collect(),
        sweeps,
    };
    model.mse = samples
        .iter()
        .map(|s| {
            let e = model.predict(&s.point) - s.value;
            e * e
        })
        .sum::<f64>()
        / nf;
    Ok(model)
}

/// Fits the L1-penalized quadratic model at a fixed `lambda`.
pub fn fit_quadreg(samples: &[Sample], lambda: f64) -> Result<QuadModel> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument("lambda must be non-negative".into()));
    }
    fit_inner(samples, lambda, None)
}

/// Penalized loss of `beta` on `samples`.
pub fn penalized_loss(samples: &[Sample], beta: &[f64], lambda: f64) -> f64 {
    let n = samples.len() as f64;
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let q: f64 = quad_features(&s.point)
                .iter()
                .zip(beta)
                .map(|(f, b)| f * b)
                .sum();
            (q - s.value) * (q - s.value)
        })
        .sum();
    sse / (2.0 * n) + lambda * beta.iter().skip(1).map(|b| b.abs()).sum::<f64>()
}

/// Mean held-out squared error of each grid value under `CV_FOLDS`-fold
/// cross-validation (fold of sample `j` is `j % CV_FOLDS`).
pub fn cv_curve(samples: &[Sample], grid: &[f64]) -> Result<Vec<f64>> {
    check_samples(samples)?;
    let mut errors = vec![0.0; grid.len()];
    for fold in 0..CV_FOLDS {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (j, s) in samples.iter().enumerate() {
            if j % CV_FOLDS == fold {
                test.push(s);
            } else {
                train.push(s.clone());
            }
        }
        if test.is_empty() || train.len() < 2 {
            continue;
        }
        // Warm-started path from the largest lambda down.
        let mut warm = Vec::new();
        for (gi, &lambda) in grid.iter().enumerate().rev() {
            let model = fit_inner(&train, lambda, Some(&mut warm))?;
            errors[gi] += test
                .iter()
                .map(|s| {
                    let e = model.predict(&s.point) - s.value;
                    e * e
                })
                .sum::<f64>();
        }
    }
    let n = samples.len() as f64;
    Ok(errors.into_iter().map(|e| e / n).collect())
}

/// `1` for at most [`CV_THRESHOLD`] samples, otherwise the grid value with
/// the lowest cross-validation error (ties go to the larger lambda).
pub fn select_lambda(samples: &[Sample]) -> Result<f64> {
    if samples.len() <= CV_THRESHOLD {
        return Ok(1.0);
    }
    let grid = lambda_grid();
    let curve = cv_curve(samples, &grid)?;
    let mut best = 0;
    for i in 1..grid.len() {
        if curve[i] <= curve[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

/// Cholesky factor of `X^T X` over the training design, with a ridge added
/// when the Gram matrix is singular.
#[derive(Debug, Clone)]
pub struct GramFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    pub ridge: f64,
}

impl GramFactor {
    /// `Q^T (X^T X)^{-1} Q`.
    pub fn quadratic_form(&self, q: &[f64]) -> f64 {
        let v = DVector::from_column_slice(q);
        v.dot(&self.chol.solve(&v))
    }
}

impl QuadModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }

    pub fn linear(&self) -> &[f64] {
        &self.beta[1..=self.dim]
    }

    /// Squared-term coefficients `b_ll`.
    pub fn squared(&self) -> &[f64] {
        &self.beta[1 + self.dim..1 + 2 * self.dim]
    }

    /// Cross-term coefficients `b_lm`, `l < m`, lexicographic.
    pub fn cross(&self) -> &[f64] {
        &self.beta[1 + 2 * self.dim..]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Training mean squared error with divisor `N`.
    pub fn mse(&self) -> f64 {
        self.mse
    }

    pub fn n_train(&self) -> usize {
        self.train_points.len()
    }

    pub fn train_points(&self) -> &[Point] {
        &self.train_points
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Builds a model directly from coefficients (feature order).
    pub fn from_coefficients(dim: usize, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != feature_count(dim) {
            return Err(Error::DimensionMismatch {
                expected: feature_count(dim),
                got: beta.len(),
            });
        }
        Ok(Self {
            dim,
            beta,
            lambda: 0.0,
            mse: 0.0,
            train_points: Vec::new(),
            sweeps: 0,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        quad_features(x).iter().zip(&self.beta).map(|(f, b)| f * b).sum()
    }

    /// Hessian `H` and linear term `g` with `q(x) = b0 + g^T x + x^T H x / 2`.
    pub fn hessian_and_linear(&self) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for (l, b) in self.squared().iter().enumerate() {
            h[(l, l)] = 2.0 * b;
        }
        let mut k = 0;
        let cross = self.cross();
        for l in 0..d {
            for m in l + 1..d {
                h[(l, m)] = cross[k];
                h[(m, l)] = cross[k];
                k += 1;
            }
        }
        (h, DVector::from_column_slice(self.linear()))
    }

    /// Factorizes the unregularized Gram matrix of the training design.
    pub fn gram(&self) -> Result<GramFactor> {
        if self.train_points.is_empty() {
            return Err(Error::NotEnoughSamples { need: 1, got: 0 });
        }
        let p = feature_count(self.dim);
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        for x in &self.train_points {
            let q = DVector::from_vec(quad_features(x));
            xtx += &q * q.transpose();
        }
        let scale = (0..p).map(|i| xtx[(i, i)]).sum::<f64>() / p as f64;
        let mut ridge = 0.0;
        loop {
            let mut m = xtx.clone();
            for i in 0..p {
                m[(i, i)] += ridge;
            }
            if let Some(chol) = m.cholesky() {
                return Ok(GramFactor { chol, ridge });
            }
            ridge = if ridge == 0.0 {
                1e-8 * scale.max(1.0)
            } else {
                ridge * 10.0
            };
            if !ridge.is_finite() || ridge > 1e6 * scale.max(1.0) {
                return Err(Error::SingularCovariance(ridge));
            }
        }
    }

    /// `SE(x) = sqrt(MSE * Q^T (X^T X)^{-1} Q)`.
    pub fn standard_error(&self, x: &[f64], gram: &GramFactor) -> f64 {
        libm::sqrt((self.mse * gram.quadratic_form(&quad_features(x))).max(0.0))
    }
}

/// Probability that the true value at `x` falls below `y`, under a Student t
/// with `n_train - 3` degrees of freedom scaled by `sqrt(MSE + SE(x)^2)`.
pub fn pi_quadreg(model: &QuadModel, x: &[f64], y: f64) -> Result<f64> {
    let dof = model.n_train() as i64 - 3;
    if dof < 1 {
        return Err(Error::DegreesOfFreedom(dof));
    }
    let gram = model.gram()?;
    let se = model.standard_error(x, &gram);
    let scale = libm::sqrt(model.mse() + se * se);
    let gap = y - model.predict(x);
    if scale <= 0.0 {
        return Ok(if gap > 0.0 {
            1.0
        } else if gap < 0.0 {
            0.0
        } else {
            0.5
        });
    }
    Ok(math::student_t_cdf(gap / scale, dof as f64))
}

const QP_MAX_ITER: usize = 500;

fn qp_value(h: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(h * x)) + g.dot(x)
}

/// Projected Newton descent for `min x^T H x / 2 + g^T x` over a box, from
/// `start`. Each iteration takes a Newton step on the free variables when
/// their Hessian block is positive definite (steepest descent otherwise),
/// followed by a backtracking search along the projected path.
fn box_qp_descent(h: &DMatrix<f64>, g: &DVector<f64>, domain: &BoxDomain, start: &[f64]) -> DVector<f64> {
    let d = domain.dim();
    let (lo, hi) = (domain.lower(), domain.upper());
    let mut x = DVector::from_column_slice(start);
    let project = |v: &mut DVector<f64>| {
        for j in 0..d {
            v[j] = v[j].clamp(lo[j], hi[j]);
        }
    };
    project(&mut x);
    let mut fx = qp_value(h, g, &x);
    let width_scale = domain.widths().iter().fold(0.0f64, |a, w| a.max(*w));

    for _ in 0..QP_MAX_ITER {
        let grad = h * &x + g;
        let free: Vec<usize> = (0..d)
            .filter(|&j| !((x[j] <= lo[j] && grad[j] > 0.0) || (x[j] >= hi[j] && grad[j] < 0.0)))
            .collect();
        let pg_norm = free.iter().map(|&j| grad[j].abs()).fold(0.0, f64::max);
        if free.is_empty() || pg_norm * width_scale <= 1e-14 * (1.0 + fx.abs()) {
            break;
        }

        let mut dir = DVector::zeros(d);
        let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&j| -grad[j]));
        let newton = hff.cholesky().map(|c| c.solve(&gf));
        let mut t = 1.0;
        match newton {
            Some(step) if step.iter().all(|v| v.is_finite()) => {
                for (a, &j) in free.iter().enumerate() {
                    dir[j] = step[a];
                }
            }
            _ => {
                for &j in &free {
                    dir[j] = -grad[j];
                }
                // Long enough to reach the far side of the box.
                let dn = dir.amax();
                t = if dn > 0.0 { 2.0 * width_scale / dn } else { 0.0 };
            }
        }

        let mut accepted = false;
        while t > 1e-30 {
            let mut cand = &x + &dir * t;
            project(&mut cand);
            let fc = qp_value(h, g, &cand);
            let predicted = grad.dot(&(&cand - &x));
            if fc < fx && fc <= fx + 1e-4 * predicted {
                x = cand;
                fx = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Minimizes `model` over `domain` by multi-start projected descent.
///
/// Starts: the box center, four uniform draws, the training point with the
/// lowest model value inside the box, and every vertex when `d <= 4`.
/// The returned point lies in the box and is no worse (in model value)
/// than any training point inside the box.
pub fn minimize_quad_in_box(model: &QuadModel, domain: &BoxDomain, rng: &mut RngStream) -> Result<Point> {
    if model.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: model.dim(),
        });
    }
    let d = domain.dim();
    let (h, g) = model.hessian_and_linear();

    let mut starts: Vec<Point> = vec![domain.center()];
    for _ in 0..4 {
        starts.push(domain.uniform_point(rng));
    }
    if let Some(best_train) = model
        .train_points()
        .iter()
        .filter(|p| domain.contains(p))
        .min_by(|a, b| model.predict(a).total_cmp(&model.predict(b)))
    {
        starts.push(best_train.clone());
    }
    if d <= 4 {
        for mask in 0..(1usize << d) {
            starts.push(
                (0..d)
                    .map(|j| if mask >> j & 1 == 1 { domain.upper()[j] } else { domain.lower()[j] })
                    .collect(),
            );
        }
    }

    let mut best: Option<(f64, Point)> = None;
    for s in &starts {
        let x = box_qp_descent(&h, &g, domain, s);
        let mut p: Point = x.iter().copied().collect();
        domain.project(&mut p);
        let v = model.predict(&p);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, p));
        }
    }
    let (_, p) = best.expect("at least one start");
    assert!(domain.contains(&p), "box minimizer left the box");
    Ok(p)
}
