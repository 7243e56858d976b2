//! Point generation inside a selected subregion.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::domain::{BoxDomain, Subregion};
use crate::gp::{self, GpConfig, GpModel};
use crate::math::{normal_cdf, normal_pdf};
use crate::quadreg;
use crate::rng::RngStream;
use crate::{Error, Point, Result};

/// Largest number of grid points scored by the EI sampler.
pub const EI_GRID_CAP: usize = 10_000;
const LITERAL_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    /// Uniform in the subregion.
    A,
    /// Grid maximizer of GP expected improvement.
    B,
    /// Minimizer of a lasso-regularized quadratic fit.
    C,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::A, SamplerKind::B, SamplerKind::C];

    pub fn key(self) -> &'static str {
        match self {
            SamplerKind::A => "A",
            SamplerKind::B => "B",
            SamplerKind::C => "C",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EiFormula {
    /// `(y - g) Phi(u) + s phi(u)`.
    Standard,
    /// `u + s Phi(u)`, kept for comparison runs.
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub ei_grid_per_dim: usize,
    pub ei_formula: EiFormula,
    pub max_dim_for_b: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::A,
            ei_grid_per_dim: 11,
            ei_formula: EiFormula::Standard,
            max_dim_for_b: 50,
        }
    }
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ei_grid_per_dim < 2 {
            return Err(Error::InvalidConfig("ei_grid_per_dim must be at least 2".into()));
        }
        Ok(())
    }
}

/// A generated point and whether the sampler had to fall back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: Point,
    pub fell_back: bool,
}

pub fn sample_uniform(sub: &Subregion, rng: &mut RngStream) -> Point {
    sub.domain.uniform_point(rng)
}

/// Expected improvement below `best` at `x`.
pub fn expected_improvement(model: &GpModel, x: &[f64], best: f64, formula: EiFormula) -> f64 {
    let pred = model.predict(x);
    ei_from_moments(pred.mean, pred.std_dev(), best, formula)
}

pub fn ei_from_moments(mean: f64, sd: f64, best: f64, formula: EiFormula) -> f64 {
    let gap = best - mean;
    match formula {
        EiFormula::Standard => {
            if sd <= 0.0 {
                return gap.max(0.0);
            }
            let u = gap / sd;
            (gap * normal_cdf(u) + sd * normal_pdf(u)).max(0.0)
        }
        EiFormula::PaperLiteral => {
            if sd <= 0.0 {
                return if gap > 0.0 {
                    LITERAL_GUARD
                } else if gap < 0.0 {
                    -LITERAL_GUARD
                } else {
                    0.0
                };
            }
            let u = gap / sd;
            (u + sd * normal_cdf(u)).clamp(-LITERAL_GUARD, LITERAL_GUARD)
        }
    }
}

/// Grid over `domain` with `per_dim` points per axis, endpoints included,
/// in lexicographic index order. When the full grid exceeds
/// [`EI_GRID_CAP`], that many lattice indices are drawn uniformly and kept
/// in lexicographic order without duplicates.
pub fn ei_grid(domain: &BoxDomain, per_dim: usize, rng: &mut RngStream) -> Vec<Point> {
    let d = domain.dim();
    let full = libm::pow(per_dim as f64, d as f64);
    let digits: Vec<Vec<usize>> = if full <= EI_GRID_CAP as f64 {
        (0..full as usize)
            .map(|mut index| {
                let mut k = alloc::vec![0; d];
                for slot in k.iter_mut().rev() {
                    *slot = index % per_dim;
                    index /= per_dim;
                }
                k
            })
            .collect()
    } else {
        let mut picked: Vec<Vec<usize>> = (0..EI_GRID_CAP)
            .map(|_| (0..d).map(|_| rng.index(per_dim)).collect())
            .collect();
        picked.sort_unstable();
        picked.dedup();
        picked
    };
    let step: Vec<f64> = (0..d).map(|j| domain.width(j) / (per_dim - 1) as f64).collect();
    digits
        .into_iter()
        .map(|k| {
            k.iter()
                .enumerate()
                .map(|(j, &kj)| {
                    if kj == per_dim - 1 {
                        domain.upper()[j]
                    } else {
                        domain.lower()[j] + kj as f64 * step[j]
                    }
                })
                .collect()
        })
        .collect()
}

/// The GP fitted by the EI sampler on a subregion's samples.
pub fn fit_subregion_gp(sub: &Subregion) -> Result<GpModel> {
    let inputs: Vec<Point> = sub.samples.iter().map(|s| s.point.clone()).collect();
    let targets: Vec<f64> = sub.samples.iter().map(|s| s.value).collect();
    gp::fit(&inputs, &targets, &GpConfig::for_box(&sub.domain))
}

/// Grid point with the largest EI; ties go to the earliest grid index.
pub fn ei_argmax(model: &GpModel, domain: &BoxDomain, best: f64, config: &SamplerConfig, rng: &mut RngStream) -> Point {
    let grid = ei_grid(domain, config.ei_grid_per_dim, rng);
    let mut best_point = None;
    let mut best_score = f64::NEG_INFINITY;
    for x in grid {
        let score = expected_improvement(model, &x, best, config.ei_formula);
        if score > best_score {
            best_score = score;
            best_point = Some(x);
        }
    }
    best_point.unwrap_or_else(|| domain.center())
}

pub fn sample_gp_ei(sub: &Subregion, rng: &mut RngStream, config: &SamplerConfig) -> Result<Point> {
    if sub.domain.dim() > config.max_dim_for_b {
        return Err(Error::InvalidArgument("dimension too large for the EI sampler".into()));
    }
    let model = fit_subregion_gp(sub)?;
    Ok(ei_argmax(&model, &sub.domain, sub.best_value, config, rng))
}

pub fn sample_quadreg(sub: &Subregion, rng: &mut RngStream) -> Result<Point> {
    let lambda = quadreg::select_lambda(&sub.samples)?;
    let model = quadreg::fit_quadreg(&sub.samples, lambda)?;
    quadreg::minimize_quad_in_box(&model, &sub.domain, rng)
}

/// Runs the configured sampler, falling back to a uniform point when the
/// subregion has fewer than two samples or the surrogate cannot be built.
pub fn propose(sub: &Subregion, rng: &mut RngStream, config: &SamplerConfig) -> Proposal {
    let attempt = match config.kind {
        SamplerKind::A => {
            return Proposal {
                point: sample_uniform(sub, rng),
                fell_back: false,
            }
        }
        _ if sub.len() < 2 => None,
        SamplerKind::B => sample_gp_ei(sub, rng, config).ok(),
        SamplerKind::C => sample_quadreg(sub, rng).ok(),
    };
    match attempt {
        Some(mut point) if point.iter().all(|v| v.is_finite()) => {
            sub.domain.project(&mut point);
            Proposal {
                point,
                fell_back: false,
            }
        }
        _ => Proposal {
            point: sample_uniform(sub, rng),
            fell_back: true,
        },
    }
}
