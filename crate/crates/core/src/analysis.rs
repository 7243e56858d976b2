//! Empirical checks of the probability assumptions behind the framework.

use alloc::vec::Vec;

use crate::domain::{level_set_fractions, BoxDomain, Objective, PartitionState, Subregion};
use crate::gp::GpModel;
use crate::math::{self, normal_cdf};
use crate::objectives::centered_sinusoidal;
use crate::quadreg;
use crate::rng::RngStream;
use crate::samplers::{self, SamplerConfig, SamplerKind};
use crate::strategies::{self, StrategyInput, StrategyKind};
use crate::{Point, Result};

/// Quantile of the observed values used as the higher level.
pub const AUDIT_QUANTILE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioAuditRow {
    pub eval_index: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Incumbent value.
    pub y: f64,
    /// 20% quantile of the observed values.
    pub z: f64,
    pub violated: bool,
    /// A ratio had zero mass in its denominator.
    pub indeterminate: bool,
}

/// `sum p_i a_i / sum p_i b_i`, or `None` when the denominator is zero.
pub fn weighted_ratio(probs: &[f64], numer: &[f64], denom: &[f64]) -> Option<f64> {
    let num: f64 = probs.iter().zip(numer).map(|(p, a)| p * a).sum();
    let den: f64 = probs.iter().zip(denom).map(|(p, b)| p * b).sum();
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Compares the conditional mass `P(f <= y | f <= z)` under the strategy's
/// probabilities evaluated at the incumbent `y` against the same quantity
/// with the probabilities evaluated at `z`, the 20% quantile of the observed
/// values.
///
/// Each subregion's level-set fractions at `y` and `z` are estimated once,
/// from `mc_points` uniform points, and shared by both sides.
pub fn audit_assumption_1_3(
    state: &PartitionState,
    kind: StrategyKind,
    objective: &dyn Objective,
    mc_points: usize,
    tolerance: f64,
    rng: &mut RngStream,
) -> Result<RatioAuditRow> {
    let sorted = state.sorted_values();
    let y = state.incumbent_value;
    let z = math::quantile_sorted(&sorted, AUDIT_QUANTILE);
    let input = StrategyInput {
        subregions: &state.subregions,
        incumbent: y,
        incumbent_index: state.incumbent_index().unwrap_or(0),
        iteration: state.iteration.max(1),
        sorted_values: &sorted,
    };
    let at_incumbent = strategies::probabilities_at_level(kind, &input, y)?;
    let at_quantile = strategies::probabilities_at_level(kind, &input, z)?;
    let (mut at_y, mut at_z) = (Vec::new(), Vec::new());
    for sub in &state.subregions {
        let f = level_set_fractions(&sub.domain, &[y, z], objective, mc_points, rng);
        at_y.push(f[0]);
        at_z.push(f[1]);
    }
    let lhs = weighted_ratio(&at_incumbent.probs, &at_y, &at_z);
    let rhs = weighted_ratio(&at_quantile.probs, &at_y, &at_z);
    let indeterminate = lhs.is_none() || rhs.is_none();
    let (lhs, rhs) = (lhs.unwrap_or(0.0), rhs.unwrap_or(0.0));
    Ok(RatioAuditRow {
        eval_index: state.eval_count,
        lhs,
        rhs,
        y,
        z,
        violated: !indeterminate && !strategies::check_assumption_1_3(lhs, rhs, tolerance),
        indeterminate,
    })
}

pub fn count_violations(rows: &[RatioAuditRow]) -> usize {
    rows.iter().filter(|r| r.violated).count()
}

/// `Phi((y - mean) / sd)`, with the limits 1, 0 or 1/2 when `sd = 0`.
pub fn pi_from_moments(mean: f64, sd: f64, y: f64) -> f64 {
    if sd > 0.0 {
        return normal_cdf((y - mean) / sd);
    }
    if y > mean {
        1.0
    } else if y < mean {
        0.0
    } else {
        0.5
    }
}

/// Probability that the GP at `x` falls below `y`.
pub fn pi_gp(model: &GpModel, x: &[f64], y: f64) -> f64 {
    let p = model.predict(x);
    pi_from_moments(p.mean, p.std_dev(), y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeDistribution {
    pub bins: Vec<HistogramBin>,
    /// `(value, F(value))` over the sorted values.
    pub cdf: Vec<(f64, f64)>,
}

pub const DEFAULT_BINS: usize = 20;

/// Fixed-width histogram and empirical CDF of observed values. When all
/// values coincide every value lands in the first bin.
pub fn range_distribution(values: &[f64], n_bins: usize) -> RangeDistribution {
    let n_bins = n_bins.max(1);
    let sorted = math::sorted_copy(values);
    let n = sorted.len();
    if n == 0 {
        return RangeDistribution {
            bins: Vec::new(),
            cdf: Vec::new(),
        };
    }
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let width = (hi - lo) / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lower: lo + i as f64 * width,
            upper: if i + 1 == n_bins { hi } else { lo + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in &sorted {
        let i = if width > 0.0 {
            (((v - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        bins[i].count += 1;
    }
    let mut cdf = Vec::with_capacity(n);
    for (i, &v) in sorted.iter().enumerate() {
        if i + 1 < n && sorted[i + 1] == v {
            continue;
        }
        cdf.push((v, (i + 1) as f64 / n as f64));
    }
    RangeDistribution { bins, cdf }
}

/// Two archives over the same three subregions that differ only in the
/// best point of each subregion.
#[derive(Debug, Clone)]
pub struct SampleSets {
    pub base: Vec<Subregion>,
    pub better: Vec<Subregion>,
}

/// Points (as fractions of each subregion's width) used for the base set:
/// a 20-degree lattice whose boundary points are shared by neighbours.
pub const BASE_FRACTIONS: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
/// How far, as a fraction of the gap, the best point moves towards the
/// subregion minimizer in the better set.
pub const BETTER_SHIFT: f64 = 0.5;

/// One-dimensional centered sinusoid on `[0, 180]`, split into three equal
/// subregions with four points each. The better set moves the best point
/// of every subregion halfway towards the subregion's minimizer (located
/// on a 0.01 grid); the other three points coincide.
pub fn construct_sample_sets() -> SampleSets {
    construct_sample_sets_with(&BASE_FRACTIONS, BETTER_SHIFT)
}

/// As [`construct_sample_sets`] with explicit point fractions and shift.
pub fn construct_sample_sets_with(fractions: &[f64], shift: f64) -> SampleSets {
    let f = |x: f64| centered_sinusoidal(&[x]);
    let mut base = Vec::new();
    let mut better = Vec::new();
    for i in 0..3 {
        let lo = 60.0 * i as f64;
        let domain = BoxDomain::new(alloc::vec![lo], alloc::vec![lo + 60.0]).expect("valid box");
        let xs: Vec<f64> = fractions.iter().map(|t| lo + 60.0 * t).collect();
        let best = xs
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| f(a.1).total_cmp(&f(b.1)))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let target = (0..=6000)
            .map(|k| lo + 0.01 * k as f64)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap_or(lo);
        let mut b = Subregion::new(i, domain.clone(), 1);
        let mut g = Subregion::new(i, domain, 1);
        for (j, &x) in xs.iter().enumerate() {
            b.push(alloc::vec![x], f(x));
            let moved = if j == best { x + shift * (target - x) } else { x };
            g.push(alloc::vec![moved], f(moved));
        }
        base.push(b);
        better.push(g);
    }
    SampleSets { base, better }
}

/// The fifth-best value over the distinct points of both sets.
pub fn fifth_best_value(sets: &SampleSets) -> f64 {
    let mut points: Vec<(f64, f64)> = sets
        .base
        .iter()
        .chain(&sets.better)
        .flat_map(|s| s.samples.iter().map(|x| (x.point[0], x.value)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points.dedup_by(|a, b| a.0 == b.0);
    let values = math::sorted_copy(&points.iter().map(|p| p.1).collect::<Vec<_>>());
    values[4.min(values.len() - 1)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption2Table {
    pub y: f64,
    pub uniform: Vec<f64>,
    pub gp_base: Vec<f64>,
    pub gp_better: Vec<f64>,
    pub quad_base: Vec<f64>,
    pub quad_better: Vec<f64>,
    /// Points at which the surrogate rows were evaluated.
    pub gp_points: Vec<(Point, Point)>,
    pub quad_points: Vec<(Point, Point)>,
}

impl Assumption2Table {
    pub fn rows(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("uniform", &self.uniform),
            ("gp_base", &self.gp_base),
            ("gp_better", &self.gp_better),
            ("quadreg_base", &self.quad_base),
            ("quadreg_better", &self.quad_better),
        ]
    }
}

fn gp_row(sub: &Subregion, y: f64, rng: &mut RngStream) -> Result<(f64, Point)> {
    let model = samplers::fit_subregion_gp(sub)?;
    let config = SamplerConfig::new(SamplerKind::B);
    let x = samplers::ei_argmax(&model, &sub.domain, sub.best_value, &config, rng);
    Ok((pi_gp(&model, &x, y), x))
}

fn quad_row(sub: &Subregion, y: f64, rng: &mut RngStream) -> Result<(f64, Point)> {
    let lambda = quadreg::select_lambda(&sub.samples)?;
    let model = quadreg::fit_quadreg(&sub.samples, lambda)?;
    let x = quadreg::minimize_quad_in_box(&model, &sub.domain, rng)?;
    Ok((quadreg::pi_quadreg(&model, &x, y)?, x))
}

/// Probability-of-improvement table for two archives over the same
/// subregions: uniform sampling, GP at its EI maximizer, and quadratic
/// regression at its minimizer, each below `y`.
pub fn assumption2_experiment(
    sets: &SampleSets,
    y: f64,
    objective: &dyn Objective,
    mc_points: usize,
    rng: &mut RngStream,
) -> Result<Assumption2Table> {
    let mut table = Assumption2Table {
        y,
        uniform: Vec::new(),
        gp_base: Vec::new(),
        gp_better: Vec::new(),
        quad_base: Vec::new(),
        quad_better: Vec::new(),
        gp_points: Vec::new(),
        quad_points: Vec::new(),
    };
    for (b, g) in sets.base.iter().zip(&sets.better) {
        table
            .uniform
            .push(level_set_fractions(&b.domain, &[y], objective, mc_points, rng)[0]);
        let (pb, xb) = gp_row(b, y, rng)?;
        let (pg, xg) = gp_row(g, y, rng)?;
        table.gp_base.push(pb);
        table.gp_better.push(pg);
        table.gp_points.push((xb, xg));
        let (qb, xb) = quad_row(b, y, rng)?;
        let (qg, xg) = quad_row(g, y, rng)?;
        table.quad_base.push(qb);
        table.quad_better.push(qg);
        table.quad_points.push((xb, xg));
    }
    Ok(table)
}

/// The experiment on the default constructed sets.
pub fn default_assumption2_experiment(mc_points: usize, rng: &mut RngStream) -> Result<Assumption2Table> {
    let sets = construct_sample_sets();
    let y = fifth_best_value(&sets);
    let f = |x: &[f64]| centered_sinusoidal(x);
    assumption2_experiment(&sets, y, &f, mc_points, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PartitionState;
    use alloc::vec;

    #[test]
    fn pi_limits() {
        assert_eq!(pi_from_moments(1.0, 2.0, 1.0), 0.5);
        assert!((pi_from_moments(0.0, 1.0, 1.96) - 0.975).abs() < 1e-3);
        assert_eq!(pi_from_moments(1.0, 0.0, 2.0), 1.0);
        assert_eq!(pi_from_moments(1.0, 0.0, 0.0), 0.0);
        assert_eq!(pi_from_moments(1.0, 0.0, 1.0), 0.5);
        let mut prev = 0.0;
        for i in 0..50 {
            let v = pi_from_moments(0.0, 1.0, -3.0 + 0.12 * i as f64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn range_distribution_basics() {
        let r = range_distribution(&[3.0, 1.0, 2.0], DEFAULT_BINS);
        assert!(r.cdf.contains(&(2.0, 2.0 / 3.0)));
        assert_eq!(r.cdf.last().unwrap().1, 1.0);
        assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), 3);
        let flat = range_distribution(&[5.0; 7], DEFAULT_BINS);
        assert_eq!(flat.bins.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(flat.cdf, vec![(5.0, 1.0)]);
    }

    #[test]
    fn single_subregion_audit_cancels() {
        let f = |x: &[f64]| x[0];
        let mut state = PartitionState::new(BoxDomain::cube(1, 0.0, 1.0).unwrap());
        for (i, v) in [0.9, 0.4, 0.7, 0.2, 0.5, 0.8].iter().enumerate() {
            let _ = i;
            state.record(0, vec![*v], *v);
        }
        let mut rng = RngStream::new(1, 0);
        let row = audit_assumption_1_3(&state, StrategyKind::A, &f, 5000, 0.0, &mut rng).unwrap();
        assert_eq!(row.lhs, row.rhs);
        assert!(!row.violated && !row.indeterminate);
        // z is the interpolated 20% quantile of {0.2, 0.4, 0.5, 0.7, 0.8, 0.9}
        assert!((row.z - 0.4).abs() < 1e-12);
        assert!((row.lhs - 0.5).abs() < 0.05);
    }

    #[test]
    fn weighted_ratio_zero_mass() {
        assert_eq!(weighted_ratio(&[1.0], &[0.0], &[0.0]), None);
        assert_eq!(weighted_ratio(&[0.5, 0.5], &[0.1, 0.0], &[0.2, 0.2]), Some(0.25));
    }

    #[test]
    fn constructed_sets_share_three_points() {
        let sets = construct_sample_sets();
        for (b, g) in sets.base.iter().zip(&sets.better) {
            let same = b
                .samples
                .iter()
                .zip(&g.samples)
                .filter(|(x, y)| x.point == y.point)
                .count();
            assert_eq!(same, 3);
            assert!(g.best_value < b.best_value);
        }
    }
}
