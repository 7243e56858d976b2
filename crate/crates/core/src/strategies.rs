//! Adaptive subregion probabilities.
//!
//! Each rule maps the current partition (and a level parameter, normally
//! the incumbent value) to a probability vector over the subregions.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::domain::Subregion;
use crate::gp::{self, RangeCdf};
use crate::{Error, Result};

/// Floor applied to predicted range CDFs before normalizing.
pub const RANGE_CDF_FLOOR: f64 = 1e-6;
/// The range strategy evaluates at the `RANGE_RANK`-th lowest observed value.
pub const RANGE_RANK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Observed best value.
    A,
    /// Sample variance.
    B,
    /// GP on the empirical range distribution.
    C,
    /// Confidence bounds around the incumbent.
    D,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [StrategyKind::A, StrategyKind::B, StrategyKind::C, StrategyKind::D];

    pub fn key(self) -> &'static str {
        match self {
            StrategyKind::A => "a",
            StrategyKind::B => "b",
            StrategyKind::C => "c",
            StrategyKind::D => "d",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubregionProbabilities {
    pub probs: Vec<f64>,
    pub strategy: StrategyKind,
}

impl SubregionProbabilities {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Entries in `[0, 1]` summing to one within `1e-9`.
    pub fn is_proper(&self) -> bool {
        let sum: f64 = self.probs.iter().sum();
        self.probs.iter().all(|p| (0.0..=1.0).contains(p)) && (sum - 1.0).abs() <= 1e-9
    }
}

fn normalize(weights: Vec<f64>, strategy: StrategyKind) -> SubregionProbabilities {
    let total: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| (w / total).clamp(0.0, 1.0)).collect();
    SubregionProbabilities { probs, strategy }
}

/// `p_i` proportional to subregion volume.
pub fn volume_proportional(subs: &[Subregion], strategy: StrategyKind) -> SubregionProbabilities {
    normalize(subs.iter().map(|s| s.volume()).collect(), strategy)
}

fn require_nonempty(subs: &[Subregion]) -> Result<()> {
    if subs.is_empty() {
        return Err(Error::InvalidArgument("no subregions".into()));
    }
    Ok(())
}

fn require_samples(subs: &[Subregion], need: usize) -> Result<()> {
    if let Some(s) = subs.iter().find(|s| s.len() < need) {
        return Err(Error::NotEnoughSamples { need, got: s.len() });
    }
    Ok(())
}

/// Strategy a: `p_i = [(y_i - t + 1) sum_j 1 / (y_j - t + 1)]^{-1}`.
///
/// With `level` set to the incumbent this is the rule verbatim. For higher
/// levels the gap `y_i - t` is floored at zero so weights stay in `(0, 1]`.
pub fn strategy_a_observed_best(subs: &[Subregion], level: f64) -> Result<SubregionProbabilities> {
    require_nonempty(subs)?;
    require_samples(subs, 1)?;
    let weights = subs
        .iter()
        .map(|s| 1.0 / ((s.best_value - level).max(0.0) + 1.0))
        .collect();
    Ok(normalize(weights, StrategyKind::A))
}

/// Strategy b: volume-proportional on the first iteration, then
/// proportional to each subregion's sample variance. Falls back to
/// volumes when every variance is zero.
pub fn strategy_b_sample_variance(subs: &[Subregion], iteration: usize) -> Result<SubregionProbabilities> {
    require_nonempty(subs)?;
    if iteration == 0 {
        return Err(Error::InvalidArgument("iteration starts at 1".into()));
    }
    if iteration == 1 {
        return Ok(volume_proportional(subs, StrategyKind::B));
    }
    require_samples(subs, 2)?;
    let weights: Vec<f64> = subs
        .iter()
        .map(|s| crate::math::sample_variance(&s.values()))
        .collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Ok(volume_proportional(subs, StrategyKind::B));
    }
    Ok(normalize(weights, StrategyKind::B))
}

/// Fits the range-CDF model of every subregion. A subregion with a single
/// sample gets the step CDF of that value.
pub fn fit_range_models(subs: &[Subregion]) -> Result<Vec<RangeCdf>> {
    subs.iter()
        .map(|s| {
            let values = s.values();
            match values.len() {
                0 => Err(Error::NotEnoughSamples { need: 1, got: 0 }),
                1 => Ok(RangeCdf::Step { value: values[0] }),
                _ => gp::fit_range_cdf(&values),
            }
        })
        .collect()
}

/// Strategy c evaluated at `level` from already-fitted range models.
pub fn range_probabilities(models: &[RangeCdf], level: f64) -> SubregionProbabilities {
    let weights = models
        .iter()
        .map(|m| m.evaluate(level).clamp(RANGE_CDF_FLOOR, 1.0))
        .collect();
    normalize(weights, StrategyKind::C)
}

/// The level strategy c uses: the `RANGE_RANK`-th lowest observed value
/// across all subregions, or `None` when fewer values exist.
pub fn range_level(sorted_values: &[f64]) -> Option<f64> {
    sorted_values.get(RANGE_RANK - 1).copied()
}

/// Strategy c: each subregion's GP range CDF evaluated at the global
/// fifth-lowest value, floored at [`RANGE_CDF_FLOOR`] and normalized.
/// With fewer than five values overall, volume-proportional.
pub fn strategy_c_gp_range(subs: &[Subregion], sorted_values: &[f64]) -> Result<SubregionProbabilities> {
    require_nonempty(subs)?;
    match range_level(sorted_values) {
        None => Ok(volume_proportional(subs, StrategyKind::C)),
        Some(level) => Ok(range_probabilities(&fit_range_models(subs)?, level)),
    }
}

/// Strategy d: `LB_i = y_i - s_i`, `UB = t + s(incumbent subregion)`;
/// subregions with `LB_i >= UB` get zero, the rest share mass in
/// proportion to `UB - LB_i`.
///
/// If the incumbent subregion ends up with zero weight (its spread is zero)
/// it receives the largest included weight, or all mass when nothing else
/// is included.
pub fn strategy_d_confidence_bounds(
    subs: &[Subregion],
    level: f64,
    incumbent_index: usize,
) -> Result<SubregionProbabilities> {
    require_nonempty(subs)?;
    require_samples(subs, 2)?;
    if incumbent_index >= subs.len() {
        return Err(Error::InvalidArgument("incumbent index out of range".into()));
    }
    let spreads: Vec<f64> = subs.iter().map(|s| s.value_std()).collect();
    let upper = level + spreads[incumbent_index];
    let mut weights: Vec<f64> = subs
        .iter()
        .zip(&spreads)
        .map(|(s, sd)| {
            let lb = s.best_value - sd;
            if lb >= upper {
                0.0
            } else {
                upper - lb
            }
        })
        .collect();
    if weights[incumbent_index] <= 0.0 {
        let max = weights.iter().copied().fold(0.0, f64::max);
        weights[incumbent_index] = if max > 0.0 { max } else { 1.0 };
    }
    Ok(normalize(weights, StrategyKind::D))
}

/// Inputs every strategy may need.
#[derive(Debug, Clone, Copy)]
pub struct StrategyInput<'a> {
    pub subregions: &'a [Subregion],
    pub incumbent: f64,
    pub incumbent_index: usize,
    pub iteration: usize,
    pub sorted_values: &'a [f64],
}

/// The live probabilities of `kind` for the current state.
pub fn live_probabilities(kind: StrategyKind, input: &StrategyInput<'_>) -> Result<SubregionProbabilities> {
    if input.subregions.len() == 1 {
        return Ok(SubregionProbabilities {
            probs: alloc::vec![1.0],
            strategy: kind,
        });
    }
    match kind {
        StrategyKind::A => strategy_a_observed_best(input.subregions, input.incumbent),
        StrategyKind::B => strategy_b_sample_variance(input.subregions, input.iteration),
        StrategyKind::C => strategy_c_gp_range(input.subregions, input.sorted_values),
        StrategyKind::D => {
            strategy_d_confidence_bounds(input.subregions, input.incumbent, input.incumbent_index)
        }
    }
}

/// Probabilities of `kind` with the level parameter set to `level` instead
/// of its live value. Strategy b has no level parameter.
pub fn probabilities_at_level(
    kind: StrategyKind,
    input: &StrategyInput<'_>,
    level: f64,
) -> Result<SubregionProbabilities> {
    if input.subregions.len() == 1 {
        return Ok(SubregionProbabilities {
            probs: alloc::vec![1.0],
            strategy: kind,
        });
    }
    match kind {
        StrategyKind::A => strategy_a_observed_best(input.subregions, level),
        StrategyKind::B => strategy_b_sample_variance(input.subregions, input.iteration),
        StrategyKind::C => {
            if input.sorted_values.len() < RANGE_RANK {
                return Ok(volume_proportional(input.subregions, StrategyKind::C));
            }
            Ok(range_probabilities(&fit_range_models(input.subregions)?, level))
        }
        StrategyKind::D => strategy_d_confidence_bounds(input.subregions, level, input.incumbent_index),
    }
}

/// True when the ratio at the lower level is at least the ratio at the
/// higher level, less `tolerance`.
pub fn check_assumption_1_3(lhs_ratio: f64, rhs_ratio: f64, tolerance: f64) -> bool {
    lhs_ratio >= rhs_ratio - tolerance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxDomain;
    use alloc::vec;

    fn sub(id: usize, lo: f64, hi: f64, values: &[f64]) -> Subregion {
        let mut s = Subregion::new(id, BoxDomain::new(vec![lo], vec![hi]).unwrap(), 1);
        let n = values.len();
        for (i, v) in values.iter().enumerate() {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            s.push(vec![x], *v);
        }
        s
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn a_hand_values() {
        let z = 2.5;
        let subs = [sub(0, 0.0, 1.0, &[z]), sub(1, 1.0, 2.0, &[z + 1.0])];
        let p = strategy_a_observed_best(&subs, z).unwrap();
        assert!(close(&p.probs, &[2.0 / 3.0, 1.0 / 3.0]));
        let eq = [sub(0, 0.0, 1.0, &[1.0]), sub(1, 1.0, 2.0, &[1.0]), sub(2, 2.0, 3.0, &[1.0])];
        assert!(close(&strategy_a_observed_best(&eq, 1.0).unwrap().probs, &[1.0 / 3.0; 3]));
        assert!(close(&strategy_a_observed_best(&subs[..1], z).unwrap().probs, &[1.0]));
    }

    #[test]
    fn b_hand_values() {
        let thirds = [
            sub(0, 0.0, 1.0, &[1.0, 2.0]),
            sub(1, 1.0, 2.0, &[1.0, 9.0]),
            sub(2, 2.0, 3.0, &[0.0, 5.0]),
        ];
        assert!(close(&strategy_b_sample_variance(&thirds, 1).unwrap().probs, &[1.0 / 3.0; 3]));
        // variances 1 and 3
        let v = [
            sub(0, 0.0, 1.0, &[0.0, 2.0_f64.sqrt()]),
            sub(1, 1.0, 2.0, &[0.0, 6.0_f64.sqrt()]),
        ];
        let p = strategy_b_sample_variance(&v, 2).unwrap();
        assert!((p.probs[0] - 0.25).abs() < 1e-12 && (p.probs[1] - 0.75).abs() < 1e-12);
        let z = [sub(0, 0.0, 1.0, &[3.0, 3.0]), sub(1, 1.0, 2.0, &[0.0, 2.0])];
        assert!(close(&strategy_b_sample_variance(&z, 2).unwrap().probs, &[0.0, 1.0]));
        assert!(strategy_b_sample_variance(&[sub(0, 0.0, 1.0, &[1.0]), sub(1, 1.0, 2.0, &[1.0, 2.0])], 2).is_err());
    }

    #[test]
    fn c_symmetric_and_ordered() {
        let same = [
            sub(0, 0.0, 1.0, &[1.0, 2.0, 3.0]),
            sub(1, 1.0, 2.0, &[1.0, 2.0, 3.0]),
            sub(2, 2.0, 3.0, &[1.0, 2.0, 3.0]),
        ];
        let all = crate::math::sorted_copy(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let p = strategy_c_gp_range(&same, &all).unwrap();
        assert!(p.probs.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-6));

        // Subregion 0 entirely above the level, subregion 1 entirely below.
        let split = [sub(0, 0.0, 1.0, &[10.0, 11.0, 12.0]), sub(1, 1.0, 2.0, &[1.0, 2.0, 3.0])];
        let all = crate::math::sorted_copy(&[10.0, 11.0, 12.0, 1.0, 2.0, 3.0]);
        let level = range_level(&all).unwrap();
        assert_eq!(level, 11.0);
        let models = fit_range_models(&split).unwrap();
        // step-CDF oracle: F_0(11) = 2/3, F_1(11) = 1
        assert!(models[1].evaluate(level) == 1.0);
        let p = strategy_c_gp_range(&split, &all).unwrap();
        assert!(p.probs[1] > p.probs[0], "{:?}", p.probs);
        assert!(p.is_proper());
    }

    #[test]
    fn c_falls_back_to_volume() {
        let subs = [sub(0, 0.0, 1.0, &[1.0, 2.0]), sub(1, 1.0, 4.0, &[1.0, 2.0])];
        let p = strategy_c_gp_range(&subs, &[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert!(close(&p.probs, &[0.25, 0.75]));
    }

    fn with_bounds(best: f64, sd: f64, id: usize) -> Subregion {
        // two samples {best, best + sd * sqrt(2)} have std sd
        sub(id, id as f64, id as f64 + 1.0, &[best, best + sd * 2.0_f64.sqrt()])
    }

    #[test]
    fn d_hand_values() {
        // incumbent 4 with spread 1 -> UB = 5; second subregion LB = 7 - 1 = 6
        let subs = [with_bounds(4.0, 1.0, 0), with_bounds(7.0, 1.0, 1)];
        let p = strategy_d_confidence_bounds(&subs, 4.0, 0).unwrap();
        assert!(close(&p.probs, &[1.0, 0.0]));
        // LB = {3, 4}, UB = 5 -> weights {2, 1}
        let subs = [with_bounds(4.0, 1.0, 0), with_bounds(5.0, 1.0, 1)];
        let p = strategy_d_confidence_bounds(&subs, 4.0, 0).unwrap();
        assert!(close(&p.probs, &[2.0 / 3.0, 1.0 / 3.0]));
        let p = strategy_d_confidence_bounds(&subs[..1], 4.0, 0).unwrap();
        assert!(close(&p.probs, &[1.0]));
    }

    #[test]
    fn d_zero_spread_incumbent_stays_positive() {
        let subs = [sub(0, 0.0, 1.0, &[1.0, 1.0]), with_bounds(1.5, 2.0, 1)];
        let p = strategy_d_confidence_bounds(&subs, 1.0, 0).unwrap();
        assert!(p.probs[0] > 0.0 && p.is_proper());
    }

    #[test]
    fn assumption_check_examples() {
        assert!(check_assumption_1_3(0.3, 0.3, 0.0));
        assert!(check_assumption_1_3(0.475, 0.0, 0.0));
        assert!(!check_assumption_1_3(0.155, 0.169, 0.0));
    }

    #[test]
    fn keys_parse() {
        for k in StrategyKind::ALL {
            assert_eq!(k.key().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("e".parse::<StrategyKind>().is_err());
    }
}
