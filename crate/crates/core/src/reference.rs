//! Idealized baselines: hesitant adaptive search, the lattice record
//! process, the dimension bound, and an empirical dominance checker.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::Problem;
use crate::math;
use crate::rng::RngStream;
use crate::trace::RunTrace;
use crate::{Error, Point, Result};

pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;
/// Largest lattice the record oracle will handle.
pub const LATTICE_GUARD: u64 = 10_000_000;

/// How points below a level are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSampler {
    /// Uniform proposals over the box, kept when strictly below the level.
    Rejection,
    /// Exact draws for `f(x) = sum(x)` on the unit cube.
    SumOnUnitCube,
}

pub type BetteringFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct HasPrimeConfig {
    /// Constant bettering probability, also the lower bound of `bettering`.
    pub floor: f64,
    pub bettering: Option<BetteringFn>,
    pub rejection_cap: u64,
    pub level_sampler: LevelSampler,
}

impl fmt::Debug for HasPrimeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HasPrimeConfig")
            .field("floor", &self.floor)
            .field("bettering", &self.bettering.as_ref().map(|_| "fn"))
            .field("rejection_cap", &self.rejection_cap)
            .field("level_sampler", &self.level_sampler)
            .finish()
    }
}

impl HasPrimeConfig {
    pub fn constant(b: f64) -> Result<Self> {
        let config = Self {
            floor: b,
            bettering: None,
            rejection_cap: DEFAULT_REJECTION_CAP,
            level_sampler: LevelSampler::Rejection,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_level_sampler(mut self, sampler: LevelSampler) -> Self {
        self.level_sampler = sampler;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor <= 1.0) {
            return Err(Error::InvalidConfig("bettering floor must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// `b(y)`, clamped to `[floor, 1]`.
    pub fn bettering_at(&self, y: f64) -> f64 {
        match &self.bettering {
            Some(b) => b(y).clamp(self.floor, 1.0),
            None => self.floor,
        }
    }
}

/// Uniform point in `{x in [0,1]^d : sum(x) < level}`.
pub fn sample_sum_below(d: usize, level: f64, cap: u64, rng: &mut RngStream) -> Result<Point> {
    if level <= 0.0 {
        return Err(Error::RejectionCap(0));
    }
    let simplex = |rng: &mut RngStream| -> Point {
        let e: Vec<f64> = (0..=d).map(|_| rng.exponential()).collect();
        let total: f64 = e.iter().sum();
        e[..d].iter().map(|v| level * v / total).collect()
    };
    if level <= 1.0 {
        return Ok(simplex(rng));
    }
    if level >= d as f64 {
        loop {
            let x: Point = (0..d).map(|_| rng.uniform()).collect();
            if x.iter().sum::<f64>() < level {
                return Ok(x);
            }
        }
    }
    let log_simplex_volume = d as f64 * libm::log(level) - libm::lgamma(d as f64 + 1.0);
    for _ in 0..cap {
        if log_simplex_volume < 0.0 {
            let x = simplex(rng);
            if x.iter().all(|&v| v <= 1.0) {
                return Ok(x);
            }
        } else {
            let x: Point = (0..d).map(|_| rng.uniform()).collect();
            if x.iter().sum::<f64>() < level {
                return Ok(x);
            }
        }
    }
    Err(Error::RejectionCap(cap))
}

/// Uniform point in `{x in box : f(x) < level}` by rejection.
pub fn sample_below_by_rejection(problem: &Problem, level: f64, cap: u64, rng: &mut RngStream) -> Result<(Point, f64)> {
    for _ in 0..cap {
        let x = problem.domain.uniform_point(rng);
        let v = problem.evaluate(&x);
        if v < level {
            return Ok((x, v));
        }
    }
    Err(Error::RejectionCap(cap))
}

/// Hesitant adaptive search with uniform underlying sampling. Record 1 is
/// a uniform start; each further record either improves (with probability
/// `b(Y_k)`, drawing uniformly from the improving set) or repeats the
/// current point. The trace is marked truncated if the rejection cap is hit.
pub fn has_prime_run(problem: &Problem, config: &HasPrimeConfig, budget: usize, rng: &mut RngStream) -> Result<RunTrace> {
    config.validate()?;
    let mut trace = RunTrace::new();
    if budget == 0 {
        return Ok(trace);
    }
    let mut x = problem.domain.uniform_point(rng);
    let mut y = problem.evaluate(&x);
    trace.push(x.clone(), y, 0);
    while trace.len() < budget {
        if rng.bernoulli(config.bettering_at(y)) {
            let drawn = match config.level_sampler {
                LevelSampler::Rejection => sample_below_by_rejection(problem, y, config.rejection_cap, rng),
                LevelSampler::SumOnUnitCube => sample_sum_below(problem.dim(), y, config.rejection_cap, rng)
                    .map(|p| {
                        let v = problem.evaluate(&p);
                        (p, v)
                    }),
            };
            match drawn {
                Ok((p, v)) => {
                    x = p;
                    y = v;
                }
                Err(Error::RejectionCap(_)) => {
                    trace.truncated = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        trace.push(x.clone(), y, 0);
    }
    Ok(trace)
}

/// Fraction of evaluations after the first that strictly improved.
pub fn measured_bettering_rate(trace: &RunTrace) -> f64 {
    let r = &trace.records;
    if r.len() < 2 {
        return 0.0;
    }
    let improved = r.windows(2).filter(|w| w[1].incumbent_after < w[0].incumbent_after).count();
    improved as f64 / (r.len() - 1) as f64
}

/// `sum(x) + eps * lex_rank(x)` on the lattice `{0..k-1}^d`; injective with
/// its unique minimum at the origin.
pub fn lattice_objective(point: &[u32], k: u32) -> f64 {
    let sum: u64 = point.iter().map(|&v| v as u64).sum();
    let mut rank = 0u64;
    for &v in point {
        rank = rank * k as u64 + v as u64;
    }
    let n = libm::pow(k as f64, point.len() as f64);
    sum as f64 + rank as f64 / (n + 1.0)
}

fn lattice_size(k: u32, d: u32) -> Result<u64> {
    if k == 0 || d == 0 {
        return Err(Error::InvalidArgument("lattice needs k >= 1 and d >= 1".into()));
    }
    let mut n: u64 = 1;
    for _ in 0..d {
        n = n.saturating_mul(k as u64);
        if n > LATTICE_GUARD {
            return Err(Error::InvalidArgument("lattice exceeds 1e7 points".into()));
        }
    }
    Ok(n)
}

/// Evaluations the uniform improving record process needs to reach the
/// minimum of one draw of an injective objective on `n` points. Only ranks
/// matter, so the process is simulated on ranks `1..=n` directly.
pub fn record_process_length(n: u64, rng: &mut RngStream) -> u64 {
    let mut rank = 1 + (rng.uniform() * n as f64) as u64;
    rank = rank.min(n);
    let mut evals = 1;
    while rank > 1 {
        let below = rank - 1;
        rank = (1 + (rng.uniform() * below as f64) as u64).min(below);
        evals += 1;
    }
    evals
}

/// Monte Carlo mean of [`record_process_length`] over `trials` on the
/// `k^d` lattice.
pub fn lattice_expected_record_evals(k: u32, d: u32, trials: usize, rng: &mut RngStream) -> Result<f64> {
    let n = lattice_size(k, d)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let total: u64 = (0..trials).map(|_| record_process_length(n, rng)).sum();
    Ok(total as f64 / trials as f64)
}

/// `2 + d ln k`.
pub fn corollary2_bound(k: u32, d: u32) -> f64 {
    2.0 + d as f64 * libm::log(k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityBound {
    pub lipschitz: f64,
    pub diameter: f64,
    pub epsilon: f64,
    pub bettering_floor: f64,
}

/// `1 + d (1/B) ln(L D / eps)`.
pub fn corollary1_bound(b: &LinearityBound, d: usize) -> Result<f64> {
    if !(b.lipschitz > 0.0 && b.diameter > 0.0 && b.epsilon > 0.0 && b.bettering_floor > 0.0) {
        return Err(Error::InvalidArgument("bound parameters must be positive".into()));
    }
    let ratio = b.lipschitz * b.diameter / b.epsilon;
    if ratio <= 1.0 {
        return Err(Error::InvalidArgument("L * D must exceed epsilon".into()));
    }
    Ok(1.0 + d as f64 / b.bettering_floor * libm::log(ratio))
}

pub const DOMINANCE_CHECKPOINTS: [usize; 6] = [1, 2, 5, 10, 20, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCell {
    pub k: usize,
    pub y: f64,
    pub p_a: f64,
    pub p_b: f64,
    /// Two-sample binomial standard error of `p_a - p_b`.
    pub sigma: f64,
}

impl DominanceCell {
    /// `p_b - p_a`: positive when `B` looks better than `A`.
    pub fn violation(&self) -> f64 {
        self.p_b - self.p_a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub cells: Vec<DominanceCell>,
    pub max_violation: f64,
    /// Largest `violation - 2 sigma` over the cells.
    pub max_excess: f64,
    pub pass: bool,
}

/// Record after `k` steps: `Y_0` is the first value.
pub fn record_after(trace: &RunTrace, k: usize) -> Option<f64> {
    trace.records.get(k).map(|r| r.incumbent_after)
}

/// Checkpoints from [`DOMINANCE_CHECKPOINTS`] plus `budget`, capped at `budget`.
pub fn checkpoints(budget: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = DOMINANCE_CHECKPOINTS.iter().copied().filter(|&k| k <= budget).collect();
    if budget > 0 && !ks.contains(&budget) {
        ks.push(budget);
    }
    ks
}

/// Pooled quantiles of both trace sets' records at the checkpoints.
pub fn default_y_grid(a: &[RunTrace], b: &[RunTrace], ks: &[usize], points: usize) -> Vec<f64> {
    let mut pooled: Vec<f64> = Vec::new();
    for t in a.iter().chain(b) {
        pooled.extend(ks.iter().filter_map(|&k| record_after(t, k)));
    }
    if pooled.is_empty() {
        return Vec::new();
    }
    let sorted = math::sorted_copy(&pooled);
    let mut grid: Vec<f64> = (1..=points)
        .map(|i| math::quantile_sorted(&sorted, i as f64 / (points + 1) as f64))
        .collect();
    grid.dedup();
    grid
}

fn fraction_at_or_below(traces: &[RunTrace], k: usize, y: f64) -> f64 {
    let hits = traces
        .iter()
        .filter(|t| record_after(t, k).is_some_and(|v| v <= y))
        .count();
    hits as f64 / traces.len() as f64
}

/// Compares `P(Y_k <= y)` between trace sets `a` and `b` at `checkpoints`
/// and every `y` in `y_grid`. Passes when no cell has `p_b - p_a` above
/// twice its binomial standard error.
pub fn dominance_check(a: &[RunTrace], b: &[RunTrace], y_grid: &[f64], checkpoints: &[usize]) -> Result<DominanceReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both trace sets must be non-empty".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut cells = Vec::new();
    for &k in checkpoints {
        for &y in y_grid {
            let p_a = fraction_at_or_below(a, k, y);
            let p_b = fraction_at_or_below(b, k, y);
            let sigma = libm::sqrt(p_a * (1.0 - p_a) / na + p_b * (1.0 - p_b) / nb);
            cells.push(DominanceCell { k, y, p_a, p_b, sigma });
        }
    }
    let max_violation = cells.iter().map(|c| c.violation()).fold(0.0, f64::max);
    let max_excess = cells
        .iter()
        .map(|c| c.violation() - 2.0 * c.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DominanceReport {
        pass: cells.iter().all(|c| c.violation() <= 2.0 * c.sigma),
        cells,
        max_violation,
        max_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BoxDomain, LatticeDomain};
    use alloc::vec;

    fn line() -> Problem {
        Problem::new("line", BoxDomain::cube(1, 0.0, 1.0).unwrap(), |x: &[f64]| x[0])
    }

    fn sum_cube(d: usize) -> Problem {
        Problem::new("sum", BoxDomain::cube(d, 0.0, 1.0).unwrap(), |x: &[f64]| x.iter().sum::<f64>())
    }

    #[test]
    fn certain_bettering_strictly_decreases() {
        let mut rng = RngStream::new(1, 0);
        let t = has_prime_run(&line(), &HasPrimeConfig::constant(1.0).unwrap(), 8, &mut rng).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.records.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn half_bettering_holds_half_the_time() {
        let mut rng = RngStream::new(2, 0);
        let cfg = HasPrimeConfig::constant(0.5).unwrap();
        let mut holds = 0;
        let mut steps = 0;
        while steps < 10_000 {
            let t = has_prime_run(&line(), &cfg, 11, &mut rng).unwrap();
            for w in t.records.windows(2) {
                holds += usize::from(w[1].value == w[0].value);
                steps += 1;
            }
        }
        let rate = holds as f64 / steps as f64;
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
    }

    #[test]
    fn record_distribution_matches_pure_adaptive_recursion() {
        // On f(x) = x with b = 1, Y_k is a product of k + 1 independent
        // uniforms; simulate that recursion directly as the oracle.
        let k = 4;
        let n = 5000;
        let mut rng = RngStream::new(3, 0);
        let cfg = HasPrimeConfig::constant(1.0).unwrap();
        let simulated: Vec<f64> = (0..n)
            .map(|_| has_prime_run(&line(), &cfg, k + 1, &mut rng).unwrap().final_incumbent().unwrap())
            .collect();
        let mut oracle_rng = RngStream::new(4, 0);
        let oracle: Vec<f64> = (0..n)
            .map(|_| (0..=k).map(|_| oracle_rng.uniform()).product())
            .collect();
        assert!(math::ks_two_sample(&simulated, &oracle) < 0.05);
    }

    #[test]
    fn exact_sum_sampler_matches_rejection() {
        let p = sum_cube(3);
        for level in [0.7, 1.6, 2.4] {
            let mut rng = RngStream::new(5, 0);
            let exact: Vec<f64> = (0..4000)
                .map(|_| sample_sum_below(3, level, DEFAULT_REJECTION_CAP, &mut rng).unwrap().iter().sum())
                .collect();
            let rejected: Vec<f64> = (0..4000)
                .map(|_| sample_below_by_rejection(&p, level, DEFAULT_REJECTION_CAP, &mut rng).unwrap().1)
                .collect();
            assert!(exact.iter().all(|&v| v < level));
            assert!(math::ks_two_sample(&exact, &rejected) < 0.05, "level {level}");
        }
    }

    #[test]
    fn rejection_cap_truncates() {
        let p = Problem::new("spike", BoxDomain::cube(1, 0.0, 1.0).unwrap(), |x: &[f64]| {
            if x[0] == 0.123 {
                0.0
            } else {
                1.0
            }
        });
        let mut cfg = HasPrimeConfig::constant(1.0).unwrap();
        cfg.rejection_cap = 100;
        let mut rng = RngStream::new(6, 0);
        let t = has_prime_run(&p, &cfg, 10, &mut rng).unwrap();
        assert!(t.truncated && t.len() == 1);
    }

    #[test]
    fn lattice_oracle_small_cases() {
        let mut rng = RngStream::new(7, 0);
        assert_eq!(lattice_expected_record_evals(1, 3, 100, &mut rng).unwrap(), 1.0);
        let m = lattice_expected_record_evals(2, 1, 20_000, &mut rng).unwrap();
        assert!((m - 1.5).abs() < 0.05, "{m}");
        assert!(lattice_expected_record_evals(10, 8, 10, &mut rng).is_err());
    }

    #[test]
    fn rank_simulation_matches_explicit_lattice() {
        // Explicit record process on the perturbed-sum objective.
        let lattice = LatticeDomain::new(3, 2).unwrap();
        let n = lattice.point_count().unwrap();
        let values: Vec<f64> = (0..n).map(|i| lattice_objective(&lattice.point(i), 3)).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        assert_eq!(sorted.len() as u64, n);
        assert_eq!(values[0], sorted[0]);
        let mut rng = RngStream::new(8, 0);
        let trials = 20_000;
        let mut total = 0;
        for _ in 0..trials {
            let mut current = values[rng.index(n as usize)];
            total += 1;
            while current > sorted[0] {
                let below: Vec<f64> = values.iter().copied().filter(|&v| v < current).collect();
                current = below[rng.index(below.len())];
                total += 1;
            }
        }
        let explicit = total as f64 / trials as f64;
        let harmonic: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        assert!((explicit - harmonic).abs() < 0.05);
        let ranks = lattice_expected_record_evals(3, 2, trials, &mut rng).unwrap();
        assert!((ranks - harmonic).abs() < 0.05);
    }

    #[test]
    fn corollary1_examples() {
        let b = LinearityBound {
            lipschitz: 1.0,
            diameter: 1.0,
            epsilon: (-1.0f64).exp(),
            bettering_floor: 1.0,
        };
        assert!((corollary1_bound(&b, 3).unwrap() - 4.0).abs() < 1e-12);
        let half = LinearityBound { bettering_floor: 0.5, ..b };
        let (one, two) = (corollary1_bound(&b, 3).unwrap(), corollary1_bound(&half, 3).unwrap());
        assert!(((two - 1.0) - 2.0 * (one - 1.0)).abs() < 1e-12);
        let step = corollary1_bound(&b, 5).unwrap() - corollary1_bound(&b, 4).unwrap();
        assert!((corollary1_bound(&b, 9).unwrap() - corollary1_bound(&b, 8).unwrap() - step).abs() < 1e-12);
        let flat = LinearityBound { epsilon: 1.0, ..b };
        assert!(corollary1_bound(&flat, 3).is_err());
    }

    #[test]
    fn dominance_reflexive_and_antisymmetric() {
        let mut rng = RngStream::new(9, 0);
        let p = sum_cube(2);
        let one = HasPrimeConfig::constant(1.0).unwrap().with_level_sampler(LevelSampler::SumOnUnitCube);
        let half = HasPrimeConfig::constant(0.5).unwrap().with_level_sampler(LevelSampler::SumOnUnitCube);
        let a: Vec<RunTrace> = (0..200).map(|_| has_prime_run(&p, &one, 21, &mut rng).unwrap()).collect();
        let b: Vec<RunTrace> = (0..200).map(|_| has_prime_run(&p, &half, 21, &mut rng).unwrap()).collect();
        let ks = checkpoints(20);
        assert_eq!(ks, vec![1, 2, 5, 10, 20]);
        let grid = default_y_grid(&a, &b, &ks, 10);
        let same = dominance_check(&a, &a, &grid, &ks).unwrap();
        assert_eq!(same.max_violation, 0.0);
        assert!(same.pass);
        let ab = dominance_check(&a, &b, &grid, &ks).unwrap();
        let ba = dominance_check(&b, &a, &grid, &ks).unwrap();
        for (x, y) in ab.cells.iter().zip(&ba.cells) {
            assert_eq!(x.violation(), -y.violation());
        }
        assert!(ab.pass);
        assert!(!ba.pass);
    }

    #[test]
    fn bettering_rate_of_a_trace() {
        let mut t = RunTrace::new();
        for v in [3.0, 2.0, 2.5, 1.0, 1.0] {
            t.push(vec![v], v, 0);
        }
        assert_eq!(measured_bettering_rate(&t), 0.5);
    }
}
