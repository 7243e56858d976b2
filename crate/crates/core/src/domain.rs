//! Boxes, problems, subregions and the partition they form.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::RngStream;
use crate::{Error, Point, Result};

/// An axis-aligned box `[lower, upper]` with positive width on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("zero dimensions".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidBox(format!(
                    "coordinate {j}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.width(j)).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn center(&self) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Componentwise projection onto the box.
    pub fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Coordinate of maximal width; ties go to the lowest index.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for j in 1..self.dim() {
            if self.width(j) > self.width(best) {
                best = j;
            }
        }
        best
    }

    /// Halves the box along `axis`, returning `(lower half, upper half)`.
    pub fn halve(&self, axis: usize) -> (BoxDomain, BoxDomain) {
        let mid = 0.5 * (self.lower[axis] + self.upper[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[axis] = mid;
        right.lower[axis] = mid;
        (left, right)
    }

    /// Uniform point in the box, each coordinate drawn independently.
    pub fn uniform_point(&self, rng: &mut RngStream) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.uniform_in(lo, hi))
            .collect()
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Uniform point in `domain`.
pub fn uniform_point(domain: &BoxDomain, rng: &mut RngStream) -> Point {
    domain.uniform_point(rng)
}

/// The integer lattice `{1, ..., k}^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeDomain {
    k_per_dim: u32,
    dim: u32,
}

impl LatticeDomain {
    pub fn new(k_per_dim: u32, dim: u32) -> Result<Self> {
        if k_per_dim == 0 || dim == 0 {
            return Err(Error::InvalidArgument(
                "lattice needs k >= 1 and d >= 1".into(),
            ));
        }
        Ok(Self { k_per_dim, dim })
    }

    pub fn k_per_dim(&self) -> u32 {
        self.k_per_dim
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// `k^d`, or `None` on overflow.
    pub fn point_count(&self) -> Option<u64> {
        (self.k_per_dim as u64).checked_pow(self.dim)
    }

    /// The `index`-th point in lexicographic order (last coordinate fastest).
    pub fn point(&self, mut index: u64) -> Vec<u32> {
        let k = self.k_per_dim as u64;
        let mut p = alloc::vec![0u32; self.dim as usize];
        for slot in p.iter_mut().rev() {
            *slot = (index % k) as u32 + 1;
            index /= k;
        }
        p
    }
}

/// A deterministic objective function.
pub trait Objective: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// An objective over a box, with optional known-optimum metadata.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: BoxDomain,
    pub objective: Arc<dyn Objective>,
    pub optimum_value: Option<f64>,
    pub optimum_point: Option<Point>,
    pub max_value_hint: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("optimum_value", &self.optimum_value)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        domain: BoxDomain,
        objective: impl Objective + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            objective: Arc::new(objective),
            optimum_value: None,
            optimum_point: None,
            max_value_hint: None,
        }
    }

    pub fn with_optimum(mut self, value: f64, point: Option<Point>) -> Self {
        self.optimum_value = Some(value);
        self.optimum_point = point;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.evaluate(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub point: Point,
    pub value: f64,
}

/// One cell of the partition, with the samples that fell inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Subregion {
    pub id: usize,
    pub domain: BoxDomain,
    pub samples: Vec<Sample>,
    pub best_value: f64,
    pub level: u32,
}

impl Subregion {
    pub fn new(id: usize, domain: BoxDomain, level: u32) -> Self {
        Self {
            id,
            domain,
            samples: Vec::new(),
            best_value: f64::INFINITY,
            level,
        }
    }

    pub fn volume(&self) -> f64 {
        self.domain.volume()
    }

    pub fn push(&mut self, point: Point, value: f64) {
        debug_assert!(self.domain.contains(&point));
        if value < self.best_value {
            self.best_value = value;
        }
        self.samples.push(Sample { point, value });
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample standard deviation of the observed values.
    pub fn value_std(&self) -> f64 {
        crate::math::sample_std(&self.values())
    }

    pub fn best_sample(&self) -> Option<&Sample> {
        self.samples
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }
}

/// Splits `sub` in half along its longest axis (lowest index on ties).
///
/// Samples go to the child containing them; a sample on the cutting plane
/// goes to the lower child. Children receive ids `left_id` and `right_id`.
pub fn split_halve_longest(
    sub: &Subregion,
    left_id: usize,
    right_id: usize,
) -> (Subregion, Subregion) {
    let axis = sub.domain.longest_axis();
    let (lbox, rbox) = sub.domain.halve(axis);
    let mid = lbox.upper()[axis];
    let mut left = Subregion::new(left_id, lbox, sub.level + 1);
    let mut right = Subregion::new(right_id, rbox, sub.level + 1);
    for s in &sub.samples {
        if s.point[axis] <= mid {
            left.push(s.point.clone(), s.value);
        } else {
            right.push(s.point.clone(), s.value);
        }
    }
    (left, right)
}

/// Monte Carlo estimate of the fraction of `domain` where `f <= level`.
pub fn improving_volume_fraction(
    domain: &BoxDomain,
    level: f64,
    objective: &dyn Objective,
    n_mc: usize,
    rng: &mut RngStream,
) -> f64 {
    level_set_fractions(domain, &[level], objective, n_mc, rng)[0]
}

/// Like [`improving_volume_fraction`] for several levels at once, sharing
/// the same Monte Carlo points so the estimates are nested.
pub fn level_set_fractions(
    domain: &BoxDomain,
    levels: &[f64],
    objective: &dyn Objective,
    n_mc: usize,
    rng: &mut RngStream,
) -> Vec<f64> {
    let n_mc = n_mc.max(1);
    let mut counts = alloc::vec![0usize; levels.len()];
    for _ in 0..n_mc {
        let x = domain.uniform_point(rng);
        let v = objective.evaluate(&x);
        for (c, &level) in counts.iter_mut().zip(levels) {
            if v <= level {
                *c += 1;
            }
        }
    }
    counts.into_iter().map(|c| c as f64 / n_mc as f64).collect()
}

/// The current partition of the domain plus incumbent bookkeeping.
#[derive(Debug, Clone)]
pub struct PartitionState {
    pub domain: BoxDomain,
    pub subregions: Vec<Subregion>,
    pub iteration: usize,
    pub incumbent_value: f64,
    pub incumbent_point: Point,
    pub eval_count: usize,
    next_id: usize,
}

impl PartitionState {
    /// A single subregion covering the whole domain, with no samples yet.
    pub fn new(domain: BoxDomain) -> Self {
        let root = Subregion::new(0, domain.clone(), 0);
        Self {
            domain,
            subregions: alloc::vec![root],
            iteration: 0,
            incumbent_value: f64::INFINITY,
            incumbent_point: Vec::new(),
            eval_count: 0,
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.subregions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subregions.is_empty()
    }

    pub fn fresh_id(&mut self) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Adds an evaluated point to subregion `index` and updates the
    /// incumbent. Returns true when the incumbent strictly improved.
    pub fn record(&mut self, index: usize, point: Point, value: f64) -> bool {
        self.eval_count += 1;
        let improved = value < self.incumbent_value;
        if improved {
            self.incumbent_value = value;
            self.incumbent_point = point.clone();
        }
        self.subregions[index].push(point, value);
        improved
    }

    /// Index of the subregion holding the incumbent (lowest id on ties).
    pub fn incumbent_index(&self) -> Option<usize> {
        self.subregions
            .iter()
            .enumerate()
            .filter(|(_, s)| s.best_value == self.incumbent_value)
            .min_by_key(|(_, s)| s.id)
            .map(|(i, _)| i)
    }

    /// Every observed value across the partition, ascending.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .subregions
            .iter()
            .flat_map(|s| s.samples.iter().map(|x| x.value))
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Replaces subregion `index` by its two halves, returning their indices.
    pub fn branch(&mut self, index: usize) -> (usize, usize) {
        let (l, r) = (self.fresh_id(), self.fresh_id());
        let (left, right) = split_halve_longest(&self.subregions[index], l, r);
        self.subregions[index] = left;
        self.subregions.push(right);
        (index, self.subregions.len() - 1)
    }

    /// Checks exhaustiveness (volume sum), sample containment, best-value
    /// bookkeeping, and interior-disjointness on `probes` random points.
    pub fn validate(&self, probes: usize, rng: &mut RngStream) -> Result<()> {
        let total: f64 = self.subregions.iter().map(|s| s.volume()).sum();
        let expect = self.domain.volume();
        if ((total - expect) / expect).abs() > 1e-9 {
            return Err(Error::InvalidBox(format!(
                "subregion volumes sum to {total}, domain volume is {expect}"
            )));
        }
        let mut best = f64::INFINITY;
        for s in &self.subregions {
            if s.samples.iter().any(|x| !s.domain.contains(&x.point)) {
                return Err(Error::InvalidBox(format!(
                    "subregion {} holds a sample outside its box",
                    s.id
                )));
            }
            let min = s
                .samples
                .iter()
                .map(|x| x.value)
                .fold(f64::INFINITY, f64::min);
            if !s.samples.is_empty() && min != s.best_value {
                return Err(Error::InvalidBox(format!(
                    "subregion {} best value is stale",
                    s.id
                )));
            }
            best = best.min(s.best_value);
        }
        if self.eval_count > 0 && best != self.incumbent_value {
            return Err(Error::InvalidBox("incumbent is not the best value".into()));
        }
        for _ in 0..probes {
            let x = self.domain.uniform_point(rng);
            let hits = self
                .subregions
                .iter()
                .filter(|s| {
                    s.domain.contains(&x)
                        && x.iter().enumerate().all(|(j, v)| {
                            *v > s.domain.lower()[j] && *v < s.domain.upper()[j]
                        })
                })
                .count();
            if hits > 1 {
                return Err(Error::InvalidBox("overlapping subregions".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rect(lo: [f64; 2], hi: [f64; 2]) -> BoxDomain {
        BoxDomain::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
    }

    #[test]
    fn uniform_point_stays_inside() {
        let mut rng = RngStream::new(3, 0);
        let unit = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let eps = 1e-12;
        let tiny = rect([2.0, 5.0], [2.0 + eps, 5.0 + eps]);
        for _ in 0..1000 {
            assert!(unit.contains(&uniform_point(&unit, &mut rng)));
            assert!(tiny.contains(&uniform_point(&tiny, &mut rng)));
        }
    }

    #[test]
    fn uniform_mean_is_one_half() {
        let mut rng = RngStream::new(11, 0);
        let unit = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| unit.uniform_point(&mut rng)[0]).sum::<f64>() / n as f64;
        // 3 sigma of the sample mean: 3 * sqrt(1/12) / sqrt(n) ~ 0.0027.
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn halves_longest_axis() {
        let sub = Subregion::new(0, rect([0.0, 0.0], [4.0, 2.0]), 0);
        let (l, r) = split_halve_longest(&sub, 1, 2);
        assert_eq!(l.domain, rect([0.0, 0.0], [2.0, 2.0]));
        assert_eq!(r.domain, rect([2.0, 0.0], [4.0, 2.0]));
        assert_eq!((l.level, r.level), (1, 1));
    }

    #[test]
    fn ties_split_lowest_coordinate() {
        let sub = Subregion::new(0, rect([0.0, 0.0], [2.0, 2.0]), 0);
        let (l, r) = split_halve_longest(&sub, 1, 2);
        assert_eq!(l.domain, rect([0.0, 0.0], [1.0, 2.0]));
        assert_eq!(r.domain, rect([1.0, 0.0], [2.0, 2.0]));
    }

    #[test]
    fn samples_follow_their_child() {
        let mut sub = Subregion::new(0, rect([0.0, 0.0], [4.0, 2.0]), 0);
        sub.push(vec![0.5, 1.0], 3.0);
        sub.push(vec![3.5, 1.0], 7.0);
        sub.push(vec![2.0, 1.0], 9.0);
        let (l, r) = split_halve_longest(&sub, 1, 2);
        assert_eq!(l.values(), vec![3.0, 9.0]);
        assert_eq!(r.values(), vec![7.0]);
        assert_eq!(l.best_value, 3.0);
        assert_eq!(r.best_value, 7.0);
    }

    #[test]
    fn volume_fraction_of_identity() {
        let mut rng = RngStream::new(5, 2);
        let unit = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let f = |x: &[f64]| x[0];
        let frac = improving_volume_fraction(&unit, 0.5, &f, 100_000, &mut rng);
        assert!((frac - 0.5).abs() < 0.01);
        assert_eq!(improving_volume_fraction(&unit, -0.1, &f, 1000, &mut rng), 0.0);
        assert_eq!(improving_volume_fraction(&unit, 1.0, &f, 1000, &mut rng), 1.0);
    }

    #[test]
    fn partition_stays_valid_under_branching() {
        let mut rng = RngStream::new(9, 0);
        let mut state = PartitionState::new(rect([-1.0, 0.0], [3.0, 1.0]));
        for _ in 0..40 {
            let i = rng.index(state.len());
            state.branch(i);
            state.validate(200, &mut rng).unwrap();
        }
        assert_eq!(state.len(), 41);
    }

    #[test]
    fn lattice_enumeration() {
        let l = LatticeDomain::new(3, 2).unwrap();
        assert_eq!(l.point_count(), Some(9));
        assert_eq!(l.point(0), vec![1, 1]);
        assert_eq!(l.point(1), vec![1, 2]);
        assert_eq!(l.point(8), vec![3, 3]);
    }
}
