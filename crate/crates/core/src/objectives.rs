//! Benchmark objectives with their standard boxes and known optima.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use core::fmt;
use core::str::FromStr;

use crate::domain::{BoxDomain, Problem};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkKind {
    Rosenbrock,
    CenteredSinusoidal,
    ShiftedSinusoidal,
    Ackley,
    RepeatedBranin,
    RepeatedHartmann,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 6] = [
        BenchmarkKind::Rosenbrock,
        BenchmarkKind::CenteredSinusoidal,
        BenchmarkKind::ShiftedSinusoidal,
        BenchmarkKind::Ackley,
        BenchmarkKind::RepeatedBranin,
        BenchmarkKind::RepeatedHartmann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Rosenbrock => "rosenbrock",
            BenchmarkKind::CenteredSinusoidal => "centered_sinusoidal",
            BenchmarkKind::ShiftedSinusoidal => "shifted_sinusoidal",
            BenchmarkKind::Ackley => "ackley",
            BenchmarkKind::RepeatedBranin => "repeated_branin",
            BenchmarkKind::RepeatedHartmann => "repeated_hartmann",
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            BenchmarkKind::Rosenbrock => (-2.0, 2.0),
            BenchmarkKind::CenteredSinusoidal | BenchmarkKind::ShiftedSinusoidal => (0.0, 180.0),
            BenchmarkKind::Ackley => (-32.0, 32.0),
            BenchmarkKind::RepeatedBranin | BenchmarkKind::RepeatedHartmann => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// A benchmark at a given dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    kind: BenchmarkKind,
    dim: usize,
    domain: BoxDomain,
}

impl BenchmarkSpec {
    pub fn new(kind: BenchmarkKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBenchmark("dimension must be positive".into()));
        }
        match kind {
            BenchmarkKind::RepeatedBranin if !dim.is_multiple_of(2) => {
                return Err(Error::InvalidBenchmark(format!(
                    "repeated_branin needs an even dimension, got {dim}"
                )))
            }
            BenchmarkKind::RepeatedHartmann if !dim.is_multiple_of(6) => {
                return Err(Error::InvalidBenchmark(format!(
                    "repeated_hartmann needs a dimension divisible by 6, got {dim}"
                )))
            }
            _ => {}
        }
        let (lo, hi) = kind.bounds();
        Ok(Self {
            kind,
            dim,
            domain: BoxDomain::cube(dim, lo, hi)?,
        })
    }

    /// Registry lookup by lowercase name.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        Self::new(name.parse()?, dim)
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Known global minimum value, when one is published for the box.
    pub fn optimum_value(&self) -> Option<f64> {
        match self.kind {
            BenchmarkKind::RepeatedBranin => None,
            BenchmarkKind::RepeatedHartmann => Some(HARTMANN6_MIN),
            _ => Some(0.0),
        }
    }

    pub fn optimum_point(&self) -> Option<Point> {
        match self.kind {
            BenchmarkKind::Rosenbrock => Some(vec![1.0; self.dim]),
            BenchmarkKind::CenteredSinusoidal => Some(vec![90.0; self.dim]),
            BenchmarkKind::ShiftedSinusoidal => Some(vec![30.0; self.dim]),
            BenchmarkKind::Ackley => Some(vec![0.0; self.dim]),
            BenchmarkKind::RepeatedBranin => None,
            BenchmarkKind::RepeatedHartmann => {
                Some(HARTMANN6_ARGMIN.iter().copied().cycle().take(self.dim).collect())
            }
        }
    }

    /// Value at `x`; errors when `x` lies outside the benchmark box.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check_dim(x)?;
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(self.kind.name().to_string()));
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        evaluate_kind(self.kind, x)
    }

    pub fn problem(&self) -> Problem {
        let kind = self.kind;
        let mut p = Problem::new(
            format!("{}_{}", kind.name(), self.dim),
            self.domain.clone(),
            move |x: &[f64]| evaluate_kind(kind, x),
        );
        p.optimum_value = self.optimum_value();
        p.optimum_point = self.optimum_point();
        p
    }
}

fn evaluate_kind(kind: BenchmarkKind, x: &[f64]) -> f64 {
    match kind {
        BenchmarkKind::Rosenbrock => rosenbrock(x),
        BenchmarkKind::CenteredSinusoidal => centered_sinusoidal(x),
        BenchmarkKind::ShiftedSinusoidal => shifted_sinusoidal(x),
        BenchmarkKind::Ackley => ackley(x),
        BenchmarkKind::RepeatedBranin => repeated_branin(x),
        BenchmarkKind::RepeatedHartmann => repeated_hartmann(x),
    }
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let (a, b) = (1.0 - w[0], w[1] - w[0] * w[0]);
            a * a + 100.0 * b * b
        })
        .sum()
}

/// Second product uses period 36, as in the shifted variant.
pub fn centered_sinusoidal(x: &[f64]) -> f64 {
    let p1: f64 = x.iter().map(|&v| libm::sin(PI * v / 180.0)).product();
    let p2: f64 = x.iter().map(|&v| libm::sin(PI * v / 36.0)).product();
    -(2.5 * p1 + p2) + 3.5
}

/// The two product terms use periods 180 and 36.
pub fn shifted_sinusoidal(x: &[f64]) -> f64 {
    let p1: f64 = x.iter().map(|&v| libm::sin(PI * (v + 60.0) / 180.0)).product();
    let p2: f64 = x.iter().map(|&v| libm::sin(PI * (v + 60.0) / 36.0)).product();
    -(2.5 * p1 + p2) + 3.5
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|&v| libm::cos(2.0 * PI * v)).sum::<f64>() / d;
    -20.0 * libm::exp(-0.2 * libm::sqrt(sq)) - libm::exp(cs) + 20.0 + E
}

/// Two-dimensional Branin with the coefficient `5 / (4 pi^2)`.
pub fn branin(x1: f64, x2: f64) -> f64 {
    let a = x2 - (5.0 / (4.0 * PI * PI)) * x1 * x1 + (5.0 / PI) * x1 - 6.0;
    a * a + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * libm::cos(x1) + 10.0
}

pub fn repeated_branin(x: &[f64]) -> f64 {
    let blocks = x.len() / 2;
    x.chunks_exact(2).map(|b| branin(b[0], b[1])).sum::<f64>() / blocks as f64
}

const HARTMANN6_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
pub const HARTMANN6_MIN: f64 = -3.32237;
pub const HARTMANN6_ARGMIN: [f64; 6] = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];

pub fn hartmann6(x: &[f64]) -> f64 {
    -HARTMANN6_C
        .iter()
        .zip(HARTMANN6_A.iter().zip(&HARTMANN6_P))
        .map(|(c, (a, p))| {
            let s: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]) * (x[j] - p[j])).sum();
            c * libm::exp(-s)
        })
        .sum::<f64>()
}

pub fn repeated_hartmann(x: &[f64]) -> f64 {
    let blocks = x.len() / 6;
    x.chunks_exact(6).map(hartmann6).sum::<f64>() / blocks as f64
}

/// Names accepted by [`BenchmarkSpec::by_name`].
pub fn names() -> Vec<&'static str> {
    BenchmarkKind::ALL.iter().map(|k| k.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn eval(kind: BenchmarkKind, x: &[f64]) -> f64 {
        BenchmarkSpec::new(kind, x.len()).unwrap().evaluate(x).unwrap()
    }

    #[test]
    fn known_minima() {
        assert_eq!(eval(BenchmarkKind::Rosenbrock, &[1.0; 5]), 0.0);
        assert!(eval(BenchmarkKind::Ackley, &[0.0; 20]).abs() < 1e-12);
        assert!(eval(BenchmarkKind::CenteredSinusoidal, &[90.0; 3]).abs() < 1e-12);
        assert!(eval(BenchmarkKind::ShiftedSinusoidal, &[30.0; 2]).abs() < 1e-12);
    }

    #[test]
    fn hartmann_standard_optimum() {
        assert!((hartmann6(&HARTMANN6_ARGMIN) - HARTMANN6_MIN).abs() < 1e-4);
        let x: Vec<f64> = HARTMANN6_ARGMIN.iter().copied().cycle().take(12).collect();
        assert!((eval(BenchmarkKind::RepeatedHartmann, &x) - HARTMANN6_MIN).abs() < 1e-4);
    }

    #[test]
    fn dimension_rules() {
        assert!(BenchmarkSpec::new(BenchmarkKind::RepeatedBranin, 3).is_err());
        assert!(BenchmarkSpec::new(BenchmarkKind::RepeatedBranin, 4).is_ok());
        assert!(BenchmarkSpec::new(BenchmarkKind::RepeatedHartmann, 7).is_err());
        assert!(BenchmarkSpec::new(BenchmarkKind::RepeatedHartmann, 12).is_ok());
        assert!(BenchmarkSpec::new(BenchmarkKind::Ackley, 0).is_err());
    }

    #[test]
    fn boxes_match_published_bounds() {
        let r = BenchmarkSpec::new(BenchmarkKind::Rosenbrock, 3).unwrap();
        assert_eq!(r.domain().lower(), &[-2.0; 3]);
        assert_eq!(r.domain().upper(), &[2.0; 3]);
        let a = BenchmarkSpec::by_name("ackley", 2).unwrap();
        assert_eq!(a.domain().upper(), &[32.0; 2]);
        let s = BenchmarkSpec::by_name("shifted_sinusoidal", 2).unwrap();
        assert_eq!(s.domain().upper(), &[180.0; 2]);
    }

    #[test]
    fn outside_box_is_an_error() {
        let r = BenchmarkSpec::new(BenchmarkKind::Rosenbrock, 2).unwrap();
        assert!(matches!(r.evaluate(&[2.5, 0.0]), Err(Error::OutsideDomain(_))));
        assert!(matches!(
            r.evaluate(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn registry_names_round_trip() {
        for name in names() {
            assert_eq!(name.parse::<BenchmarkKind>().unwrap().name(), name);
        }
        assert!("sphere".parse::<BenchmarkKind>().is_err());
    }

    #[test]
    fn zero_floor_on_random_points() {
        let mut rng = RngStream::new(2024, 0);
        for kind in [
            BenchmarkKind::Rosenbrock,
            BenchmarkKind::Ackley,
            BenchmarkKind::CenteredSinusoidal,
            BenchmarkKind::ShiftedSinusoidal,
        ] {
            let spec = BenchmarkSpec::new(kind, 4).unwrap();
            for _ in 0..10_000 {
                let x = spec.domain().uniform_point(&mut rng);
                assert!(spec.evaluate(&x).unwrap() >= -1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn repeated_blocks_average_and_permute() {
        let a = [0.1, -0.3];
        let b = [0.7, 0.2];
        let ab = [a[0], a[1], b[0], b[1]];
        let ba = [b[0], b[1], a[0], a[1]];
        let expect = 0.5 * (branin(a[0], a[1]) + branin(b[0], b[1]));
        assert!((repeated_branin(&ab) - expect).abs() < 1e-12);
        assert_eq!(repeated_branin(&ab), repeated_branin(&ba));

        let h1 = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let h2 = [-0.5, 0.9, 0.0, -0.2, 0.3, 0.8];
        let mut x12 = h1.to_vec();
        x12.extend_from_slice(&h2);
        let mut x21 = h2.to_vec();
        x21.extend_from_slice(&h1);
        let expect = 0.5 * (hartmann6(&h1) + hartmann6(&h2));
        assert!((repeated_hartmann(&x12) - expect).abs() < 1e-12);
        assert!((repeated_hartmann(&x12) - repeated_hartmann(&x21)).abs() < 1e-15);
    }
}
