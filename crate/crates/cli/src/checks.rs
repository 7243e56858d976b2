//! The named suites behind `basso verify`.

use std::fmt;
use std::str::FromStr;

use basso_core::analysis::{count_violations, default_assumption2_experiment, Assumption2Table};
use basso_core::domain::BoxDomain;
use basso_core::engine::run_replication;
use basso_core::objectives::{BenchmarkKind, BenchmarkSpec};
use basso_core::reference::{
    corollary2_bound, default_y_grid, dominance_check, has_prime_run, lattice_expected_record_evals, HasPrimeConfig,
    LevelSampler,
};
use basso_core::{BassoConfig, Problem, RngStream, RunTrace, SamplerKind, StrategyKind};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Corollary2,
    Dominance,
    Assumption1,
    Assumption2,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Corollary2, Check::Dominance, Check::Assumption1, Check::Assumption2];

    pub fn name(self) -> &'static str {
        match self {
            Check::Corollary2 => "corollary2",
            Check::Dominance => "dominance",
            Check::Assumption1 => "assumption1",
            Check::Assumption2 => "assumption2",
        }
    }

    pub fn run(self, seed: u64) -> CliResult<CheckReport> {
        match self {
            Check::Corollary2 => corollary2(&Corollary2Params::default(), seed),
            Check::Dominance => dominance(&DominanceParams::default(), seed),
            Check::Assumption1 => assumption1(&Assumption1Params::default(), seed),
            Check::Assumption2 => assumption2(&Assumption2Params::default(), seed),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
            CliError::Config(format!("unknown check {s:?}; valid checks: {}", names.join(", ")))
        })
    }
}

/// Outcome of one suite: a verdict, short findings, and a table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: Check,
    pub pass: bool,
    pub findings: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct Corollary2Params {
    pub k: u32,
    pub dims: Vec<u32>,
    pub trials: usize,
    pub slope_slack: f64,
}

impl Default for Corollary2Params {
    fn default() -> Self {
        Self {
            k: 4,
            dims: vec![2, 4, 6, 8],
            trials: 2000,
            slope_slack: 0.2,
        }
    }
}

/// Record-process means on the `k^d` lattice against `2 + d ln k`, plus
/// the growth rate of the means in `d`.
pub fn corollary2(p: &Corollary2Params, seed: u64) -> CliResult<CheckReport> {
    let means: Vec<f64> = p
        .dims
        .par_iter()
        .map(|&d| lattice_expected_record_evals(p.k, d, p.trials, &mut RngStream::new(seed, d as u64)))
        .collect::<Result<_, _>>()
        .map_err(CliError::runtime)?;
    let xs: Vec<f64> = p.dims.iter().map(|&d| d as f64).collect();
    let slope = ols_slope(&xs, &means);
    let slope_limit = (p.k as f64).ln() + p.slope_slack;
    let mut rows = Vec::new();
    let mut below = true;
    for (&d, &m) in p.dims.iter().zip(&means) {
        let bound = corollary2_bound(p.k, d);
        below &= m < bound;
        rows.push(vec![d.to_string(), m.to_string(), bound.to_string(), (m < bound).to_string()]);
    }
    let pass = below && slope <= slope_limit;
    Ok(CheckReport {
        check: Check::Corollary2,
        pass,
        findings: vec![
            format!("k={} trials={} every mean below bound: {below}", p.k, p.trials),
            format!("slope of means in d = {slope:.4} (limit {slope_limit:.4})"),
        ],
        columns: columns(&["d", "mean_evals", "bound", "below"]),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct DominanceParams {
    pub dim: usize,
    pub better_b: f64,
    pub worse_b: f64,
    pub checkpoints: Vec<usize>,
    pub replications: usize,
    pub y_points: usize,
}

impl Default for DominanceParams {
    fn default() -> Self {
        Self {
            dim: 3,
            better_b: 1.0,
            worse_b: 0.5,
            checkpoints: vec![1, 2, 5, 10, 20],
            replications: 1000,
            y_points: 20,
        }
    }
}

fn has_prime_traces(problem: &Problem, b: f64, budget: usize, reps: usize, seed: u64, lane: u64) -> CliResult<Vec<RunTrace>> {
    let config = HasPrimeConfig::constant(b)
        .map_err(CliError::runtime)?
        .with_level_sampler(LevelSampler::SumOnUnitCube);
    (0..reps as u64)
        .into_par_iter()
        .map(|r| has_prime_run(problem, &config, budget, &mut RngStream::new(seed, 2 * r + lane)))
        .collect::<Result<_, _>>()
        .map_err(CliError::runtime)
}

/// `P(Y_k <= y)` for HAS' with a higher bettering probability should be
/// at least that of a lower one, on `f(x) = sum x` over the unit cube.
pub fn dominance(p: &DominanceParams, seed: u64) -> CliResult<CheckReport> {
    let domain = BoxDomain::cube(p.dim, 0.0, 1.0).map_err(CliError::runtime)?;
    let problem = Problem::new("sum", domain, |x: &[f64]| x.iter().sum::<f64>());
    let budget = p.checkpoints.iter().copied().max().unwrap_or(0) + 1;
    let a = has_prime_traces(&problem, p.better_b, budget, p.replications, seed, 0)?;
    let b = has_prime_traces(&problem, p.worse_b, budget, p.replications, seed, 1)?;
    let truncated = a.iter().chain(&b).filter(|t| t.truncated).count();
    let grid = default_y_grid(&a, &b, &p.checkpoints, p.y_points);
    let report = dominance_check(&a, &b, &grid, &p.checkpoints).map_err(CliError::runtime)?;
    let rows = report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.k.to_string(),
                c.y.to_string(),
                c.p_a.to_string(),
                c.p_b.to_string(),
                c.sigma.to_string(),
                (c.violation() <= 2.0 * c.sigma).to_string(),
            ]
        })
        .collect();
    Ok(CheckReport {
        check: Check::Dominance,
        pass: report.pass && truncated == 0,
        findings: vec![
            format!(
                "b={} vs b={} on sum over [0,1]^{}, {} replications, checkpoints {:?}",
                p.better_b, p.worse_b, p.dim, p.replications, p.checkpoints
            ),
            format!(
                "largest p_worse - p_better = {:.4}; largest excess over 2 sigma = {:.4}; truncated runs = {truncated}",
                report.max_violation, report.max_excess
            ),
        ],
        columns: columns(&["k", "y", "p_better", "p_worse", "sigma", "within_2sigma"]),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct Assumption1Params {
    pub dim: usize,
    pub budget: usize,
    pub seeds: usize,
    pub samplers: Vec<SamplerKind>,
    pub mc_points: usize,
    pub required_wins: usize,
}

impl Default for Assumption1Params {
    fn default() -> Self {
        Self {
            dim: 2,
            budget: 250,
            seeds: 10,
            samplers: vec![SamplerKind::A, SamplerKind::B, SamplerKind::C],
            mc_points: 10_000,
            required_wins: 7,
        }
    }
}

/// Violations of the ratio condition for strategies `a` and `c` on the
/// shifted sinusoid, summed over the samplers for each seed.
pub fn assumption1(p: &Assumption1Params, seed: u64) -> CliResult<CheckReport> {
    let problem = BenchmarkSpec::new(BenchmarkKind::ShiftedSinusoidal, p.dim)
        .map_err(CliError::runtime)?
        .problem();
    let mut jobs = Vec::new();
    for s in 0..p.seeds as u64 {
        for &sampler in &p.samplers {
            for strategy in [StrategyKind::A, StrategyKind::C] {
                jobs.push((seed + s, sampler, strategy));
            }
        }
    }
    let counts: Vec<(u64, SamplerKind, StrategyKind, usize, usize)> = jobs
        .into_par_iter()
        .map(|(s, sampler, strategy)| {
            let mut config = BassoConfig::new(strategy, sampler, p.budget).with_seed(s);
            config.instrumentation.assumption1_audit = true;
            config.instrumentation.mc_points = p.mc_points;
            let (_, rows) = run_replication(&problem, &config, 0)?;
            Ok((s, sampler, strategy, count_violations(&rows), rows.len()))
        })
        .collect::<Result<_, basso_core::Error>>()
        .map_err(CliError::runtime)?;
    let mut rows = Vec::new();
    let mut wins = 0;
    for s in 0..p.seeds as u64 {
        let total = |k: StrategyKind| -> usize {
            counts
                .iter()
                .filter(|c| c.0 == seed + s && c.2 == k)
                .map(|c| c.3)
                .sum()
        };
        let (a, c) = (total(StrategyKind::A), total(StrategyKind::C));
        wins += usize::from(c < a);
        let per_sampler: Vec<String> = p
            .samplers
            .iter()
            .map(|&sm| {
                let get = |k| counts.iter().find(|c| c.0 == seed + s && c.1 == sm && c.2 == k).map_or(0, |c| c.3);
                format!("{sm}:{}/{}", get(StrategyKind::A), get(StrategyKind::C))
            })
            .collect();
        rows.push(vec![
            (seed + s).to_string(),
            a.to_string(),
            c.to_string(),
            (c < a).to_string(),
            per_sampler.join(" "),
        ]);
    }
    Ok(CheckReport {
        check: Check::Assumption1,
        pass: wins >= p.required_wins,
        findings: vec![format!(
            "strategy c had fewer violations than a on {wins}/{} seeds (need {}); shifted sinusoid d={}, budget {}",
            p.seeds, p.required_wins, p.dim, p.budget
        )],
        columns: columns(&["seed", "violations_a", "violations_c", "c_fewer", "per_sampler_a/c"]),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct Assumption2Params {
    pub mc_points: usize,
    pub slack: f64,
}

impl Default for Assumption2Params {
    fn default() -> Self {
        Self {
            mc_points: 20_000,
            slack: 0.02,
        }
    }
}

/// Every ordering the experiment is expected to show, as
/// `(description, holds)` pairs.
pub fn assumption2_orderings(t: &Assumption2Table, slack: f64) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for i in 0..t.uniform.len() {
        for (name, base, better) in [("gp", &t.gp_base, &t.gp_better), ("quadreg", &t.quad_base, &t.quad_better)] {
            out.push((
                format!("subregion {}: uniform {:.3} <= {name} base {:.3}", i + 1, t.uniform[i], base[i]),
                t.uniform[i] <= base[i] + slack,
            ));
            out.push((
                format!("subregion {}: {name} base {:.3} <= {name} better {:.3}", i + 1, base[i], better[i]),
                base[i] <= better[i] + slack,
            ));
        }
    }
    out
}

pub fn assumption2(p: &Assumption2Params, seed: u64) -> CliResult<CheckReport> {
    let table = default_assumption2_experiment(p.mc_points, &mut RngStream::new(seed, 0)).map_err(CliError::runtime)?;
    let orderings = assumption2_orderings(&table, p.slack);
    let pass = orderings.iter().all(|o| o.1);
    let mut findings = vec![format!("y = {:.6}", table.y)];
    findings.extend(
        orderings
            .iter()
            .map(|(d, ok)| format!("{} {d}", if *ok { "ok  " } else { "FAIL" })),
    );
    let rows = table
        .rows()
        .iter()
        .map(|(name, vals)| {
            let mut r = vec![name.to_string()];
            r.extend(vals.iter().map(|v| v.to_string()));
            r
        })
        .collect();
    Ok(CheckReport {
        check: Check::Assumption2,
        pass,
        findings,
        columns: columns(&["estimate", "sigma_1", "sigma_2", "sigma_3"]),
        rows,
    })
}
