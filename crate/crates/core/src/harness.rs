//! Replicated runs and performance profiles.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::Problem;
use crate::engine::{run_replication, BassoConfig};
use crate::trace::RunTrace;
use crate::{Error, Result};

pub const DEFAULT_K_POINTS: usize = 50;
pub const DEFAULT_TAUS: [f64; 2] = [1e-3, 1e-5];

/// Replications `0..n_reps` of `problem`. Replication `r` draws from the
/// same streams for every solver configuration sharing `config.seed`.
pub fn run_replications(problem: &Problem, config: &BassoConfig, n_reps: usize) -> Result<Vec<RunTrace>> {
    if n_reps == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    (0..n_reps as u64)
        .map(|r| run_replication(problem, config, r).map(|(t, _)| t))
        .collect()
}

/// `f_x0 - f_s >= (1 - tau) (f_x0 - f_L)`.
pub fn convergence_test(f_x0: f64, f_s: f64, f_l: f64, tau: f64) -> bool {
    f_x0 - f_s >= (1.0 - tau) * (f_x0 - f_l)
}

/// Summary of one solver on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileInput {
    pub problem: String,
    pub solver: String,
    /// Mean starting value over replications.
    pub f_x0: f64,
    /// Mean record value after `K` evaluations, at index `K - 1`.
    pub f_s: Vec<f64>,
    pub replications: usize,
}

impl ProfileInput {
    /// Averages record curves of `traces` (shorter traces hold their
    /// final value).
    pub fn from_traces(problem: impl Into<String>, solver: impl Into<String>, traces: &[RunTrace]) -> Result<Self> {
        let curves: Vec<Vec<f64>> = traces.iter().map(|t| t.incumbents()).collect();
        let starts: Vec<f64> = traces.iter().filter_map(|t| t.first_value()).collect();
        Self::from_curves(problem, solver, &starts, &curves)
    }

    /// Same as [`ProfileInput::from_traces`] from raw per-replication
    /// record curves and starting values.
    pub fn from_curves(
        problem: impl Into<String>,
        solver: impl Into<String>,
        starts: &[f64],
        curves: &[Vec<f64>],
    ) -> Result<Self> {
        if curves.is_empty() || curves.iter().any(|c| c.is_empty()) || starts.len() != curves.len() {
            return Err(Error::InvalidArgument("empty or mismatched replications".into()));
        }
        let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
        let n = curves.len() as f64;
        let mut f_s: Vec<f64> = (0..len)
            .map(|i| curves.iter().map(|c| c[i.min(c.len() - 1)]).sum::<f64>() / n)
            .collect();
        for i in 1..f_s.len() {
            f_s[i] = f_s[i].min(f_s[i - 1]);
        }
        Ok(Self {
            problem: problem.into(),
            solver: solver.into(),
            f_x0: starts.iter().sum::<f64>() / n,
            f_s,
            replications: curves.len(),
        })
    }

    /// `f_s` at `k` evaluations, held at the final value past the end.
    pub fn at(&self, k: usize) -> f64 {
        let i = k.max(1).min(self.f_s.len()) - 1;
        self.f_s[i]
    }
}

/// Up to `n` distinct log-spaced integers in `[1, budget]`, always
/// including both ends.
pub fn default_k_grid(budget: usize, n: usize) -> Vec<usize> {
    if budget == 0 || n == 0 {
        return Vec::new();
    }
    let mut ks: Vec<usize> = crate::math::log_space(1.0, budget as f64, n.max(2))
        .into_iter()
        .map(|v| (libm::round(v) as usize).clamp(1, budget))
        .collect();
    ks.push(budget);
    ks.sort_unstable();
    ks.dedup();
    ks
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub k: usize,
    pub solver: String,
    pub d: f64,
}

/// Where the reference value `f_L` of the convergence test comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowerBound {
    /// Best mean value any solver reached within the same `K`.
    #[default]
    WithinK,
    /// Best mean value any solver reached over its whole run. Profiles are
    /// then non-decreasing in `K`.
    WholeRun,
}

/// Fraction of problems each solver passes the convergence test on, at
/// every `K` in `k_grid`, with `f_L` taken within each `K`. Rows are
/// ordered by `K`, then solver name.
pub fn performance_profile(inputs: &[ProfileInput], tau: f64, k_grid: &[usize]) -> Result<Vec<ProfilePoint>> {
    performance_profile_with(inputs, tau, k_grid, LowerBound::WithinK)
}

pub fn performance_profile_with(
    inputs: &[ProfileInput],
    tau: f64,
    k_grid: &[usize],
    bound: LowerBound,
) -> Result<Vec<ProfilePoint>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no profile inputs".into()));
    }
    let reps = inputs[0].replications;
    if inputs.iter().any(|i| i.replications != reps) {
        return Err(Error::InvalidArgument("inconsistent replication counts".into()));
    }
    let mut table: BTreeMap<&str, BTreeMap<&str, &ProfileInput>> = BTreeMap::new();
    for input in inputs {
        if table
            .entry(input.problem.as_str())
            .or_default()
            .insert(input.solver.as_str(), input)
            .is_some()
        {
            return Err(Error::InvalidArgument(alloc::format!(
                "duplicate entry for {} / {}",
                input.problem, input.solver
            )));
        }
    }
    let solvers: Vec<&str> = {
        let mut s: Vec<&str> = inputs.iter().map(|i| i.solver.as_str()).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    for (problem, row) in &table {
        if row.len() != solvers.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "problem {problem} is missing a solver"
            )));
        }
    }
    let n_problems = table.len() as f64;
    let mut out = Vec::with_capacity(k_grid.len() * solvers.len());
    for &k in k_grid {
        let mut passed: BTreeMap<&str, usize> = solvers.iter().map(|s| (*s, 0)).collect();
        for row in table.values() {
            let f_l = row
                .values()
                .map(|i| match bound {
                    LowerBound::WithinK => i.at(k),
                    LowerBound::WholeRun => i.at(i.f_s.len()),
                })
                .fold(f64::INFINITY, f64::min);
            for (solver, input) in row {
                if convergence_test(input.f_x0, input.at(k), f_l, tau) {
                    *passed.get_mut(solver).expect("known solver") += 1;
                }
            }
        }
        for solver in &solvers {
            out.push(ProfilePoint {
                k,
                solver: String::from(*solver),
                d: passed[solver] as f64 / n_problems,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn convergence_examples() {
        assert!(convergence_test(10.0, 1.0, 0.0, 0.1));
        assert!(!convergence_test(10.0, 10.0, 0.0, 0.1));
        assert!(convergence_test(10.0, 7.0, 0.0, 1.0));
    }

    #[test]
    fn k_grid_is_log_spaced() {
        let g = default_k_grid(500, 50);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 500);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_k_grid(1, 50), vec![1]);
    }

    fn input(problem: &str, solver: &str, f_x0: f64, f_s: &[f64]) -> ProfileInput {
        ProfileInput {
            problem: problem.into(),
            solver: solver.into(),
            f_x0,
            f_s: f_s.to_vec(),
            replications: 10,
        }
    }

    #[test]
    fn single_solver_defines_the_best() {
        let inputs = [input("p1", "s", 5.0, &[5.0, 3.0]), input("p2", "s", 2.0, &[1.0, 1.0])];
        let prof = performance_profile(&inputs, 1e-3, &[1, 2]).unwrap();
        assert!(prof.iter().all(|p| p.d == 1.0));
    }

    #[test]
    fn within_k_can_drop_while_whole_run_cannot() {
        let inputs = [input("p", "a", 5.0, &[5.0, 1.0]), input("p", "b", 5.0, &[5.0, 4.0])];
        let d = |bound| -> Vec<f64> {
            performance_profile_with(&inputs, 0.1, &[1, 2], bound)
                .unwrap()
                .iter()
                .filter(|p| p.solver == "b")
                .map(|p| p.d)
                .collect()
        };
        assert_eq!(d(LowerBound::WithinK), vec![1.0, 0.0]);
        assert_eq!(d(LowerBound::WholeRun), vec![0.0, 0.0]);
    }

    #[test]
    fn mismatched_reps_error() {
        let mut b = input("p1", "b", 5.0, &[4.0]);
        b.replications = 3;
        assert!(performance_profile(&[input("p1", "a", 5.0, &[4.0]), b], 0.1, &[1]).is_err());
    }

    #[test]
    fn curve_averages_and_holds() {
        let i = ProfileInput::from_curves("p", "s", &[4.0, 2.0], &[vec![4.0, 2.0, 1.0], vec![2.0]]).unwrap();
        assert_eq!(i.f_x0, 3.0);
        assert_eq!(i.f_s, vec![3.0, 2.0, 1.5]);
        assert_eq!(i.at(10), 1.5);
    }
}
