//! The branching and sampling loop.

use alloc::vec::Vec;

use crate::analysis::{self, RatioAuditRow};
use crate::domain::{PartitionState, Problem};
use crate::rng::{Consumer, RngStream};
use crate::samplers::{self, SamplerConfig, SamplerKind};
use crate::strategies::{self, StrategyInput, StrategyKind, SubregionProbabilities};
use crate::trace::RunTrace;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Instrumentation {
    /// Record a ratio audit row at every probability update.
    pub assumption1_audit: bool,
    /// Attach the probability vector to the trace at every update.
    pub probability_snapshots: bool,
    pub mc_points: usize,
    pub audit_tolerance: f64,
}

impl Default for Instrumentation {
    fn default() -> Self {
        Self {
            assumption1_audit: false,
            probability_snapshots: false,
            mc_points: 10_000,
            audit_tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BassoConfig {
    pub strategy: StrategyKind,
    pub sampler: SamplerConfig,
    pub max_stall_evals: usize,
    pub budget_evals: usize,
    pub branch_fraction: f64,
    pub seed: u64,
    pub instrumentation: Instrumentation,
}

impl BassoConfig {
    pub fn new(strategy: StrategyKind, sampler: SamplerKind, budget_evals: usize) -> Self {
        Self {
            strategy,
            sampler: SamplerConfig::new(sampler),
            max_stall_evals: 50,
            budget_evals,
            branch_fraction: 0.1,
            seed: 0,
            instrumentation: Instrumentation::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_evals < 1 {
            return Err(Error::InvalidConfig("budget_evals must be at least 1".into()));
        }
        if !(self.branch_fraction > 0.0 && self.branch_fraction <= 1.0) {
            return Err(Error::InvalidConfig("branch_fraction must lie in (0, 1]".into()));
        }
        if self.max_stall_evals < 1 {
            return Err(Error::InvalidConfig("max_stall_evals must be at least 1".into()));
        }
        self.sampler.validate()
    }
}

/// How a sampling episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeEnd {
    Improved,
    Stalled,
    BudgetExhausted,
}

/// `ceil(fraction * m)`, ignoring rounding noise in the product.
pub fn branch_count(fraction: f64, m: usize) -> usize {
    let raw = fraction * m as f64;
    let rounded = libm::round(raw);
    if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        libm::ceil(raw) as usize
    }
}

/// Indices to branch: the `count` best-valued subregions, then the `count`
/// largest among the rest. Ties go to the lower id.
pub fn select_for_branching(state: &PartitionState, fraction: f64) -> Vec<usize> {
    let m = state.len();
    let count = branch_count(fraction, m).min(m);
    let subs = &state.subregions;
    let mut by_value: Vec<usize> = (0..m).collect();
    by_value.sort_by(|&a, &b| {
        subs[a]
            .best_value
            .total_cmp(&subs[b].best_value)
            .then(subs[a].id.cmp(&subs[b].id))
    });
    let mut chosen: Vec<usize> = by_value[..count].to_vec();
    let mut rest: Vec<usize> = by_value[count..].to_vec();
    rest.sort_by(|&a, &b| {
        subs[b]
            .volume()
            .total_cmp(&subs[a].volume())
            .then(subs[a].id.cmp(&subs[b].id))
    });
    chosen.extend(rest.into_iter().take(count));
    chosen
}

pub struct Engine<'a> {
    problem: &'a Problem,
    config: BassoConfig,
    state: PartitionState,
    probs: SubregionProbabilities,
    trace: RunTrace,
    audit: Vec<RatioAuditRow>,
    selection_rng: RngStream,
    points_rng: RngStream,
    mc_rng: RngStream,
}

impl<'a> Engine<'a> {
    /// Sets up replication `replication` of `problem` under `config`. The
    /// random streams depend only on `(config.seed, replication)`.
    pub fn new(problem: &'a Problem, config: BassoConfig, replication: u64) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        Ok(Self {
            problem,
            probs: SubregionProbabilities {
                probs: alloc::vec![1.0],
                strategy: config.strategy,
            },
            config,
            state: PartitionState::new(problem.domain.clone()),
            trace: RunTrace::new(),
            audit: Vec::new(),
            selection_rng: RngStream::for_consumer(seed, replication, Consumer::Selection),
            points_rng: RngStream::for_consumer(seed, replication, Consumer::Points),
            mc_rng: RngStream::for_consumer(seed, replication, Consumer::MonteCarlo),
        })
    }

    pub fn state(&self) -> &PartitionState {
        &self.state
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn probabilities(&self) -> &SubregionProbabilities {
        &self.probs
    }

    pub fn audit_rows(&self) -> &[RatioAuditRow] {
        &self.audit
    }

    pub fn config(&self) -> &BassoConfig {
        &self.config
    }

    pub fn budget_left(&self) -> bool {
        self.state.eval_count < self.config.budget_evals
    }

    fn evaluate_into(&mut self, index: usize, point: crate::Point) -> bool {
        let value = self.problem.evaluate(&point);
        let id = self.state.subregions[index].id;
        self.trace.push(point.clone(), value, id);
        self.state.record(index, point, value)
    }

    /// One uniform evaluation over the whole domain.
    pub fn initialize(&mut self) {
        if self.state.eval_count > 0 || !self.budget_left() {
            return;
        }
        let x = self.problem.domain.uniform_point(&mut self.points_rng);
        self.evaluate_into(0, x);
    }

    /// Samples with the current probabilities until the incumbent strictly
    /// improves, `max_stall_evals` evaluations pass, or the budget runs out.
    pub fn step1(&mut self) -> EpisodeEnd {
        let mut used = 0;
        loop {
            if !self.budget_left() {
                return EpisodeEnd::BudgetExhausted;
            }
            let i = self.selection_rng.categorical(&self.probs.probs);
            let proposal = samplers::propose(&self.state.subregions[i], &mut self.points_rng, &self.config.sampler);
            if proposal.fell_back {
                self.trace.fallback_count += 1;
            }
            debug_assert!(self.state.subregions[i].domain.contains(&proposal.point));
            let improved = self.evaluate_into(i, proposal.point);
            used += 1;
            if improved {
                return EpisodeEnd::Improved;
            }
            if used >= self.config.max_stall_evals {
                return EpisodeEnd::Stalled;
            }
        }
    }

    /// Halves the selected subregions, then tops every child up to two
    /// samples with uniform evaluations while budget remains. Returns false
    /// if the budget ran out during top-ups.
    pub fn step2(&mut self) -> bool {
        let chosen = select_for_branching(&self.state, self.config.branch_fraction);
        let mut children = Vec::with_capacity(2 * chosen.len());
        for index in chosen {
            let (l, r) = self.state.branch(index);
            children.push(l);
            children.push(r);
        }
        for child in children {
            while self.state.subregions[child].len() < 2 {
                if !self.budget_left() {
                    return false;
                }
                let x = self.state.subregions[child].domain.uniform_point(&mut self.points_rng);
                self.evaluate_into(child, x);
            }
        }
        true
    }

    /// Recomputes the subregion probabilities with the configured strategy.
    pub fn step3(&mut self) -> Result<()> {
        self.state.iteration += 1;
        let sorted = self.state.sorted_values();
        let input = StrategyInput {
            subregions: &self.state.subregions,
            incumbent: self.state.incumbent_value,
            incumbent_index: self.state.incumbent_index().unwrap_or(0),
            iteration: self.state.iteration,
            sorted_values: &sorted,
        };
        self.probs = strategies::live_probabilities(self.config.strategy, &input)?;
        let inst = &self.config.instrumentation;
        if inst.probability_snapshots {
            if let Some(last) = self.trace.records.last_mut() {
                last.probabilities = Some(self.probs.probs.clone());
            }
        }
        if inst.assumption1_audit && sorted.len() >= strategies::RANGE_RANK {
            let row = analysis::audit_assumption_1_3(
                &self.state,
                self.config.strategy,
                self.problem.objective.as_ref(),
                inst.mc_points,
                inst.audit_tolerance,
                &mut self.mc_rng,
            )?;
            self.audit.push(row);
        }
        Ok(())
    }

    /// Runs to the end of the budget.
    pub fn run_to_end(&mut self) -> Result<()> {
        self.initialize();
        while self.budget_left() {
            if self.step1() == EpisodeEnd::BudgetExhausted {
                break;
            }
            if !self.step2() {
                break;
            }
            self.step3()?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (RunTrace, Vec<RatioAuditRow>) {
        (self.trace, self.audit)
    }
}

/// One replication: the trace and any audit rows.
pub fn run_replication(problem: &Problem, config: &BassoConfig, replication: u64) -> Result<(RunTrace, Vec<RatioAuditRow>)> {
    let mut engine = Engine::new(problem, config.clone(), replication)?;
    engine.run_to_end()?;
    Ok(engine.into_parts())
}

/// Replication 0 of `problem` under `config`.
pub fn run(problem: &Problem, config: &BassoConfig) -> Result<RunTrace> {
    Ok(run_replication(problem, config, 0)?.0)
}
