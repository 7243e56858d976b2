//! The experiment file read by `basso run`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use basso_core::engine::Instrumentation;
use basso_core::objectives::{BenchmarkKind, BenchmarkSpec};
use basso_core::{BassoConfig, Problem, SamplerKind, StrategyKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub instrumentation: InstrumentationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub strategy: String,
    pub sampler: String,
    pub budget: usize,
    #[serde(default = "default_stall")]
    pub max_stall_evals: usize,
    #[serde(default = "default_branch_fraction")]
    pub branch_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentationSection {
    #[serde(default)]
    pub assumption1_audit: bool,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
}

impl Default for InstrumentationSection {
    fn default() -> Self {
        Self {
            assumption1_audit: false,
            mc_points: default_mc_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

fn default_replications() -> usize {
    1
}
fn default_stall() -> usize {
    50
}
fn default_branch_fraction() -> f64 {
    0.1
}
fn default_mc_points() -> usize {
    10_000
}
fn default_dir() -> PathBuf {
    PathBuf::from("basso-out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// A config that passed validation, with the core objects built from it.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub file: ExperimentConfig,
    pub problem: Problem,
    pub solver: BassoConfig,
    pub hash: String,
}

impl ValidatedConfig {
    /// Directory name for the problem, e.g. `rosenbrock-d2`.
    pub fn problem_key(&self) -> String {
        format!("{}-d{}", self.file.problem.name, self.file.problem.dim)
    }

    /// Directory name for the solver, e.g. `basso-cC`.
    pub fn solver_key(&self) -> String {
        format!("basso-{}{}", self.solver.strategy, self.solver.sampler.kind)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.file.output.formats.contains(&format)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every field and builds the problem and solver config.
    pub fn validate(self) -> CliResult<ValidatedConfig> {
        let bad = |e: basso_core::Error| CliError::Config(e.to_string());
        if self.problem.name.trim().is_empty() {
            return Err(CliError::Config("problem.name must not be empty".into()));
        }
        let kind = BenchmarkKind::from_str(&self.problem.name).map_err(bad)?;
        let problem = BenchmarkSpec::new(kind, self.problem.dim).map_err(bad)?.problem();
        let strategy = StrategyKind::from_str(&self.solver.strategy).map_err(bad)?;
        let sampler = SamplerKind::from_str(&self.solver.sampler).map_err(bad)?;
        if self.replications == 0 {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats must not be empty".into()));
        }
        if self.instrumentation.assumption1_audit && self.instrumentation.mc_points == 0 {
            return Err(CliError::Config("instrumentation.mc_points must be positive".into()));
        }
        let mut solver = BassoConfig::new(strategy, sampler, self.solver.budget).with_seed(self.seed);
        solver.max_stall_evals = self.solver.max_stall_evals;
        solver.branch_fraction = self.solver.branch_fraction;
        solver.instrumentation = Instrumentation {
            assumption1_audit: self.instrumentation.assumption1_audit,
            mc_points: self.instrumentation.mc_points,
            ..Instrumentation::default()
        };
        solver.validate().map_err(bad)?;
        let hash = self.hash();
        Ok(ValidatedConfig {
            file: self,
            problem,
            solver,
            hash,
        })
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
