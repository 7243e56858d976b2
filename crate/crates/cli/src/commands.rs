//! The three subcommands, independent of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};

use basso_core::analysis::{count_violations, RatioAuditRow};
use basso_core::engine::run_replication;
use basso_core::harness::{default_k_grid, performance_profile_with, LowerBound, DEFAULT_K_POINTS, DEFAULT_TAUS};
use basso_core::RunTrace;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::checks::{Check, CheckReport};
use crate::config::{ExperimentConfig, Format, ValidatedConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, Header, ReplicationSummary, RunSummary, Stats};

#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
}

/// Loads, overrides and validates a config without touching the disk.
pub fn prepare_run(config_path: &Path, overrides: &RunOverrides) -> CliResult<ValidatedConfig> {
    let mut file = ExperimentConfig::load(config_path)?;
    if let Some(out) = &overrides.out {
        file.output.dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        file.seed = seed;
    }
    if let Some(reps) = overrides.replications {
        file.replications = reps;
    }
    file.validate()
}

/// Where one run's files land.
pub fn run_dir(config: &ValidatedConfig) -> PathBuf {
    config
        .file
        .output
        .dir
        .join(config.problem_key())
        .join(config.solver_key())
}

type RepResult = Result<(RunTrace, Vec<RatioAuditRow>), basso_core::Error>;

/// Runs every replication and writes traces, audits and the summary.
/// Replications that fail leave no files and mark the summary incomplete.
pub fn cmd_run(config: &ValidatedConfig) -> CliResult<RunSummary> {
    let reps = config.file.replications as u64;
    let results: Vec<RepResult> = (0..reps)
        .into_par_iter()
        .map(|r| run_replication(&config.problem, &config.solver, r))
        .collect();

    let dir = run_dir(config);
    let header = Header::new(config.hash.clone(), Some(config.file.seed));
    let audit = config.solver.instrumentation.assumption1_audit;
    let mut per_replication = Vec::new();
    let mut finals = Vec::new();
    for (r, result) in results.iter().enumerate() {
        match result {
            Ok((trace, rows)) => {
                if config.wants(Format::Csv) {
                    output::write_trace_csv(&dir.join(format!("trace_rep{r:03}.csv")), &header, trace)?;
                    if audit {
                        output::write_audit_csv(&dir.join(format!("audit_rep{r:03}.csv")), &header, rows)?;
                    }
                }
                finals.extend(trace.final_incumbent());
                per_replication.push(ReplicationSummary {
                    replication: r as u64,
                    final_incumbent: trace.final_incumbent(),
                    evaluations: trace.len(),
                    fallback_count: trace.fallback_count,
                    audit_violations: audit.then(|| count_violations(rows)),
                    error: None,
                });
            }
            Err(e) => per_replication.push(ReplicationSummary {
                replication: r as u64,
                final_incumbent: None,
                evaluations: 0,
                fallback_count: 0,
                audit_violations: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let complete = per_replication.iter().all(|p| p.error.is_none());
    let summary = RunSummary {
        header,
        problem: config.problem_key(),
        solver: config.solver_key(),
        budget: config.solver.budget_evals,
        replications: config.file.replications,
        complete,
        final_incumbent: Stats::of(&finals),
        per_replication,
    };
    if config.wants(Format::Json) {
        output::write_json(&dir.join("summary.json"), &summary)?;
    }
    if !complete {
        let failed = summary.per_replication.iter().filter(|p| p.error.is_some()).count();
        return Err(CliError::Runtime(format!(
            "{failed} of {reps} replications failed; see {}",
            dir.display()
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    pub input: PathBuf,
    pub out: PathBuf,
    pub taus: Vec<f64>,
    pub points: usize,
    pub bound: LowerBound,
}

impl ProfileOptions {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            out: out.into(),
            taus: DEFAULT_TAUS.to_vec(),
            points: DEFAULT_K_POINTS,
            bound: LowerBound::WithinK,
        }
    }
}

/// Writes one `(K, solver, d_s)` CSV per tolerance; returns their paths.
pub fn cmd_profile(opts: &ProfileOptions) -> CliResult<Vec<PathBuf>> {
    if opts.taus.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::Config("tau must lie in [0, 1]".into()));
    }
    let inputs = output::import_profile_inputs(&opts.input)?;
    let budget = inputs.iter().map(|i| i.f_s.len()).max().unwrap_or(0);
    let grid = default_k_grid(budget, opts.points);

    let mut hasher = Sha256::new();
    hasher.update(format!("{:?}|{:?}|{:?}", opts.taus, grid, opts.bound));
    for i in &inputs {
        hasher.update(format!("{}|{}|{}|{}|{:?}", i.problem, i.solver, i.replications, i.f_x0, i.f_s));
    }
    let header = Header::new(hex::encode(hasher.finalize()), None);

    let mut written = Vec::new();
    for &tau in &opts.taus {
        let rows = performance_profile_with(&inputs, tau, &grid, opts.bound).map_err(|e| CliError::Config(e.to_string()))?;
        let path = opts.out.join(format!("profile_tau{tau}.csv"));
        output::write_profile_csv(&path, &header, &rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs a named check and writes `verify_<name>.csv` and `.txt` into `out`.
pub fn cmd_verify(check: Check, seed: u64, out: &Path) -> CliResult<CheckReport> {
    let report = check.run(seed)?;
    let hash = hex::encode(Sha256::digest(format!("verify|{}|{seed}", check.name())));
    let header = Header::new(hash, Some(seed));
    output::write_table_csv(
        &out.join(format!("verify_{}.csv", check.name())),
        &header,
        &report.columns,
        &report.rows,
    )?;
    let mut text = header.comment_line();
    text.push('\n');
    for f in &report.findings {
        text.push_str(f);
        text.push('\n');
    }
    text.push_str(&format!("{}: {}\n", check.name(), if report.pass { "PASS" } else { "FAIL" }));
    fs::create_dir_all(out)?;
    fs::write(out.join(format!("verify_{}.txt", check.name())), text)?;
    Ok(report)
}
