//! File formats: trace, audit and profile CSVs, summary JSON, and the
//! trace importer used by `basso profile`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use basso_core::analysis::RatioAuditRow;
use basso_core::harness::{ProfileInput, ProfilePoint};
use basso_core::RunTrace;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Header {
    pub fn new(config_sha256: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            tool: "basso",
            version: VERSION,
            config_sha256: config_sha256.into(),
            seed,
        }
    }

    /// The `#` comment line that opens every CSV and text report.
    pub fn comment_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# {} {} config_sha256={} seed={}",
            self.tool, self.version, self.config_sha256, seed
        )
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_file(path: &Path, header: &Header) -> CliResult<csv::Writer<BufWriter<File>>> {
    let mut out = create(path)?;
    writeln!(out, "{}", header.comment_line())?;
    Ok(csv::Writer::from_writer(out))
}

pub fn write_trace_csv(path: &Path, header: &Header, trace: &RunTrace) -> CliResult<()> {
    let mut w = csv_file(path, header)?;
    w.write_record(["eval_index", "value", "incumbent", "subregion_id"])?;
    for r in &trace.records {
        w.write_record([
            r.eval_index.to_string(),
            r.value.to_string(),
            r.incumbent_after.to_string(),
            r.subregion_id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_audit_csv(path: &Path, header: &Header, rows: &[RatioAuditRow]) -> CliResult<()> {
    let mut w = csv_file(path, header)?;
    w.write_record(["k", "lhs", "rhs", "y", "z", "violated", "indeterminate"])?;
    for r in rows {
        w.write_record([
            r.eval_index.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.y.to_string(),
            r.z.to_string(),
            r.violated.to_string(),
            r.indeterminate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile_csv(path: &Path, header: &Header, rows: &[ProfilePoint]) -> CliResult<()> {
    let mut w = csv_file(path, header)?;
    w.write_record(["K", "solver", "d_s"])?;
    for r in rows {
        w.write_record([r.k.to_string(), r.solver.clone(), r.d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A generic table with a header comment, used for verification reports.
pub fn write_table_csv(path: &Path, header: &Header, columns: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv_file(path, header)?;
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(CliError::runtime)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub header: Header,
    pub problem: String,
    pub solver: String,
    pub budget: usize,
    pub replications: usize,
    /// False when any replication failed; its outputs are then missing.
    pub complete: bool,
    pub final_incumbent: Option<Stats>,
    pub per_replication: Vec<ReplicationSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub replication: u64,
    pub final_incumbent: Option<f64>,
    pub evaluations: usize,
    pub fallback_count: usize,
    pub audit_violations: Option<usize>,
    pub error: Option<String>,
}

/// One `(eval_index, best)` curve per file, with its first raw value.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedTrace {
    pub path: PathBuf,
    pub start: f64,
    pub curve: Vec<f64>,
}

/// Reads a trace CSV with a `best_value` or `incumbent` column. Lines
/// starting with `#` are skipped. The start value is the first `value`
/// entry when that column exists, else the first best value.
pub fn read_trace_csv(path: &Path) -> CliResult<ImportedTrace> {
    let file = File::open(path)?;
    let body: String = BufReader::new(file)
        .lines()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(|l| l + "\n")
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let best_col = find("best_value")
        .or_else(|| find("incumbent"))
        .ok_or_else(|| CliError::Config(format!("{}: no best_value or incumbent column", path.display())))?;
    let value_col = find("value");
    let parse = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("{}: bad number {s:?}: {e}", path.display())))
    };
    let mut curve = Vec::new();
    let mut start = None;
    for record in reader.records() {
        let record = record?;
        let best = parse(record.get(best_col).unwrap_or(""))?;
        if start.is_none() {
            start = Some(match value_col {
                Some(c) => parse(record.get(c).unwrap_or(""))?,
                None => best,
            });
        }
        let running = curve.last().map_or(best, |&prev: &f64| prev.min(best));
        curve.push(running);
    }
    let start = start.ok_or_else(|| CliError::Config(format!("{}: no rows", path.display())))?;
    Ok(ImportedTrace {
        path: path.to_path_buf(),
        start,
        curve,
    })
}

fn sorted_entries(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    out.sort();
    Ok(out)
}

/// Walks `<root>/<problem>/<solver>/*.csv`, skipping `audit*` files, and
/// averages each solver's replications.
pub fn import_profile_inputs(root: &Path) -> CliResult<Vec<ProfileInput>> {
    if !root.is_dir() {
        return Err(CliError::Config(format!("{} is not a directory", root.display())));
    }
    let mut grouped: BTreeMap<(String, String), Vec<ImportedTrace>> = BTreeMap::new();
    for problem_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        for solver_dir in sorted_entries(&problem_dir)?.into_iter().filter(|p| p.is_dir()) {
            for file in sorted_entries(&solver_dir)? {
                let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if !name.ends_with(".csv") || name.starts_with("audit") {
                    continue;
                }
                let key = (dir_name(&problem_dir), dir_name(&solver_dir));
                grouped.entry(key).or_default().push(read_trace_csv(&file)?);
            }
        }
    }
    if grouped.is_empty() {
        return Err(CliError::Config(format!("no trace CSVs under {}", root.display())));
    }
    grouped
        .into_iter()
        .map(|((problem, solver), traces)| {
            let starts: Vec<f64> = traces.iter().map(|t| t.start).collect();
            let curves: Vec<Vec<f64>> = traces.into_iter().map(|t| t.curve).collect();
            ProfileInput::from_curves(problem, solver, &starts, &curves).map_err(|e| CliError::Config(e.to_string()))
        })
        .collect()
}

fn dir_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
