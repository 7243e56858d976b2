use std::path::PathBuf;
use std::process::ExitCode;

use basso_cli::checks::Check;
use basso_cli::commands::{self, ProfileOptions, RunOverrides};
use basso_cli::{CliError, CliResult};
use basso_core::harness::{LowerBound, DEFAULT_K_POINTS, DEFAULT_TAUS};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "basso", version, about = "Branching adaptive surrogate search")]
struct Cli {
    /// Worker threads for replications (defaults to all cores).
    #[arg(long, global = true, env = "BASSO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver described by a TOML experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Build performance profiles from `<input>/<problem>/<solver>/*.csv`.
    Profile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "profiles")]
        out: PathBuf,
        /// Repeatable; defaults to 1e-3 and 1e-5.
        #[arg(long)]
        tau: Vec<f64>,
        /// Number of log-spaced evaluation counts.
        #[arg(long, default_value_t = DEFAULT_K_POINTS)]
        points: usize,
        /// Take f_L over the whole run instead of within each K.
        #[arg(long)]
        whole_run: bool,
    },
    /// Run a named check: corollary2, dominance, assumption1, assumption2.
    Verify {
        check: String,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    match cli.command {
        Command::Run { config, out, seed, reps } => {
            let overrides = RunOverrides {
                out,
                seed,
                replications: reps,
            };
            let config = commands::prepare_run(&config, &overrides)?;
            let summary = commands::cmd_run(&config)?;
            if let Some(s) = summary.final_incumbent {
                println!(
                    "{} {} over {} replications: mean {} min {} max {}",
                    summary.problem, summary.solver, summary.replications, s.mean, s.min, s.max
                );
            }
            println!("wrote {}", commands::run_dir(&config).display());
            Ok(())
        }
        Command::Profile {
            input,
            out,
            tau,
            points,
            whole_run,
        } => {
            let mut opts = ProfileOptions::new(input, out);
            opts.taus = if tau.is_empty() { DEFAULT_TAUS.to_vec() } else { tau };
            opts.points = points;
            if whole_run {
                opts.bound = LowerBound::WholeRun;
            }
            for path in commands::cmd_profile(&opts)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Verify { check, out, seed } => {
            let check: Check = check.parse()?;
            let report = commands::cmd_verify(check, seed, &out)?;
            for f in &report.findings {
                println!("{f}");
            }
            println!("{}: {}", check, if report.pass { "PASS" } else { "FAIL" });
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Verification(format!("{check} did not hold")))
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("basso: {e}");
            e.exit_code()
        }
    }
}
