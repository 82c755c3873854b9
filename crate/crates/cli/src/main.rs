use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use curiogrid::env::{EnvKind, EnvSpec};
use curiogrid::harness::{self, HarnessError};

/// Exploration-lab experiment harness: seeded training runs, rank-test
/// comparisons, and CSV reports.
#[derive(Parser)]
#[command(name = "curiogrid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every treatment of an experiment config and write the report tree.
    Run {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Parallel run workers (default: config value or available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: config `output` or `curiogrid-out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config master seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Compare two treatment run directories checkpoint by checkpoint.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Significance level for the comparison flags.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a parameter snapshot over n seeded episodes.
    #[command(name = "eval-dist")]
    EvalDist {
        /// Parameter snapshot file.
        snapshot: PathBuf,
        /// Environment: a kind name (multi_room_world, hallway_key_door,
        /// cross_maze, dense_collect) or a config file with an [env] section.
        env: String,
        /// Number of evaluation episodes.
        n: u64,
        /// Layout seed when `env` is a kind name.
        #[arg(long, default_value_t = 0)]
        layout_seed: u64,
        /// Hidden layer sizes the snapshot was trained with.
        #[arg(long, value_delimiter = ',', default_values_t = [128usize, 128])]
        hidden: Vec<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize rooms-touched and tile coverage across an experiment.
    Coverage {
        /// Experiment output directory.
        dir: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;

fn emit(text: &str, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn resolve_env(arg: &str, layout_seed: u64) -> Result<(EnvSpec, u64), HarnessError> {
    if let Some(kind) = EnvKind::parse(arg) {
        return Ok((EnvSpec::defaults(kind), layout_seed));
    }
    let path = PathBuf::from(arg);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        return harness::parse_env_section(&text);
    }
    Err(HarnessError::Config(format!(
        "`{arg}` is neither an environment kind nor a config file"
    )))
}

fn run() -> Result<ExitCode, anyhow::Error> {
    match Cli::parse().command {
        Command::Run { config, workers, out, seed_override } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let plan = match harness::parse_config(&text) {
                Ok(plan) => plan,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(ExitCode::from(EXIT_CONFIG));
                }
            };
            let out_dir = out
                .or_else(|| plan.output.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("curiogrid-out"));
            let report = harness::run_experiment(&plan, &out_dir, workers, seed_override)?;
            let runs: usize = report.completed.len() + report.aborted.len();
            println!("{} runs -> {}", runs, report.out_dir.display());
            for t in &plan.treatments {
                let finals: Vec<String> = report
                    .completed
                    .iter()
                    .filter(|(r, _)| r.label == t.label)
                    .map(|(_, log)| {
                        log.final_checkpoint()
                            .mean_recent_score
                            .map_or_else(|| "-".into(), |v| format!("{v:.0}"))
                    })
                    .collect();
                println!("  {}: final mean scores [{}]", t.label, finals.join(", "));
            }
            if !report.aborted.is_empty() {
                for (r, msg) in &report.aborted {
                    eprintln!("aborted {}/{:02}: {msg}", r.label, r.index);
                }
                return Ok(ExitCode::from(EXIT_ABORT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { dir_a, dir_b, alpha, out } => {
            match harness::compare_dirs(&dir_a, &dir_b, alpha) {
                Ok(csv) => {
                    emit(&csv, out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ HarnessError::Config(_)) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(EXIT_CONFIG))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::EvalDist { snapshot, env, n, layout_seed, hidden, out } => {
            let (spec, layout_seed) = match resolve_env(&env, layout_seed) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(ExitCode::from(EXIT_CONFIG));
                }
            };
            match harness::eval_distribution_with(&snapshot, &spec, layout_seed, n, &hidden) {
                Ok(csv) => {
                    emit(&csv, out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ (HarnessError::Config(_) | HarnessError::Snapshot(_))) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(EXIT_CONFIG))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Coverage { dir, out } => match harness::coverage_report(&dir) {
            Ok(csv) => {
                emit(&csv, out)?;
                Ok(ExitCode::SUCCESS)
            }
            Err(e @ HarnessError::Config(_)) => {
                eprintln!("{e}");
                Ok(ExitCode::from(EXIT_CONFIG))
            }
            Err(e) => Err(e.into()),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
