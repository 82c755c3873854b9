//! Experiment orchestration: parse a plan, run its seeded treatments across a
//! worker pool, and emit the CSV report tree.
//!
//! The output tree is a pure function of the config text: per-run seeds
//! derive from the master seed and treatment label, each run is
//! single-threaded and bit-reproducible, runs write only run-private files,
//! and the summary pass is serial over results sorted by (label, run index).

mod config;
mod report;

pub use config::{parse_config, parse_env_section};
pub use report::{
    compare_pair_into, coverage_csv, eval_dist_csv, load_treatment_dir, meta_csv, parse_run_csv,
    run_csv, score_series, summary_csv, CoverageRow, RunCsv, COMPARISON_CSV_HEADER, RUN_CSV_HEADER,
};

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{self, RunLog, TrainConfig};
use crate::env::EnvSpec;
use crate::nn::{self, DenseNet, NetShape};
use crate::seed;
use crate::stats::ScoreSeries;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Snapshot(#[from] nn::SnapshotError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}

/// One treatment of an experiment plan: a label plus the environment and
/// trainer configuration its runs share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Treatment {
    pub label: String,
    pub env: EnvSpec,
    pub train: TrainConfig,
    pub run_count: u32,
}

/// A fully resolved experiment: treatments sorted by label, seeds pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    pub treatments: Vec<Treatment>,
    pub output: Option<String>,
    pub workers: Option<usize>,
}

/// Identity of one run inside an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRef {
    pub label: String,
    pub index: u32,
    pub seed: u64,
}

/// What an experiment produced: where it wrote, which runs completed, and
/// which aborted (aborts never stop the rest of the experiment).
#[derive(Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub completed: Vec<(RunRef, RunLog)>,
    pub aborted: Vec<(RunRef, String)>,
}

pub fn run_name(index: u32) -> String {
    format!("run_{index:02}")
}

/// Executes every run of the plan, then writes summaries, pairwise
/// comparisons, the coverage table, and the resolved-config echo.
pub fn run_experiment(
    plan: &ExperimentPlan,
    out_dir: &Path,
    workers_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<ExperimentReport, HarnessError> {
    let master_seed = seed_override.unwrap_or(plan.master_seed);
    std::fs::create_dir_all(out_dir)?;
    for t in &plan.treatments {
        std::fs::create_dir_all(out_dir.join("runs").join(&t.label))?;
    }

    struct Task<'a> {
        treatment: &'a Treatment,
        index: u32,
        seed: u64,
    }
    let mut tasks = Vec::new();
    let mut run_seeds: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for t in &plan.treatments {
        let seeds: Vec<u64> = (0..t.run_count)
            .map(|i| seed::run_seed(master_seed, &t.label, u64::from(i)))
            .collect();
        for (i, &s) in seeds.iter().enumerate() {
            tasks.push(Task { treatment: t, index: i as u32, seed: s });
        }
        run_seeds.insert(t.label.clone(), seeds);
    }

    let workers = workers_override
        .or(plan.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, tasks.len().max(1));

    enum Outcome {
        Done(RunLog),
        Aborted(String),
    }
    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<(usize, Outcome)>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let task = &tasks[i];
                let cfg = TrainConfig { master_seed: task.seed, ..task.treatment.train.clone() };
                let run_dir = out_dir.join("runs").join(&task.treatment.label);
                let name = run_name(task.index);
                let outcome = match catch_unwind(AssertUnwindSafe(|| {
                    agent::train(&task.treatment.env, &cfg)
                })) {
                    Ok(Ok(mut result)) => {
                        result.log.label = task.treatment.label.clone();
                        let write = || -> Result<(), HarnessError> {
                            std::fs::write(
                                run_dir.join(format!("{name}.csv")),
                                report::run_csv(&result.log),
                            )?;
                            std::fs::write(
                                run_dir.join(format!("{name}_meta.csv")),
                                report::meta_csv(&result.log),
                            )?;
                            nn::save_params(&result.net, &run_dir.join(format!("{name}.params")))?;
                            Ok(())
                        };
                        match write() {
                            Ok(()) => Outcome::Done(result.log),
                            Err(e) => Outcome::Aborted(format!("write failed: {e}")),
                        }
                    }
                    Ok(Err(e)) => Outcome::Aborted(e.to_string()),
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<&str>()
                            .map(|s| (*s).to_string())
                            .or_else(|| panic.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "panic".into());
                        Outcome::Aborted(format!("panicked: {msg}"))
                    }
                };
                if let Outcome::Aborted(msg) = &outcome {
                    let _ = std::fs::write(
                        run_dir.join(format!("{name}.aborted.txt")),
                        format!("{msg}\n"),
                    );
                }
                outcomes.lock().unwrap()[i] = Some((i, outcome));
            });
        }
    });

    let mut completed: Vec<(RunRef, RunLog)> = Vec::new();
    let mut aborted: Vec<(RunRef, String)> = Vec::new();
    for (i, slot) in outcomes.into_inner().unwrap().into_iter().enumerate() {
        let (_, outcome) = slot.expect("worker pool covered every task");
        let task = &tasks[i];
        let run_ref = RunRef {
            label: task.treatment.label.clone(),
            index: task.index,
            seed: task.seed,
        };
        match outcome {
            Outcome::Done(log) => completed.push((run_ref, log)),
            Outcome::Aborted(msg) => aborted.push((run_ref, msg)),
        }
    }

    // serial summary pass over (label, index)-sorted results
    completed.sort_by(|a, b| (&a.0.label, a.0.index).cmp(&(&b.0.label, b.0.index)));
    aborted.sort_by(|a, b| (&a.0.label, a.0.index).cmp(&(&b.0.label, b.0.index)));

    let summary_dir = out_dir.join("summary");
    std::fs::create_dir_all(&summary_dir)?;
    let mut per_treatment: Vec<(String, Vec<ScoreSeries>)> = Vec::new();
    let mut coverage_rows: Vec<(String, Vec<CoverageRow>)> = Vec::new();
    for t in &plan.treatments {
        let logs: Vec<&RunLog> = completed
            .iter()
            .filter(|(r, _)| r.label == t.label)
            .map(|(_, log)| log)
            .collect();
        let series: Vec<ScoreSeries> = logs.iter().map(|l| report::score_series(l)).collect();
        if !series.is_empty() {
            std::fs::write(
                summary_dir.join(format!("{}.csv", t.label)),
                report::summary_csv(&series)?,
            )?;
        }
        coverage_rows.push((
            t.label.clone(),
            logs.iter()
                .map(|l| {
                    let c = l.final_checkpoint();
                    CoverageRow { rooms_touched: c.rooms_touched, tile_coverage: c.tile_coverage }
                })
                .collect(),
        ));
        per_treatment.push((t.label.clone(), series));
    }

    let mut comparisons = String::from(COMPARISON_CSV_HEADER);
    comparisons.push('\n');
    for i in 0..per_treatment.len() {
        for j in i + 1..per_treatment.len() {
            let (la, ra) = &per_treatment[i];
            let (lb, rb) = &per_treatment[j];
            if ra.is_empty() || rb.is_empty() || ra[0].steps != rb[0].steps {
                continue;
            }
            report::compare_pair_into(&mut comparisons, la, ra, lb, rb, 0.05)?;
        }
    }
    std::fs::write(out_dir.join("comparisons.csv"), comparisons)?;
    std::fs::write(out_dir.join("coverage.csv"), report::coverage_csv(&coverage_rows))?;
    std::fs::write(
        out_dir.join("resolved.toml"),
        config::echo_resolved(plan, master_seed, &run_seeds),
    )?;

    Ok(ExperimentReport { out_dir: out_dir.to_path_buf(), completed, aborted })
}

/// Loads a parameter snapshot and evaluates it on `n_seeds` episodes,
/// returning the distribution CSV. The snapshot format carries no
/// architecture, so the hidden sizes must match the training run; whether the
/// compass channel was present is inferred from the parameter count.
pub fn eval_distribution_with(
    snapshot: &Path,
    env_spec: &EnvSpec,
    layout_seed: u64,
    n_seeds: u64,
    hidden_sizes: &[usize],
) -> Result<String, HarnessError> {
    let params = nn::load_params(snapshot)?;
    let mut matched = None;
    for use_compass in [true, false] {
        let cfg = TrainConfig {
            use_compass,
            layout_seed,
            hidden_sizes: hidden_sizes.to_vec(),
            ..TrainConfig::default()
        };
        let shape = NetShape {
            input: cfg.input_dim(env_spec),
            hidden: cfg.hidden_sizes.clone(),
            actions: crate::env::Action::ALL.len(),
        };
        let mut net = DenseNet::init(shape, 0);
        if net.param_count() == params.len() {
            net.set_params(params.clone()).expect("length checked");
            matched = Some((net, cfg));
            break;
        }
    }
    let (net, cfg) = matched.ok_or_else(|| {
        HarnessError::Config(format!(
            "snapshot holds {} parameters, which matches neither the compass nor the plain \
             network for this environment and hidden sizes {hidden_sizes:?}",
            params.len()
        ))
    })?;
    let episodes = agent::evaluate(&net, env_spec, n_seeds, &cfg)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(report::eval_dist_csv(&episodes))
}

/// [`eval_distribution_with`] under the default network architecture.
pub fn eval_distribution(
    snapshot: &Path,
    env_spec: &EnvSpec,
    layout_seed: u64,
    n_seeds: u64,
) -> Result<String, HarnessError> {
    eval_distribution_with(snapshot, env_spec, layout_seed, n_seeds, &TrainConfig::default().hidden_sizes)
}

/// Builds the coverage table from an experiment output directory.
pub fn coverage_report(experiment_dir: &Path) -> Result<String, HarnessError> {
    let runs_dir = experiment_dir.join("runs");
    let mut labels: Vec<PathBuf> = std::fs::read_dir(&runs_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    labels.sort();
    if labels.is_empty() {
        return Err(HarnessError::Config(format!(
            "{} holds no treatment directories",
            runs_dir.display()
        )));
    }
    let mut rows = Vec::new();
    for dir in labels {
        let label = dir.file_name().unwrap().to_string_lossy().into_owned();
        let runs = load_treatment_dir(&dir)?;
        rows.push((label, runs.iter().filter_map(|r| r.final_coverage()).collect()));
    }
    Ok(coverage_csv(&rows))
}

/// Compares two treatment run directories checkpoint by checkpoint.
pub fn compare_dirs(dir_a: &Path, dir_b: &Path, alpha: f64) -> Result<String, HarnessError> {
    let name = |p: &Path| p.file_name().map_or_else(|| "?".into(), |n| n.to_string_lossy().into_owned());
    let runs_a: Vec<ScoreSeries> =
        load_treatment_dir(dir_a)?.iter().map(|r| r.score_series()).collect();
    let runs_b: Vec<ScoreSeries> =
        load_treatment_dir(dir_b)?.iter().map(|r| r.score_series()).collect();
    let mut out = String::from(COMPARISON_CSV_HEADER);
    out.push('\n');
    compare_pair_into(&mut out, &name(dir_a), &runs_a, &name(dir_b), &runs_b, alpha)?;
    Ok(out)
}
