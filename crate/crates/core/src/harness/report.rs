//! CSV emission and re-ingestion for run logs, curve summaries, pairwise
//! comparisons, coverage tables, and evaluation distributions.
//!
//! All numbers are written with Rust's shortest-roundtrip float formatting,
//! so identical runs produce byte-identical files. Missing values (before
//! every actor has finished an episode) are empty fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::agent::{EvalEpisode, RunLog};
use crate::curiosity::words_to_hex;
use crate::stats::{self, quantile_sorted, ScoreSeries};

use super::HarnessError;

pub const RUN_CSV_HEADER: &str =
    "step,mean_recent_score,median_score,intrinsic_per_episode,rooms_touched,tile_coverage";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Per-checkpoint training metrics of one run.
pub fn run_csv(log: &RunLog) -> String {
    let mut out = String::new();
    out.push_str(RUN_CSV_HEADER);
    out.push('\n');
    for c in &log.checkpoints {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.env_steps,
            opt(c.mean_recent_score),
            opt(c.median_recent_score),
            opt(c.intrinsic_per_episode),
            c.rooms_touched,
            c.tile_coverage,
        );
    }
    out
}

/// Run-level facts that do not fit the per-checkpoint table: totals, the
/// intrinsic bounds, and the all-time visited-tile bitsets per room.
pub fn meta_csv(log: &RunLog) -> String {
    let mut out = String::from("key,value\n");
    let _ = writeln!(out, "label,{}", log.label);
    let _ = writeln!(out, "seed,{}", log.seed);
    let _ = writeln!(out, "episodes_completed,{}", log.episodes_completed);
    let _ = writeln!(out, "intrinsic_grand_total,{}", log.intrinsic_grand_total);
    let _ = writeln!(out, "max_actor_intrinsic_total,{}", log.max_actor_intrinsic_total);
    let _ = writeln!(out, "total_tiles,{}", log.total_tiles);
    let _ = writeln!(out, "tiles_per_room,{}", log.tiles_per_room);
    for (room, words) in log.ever_words.iter().enumerate() {
        let _ = writeln!(out, "grid_room_{room},{}", words_to_hex(words, log.tiles_per_room));
    }
    out
}

/// The score curve of a run log, for aggregation.
pub fn score_series(log: &RunLog) -> ScoreSeries {
    ScoreSeries {
        steps: log.checkpoints.iter().map(|c| c.env_steps).collect(),
        values: log.checkpoints.iter().map(|c| c.mean_recent_score).collect(),
    }
}

/// Per-treatment curve summary (order statistics of the per-run scores).
pub fn summary_csv(runs: &[ScoreSeries]) -> Result<String, HarnessError> {
    let summary = stats::summarize_curves(runs)?;
    let mut out = String::from("step,n,min,q1,median,q3,max\n");
    for (step, point) in summary.steps.iter().zip(&summary.points) {
        match point {
            Some(p) => {
                let _ = writeln!(
                    out,
                    "{step},{},{},{},{},{},{}",
                    p.n, p.min, p.q1, p.median, p.q3, p.max
                );
            }
            None => {
                let _ = writeln!(out, "{step},0,,,,,");
            }
        }
    }
    Ok(out)
}

pub const COMPARISON_CSV_HEADER: &str = "step,label_a,label_b,U,p,significant";

/// Appends one pairwise comparison (per checkpoint) to a comparison CSV body.
pub fn compare_pair_into(
    out: &mut String,
    label_a: &str,
    runs_a: &[ScoreSeries],
    label_b: &str,
    runs_b: &[ScoreSeries],
    alpha: f64,
) -> Result<(), HarnessError> {
    if runs_a.is_empty() || runs_b.is_empty() || runs_a[0].steps != runs_b[0].steps {
        return Err(HarnessError::Config(format!(
            "treatments `{label_a}` and `{label_b}` do not share a checkpoint grid"
        )));
    }
    for (c, &step) in runs_a[0].steps.iter().enumerate() {
        let a: Vec<f64> = runs_a.iter().filter_map(|r| r.values[c]).collect();
        let b: Vec<f64> = runs_b.iter().filter_map(|r| r.values[c]).collect();
        if a.is_empty() || b.is_empty() {
            let _ = writeln!(out, "{step},{label_a},{label_b},,,false");
        } else {
            let (u, p) = stats::mann_whitney_u(&a, &b)?;
            let _ = writeln!(out, "{step},{label_a},{label_b},{u},{p},{}", p < alpha);
        }
    }
    Ok(())
}

/// Final rooms-touched and tile-coverage metrics of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRow {
    pub rooms_touched: u32,
    pub tile_coverage: f64,
}

/// Per-treatment exploration table: best and median rooms/coverage at the end
/// of training, treatments in label order.
pub fn coverage_csv(per_treatment: &[(String, Vec<CoverageRow>)]) -> String {
    let mut out = String::from(
        "treatment,runs,best_rooms,median_rooms,best_tile_coverage,median_tile_coverage\n",
    );
    for (label, rows) in per_treatment {
        if rows.is_empty() {
            let _ = writeln!(out, "{label},0,,,,");
            continue;
        }
        let mut rooms: Vec<f64> = rows.iter().map(|r| f64::from(r.rooms_touched)).collect();
        let mut cover: Vec<f64> = rows.iter().map(|r| r.tile_coverage).collect();
        rooms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cover.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{}",
            rows.len(),
            rooms[rooms.len() - 1],
            quantile_sorted(&rooms, 0.5),
            cover[cover.len() - 1],
            quantile_sorted(&cover, 0.5),
        );
    }
    out
}

/// Per-seed evaluation scores plus a min/quartiles/max footer, each footer
/// row carrying the statistic over both the score and intrinsic columns.
pub fn eval_dist_csv(episodes: &[EvalEpisode]) -> String {
    let mut out = String::from("seed,score,intrinsic_total\n");
    for e in episodes {
        let _ = writeln!(out, "{},{},{}", e.episode_seed, e.score, e.intrinsic_total);
    }
    let mut scores: Vec<f64> = episodes.iter().map(|e| e.score).collect();
    let mut intr: Vec<f64> = episodes.iter().map(|e| e.intrinsic_total).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    intr.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !scores.is_empty() {
        for (name, q) in [("min", 0.0), ("q1", 0.25), ("median", 0.5), ("q3", 0.75), ("max", 1.0)] {
            let _ = writeln!(
                out,
                "{name},{},{}",
                quantile_sorted(&scores, q),
                quantile_sorted(&intr, q)
            );
        }
    }
    out
}

/// A run CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCsv {
    pub steps: Vec<u64>,
    pub mean_recent_score: Vec<Option<f64>>,
    pub rooms_touched: Vec<u32>,
    pub tile_coverage: Vec<f64>,
}

impl RunCsv {
    pub fn score_series(&self) -> ScoreSeries {
        ScoreSeries { steps: self.steps.clone(), values: self.mean_recent_score.clone() }
    }

    pub fn final_coverage(&self) -> Option<CoverageRow> {
        let last = self.steps.len().checked_sub(1)?;
        Some(CoverageRow {
            rooms_touched: self.rooms_touched[last],
            tile_coverage: self.tile_coverage[last],
        })
    }
}

pub fn parse_run_csv(path: &Path) -> Result<RunCsv, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != RUN_CSV_HEADER {
        return Err(HarnessError::Config(format!(
            "{} is not a run CSV (unexpected header `{header}`)",
            path.display()
        )));
    }
    let mut out = RunCsv {
        steps: Vec::new(),
        mean_recent_score: Vec::new(),
        rooms_touched: Vec::new(),
        tile_coverage: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(HarnessError::Config(format!(
                "{} line {}: expected 6 fields, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let bad = |field: &str| {
            HarnessError::Config(format!("{} line {}: bad {field}", path.display(), i + 2))
        };
        out.steps.push(fields[0].parse().map_err(|_| bad("step"))?);
        out.mean_recent_score.push(if fields[1].is_empty() {
            None
        } else {
            Some(fields[1].parse().map_err(|_| bad("mean_recent_score"))?)
        });
        out.rooms_touched.push(fields[4].parse().map_err(|_| bad("rooms_touched"))?);
        out.tile_coverage.push(fields[5].parse().map_err(|_| bad("tile_coverage"))?);
    }
    Ok(out)
}

/// Loads all `run_*.csv` files of a treatment directory, in file order.
pub fn load_treatment_dir(dir: &Path) -> Result<Vec<RunCsv>, HarnessError> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv") && !n.contains("meta"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::Config(format!(
            "{} holds no run_*.csv files",
            dir.display()
        )));
    }
    files.iter().map(|p| parse_run_csv(p)).collect()
}
