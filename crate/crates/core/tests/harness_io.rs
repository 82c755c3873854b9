//! Config parsing, experiment orchestration, and CSV round-trip tests on
//! miniature budgets.

use std::fs;
use std::path::{Path, PathBuf};

use curiogrid::curiosity::RewardMixer;
use curiogrid::harness::{
    self, compare_dirs, coverage_report, eval_distribution, eval_distribution_with, parse_config,
    parse_run_csv, run_experiment, HarnessError,
};

const TINY_PLAN: &str = r#"
[experiment]
master_seed = 99
run_count = 2

[env]
kind = "dense_collect"

[train]
total_env_steps = 1500
checkpoint_interval = 500
actor_count = 4
hidden_sizes = [12]
mixer = "untuned_clip"

[treatment.bonus]

[treatment.count]
train = { baseline = "count_bonus" }

[treatment.plain]
train = { use_intrinsic = false, use_compass = false }
"#;

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Relative path -> bytes for an output tree.
fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> =
            fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn defaults_are_resolved_and_echoed() {
    let plan = parse_config(TINY_PLAN).unwrap();
    assert_eq!(plan.master_seed, 99);
    assert_eq!(plan.treatments.len(), 3);
    // labels come out sorted
    assert_eq!(plan.treatments[0].label, "bonus");
    assert_eq!(plan.treatments[1].label, "count");
    assert_eq!(plan.treatments[2].label, "plain");
    assert_eq!(plan.treatments[0].run_count, 2);
    assert_eq!(plan.treatments[0].train.mixer, RewardMixer::UntunedClip);
    assert!(plan.treatments[0].train.use_intrinsic);
    assert!(!plan.treatments[2].train.use_intrinsic);
    assert_eq!(plan.treatments[1].train.baseline, curiogrid::agent::Baseline::CountBonus);
    // unset keys resolve to defaults
    assert_eq!(plan.treatments[0].train.n_step, 5);
    assert_eq!(plan.treatments[0].env.room_width, 20);
}

#[test]
fn omitted_beta_defaults_to_a_quarter() {
    let text = TINY_PLAN.replace("mixer = \"untuned_clip\"", "mixer = \"weighted\"");
    let plan = parse_config(&text).unwrap();
    assert_eq!(plan.treatments[0].train.mixer, RewardMixer::Weighted { beta: 0.25 });
}

#[test]
fn config_errors_name_the_problem() {
    // no treatments
    let err = parse_config("[experiment]\nmaster_seed = 1\n").unwrap_err();
    assert!(err.to_string().contains("treatment"), "{err}");

    // unknown key, with location info from the parser
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[train]\nlr = 3\n[treatment.x]\nenv = { kind = \"cross_maze\" }\n",
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("lr"), "{msg}");
    assert!(msg.contains("line"), "{msg}");

    // unknown env kind names the treatment
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[treatment.x]\nenv = { kind = \"pong\" }\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("pong"), "{err}");

    // invariant violations surface the field
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[env]\nkind = \"cross_maze\"\nroom_width = 2\n[treatment.x]\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("room_width"), "{err}");

    // beta outside [0,1]
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[env]\nkind = \"cross_maze\"\n[train]\nbeta = 1.5\n[treatment.x]\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("beta"), "{err}");

    // duplicate treatment labels are a parse error
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[treatment.x]\n[treatment.x]\n",
    )
    .unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
}

#[test]
fn count_bonus_needs_the_bonus_enabled() {
    let err = parse_config(
        "[experiment]\nmaster_seed = 1\n[env]\nkind = \"cross_maze\"\n\
         [treatment.x]\ntrain = { baseline = \"count_bonus\", use_intrinsic = false }\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("count_bonus"), "{err}");
}

#[test]
fn experiment_outputs_are_a_pure_function_of_the_config() {
    let plan = parse_config(TINY_PLAN).unwrap();
    let dir_a = tmp_dir("exp_a");
    let dir_b = tmp_dir("exp_b");
    let report_a = run_experiment(&plan, &dir_a, Some(2), None).unwrap();
    let report_b = run_experiment(&plan, &dir_b, Some(1), None).unwrap();
    assert!(report_a.aborted.is_empty());
    assert_eq!(report_a.completed.len(), 6);

    let a = tree_bytes(&dir_a);
    let b = tree_bytes(&dir_b);
    assert_eq!(a.len(), b.len());
    for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
        assert_eq!(pa, pb);
        assert_eq!(ba, bb, "{pa} differs between reruns");
    }

    // a different master seed changes run outputs
    let dir_c = tmp_dir("exp_c");
    run_experiment(&plan, &dir_c, Some(2), Some(100)).unwrap();
    let c = tree_bytes(&dir_c);
    assert!(
        a.iter().zip(&c).any(|((_, ba), (_, bc))| ba != bc),
        "seed override must change the outputs"
    );

    // expected tree shape
    for rel in [
        "resolved.toml",
        "comparisons.csv",
        "coverage.csv",
        "summary/bonus.csv",
        "summary/plain.csv",
        "runs/bonus/run_00.csv",
        "runs/bonus/run_00_meta.csv",
        "runs/bonus/run_00.params",
        "runs/plain/run_01.csv",
    ] {
        assert!(dir_a.join(rel).is_file(), "missing {rel}");
    }

    // resolved echo carries the defaults
    let echo = fs::read_to_string(dir_a.join("resolved.toml")).unwrap();
    assert!(echo.contains("master_seed = 99"));
    assert!(echo.contains("run_seeds"));
    assert!(echo.contains("discount = 0.99"));
    assert!(echo.contains("mode = \"untuned_clip\""));
}

#[test]
fn run_csvs_roundtrip_and_feed_the_reports() {
    let plan = parse_config(TINY_PLAN).unwrap();
    let dir = tmp_dir("exp_reports");
    run_experiment(&plan, &dir, Some(2), None).unwrap();

    let run = parse_run_csv(&dir.join("runs/bonus/run_00.csv")).unwrap();
    assert_eq!(run.steps[0], 0);
    assert_eq!(run.mean_recent_score[0], None, "missing marker at step zero");
    assert_eq!(run.steps.len(), 4); // 0, 500, 1000, 1500 (logged at 80-step grain)

    let comparison = compare_dirs(&dir.join("runs/bonus"), &dir.join("runs/plain"), 0.05).unwrap();
    assert!(comparison.starts_with("step,label_a,label_b,U,p,significant\n"));
    assert_eq!(comparison.lines().count(), 1 + run.steps.len());

    let coverage = coverage_report(&dir).unwrap();
    let labels: Vec<&str> =
        coverage.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, vec!["bonus", "count", "plain"], "stable label order");

    // pairwise comparisons cover C(n,2) pairs per checkpoint
    let comparisons = fs::read_to_string(dir.join("comparisons.csv")).unwrap();
    assert_eq!(comparisons.lines().count(), 1 + 3 * run.steps.len());

    // run metadata carries the visited-tile bitsets
    let meta = fs::read_to_string(dir.join("runs/bonus/run_00_meta.csv")).unwrap();
    assert!(meta.contains("grid_room_0,"), "{meta}");
    assert!(meta.lines().any(|l| l.starts_with("max_actor_intrinsic_total,")));
}

#[test]
fn eval_distribution_reports_and_footers_are_consistent() {
    let plan = parse_config(TINY_PLAN).unwrap();
    let dir = tmp_dir("exp_eval");
    run_experiment(&plan, &dir, Some(2), None).unwrap();

    let snapshot = dir.join("runs/bonus/run_00.params");
    let env = plan.treatments[0].env.clone();
    let csv = eval_distribution_with(&snapshot, &env, 0, 12, &[12]).unwrap();
    let again = eval_distribution_with(&snapshot, &env, 0, 12, &[12]).unwrap();
    assert_eq!(csv, again);

    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 12 + 5, "header, rows, five footer stats");
    let scores: Vec<f64> = lines[1..=12]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let footer: Vec<(&str, f64)> = lines[13..]
        .iter()
        .map(|l| {
            let mut parts = l.split(',');
            (parts.next().unwrap(), parts.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(footer[0], ("min", sorted[0]));
    assert_eq!(footer[4], ("max", sorted[11]));
    assert_eq!(footer[2].0, "median");
    assert_eq!(footer[2].1, curiogrid::stats::quantile_sorted(&sorted, 0.5));
}

#[test]
fn snapshot_shape_mismatches_are_config_errors() {
    let plan = parse_config(TINY_PLAN).unwrap();
    let dir = tmp_dir("exp_badsnap");
    run_experiment(&plan, &dir, Some(2), None).unwrap();
    let snapshot = dir.join("runs/bonus/run_00.params");

    // wrong environment -> wrong input width -> refusal
    let other = curiogrid::env::EnvSpec::defaults(curiogrid::env::EnvKind::CrossMaze);
    let err = eval_distribution_with(&snapshot, &other, 0, 3, &[12]).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
    let err = eval_distribution(&snapshot, &plan.treatments[0].env, 0, 3).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "default hidden sizes do not match");

    // corrupt snapshot -> format error
    let bad = dir.join("bad.params");
    fs::write(&bad, b"garbage").unwrap();
    let err = eval_distribution(&bad, &plan.treatments[0].env, 0, 3).unwrap_err();
    assert!(matches!(err, HarnessError::Snapshot(_)));
}

#[test]
fn env_section_parses_standalone() {
    let (spec, layout_seed) =
        harness::parse_env_section("[env]\nkind = \"hallway_key_door\"\nlayout_seed = 9\n").unwrap();
    assert_eq!(spec.kind, curiogrid::env::EnvKind::HallwayKeyDoor);
    assert_eq!(layout_seed, 9);
}

#[test]
fn shipped_configs_parse() {
    for name in ["ablation.toml", "cross_maze.toml"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
        let text = fs::read_to_string(&path).unwrap();
        let plan = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!plan.treatments.is_empty());
    }
}
