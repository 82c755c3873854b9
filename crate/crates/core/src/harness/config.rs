//! Experiment config parsing: a TOML tree with `[experiment]`, `[env]`,
//! `[train]`, and `[treatment.<label>]` sections. Global sections supply
//! defaults; treatment sections override them. Every resolved value is echoed
//! back into the output directory so a run can be re-created from its report
//! alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::{Baseline, TrainConfig};
use crate::curiosity::{ResetPolicy, RewardMixer};
use crate::env::{EnvKind, EnvSpec};

use super::{ExperimentPlan, HarnessError, Treatment};

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    env: RawEnv,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    treatment: BTreeMap<String, RawTreatment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    master_seed: u64,
    run_count: Option<u32>,
    output: Option<String>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    kind: Option<String>,
    room_width: Option<u32>,
    room_height: Option<u32>,
    room_count: Option<u32>,
    lives: Option<u32>,
    max_episode_steps: Option<u32>,
    hazard_density: Option<f64>,
    layout_seed: Option<u64>,
    reward_table: Option<RawRewardTable>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRewardTable {
    key: Option<f64>,
    door: Option<f64>,
    treasure: Option<f64>,
    arm_token: Option<f64>,
    vault: Option<f64>,
    collectible: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    actor_count: Option<usize>,
    n_step: Option<usize>,
    discount: Option<f64>,
    value_loss_coef: Option<f64>,
    entropy_coef: Option<f64>,
    total_env_steps: Option<u64>,
    checkpoint_interval: Option<u64>,
    use_intrinsic: Option<bool>,
    use_compass: Option<bool>,
    reset_policy: Option<String>,
    mixer: Option<String>,
    beta: Option<f64>,
    baseline: Option<String>,
    tile_size: Option<u32>,
    hidden_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTreatment {
    #[serde(default)]
    env: RawEnv,
    #[serde(default)]
    train: RawTrain,
    run_count: Option<u32>,
}

fn overlay_env(base: &RawEnv, over: &RawEnv) -> RawEnv {
    RawEnv {
        kind: over.kind.clone().or_else(|| base.kind.clone()),
        room_width: over.room_width.or(base.room_width),
        room_height: over.room_height.or(base.room_height),
        room_count: over.room_count.or(base.room_count),
        lives: over.lives.or(base.lives),
        max_episode_steps: over.max_episode_steps.or(base.max_episode_steps),
        hazard_density: over.hazard_density.or(base.hazard_density),
        layout_seed: over.layout_seed.or(base.layout_seed),
        reward_table: match (&base.reward_table, &over.reward_table) {
            (Some(b), Some(o)) => Some(RawRewardTable {
                key: o.key.or(b.key),
                door: o.door.or(b.door),
                treasure: o.treasure.or(b.treasure),
                arm_token: o.arm_token.or(b.arm_token),
                vault: o.vault.or(b.vault),
                collectible: o.collectible.or(b.collectible),
            }),
            (b, o) => o.clone().or_else(|| b.clone()),
        },
    }
}

fn overlay_train(base: &RawTrain, over: &RawTrain) -> RawTrain {
    RawTrain {
        actor_count: over.actor_count.or(base.actor_count),
        n_step: over.n_step.or(base.n_step),
        discount: over.discount.or(base.discount),
        value_loss_coef: over.value_loss_coef.or(base.value_loss_coef),
        entropy_coef: over.entropy_coef.or(base.entropy_coef),
        total_env_steps: over.total_env_steps.or(base.total_env_steps),
        checkpoint_interval: over.checkpoint_interval.or(base.checkpoint_interval),
        use_intrinsic: over.use_intrinsic.or(base.use_intrinsic),
        use_compass: over.use_compass.or(base.use_compass),
        reset_policy: over.reset_policy.clone().or_else(|| base.reset_policy.clone()),
        mixer: over.mixer.clone().or_else(|| base.mixer.clone()),
        beta: over.beta.or(base.beta),
        baseline: over.baseline.clone().or_else(|| base.baseline.clone()),
        tile_size: over.tile_size.or(base.tile_size),
        hidden_sizes: over.hidden_sizes.clone().or_else(|| base.hidden_sizes.clone()),
    }
}

fn realize_env(label: &str, raw: &RawEnv) -> Result<(EnvSpec, u64), HarnessError> {
    let kind_name = raw.kind.as_deref().ok_or_else(|| {
        cfg_err(format!("treatment `{label}`: no env kind set; add `kind` under [env] or [treatment.{label}.env]"))
    })?;
    let kind = EnvKind::parse(kind_name).ok_or_else(|| {
        cfg_err(format!(
            "treatment `{label}`: unknown env kind `{kind_name}` (expected one of \
             multi_room_world, hallway_key_door, cross_maze, dense_collect)"
        ))
    })?;
    let mut spec = EnvSpec::defaults(kind);
    if let Some(v) = raw.room_width {
        spec.room_width = v;
    }
    if let Some(v) = raw.room_height {
        spec.room_height = v;
    }
    if let Some(v) = raw.room_count {
        spec.room_count = v;
    }
    if let Some(v) = raw.lives {
        spec.lives = v;
    }
    if let Some(v) = raw.max_episode_steps {
        spec.max_episode_steps = v;
    }
    if let Some(v) = raw.hazard_density {
        spec.hazard_density = v;
    }
    if let Some(rt) = &raw.reward_table {
        if let Some(v) = rt.key {
            spec.reward_table.key = v;
        }
        if let Some(v) = rt.door {
            spec.reward_table.door = v;
        }
        if let Some(v) = rt.treasure {
            spec.reward_table.treasure = v;
        }
        if let Some(v) = rt.arm_token {
            spec.reward_table.arm_token = v;
        }
        if let Some(v) = rt.vault {
            spec.reward_table.vault = v;
        }
        if let Some(v) = rt.collectible {
            spec.reward_table.collectible = v;
        }
    }
    spec.validate()
        .map_err(|e| cfg_err(format!("treatment `{label}`: {e}")))?;
    Ok((spec, raw.layout_seed.unwrap_or(0)))
}

fn realize_train(label: &str, raw: &RawTrain, layout_seed: u64) -> Result<TrainConfig, HarnessError> {
    let mut cfg = TrainConfig { layout_seed, ..TrainConfig::default() };
    if let Some(v) = raw.actor_count {
        cfg.actor_count = v;
    }
    if let Some(v) = raw.n_step {
        cfg.n_step = v;
    }
    if let Some(v) = raw.discount {
        cfg.discount = v;
    }
    if let Some(v) = raw.value_loss_coef {
        cfg.value_loss_coef = v;
    }
    if let Some(v) = raw.entropy_coef {
        cfg.entropy_coef = v;
    }
    if let Some(v) = raw.total_env_steps {
        cfg.total_env_steps = v;
    }
    if let Some(v) = raw.checkpoint_interval {
        cfg.checkpoint_interval = v;
    }
    if let Some(v) = raw.use_intrinsic {
        cfg.use_intrinsic = v;
    }
    if let Some(v) = raw.use_compass {
        cfg.use_compass = v;
    }
    if let Some(v) = &raw.reset_policy {
        cfg.reset_policy = match v.as_str() {
            "per_episode" => ResetPolicy::PerEpisode,
            "per_life" => ResetPolicy::PerLife,
            "never" => ResetPolicy::Never,
            other => {
                return Err(cfg_err(format!(
                    "treatment `{label}`: unknown reset_policy `{other}` \
                     (expected per_episode, per_life, or never)"
                )))
            }
        };
    }
    let beta = raw.beta.unwrap_or(0.25);
    cfg.mixer = match raw.mixer.as_deref() {
        None | Some("weighted") => RewardMixer::Weighted { beta },
        Some("untuned_clip") => RewardMixer::UntunedClip,
        Some(other) => {
            return Err(cfg_err(format!(
                "treatment `{label}`: unknown mixer `{other}` (expected weighted or untuned_clip)"
            )))
        }
    };
    if let Some(v) = &raw.baseline {
        cfg.baseline = match v.as_str() {
            "none" => Baseline::None,
            "count_bonus" => Baseline::CountBonus,
            other => {
                return Err(cfg_err(format!(
                    "treatment `{label}`: unknown baseline `{other}` (expected none or count_bonus)"
                )))
            }
        };
    }
    if let Some(v) = raw.tile_size {
        cfg.tile_size = v;
    }
    if let Some(v) = &raw.hidden_sizes {
        cfg.hidden_sizes = v.clone();
    }
    cfg.validate()
        .map_err(|e| cfg_err(format!("treatment `{label}`: {e}")))?;
    Ok(cfg)
}

/// Parses and fully resolves an experiment plan. Treatments come out sorted
/// by label; every default is materialized.
pub fn parse_config(text: &str) -> Result<ExperimentPlan, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
    if raw.treatment.is_empty() {
        return Err(cfg_err("config must define at least one [treatment.<label>] section"));
    }
    let default_runs = raw.experiment.run_count.unwrap_or(15);
    if default_runs < 1 {
        return Err(cfg_err("experiment.run_count must be >= 1"));
    }
    let mut treatments = Vec::with_capacity(raw.treatment.len());
    for (label, t) in &raw.treatment {
        if label.is_empty() {
            return Err(cfg_err("treatment labels must be non-empty"));
        }
        let env_raw = overlay_env(&raw.env, &t.env);
        let train_raw = overlay_train(&raw.train, &t.train);
        let (env, layout_seed) = realize_env(label, &env_raw)?;
        let train = realize_train(label, &train_raw, layout_seed)?;
        let run_count = t.run_count.unwrap_or(default_runs);
        if run_count < 1 {
            return Err(cfg_err(format!("treatment `{label}`: run_count must be >= 1")));
        }
        treatments.push(Treatment { label: label.clone(), env, train, run_count });
    }
    Ok(ExperimentPlan {
        master_seed: raw.experiment.master_seed,
        treatments,
        output: raw.experiment.output.clone(),
        workers: raw.experiment.workers,
    })
}

/// Parses just an `[env]` section (plus optional `layout_seed`) from a config
/// file, for commands that take an environment argument.
pub fn parse_env_section(text: &str) -> Result<(EnvSpec, u64), HarnessError> {
    #[derive(Deserialize)]
    struct EnvOnly {
        env: RawEnv,
    }
    let raw: EnvOnly = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
    realize_env("env", &raw.env)
}

#[derive(Serialize)]
struct EchoTreatment<'a> {
    run_count: u32,
    run_seeds: &'a [u64],
    env: &'a EnvSpec,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct EchoRoot<'a> {
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<&'a str>,
    treatment: BTreeMap<&'a str, EchoTreatment<'a>>,
}

/// The fully-resolved plan as TOML, including the derived per-run seeds.
pub fn echo_resolved(
    plan: &ExperimentPlan,
    master_seed: u64,
    run_seeds: &BTreeMap<String, Vec<u64>>,
) -> String {
    let mut treatment = BTreeMap::new();
    for t in &plan.treatments {
        treatment.insert(
            t.label.as_str(),
            EchoTreatment {
                run_count: t.run_count,
                run_seeds: &run_seeds[&t.label],
                env: &t.env,
                train: &t.train,
            },
        );
    }
    let root = EchoRoot {
        master_seed,
        workers: plan.workers,
        output: plan.output.as_deref(),
        treatment,
    };
    toml::to_string_pretty(&root).expect("resolved plan serializes")
}
