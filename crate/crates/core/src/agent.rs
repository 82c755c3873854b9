//! Synchronous advantage actor-critic trainer: parallel actors collect n-step
//! rollouts, one joint gradient update per rollout, curiosity grids and
//! reward mixing wired in between.
//!
//! A run is a pure function of its config: actor RNG streams, episode seeds,
//! and the network init all derive from `master_seed`, actors are stepped in
//! a fixed order, and every reduction has a fixed order, so reruns are
//! bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::curiosity::{CuriosityGrid, GridEvent, ResetPolicy, RewardMixer};
use crate::env::{make_env, Action, AgentPosition, EnvSpec, GridEnv, Observation, OBS_CHANNELS};
use crate::nn::{
    rmsprop_update, sample_action, A2cSample, Activations, DenseNet, LossCoeffs, LossStats,
    NetShape, NnError, OptimizerState,
};
use crate::seed;
use crate::stats::quantile_sorted;

const NET_SALT: u64 = 0x6e65_7477;
const ACTOR_SALT: u64 = 0x6163_746f;
const EPISODE_SALT: u64 = 0x6570_6973;
const EVAL_SALT: u64 = 0x6576_616c;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config `{field}`: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Net(#[from] NnError),
    #[error("non-finite loss at env step {step} ({detail}); run aborted")]
    NonFiniteLoss { step: u64, detail: String },
    #[error("non-finite parameters at env step {step}; run aborted")]
    NonFiniteParams { step: u64 },
}

/// Which across-training baseline replaces the binary intra-life bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    None,
    CountBonus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub actor_count: usize,
    pub n_step: usize,
    pub discount: f64,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub total_env_steps: u64,
    pub checkpoint_interval: u64,
    pub use_intrinsic: bool,
    pub use_compass: bool,
    pub reset_policy: ResetPolicy,
    pub mixer: RewardMixer,
    pub baseline: Baseline,
    pub tile_size: u32,
    pub hidden_sizes: Vec<usize>,
    pub layout_seed: u64,
    /// Per-run seed; the harness derives one per (treatment, run index) and
    /// echoes the derived values, so the template value is not serialized.
    #[serde(skip)]
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            actor_count: 16,
            n_step: 5,
            discount: 0.99,
            value_loss_coef: 0.5,
            entropy_coef: 0.01,
            total_env_steps: 150_000,
            checkpoint_interval: 5_000,
            use_intrinsic: true,
            use_compass: true,
            reset_policy: ResetPolicy::PerEpisode,
            mixer: RewardMixer::Weighted { beta: 0.25 },
            baseline: Baseline::None,
            tile_size: 4,
            hidden_sizes: vec![128, 128],
            layout_seed: 0,
            master_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        fn err(field: &'static str, message: impl Into<String>) -> TrainError {
            TrainError::InvalidConfig { field, message: message.into() }
        }
        if self.actor_count < 1 {
            return Err(err("actor_count", "must be >= 1"));
        }
        if self.n_step < 1 {
            return Err(err("n_step", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(err("discount", format!("must lie in [0, 1], got {}", self.discount)));
        }
        if self.checkpoint_interval < 1 {
            return Err(err("checkpoint_interval", "must be >= 1"));
        }
        if self.tile_size < 1 {
            return Err(err("tile_size", "must be >= 1"));
        }
        self.mixer.validate().map_err(|m| err("beta", m))?;
        if self.baseline == Baseline::CountBonus && !self.use_intrinsic {
            return Err(err(
                "baseline",
                "count_bonus replaces the intrinsic bonus and needs use_intrinsic = true",
            ));
        }
        Ok(())
    }

    fn coeffs(&self) -> LossCoeffs {
        LossCoeffs { value_coef: self.value_loss_coef, entropy_coef: self.entropy_coef }
    }

    /// Network input width for an environment under this config.
    pub fn input_dim(&self, spec: &EnvSpec) -> usize {
        let chans = OBS_CHANNELS as usize + usize::from(self.use_compass);
        chans * (spec.room_width * spec.room_height) as usize
    }
}

/// Appends the compass plane of the agent's current room to an environment
/// observation; with the compass disabled the observation passes through
/// unchanged.
pub fn assemble_observation(
    env_obs: &Observation,
    grid: &CuriosityGrid,
    room: u32,
    use_compass: bool,
) -> Observation {
    if !use_compass {
        return env_obs.clone();
    }
    let (w, h) = (env_obs.width(), env_obs.height());
    let mut data = Vec::with_capacity(env_obs.data().len() + (w * h) as usize);
    data.extend_from_slice(env_obs.data());
    data.extend_from_slice(&grid.render_compass(room, w, h));
    Observation::from_parts(w, h, env_obs.channels() + 1, data)
}

/// One training checkpoint. Score fields hold the missing-value marker until
/// every actor has completed at least one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub env_steps: u64,
    pub mean_recent_score: Option<f64>,
    pub median_recent_score: Option<f64>,
    pub intrinsic_per_episode: Option<f64>,
    pub rooms_touched: u32,
    pub tile_coverage: f64,
}

/// Per-run training record. Scores are raw environment points; intrinsic
/// totals are the binary first-touch counts, recorded for every treatment
/// whether or not it trains on them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub label: String,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub episodes_completed: u64,
    pub intrinsic_grand_total: f64,
    /// Largest per-actor cumulative intrinsic total; under the never-reset
    /// policy this is bounded by the tile count.
    pub max_actor_intrinsic_total: f64,
    pub total_tiles: u64,
    pub tiles_per_room: u32,
    /// All-time visited tile bitsets merged across actors, one per room.
    pub ever_words: Vec<Vec<u64>>,
}

impl RunLog {
    pub fn final_checkpoint(&self) -> &Checkpoint {
        self.checkpoints.last().expect("run logs always hold the initial checkpoint")
    }
}

pub struct TrainResult {
    pub log: RunLog,
    pub net: DenseNet,
}

/// Everything observable about one environment transition, for trace-level
/// assertions in tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub actor: usize,
    pub env_step: u64,
    pub raw_reward: f64,
    pub clipped_reward: f64,
    pub intrinsic_binary: f64,
    pub intrinsic_used: f64,
    pub mixed_reward: f64,
    pub life_lost: bool,
    pub terminated: bool,
    pub position: AgentPosition,
}

struct Actor {
    env: GridEnv,
    grid: CuriosityGrid,
    rng: ChaCha8Rng,
    idx: usize,
    episodes: u64,
    episode_score: f64,
    episode_intrinsic: f64,
    last_score: Option<f64>,
    last_intrinsic: Option<f64>,
    cumulative_intrinsic: f64,
    input: Vec<f64>,
}

impl Actor {
    fn episode_seed(&self, run_seed: u64) -> u64 {
        seed::combine(&[run_seed, EPISODE_SALT, self.idx as u64, self.episodes])
    }

    fn refresh_input(&mut self, obs: &Observation, use_compass: bool) {
        let env_len = obs.data().len();
        self.input[..env_len].copy_from_slice(obs.data());
        if use_compass {
            self.grid.compass_into(self.env.position().room, &mut self.input[env_len..]);
        }
    }
}

/// K-actor, n-step transition block feeding one synchronous update. Slot
/// `k * n_step + t` holds actor k's t-th transition of the rollout.
pub struct RolloutBuffer {
    pub actor_count: usize,
    pub n_step: usize,
    pub inputs: Vec<Vec<f64>>,
    pub acts: Vec<Activations>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub terminals: Vec<bool>,
    pub bootstrap: Vec<f64>,
}

impl RolloutBuffer {
    fn new(actor_count: usize, n_step: usize, input_dim: usize, shape: &NetShape) -> RolloutBuffer {
        let slots = actor_count * n_step;
        RolloutBuffer {
            actor_count,
            n_step,
            inputs: vec![vec![0.0; input_dim]; slots],
            acts: vec![Activations::zeros(shape); slots],
            actions: vec![0; slots],
            log_probs: vec![0.0; slots],
            rewards: vec![0.0; slots],
            values: vec![0.0; slots],
            terminals: vec![false; slots],
            bootstrap: vec![0.0; actor_count],
        }
    }

    pub fn len(&self) -> usize {
        self.actor_count * self.n_step
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Discounted n-step returns and advantages. The bootstrap value seeds each
/// actor's chain and terminals break it.
pub fn compute_returns(buffer: &RolloutBuffer, discount: f64) -> (Vec<f64>, Vec<f64>) {
    let mut returns = vec![0.0; buffer.len()];
    let mut advantages = vec![0.0; buffer.len()];
    for k in 0..buffer.actor_count {
        let mut carry = buffer.bootstrap[k];
        for t in (0..buffer.n_step).rev() {
            let i = k * buffer.n_step + t;
            if buffer.terminals[i] {
                carry = 0.0;
            }
            carry = buffer.rewards[i] + discount * carry;
            returns[i] = carry;
            advantages[i] = carry - buffer.values[i];
        }
    }
    (returns, advantages)
}

/// One synchronous gradient step on the batch. The advantage enters the
/// policy term as a constant; the value head trains on the squared return
/// error; entropy is subtracted with its coefficient.
pub fn a2c_update(
    net: &mut DenseNet,
    opt: &mut OptimizerState,
    buffer: &RolloutBuffer,
    returns: &[f64],
    advantages: &[f64],
    coeffs: LossCoeffs,
) -> Result<LossStats, TrainError> {
    let samples: Vec<A2cSample> = (0..buffer.len())
        .map(|i| A2cSample {
            input: &buffer.inputs[i],
            action: buffer.actions[i],
            ret: returns[i],
            advantage: advantages[i],
        })
        .collect();
    let (stats, grad) = net.a2c_backward_with(&samples, &buffer.acts, coeffs);
    if !stats.total.is_finite() {
        return Err(TrainError::NonFiniteLoss { step: 0, detail: format!("{stats:?}") });
    }
    rmsprop_update(net, &grad, opt);
    Ok(stats)
}

/// The training loop driver. Owns the actors, network, optimizer, and the
/// reusable rollout buffer.
pub struct Trainer {
    pub cfg: TrainConfig,
    env_spec: EnvSpec,
    actors: Vec<Actor>,
    pub net: DenseNet,
    pub opt: OptimizerState,
    pub buffer: RolloutBuffer,
    scratch: Activations,
    run_seed: u64,
    steps_done: u64,
    episodes_total: u64,
}

impl Trainer {
    pub fn new(env_spec: &EnvSpec, cfg: &TrainConfig) -> Result<Trainer, TrainError> {
        cfg.validate()?;
        let input_dim = cfg.input_dim(env_spec);
        let shape = NetShape {
            input: input_dim,
            hidden: cfg.hidden_sizes.clone(),
            actions: Action::ALL.len(),
        };
        let run_seed = cfg.master_seed;
        let net = DenseNet::init(shape.clone(), seed::combine(&[run_seed, NET_SALT]));
        let opt = OptimizerState::new(net.param_count());

        let mut actors = Vec::with_capacity(cfg.actor_count);
        for k in 0..cfg.actor_count {
            let env = make_env(env_spec, cfg.layout_seed)?;
            let grid = CuriosityGrid::new(
                env_spec.room_count,
                env_spec.room_width,
                env_spec.room_height,
                cfg.tile_size,
            );
            let mut actor = Actor {
                env,
                grid,
                rng: ChaCha8Rng::seed_from_u64(seed::combine(&[run_seed, ACTOR_SALT, k as u64])),
                idx: k,
                episodes: 0,
                episode_score: 0.0,
                episode_intrinsic: 0.0,
                last_score: None,
                last_intrinsic: None,
                cumulative_intrinsic: 0.0,
                input: vec![0.0; input_dim],
            };
            let obs = actor.env.reset(actor.episode_seed(run_seed));
            actor.refresh_input(&obs, cfg.use_compass);
            actors.push(actor);
        }

        let buffer = RolloutBuffer::new(cfg.actor_count, cfg.n_step, input_dim, &shape);
        Ok(Trainer {
            cfg: cfg.clone(),
            env_spec: env_spec.clone(),
            scratch: Activations::zeros(net.shape()),
            actors,
            net,
            opt,
            buffer,
            run_seed,
            steps_done: 0,
            episodes_total: 0,
        })
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    /// Collects one n-step rollout from every actor. Intrinsic reward comes
    /// from the grid touch at the post-step position; grids honor the reset
    /// policy at life-loss and episode-end events; environments restart
    /// immediately on termination.
    pub fn collect_rollout<F: FnMut(&TransitionRecord)>(&mut self, observer: &mut F) {
        let cfg = &self.cfg;
        for t in 0..cfg.n_step {
            for k in 0..cfg.actor_count {
                let slot = k * cfg.n_step + t;
                let actor = &mut self.actors[k];
                self.buffer.inputs[slot].copy_from_slice(&actor.input);
                self.net.forward_into(&actor.input, &mut self.buffer.acts[slot]);
                let (action_idx, log_prob) =
                    sample_action(&self.buffer.acts[slot].logits, &mut actor.rng);

                let sr = actor
                    .env
                    .step(Action::ALL[action_idx])
                    .expect("trainer stepped a terminated episode");
                let touch = actor.grid.touch(sr.position);
                let binary = if touch.first_since_reset { 1.0 } else { 0.0 };
                let used = match (cfg.baseline, cfg.use_intrinsic) {
                    (Baseline::CountBonus, _) => 1.0 / f64::from(touch.count).sqrt(),
                    (Baseline::None, true) => binary,
                    (Baseline::None, false) => 0.0,
                };
                let mixed = crate::curiosity::mix(sr.raw_reward, used, cfg.mixer);

                actor.episode_score += sr.raw_reward;
                actor.episode_intrinsic += binary;
                actor.cumulative_intrinsic += binary;
                self.steps_done += 1;

                observer(&TransitionRecord {
                    actor: k,
                    env_step: self.steps_done,
                    raw_reward: sr.raw_reward,
                    clipped_reward: crate::curiosity::clip_reward(sr.raw_reward),
                    intrinsic_binary: binary,
                    intrinsic_used: used,
                    mixed_reward: mixed,
                    life_lost: sr.life_lost,
                    terminated: sr.terminated,
                    position: sr.position,
                });

                self.buffer.actions[slot] = action_idx;
                self.buffer.log_probs[slot] = log_prob;
                self.buffer.rewards[slot] = mixed;
                self.buffer.values[slot] = self.buffer.acts[slot].value;
                self.buffer.terminals[slot] = sr.terminated;

                if sr.terminated {
                    actor.last_score = Some(actor.episode_score);
                    actor.last_intrinsic = Some(actor.episode_intrinsic);
                    actor.episode_score = 0.0;
                    actor.episode_intrinsic = 0.0;
                    actor.episodes += 1;
                    self.episodes_total += 1;
                    actor.grid.maybe_reset(cfg.reset_policy, GridEvent::EpisodeEnded);
                    let es = actor.episode_seed(self.run_seed);
                    let obs = actor.env.reset(es);
                    actor.refresh_input(&obs, cfg.use_compass);
                } else {
                    if sr.life_lost {
                        actor.grid.maybe_reset(cfg.reset_policy, GridEvent::LifeLost);
                    }
                    actor.refresh_input(&sr.obs, cfg.use_compass);
                }
            }
        }
        for k in 0..cfg.actor_count {
            self.net.forward_into(&self.actors[k].input, &mut self.scratch);
            self.buffer.bootstrap[k] = self.scratch.value;
        }
    }

    pub fn buffer(&self) -> &RolloutBuffer {
        &self.buffer
    }

    fn checkpoint(&self) -> Checkpoint {
        let mut scores: Vec<f64> = Vec::with_capacity(self.actors.len());
        let mut intrinsics: Vec<f64> = Vec::with_capacity(self.actors.len());
        let mut complete = true;
        for a in &self.actors {
            match (a.last_score, a.last_intrinsic) {
                (Some(s), Some(i)) => {
                    scores.push(s);
                    intrinsics.push(i);
                }
                _ => complete = false,
            }
        }
        let (mean, median, intr) = if complete && !scores.is_empty() {
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let mut sorted = scores.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN score"));
            let median = quantile_sorted(&sorted, 0.5);
            let intr = intrinsics.iter().sum::<f64>() / intrinsics.len() as f64;
            (Some(mean), Some(median), Some(intr))
        } else {
            (None, None, None)
        };
        let (rooms, coverage) = self.merged_coverage();
        Checkpoint {
            env_steps: self.steps_done,
            mean_recent_score: mean,
            median_recent_score: median,
            intrinsic_per_episode: intr,
            rooms_touched: rooms,
            tile_coverage: coverage,
        }
    }

    /// All-time rooms and tile coverage, unioned over the actors' grids.
    fn merged_coverage(&self) -> (u32, f64) {
        let words = self.merged_ever_words();
        let mut rooms = 0u32;
        let mut tiles = 0u64;
        for room in &words {
            let bits: u64 = room.iter().map(|w| u64::from(w.count_ones())).sum();
            if bits > 0 {
                rooms += 1;
            }
            tiles += bits;
        }
        let total = self.actors[0].grid.total_tiles();
        (rooms, tiles as f64 / total as f64)
    }

    fn merged_ever_words(&self) -> Vec<Vec<u64>> {
        let rooms = self.env_spec.room_count as usize;
        let mut merged: Vec<Vec<u64>> = Vec::with_capacity(rooms);
        for room in 0..rooms {
            let mut acc = self.actors[0].grid.ever_words(room as u32);
            for a in &self.actors[1..] {
                for (dst, src) in acc.iter_mut().zip(a.grid.ever_words(room as u32)) {
                    *dst |= src;
                }
            }
            merged.push(acc);
        }
        merged
    }

    fn finish(self, label: String) -> TrainResult {
        let max_actor = self
            .actors
            .iter()
            .map(|a| a.cumulative_intrinsic)
            .fold(0.0f64, f64::max);
        let grand: f64 = self.actors.iter().map(|a| a.cumulative_intrinsic).sum();
        let log = RunLog {
            label,
            seed: self.cfg.master_seed,
            checkpoints: Vec::new(),
            episodes_completed: self.episodes_total,
            intrinsic_grand_total: grand,
            max_actor_intrinsic_total: max_actor,
            total_tiles: self.actors[0].grid.total_tiles(),
            tiles_per_room: self.actors[0].grid.tiles_per_room(),
            ever_words: self.merged_ever_words(),
        };
        TrainResult { log, net: self.net }
    }
}

/// Runs one seeded training run to completion.
pub fn train(env_spec: &EnvSpec, cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    train_observed(env_spec, cfg, |_| {})
}

/// Like [`train`], but calls `observer` for every environment transition.
pub fn train_observed<F: FnMut(&TransitionRecord)>(
    env_spec: &EnvSpec,
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<TrainResult, TrainError> {
    let mut trainer = Trainer::new(env_spec, cfg)?;
    let coeffs = cfg.coeffs();
    let mut checkpoints = vec![trainer.checkpoint()];
    let mut logged_multiple = 0;

    while trainer.steps_done < cfg.total_env_steps {
        trainer.collect_rollout(&mut observer);
        let (returns, advantages) = compute_returns(&trainer.buffer, cfg.discount);
        let stats = a2c_update(
            &mut trainer.net,
            &mut trainer.opt,
            &trainer.buffer,
            &returns,
            &advantages,
            coeffs,
        )
        .map_err(|e| match e {
            TrainError::NonFiniteLoss { detail, .. } => {
                TrainError::NonFiniteLoss { step: trainer.steps_done, detail }
            }
            other => other,
        })?;
        debug_assert!(stats.total.is_finite());

        let multiple = trainer.steps_done / cfg.checkpoint_interval;
        if multiple > logged_multiple {
            logged_multiple = multiple;
            checkpoints.push(trainer.checkpoint());
        }
    }

    if !trainer.net.params_finite() {
        return Err(TrainError::NonFiniteParams { step: trainer.steps_done });
    }
    let mut result = trainer.finish(String::new());
    result.log.checkpoints = checkpoints;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub episode_seed: u64,
    pub score: f64,
    pub intrinsic_total: f64,
}

/// Plays `n_seeds` full episodes with stochastic action sampling on distinct
/// episode seeds. Intrinsic totals are recorded against a per-episode fresh
/// grid but never added to the score.
pub fn evaluate(
    net: &DenseNet,
    env_spec: &EnvSpec,
    n_seeds: u64,
    cfg: &TrainConfig,
) -> Result<Vec<EvalEpisode>, TrainError> {
    let input_dim = cfg.input_dim(env_spec);
    if net.shape().input != input_dim {
        return Err(NnError::ShapeMismatch { expect: input_dim, got: net.shape().input }.into());
    }
    let mut env = make_env(env_spec, cfg.layout_seed)?;
    let mut grid = CuriosityGrid::new(
        env_spec.room_count,
        env_spec.room_width,
        env_spec.room_height,
        cfg.tile_size,
    );
    let mut acts = Activations::zeros(net.shape());
    let mut input = vec![0.0; input_dim];
    let mut episodes = Vec::with_capacity(n_seeds as usize);

    for ep in 0..n_seeds {
        grid.reset();
        let mut rng = ChaCha8Rng::seed_from_u64(seed::combine(&[EVAL_SALT, ep]));
        let mut obs = env.reset(ep);
        let (mut score, mut intrinsic) = (0.0, 0.0);
        loop {
            let env_len = obs.data().len();
            input[..env_len].copy_from_slice(obs.data());
            if cfg.use_compass {
                grid.compass_into(env.position().room, &mut input[env_len..]);
            }
            net.forward_into(&input, &mut acts);
            let (action_idx, _) = sample_action(&acts.logits, &mut rng);
            let sr = env.step(Action::ALL[action_idx]).expect("eval stepped a terminated episode");
            intrinsic += grid.visit(sr.position);
            score += sr.raw_reward;
            if sr.terminated {
                break;
            }
            obs = sr.obs;
        }
        episodes.push(EvalEpisode { episode_seed: ep, score, intrinsic_total: intrinsic });
    }
    Ok(episodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;

    fn buffer_with(rewards: &[f64], values: &[f64], terminals: &[bool], bootstrap: f64) -> RolloutBuffer {
        let n = rewards.len();
        let shape = NetShape { input: 1, hidden: vec![], actions: 2 };
        let mut b = RolloutBuffer::new(1, n, 1, &shape);
        b.rewards = rewards.to_vec();
        b.values = values.to_vec();
        b.terminals = terminals.to_vec();
        b.bootstrap = vec![bootstrap];
        b
    }

    #[test]
    fn zero_discount_returns_are_the_rewards() {
        let b = buffer_with(&[1.0, 2.0, 3.0], &[0.0; 3], &[false; 3], 9.0);
        let (returns, _) = compute_returns(&b, 0.0);
        assert_eq!(returns, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn bootstrap_seeds_a_nonterminal_chain() {
        let b = buffer_with(&[1.0], &[0.5], &[false], 2.0);
        let (returns, advantages) = compute_returns(&b, 0.99);
        assert_eq!(returns, vec![1.0 + 0.99 * 2.0]);
        assert_eq!(advantages, vec![2.98 - 0.5]);
    }

    #[test]
    fn terminals_zero_the_bootstrap_chain() {
        let b = buffer_with(&[1.0, 1.0], &[0.0; 2], &[false, true], 5.0);
        let (returns, _) = compute_returns(&b, 0.5);
        assert_eq!(returns[1], 1.0, "terminal step ignores the bootstrap");
        assert_eq!(returns[0], 1.0 + 0.5 * 1.0);
    }

    #[test]
    fn chains_are_per_actor() {
        let shape = NetShape { input: 1, hidden: vec![], actions: 2 };
        let mut b = RolloutBuffer::new(2, 2, 1, &shape);
        b.rewards = vec![1.0, 1.0, 2.0, 2.0];
        b.values = vec![0.0; 4];
        b.terminals = vec![false; 4];
        b.bootstrap = vec![0.0, 10.0];
        let (returns, _) = compute_returns(&b, 1.0);
        assert_eq!(returns, vec![2.0, 1.0, 14.0, 12.0]);
    }

    #[test]
    fn assemble_appends_exactly_one_compass_plane() {
        let spec = EnvSpec::defaults(EnvKind::HallwayKeyDoor);
        let mut env = crate::env::make_env(&spec, 0).unwrap();
        let obs = env.reset(0);
        let mut grid = CuriosityGrid::new(1, spec.room_width, spec.room_height, 4);

        let plain = assemble_observation(&obs, &grid, 0, false);
        assert_eq!(plain, obs);

        let with = assemble_observation(&obs, &grid, 0, true);
        assert_eq!(with.channels(), obs.channels() + 1);
        let compass = with.channel(with.channels() as usize - 1);
        assert!(compass.iter().all(|&v| v == 0.0), "fresh grid appends zeros");

        grid.visit(AgentPosition { x: 0, y: 0, room: 0 });
        let with = assemble_observation(&obs, &grid, 0, true);
        let compass = with.channel(with.channels() as usize - 1);
        assert!(compass.iter().any(|&v| v == 1.0));
    }

    #[test]
    fn count_bonus_without_intrinsic_is_rejected() {
        let cfg = TrainConfig {
            baseline: Baseline::CountBonus,
            use_intrinsic: false,
            ..TrainConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(TrainError::InvalidConfig { field: "baseline", .. })
        ));
    }

    #[test]
    fn zero_budget_training_logs_only_the_initial_checkpoint() {
        let spec = EnvSpec::defaults(EnvKind::DenseCollect);
        let cfg = TrainConfig {
            actor_count: 2,
            total_env_steps: 0,
            hidden_sizes: vec![8],
            ..TrainConfig::default()
        };
        let result = train(&spec, &cfg).unwrap();
        assert_eq!(result.log.checkpoints.len(), 1);
        let c = &result.log.checkpoints[0];
        assert_eq!(c.env_steps, 0);
        assert_eq!(c.mean_recent_score, None, "missing-value marker before any episode");
        assert_eq!(c.rooms_touched, 0);
    }
}
