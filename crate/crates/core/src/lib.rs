//! A desk-scale reinforcement-learning exploration lab built around
//! intra-life novelty: reward an agent for touching tiles it has not visited
//! yet *this episode*, wipe the slate at episode boundaries, and measure what
//! that does to sparse- and dense-reward gridworlds under a synchronous
//! advantage actor-critic trainer.
//!
//! The crate is organized by subsystem:
//! * [`env`] — seedable gridworld environments with ground-truth positions.
//! * [`curiosity`] — visited-tile grids, the binary bonus, reset policies,
//!   reward mixing, and the compass observation plane.
//! * [`nn`] — a dense policy/value network with hand-derived gradients.
//! * [`agent`] — the synchronous actor-critic trainer and evaluation.
//! * [`stats`] — Mann-Whitney U testing and curve aggregation.
//! * [`harness`] — config parsing, experiment orchestration, CSV reports.

pub mod agent;
pub mod curiosity;
pub mod env;
pub mod harness;
pub mod nn;
pub mod seed;
pub mod stats;

pub use agent::{evaluate, train, Baseline, Checkpoint, RunLog, TrainConfig, TrainError};
pub use curiosity::{
    clip_reward, mix, tile_of, CuriosityGrid, GridEvent, ResetPolicy, RewardMixer,
};
pub use env::{
    make_env, Action, AgentPosition, EnvError, EnvKind, EnvSpec, GridEnv, Observation, RewardTable,
    StepResult,
};
pub use nn::{DenseNet, NetShape, OptimizerState};
pub use stats::{mann_whitney_u, summarize_curves, CurveSummary, ScoreSeries};
