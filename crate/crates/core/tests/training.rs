//! Trainer-level integration tests: reproducibility, reward-stream wiring,
//! and the rollout/update contracts.

use curiogrid::agent::{
    a2c_update, compute_returns, evaluate, train, train_observed, TrainConfig, Trainer,
};
use curiogrid::curiosity::RewardMixer;
use curiogrid::env::{EnvKind, EnvSpec};
use curiogrid::nn::LossCoeffs;

fn small_cfg() -> TrainConfig {
    TrainConfig {
        actor_count: 4,
        total_env_steps: 4_000,
        checkpoint_interval: 1_000,
        hidden_sizes: vec![24],
        master_seed: 11,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_bit_reproducible() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = small_cfg();
    let a = train(&spec, &cfg).unwrap();
    let b = train(&spec, &cfg).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.net.params(), b.net.params());

    let c = train(&spec, &TrainConfig { master_seed: 12, ..cfg }).unwrap();
    assert_ne!(a.net.params(), c.net.params());
}

#[test]
fn beta_one_reward_stream_equals_clipped_raw_stream() {
    // with full weight on the game reward, the mixed stream must equal the
    // clipped raw stream bit for bit, whether or not the bonus is computed
    let spec = EnvSpec::defaults(EnvKind::HallwayKeyDoor);
    for seed in [1u64, 2] {
        let mut streams: Vec<Vec<(f64, f64)>> = Vec::new();
        for use_intrinsic in [true, false] {
            let cfg = TrainConfig {
                mixer: RewardMixer::Weighted { beta: 1.0 },
                use_intrinsic,
                total_env_steps: 3_000,
                actor_count: 4,
                hidden_sizes: vec![16],
                master_seed: seed,
                ..TrainConfig::default()
            };
            let mut stream = Vec::new();
            train_observed(&spec, &cfg, |r| {
                assert_eq!(r.mixed_reward, r.clipped_reward);
                stream.push((r.raw_reward, r.mixed_reward));
            })
            .unwrap();
            streams.push(stream);
        }
        assert_eq!(streams[0], streams[1], "seed {seed}: traces must be identical");
    }
}

#[test]
fn intrinsic_disabled_controls_train_on_zero_bonus() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig {
        use_intrinsic: false,
        use_compass: false,
        total_env_steps: 2_000,
        actor_count: 2,
        hidden_sizes: vec![16],
        ..TrainConfig::default()
    };
    train_observed(&spec, &cfg, |r| {
        assert_eq!(r.intrinsic_used, 0.0);
        assert!(r.intrinsic_binary == 0.0 || r.intrinsic_binary == 1.0, "still recorded");
    })
    .unwrap();
}

#[test]
fn episode_raw_sums_match_reported_scores() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig {
        actor_count: 1,
        total_env_steps: 3_000,
        checkpoint_interval: 3_000,
        hidden_sizes: vec![16],
        master_seed: 5,
        ..TrainConfig::default()
    };
    let mut running = 0.0;
    let mut last_completed = None;
    let result = train_observed(&spec, &cfg, |r| {
        running += r.raw_reward;
        if r.terminated {
            last_completed = Some(running);
            running = 0.0;
        }
    })
    .unwrap();
    let final_cp = result.log.final_checkpoint();
    assert_eq!(final_cp.mean_recent_score, last_completed);
}

#[test]
fn rollout_buffer_holds_actor_count_times_n_step_transitions() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig { hidden_sizes: vec![8], ..TrainConfig::default() };
    let mut trainer = Trainer::new(&spec, &cfg).unwrap();
    trainer.collect_rollout(&mut |_| {});
    assert_eq!(trainer.buffer().len(), 16 * 5);
    assert_eq!(trainer.buffer().len(), 80);
}

#[test]
fn an_update_reduces_the_loss_it_was_computed_from() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig {
        actor_count: 2,
        hidden_sizes: vec![12],
        master_seed: 3,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&spec, &cfg).unwrap();
    trainer.collect_rollout(&mut |_| {});
    let (returns, advantages) = compute_returns(trainer.buffer(), cfg.discount);
    let coeffs = LossCoeffs { value_coef: 0.5, entropy_coef: 0.01 };

    let samples: Vec<curiogrid::nn::A2cSample> = (0..trainer.buffer().len())
        .map(|i| curiogrid::nn::A2cSample {
            input: &trainer.buffer().inputs[i],
            action: trainer.buffer().actions[i],
            ret: returns[i],
            advantage: advantages[i],
        })
        .collect();
    let before = trainer.net.a2c_loss(&samples, coeffs).total;

    trainer.opt.learning_rate = 1e-5;
    a2c_update(&mut trainer.net, &mut trainer.opt, &trainer.buffer, &returns, &advantages, coeffs)
        .unwrap();

    let samples: Vec<curiogrid::nn::A2cSample> = (0..trainer.buffer.len())
        .map(|i| curiogrid::nn::A2cSample {
            input: &trainer.buffer.inputs[i],
            action: trainer.buffer.actions[i],
            ret: returns[i],
            advantage: advantages[i],
        })
        .collect();
    let after = trainer.net.a2c_loss(&samples, coeffs).total;
    assert!(after < before, "loss should fall: {before} -> {after}");
}

#[test]
fn non_finite_parameters_abort_the_update() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig { actor_count: 2, hidden_sizes: vec![8], ..TrainConfig::default() };
    let mut trainer = Trainer::new(&spec, &cfg).unwrap();
    let mut poisoned = trainer.net.params().to_vec();
    poisoned[0] = f64::NAN;
    trainer.net.set_params(poisoned).unwrap();
    trainer.collect_rollout(&mut |_| {});
    let (returns, advantages) = compute_returns(trainer.buffer(), cfg.discount);
    let coeffs = LossCoeffs { value_coef: 0.5, entropy_coef: 0.01 };
    let err =
        a2c_update(&mut trainer.net, &mut trainer.opt, &trainer.buffer, &returns, &advantages, coeffs);
    assert!(matches!(err, Err(curiogrid::agent::TrainError::NonFiniteLoss { .. })));
}

#[test]
fn evaluation_is_seed_deterministic_and_counts_episodes() {
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig { hidden_sizes: vec![12], master_seed: 9, total_env_steps: 1_000, actor_count: 2, ..TrainConfig::default() };
    let result = train(&spec, &cfg).unwrap();
    let a = evaluate(&result.net, &spec, 20, &cfg).unwrap();
    let b = evaluate(&result.net, &spec, 20, &cfg).unwrap();
    assert_eq!(a.len(), 20);
    assert_eq!(a, b);
    assert!(a.iter().all(|e| e.intrinsic_total >= 0.0));
}

#[test]
fn grid_resets_once_per_episode_under_the_default_policy() {
    // between consecutive episode ends, each tile pays at most once
    let spec = EnvSpec::defaults(EnvKind::DenseCollect);
    let cfg = TrainConfig {
        actor_count: 1,
        total_env_steps: 3_000,
        hidden_sizes: vec![12],
        tile_size: 4,
        master_seed: 21,
        ..TrainConfig::default()
    };
    let tiles = 20.0; // 20x16 room, tile size 4
    let mut episode_total = 0.0;
    train_observed(&spec, &cfg, |r| {
        episode_total += r.intrinsic_binary;
        if r.life_lost && !r.terminated {
            // per-episode policy: life loss must NOT refresh the bonus;
            // nothing to assert here beyond the cap below holding through it
        }
        if r.terminated {
            assert!(episode_total <= tiles, "episode bonus {episode_total} > {tiles}");
            episode_total = 0.0;
        }
    })
    .unwrap();
}
