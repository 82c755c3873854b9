//! Microbenchmarks of the training hot paths: environment stepping, network
//! forward/backward, rollout collection plus update, and the rank test.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curiogrid::agent::{a2c_update, compute_returns, TrainConfig, Trainer};
use curiogrid::env::{make_env, Action, EnvKind, EnvSpec};
use curiogrid::nn::{A2cSample, DenseNet, LossCoeffs, NetShape};
use curiogrid::stats::mann_whitney_u;

fn env_step(c: &mut Criterion) {
    let spec = EnvSpec::defaults(EnvKind::HallwayKeyDoor);
    let mut env = make_env(&spec, 0).unwrap();
    env.reset(0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("env_step_hallway", |b| {
        b.iter(|| {
            if env.terminated() {
                env.reset(rng.gen());
            }
            env.step(Action::ALL[rng.gen_range(0..6)]).unwrap()
        })
    });
}

fn forward_backward(c: &mut Criterion) {
    let spec = EnvSpec::defaults(EnvKind::HallwayKeyDoor);
    let cfg = TrainConfig::default();
    let input_dim = cfg.input_dim(&spec);
    let net = DenseNet::init(
        NetShape { input: input_dim, hidden: cfg.hidden_sizes.clone(), actions: 6 },
        7,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let obs: Vec<f64> = (0..input_dim)
        .map(|_| if rng.gen::<f64>() < 0.8 { 0.0 } else { rng.gen() })
        .collect();

    c.bench_function("forward_default_net", |b| b.iter(|| net.forward(&obs).unwrap()));

    let batch: Vec<Vec<f64>> = (0..80)
        .map(|_| {
            (0..input_dim).map(|_| if rng.gen::<f64>() < 0.8 { 0.0 } else { rng.gen() }).collect()
        })
        .collect();
    let samples: Vec<A2cSample> = batch
        .iter()
        .map(|x| A2cSample { input: x, action: 1, ret: 0.5, advantage: 0.25 })
        .collect();
    let coeffs = LossCoeffs { value_coef: 0.5, entropy_coef: 0.01 };
    c.bench_function("backward_80_transitions", |b| {
        b.iter(|| net.a2c_backward(&samples, coeffs))
    });
}

fn rollout_and_update(c: &mut Criterion) {
    let spec = EnvSpec::defaults(EnvKind::HallwayKeyDoor);
    let cfg = TrainConfig::default();
    let coeffs = LossCoeffs { value_coef: cfg.value_loss_coef, entropy_coef: cfg.entropy_coef };
    c.bench_function("rollout_plus_update_16x5", |b| {
        b.iter_batched(
            || Trainer::new(&spec, &cfg).unwrap(),
            |mut trainer| {
                trainer.collect_rollout(&mut |_| {});
                let (returns, advantages) = compute_returns(&trainer.buffer, cfg.discount);
                a2c_update(
                    &mut trainer.net,
                    &mut trainer.opt,
                    &trainer.buffer,
                    &returns,
                    &advantages,
                    coeffs,
                )
                .unwrap()
            },
            BatchSize::LargeInput,
        )
    });
}

fn rank_test(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<f64> = (0..15).map(|_| rng.gen::<f64>() * 100.0).collect();
    let b: Vec<f64> = (0..15).map(|_| rng.gen::<f64>() * 100.0 + 10.0).collect();
    c.bench_function("mann_whitney_15v15", |bch| {
        bch.iter(|| mann_whitney_u(&a, &b).unwrap())
    });
    let small_a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let small_b = [3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5];
    c.bench_function("mann_whitney_exact_7v7", |bch| {
        bch.iter(|| mann_whitney_u(&small_a, &small_b).unwrap())
    });
}

criterion_group!(benches, env_step, forward_backward, rollout_and_update, rank_test);
criterion_main!(benches);
