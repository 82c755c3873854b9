// Dev pilot: time one full run and print its curve.
use curiogrid::agent::{Baseline, TrainConfig};
use curiogrid::curiosity::{ResetPolicy, RewardMixer};
use curiogrid::env::{EnvKind, EnvSpec};
use rand_chacha;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = match args.get(1).map(String::as_str) {
        Some("rooms") => EnvKind::MultiRoomWorld,
        Some("dense") => EnvKind::DenseCollect,
        Some("cross") => EnvKind::CrossMaze,
        _ => EnvKind::HallwayKeyDoor,
    };
    let treatment = args.get(2).cloned().unwrap_or_else(|| "curiosity".into());
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let steps: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(150_000);

    let mut spec = EnvSpec::defaults(kind);
    if let Some(d) = args.get(5).and_then(|s| s.parse().ok()) {
        spec.hazard_density = d;
    }
    if let Some(c) = args.get(6).and_then(|s| s.parse().ok()) {
        spec.max_episode_steps = c;
    }
    let mut cfg = TrainConfig { total_env_steps: steps, master_seed: seed, ..TrainConfig::default() };
    if let Some(h) = args.get(7) {
        cfg.hidden_sizes = h.split('x').map(|v| v.parse().unwrap()).collect();
    }
    if let Some(t) = args.get(8).and_then(|s| s.parse().ok()) {
        cfg.tile_size = t;
    }
    match treatment.as_str() {
        "curiosity" => {}
        "a2c_only" => {
            cfg.use_intrinsic = false;
            cfg.use_compass = false;
            cfg.mixer = RewardMixer::Weighted { beta: 1.0 };
        }
        "no_grid" => cfg.use_compass = false,
        "no_intrinsic" => {
            cfg.use_intrinsic = false;
            cfg.mixer = RewardMixer::Weighted { beta: 1.0 };
        }
        "never" => cfg.reset_policy = ResetPolicy::Never,
        "per_life" => cfg.reset_policy = ResetPolicy::PerLife,
        "count_bonus" => cfg.baseline = Baseline::CountBonus,
        "untuned" => cfg.mixer = RewardMixer::UntunedClip,
        "untuned_no_grid" => {
            cfg.mixer = RewardMixer::UntunedClip;
            cfg.use_compass = false;
        }
        other => panic!("unknown treatment {other}"),
    }

    let t0 = std::time::Instant::now();
    let window = 25_000u64;
    let mut events = vec![[0u64; 3]];
    let result = curiogrid::agent::train_observed(&spec, &cfg, |r| {
        let w = (r.env_step / window) as usize;
        if events.len() <= w { events.resize(w + 1, [0; 3]); }
        if r.raw_reward >= 1000.0 { events[w][2] += 1; }
        else if r.raw_reward >= 300.0 { events[w][1] += 1; }
        else if r.raw_reward >= 100.0 { events[w][0] += 1; }
    }).expect("run");
    let dt = t0.elapsed();
    println!("# events per 25k window [key,door,treasure]: {:?}", events);
    // trace evaluation episodes
    let eps = curiogrid::agent::evaluate(&result.net, &spec, 20, &cfg).unwrap();
    let wins = eps.iter().filter(|e| e.score >= 400.0).count();
    let keys = eps.iter().filter(|e| e.score >= 100.0).count();
    println!("# eval20: wins(>=400)={wins} keyed(>=100)={keys} scores={:?}",
        eps.iter().map(|e| e.score as i64).collect::<Vec<_>>());
    {
        use curiogrid::nn::{softmax, entropy};
        use curiogrid::env::make_env;
        let mut env = make_env(&spec, cfg.layout_seed).unwrap();
        let mut grid = curiogrid::curiosity::CuriosityGrid::new(spec.room_count, spec.room_width, spec.room_height, cfg.tile_size);
        let obs = env.reset(0);
        let asm = curiogrid::agent::assemble_observation(&obs, &grid, 0, cfg.use_compass);
        let (logits, v) = result.net.forward(asm.data()).unwrap();
        println!("# spawn policy probs={:?} H={:.3} V={:.3}", softmax(&logits).iter().map(|p| (p*100.0).round()/100.0).collect::<Vec<_>>(), entropy(&logits), v);
        // one stochastic rollout, report the x-frontier over time
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(123);
        let mut maxx = 0;
        let mut input = asm.data().to_vec();
        let mut hist = vec![0u32; spec.room_width as usize];
        loop {
            let (logits, _) = result.net.forward(&input).unwrap();
            let (a, _) = curiogrid::nn::sample_action(&logits, &mut rng);
            let sr = env.step(curiogrid::env::Action::ALL[a]).unwrap();
            grid.visit(sr.position);
            maxx = maxx.max(sr.position.x);
            hist[sr.position.x as usize] += 1;
            if sr.terminated { break; }
            let asm = curiogrid::agent::assemble_observation(&sr.obs, &grid, sr.position.room, cfg.use_compass);
            input = asm.data().to_vec();
        }
        println!("# rollout max_x={maxx} x-occupancy={:?}", hist);
    }
    println!("# {kind:?} {treatment} seed={seed} steps={steps} wall={:.1}s", dt.as_secs_f64());
    println!("# episodes={} grand_intrinsic={}", result.log.episodes_completed, result.log.intrinsic_grand_total);
    for c in &result.log.checkpoints {
        println!(
            "{:>7} mean={:>8} median={:>8} intr={:>7} rooms={} cover={:.3}",
            c.env_steps,
            c.mean_recent_score.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
            c.median_recent_score.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
            c.intrinsic_per_episode.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
            c.rooms_touched,
            c.tile_coverage,
        );
    }
}
