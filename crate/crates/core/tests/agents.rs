use std::collections::BTreeMap;

use matic_core::agents::scenarios::{constrained_receiver, default_bandit, default_character};
use matic_core::agents::{
    bandit, build_bandit, build_character, build_receiver, run_bandit, Character, GateSchedule,
    Receiver,
};
use matic_core::gcm::{MetabolicFn, Signal};
use matic_core::net::Network;
use matic_core::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noiseless_receiver_is_identity(len in 0usize..10_000, seed in any::<u64>()) {
        let mut cfg = constrained_receiver();
        cfg.noise_var = 0.0;
        let rx = Receiver::new(cfg).unwrap();
        let msg = rx.random_message(len, &mut seeded(seed));
        let decoded = rx.decode(&rx.modulate(&msg)).unwrap();
        prop_assert_eq!(decoded, msg);
    }

    #[test]
    fn character_respects_mask(seed in any::<u64>(), p in 0.0f64..1.0) {
        let ch = Character::new(default_character()).unwrap();
        let k = ch.config().conditions.len();
        let mut rng = seeded(seed ^ 0x5555);
        let rows: Vec<Vec<bool>> = (0..500).map(|_| (0..k).map(|_| rng.random_bool(p)).collect()).collect();
        let frames = ch.run(&rows, seed).unwrap();
        let mut prev = ch.config().initial_pose.clone();
        for f in &frames {
            prop_assert!(ch.allows(&prev, &f.pose), "{} -> {}", prev, f.pose);
            prop_assert!((f.rotation_norm() - 1.0).abs() < 1e-9);
            prev = f.pose.clone();
        }
    }
}

/// A serialised network re-loaded from JSON runs identically, so nothing is
/// hidden outside the module and network types.
fn roundtrip(net: &Network) -> Network {
    serde_json::from_str(&serde_json::to_string(net).unwrap()).unwrap()
}

#[test]
fn receiver_is_plain_network_data() {
    let cfg = constrained_receiver();
    let net = build_receiver(&cfg).unwrap();
    assert!(net
        .node_ids()
        .iter()
        .all(|id| *net.node(id).unwrap().metabolic() == MetabolicFn::Frozen));
    let rx = Receiver::new(cfg).unwrap();
    let mut rng = seeded(1);
    let msg = rx.random_message(300, &mut rng);
    let mut rows = rx.modulate(&msg);
    rx.channel(&mut rows, &mut rng);
    let copy = roundtrip(&net);
    let mut a = net.runner().unwrap();
    let mut b = copy.runner().unwrap();
    for row in &rows {
        let prev = [1.0];
        assert_eq!(a.step(&[row, &prev]).unwrap(), b.step(&[row, &prev]).unwrap());
    }
}

#[test]
fn character_network_runs_through_generic_run() {
    let cfg = default_character();
    let net = build_character(&cfg).unwrap();
    let copy = roundtrip(&net);
    let mut inputs = BTreeMap::new();
    inputs.insert("conditions".to_string(), Signal::constant(vec![0.0, 1.0], 5).unwrap());
    let random_dim = net.inputs().iter().find(|d| d.name == "random").unwrap().dim;
    inputs.insert("random".to_string(), Signal::constant(vec![0.0; random_dim], 5).unwrap());
    inputs.insert("pose".to_string(), Signal::constant(vec![1.0], 5).unwrap());
    let out = net.run(&inputs, 5).unwrap();
    assert_eq!(out, copy.run(&inputs, 5).unwrap());
    // tired and idle: rest is chosen, pose is sit (index 3, code 4)
    let rest = cfg.behaviours.iter().position(|b| b.name == "rest").unwrap();
    assert!(out["tree"].scalars().iter().all(|&v| v == (rest + 1) as f64));
    assert!(out["pose_out"].scalars().iter().all(|&v| v == 4.0));
}

#[test]
fn bandit_is_a_single_gated_module() {
    let cfg = default_bandit();
    let g = build_bandit(&cfg).unwrap();
    assert!(matches!(g.metabolic(), MetabolicFn::GatedRewardUpdate { .. }));
    let back: matic_core::gcm::Gcm = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(back.transfer(), g.transfer());
}

#[test]
fn bandit_gate_semantics() {
    let mut cfg = default_bandit();
    cfg.gate = GateSchedule::Never;
    let initial = build_bandit(&cfg).unwrap().transfer().fingerprint();
    for seed in 0..10 {
        let run = run_bandit(&cfg, seed).unwrap();
        assert_eq!(run.module.transfer().fingerprint(), initial);
    }
    cfg.gate = GateSchedule::Until { episode: 250 };
    for seed in 0..10 {
        let run = run_bandit(&cfg, seed).unwrap();
        assert!(run.snapshots[249..].iter().all(|s| *s == run.snapshots[249]));
    }
    cfg.gate = GateSchedule::Always;
    assert!(bandit::convergence_rate(&cfg, 7, 100, 0).unwrap() >= 0.95);
}

#[test]
fn seeded_runs_repeat() {
    let a = run_bandit(&default_bandit(), 5).unwrap();
    let b = run_bandit(&default_bandit(), 5).unwrap();
    assert_eq!(a.history, b.history);
    let rx = Receiver::new(constrained_receiver()).unwrap();
    assert_eq!(rx.simulate(500, 3).unwrap(), rx.simulate(500, 3).unwrap());
}
