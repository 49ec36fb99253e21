//! Built-in scenarios and the example configurations shipped under
//! `scenarios/`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::bandit::{BanditConfig, GateSchedule};
use super::character::{BehaviourSpec, BtNode, CharacterConfig};
use super::receiver::{bpsk_config, build_receiver, ReceiverConfig};
use crate::event::{Event, Trace};
use crate::rng::seeded;

pub const GARAGE_SEED: u64 = 1;
pub const GARAGE_DIALOGUES: usize = 40;
pub const CONTEXT_SWITCH_SEED: u64 = 11;
pub const CONTEXT_SWITCH_LEN: usize = 4000;
/// Stationarity window matching the shipped context-switch trace.
pub const CONTEXT_SWITCH_WINDOW: u64 = 500;

const GARAGE_ALPHABET: [&str; 12] = [
    "approach",
    "out_of_petrol",
    "garage_nearby",
    "thanks",
    "ask_directions",
    "directions",
    "greeting",
    "weather_remark",
    "agree",
    "offer_lift",
    "flat_tyre",
    "offer_help",
];

// (weight, dialogue)
const GARAGE_DIALOGUE_KINDS: [(u32, &[&str]); 6] = [
    (4, &["approach", "out_of_petrol", "garage_nearby", "thanks"]),
    (3, &["approach", "ask_directions", "directions", "thanks"]),
    (2, &["approach", "greeting", "greeting"]),
    (2, &["greeting", "weather_remark", "agree"]),
    (1, &["approach", "out_of_petrol", "offer_lift"]),
    (1, &["approach", "flat_tyre", "offer_help", "thanks"]),
];

fn dialogue(prefix: &str, labels: &[&str]) -> Trace {
    let events = labels
        .iter()
        .enumerate()
        .map(|(i, l)| Event::new(format!("{prefix}e{i}"), i as u64, *l))
        .collect();
    Trace::new(GARAGE_ALPHABET, events).expect("labels come from the alphabet")
}

/// The roadside exchange: A approaches, says they are out of petrol, B
/// replies that there is a garage round the corner. Returns the three-event
/// trace (ids `approach`, `petrol`, `reply`) and a synthetic corpus of
/// roadside dialogues.
pub fn garage_scenario() -> (Trace, Vec<Trace>) {
    let trace = Trace::new(
        GARAGE_ALPHABET,
        vec![
            Event::new("approach", 0, "approach").with_agent("A"),
            Event::new("petrol", 1, "out_of_petrol").with_agent("A"),
            Event::new("reply", 2, "garage_nearby").with_agent("B"),
        ],
    )
    .expect("fixed trace is valid")
    .with_metadata("garage", None);

    let total: u32 = GARAGE_DIALOGUE_KINDS.iter().map(|(w, _)| w).sum();
    let mut rng = seeded(GARAGE_SEED);
    let corpus = (0..GARAGE_DIALOGUES)
        .map(|d| {
            let mut pick = rng.random_range(0..total);
            let (_, labels) = GARAGE_DIALOGUE_KINDS
                .iter()
                .find(|(w, _)| {
                    if pick < *w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .expect("pick below total weight");
            dialogue(&format!("d{d}"), labels).with_metadata("garage_corpus", Some(GARAGE_SEED))
        })
        .collect();
    (trace, corpus)
}

fn symbol_trace(name: &str, seed: u64, labels: Vec<&'static str>, alphabet: &[&str]) -> Trace {
    let events = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| Event::new(format!("e{i}"), i as u64, l))
        .collect();
    Trace::new(alphabet.iter().copied(), events)
        .expect("generated labels are in the alphabet")
        .with_metadata(name, Some(seed))
}

const SYMBOLS: [&str; 4] = ["a", "b", "c", "d"];

/// Uniform over four symbols for the first half, then uniform over two: the
/// set of possible symbols halves mid-trace.
pub fn context_switch_scenario(seed: u64, len: usize) -> Trace {
    let mut rng = seeded(seed);
    let labels = (0..len)
        .map(|i| {
            let n = if i < len / 2 { 4 } else { 2 };
            SYMBOLS[rng.random_range(0..n)]
        })
        .collect();
    symbol_trace("context_switch", seed, labels, &SYMBOLS)
}

/// I.i.d. uniform symbols over the same four-letter alphabet.
pub fn iid_trace(seed: u64, len: usize) -> Trace {
    let mut rng = seeded(seed);
    let labels = (0..len).map(|_| SYMBOLS[rng.random_range(0..4)]).collect();
    symbol_trace("iid", seed, labels, &SYMBOLS)
}

/// BPSK at 4 dB with eight samples per symbol.
pub fn default_receiver() -> ReceiverConfig {
    bpsk_config(8, 4.0)
}

/// Four symbols on Walsh pulses where `b` may never follow `a`.
pub fn constrained_receiver() -> ReceiverConfig {
    let alphabet: Vec<String> = SYMBOLS.map(String::from).to_vec();
    let mut transitions = BTreeMap::new();
    transitions.insert("a".to_string(), vec!["a".into(), "c".into(), "d".into()]);
    for s in ["b", "c", "d"] {
        transitions.insert(s.to_string(), alphabet.clone());
    }
    ReceiverConfig {
        alphabet,
        templates: vec![
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, -1.0, 1.0, -1.0],
            vec![1.0, 1.0, -1.0, -1.0],
            vec![1.0, -1.0, -1.0, 1.0],
        ],
        transitions,
        initial: None,
        noise_var: 1.0,
        samples_per_symbol: 4,
    }
}

fn play(b: &str) -> BtNode {
    BtNode::Play {
        behaviour: b.into(),
    }
}

fn cond(c: &str) -> BtNode {
    BtNode::Condition { name: c.into() }
}

fn behaviour(name: &str, pose: &str, velocity: [f64; 2], yaw_rate: f64) -> BehaviourSpec {
    BehaviourSpec {
        name: name.into(),
        pose: pose.into(),
        velocity,
        yaw_rate,
    }
}

/// Flee when threatened, rest when tired, otherwise idle about at random.
/// Running is only reachable from walking.
pub fn default_character() -> CharacterConfig {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut transitions = BTreeMap::new();
    transitions.insert("idle".to_string(), s(&["walk", "sit"]));
    transitions.insert("walk".to_string(), s(&["idle", "run"]));
    transitions.insert("run".to_string(), s(&["walk"]));
    transitions.insert("sit".to_string(), s(&["idle"]));
    CharacterConfig {
        poses: s(&["idle", "walk", "run", "sit"]),
        initial_pose: "idle".into(),
        transitions,
        conditions: s(&["threat", "tired"]),
        behaviours: vec![
            behaviour("flee", "run", [2.0, 0.0], 0.0),
            behaviour("hurry", "walk", [1.0, 0.0], 0.0),
            behaviour("rest", "sit", [0.0, 0.0], 0.0),
            behaviour("wander", "walk", [1.0, 0.0], 0.1),
            behaviour("look_around", "idle", [0.0, 0.0], 0.25),
            behaviour("stand", "idle", [0.0, 0.0], 0.0),
        ],
        tree: BtNode::Selector {
            children: vec![
                BtNode::Sequence {
                    children: vec![
                        cond("threat"),
                        BtNode::Selector {
                            children: vec![play("flee"), play("hurry")],
                        },
                    ],
                },
                BtNode::Sequence {
                    children: vec![cond("tired"), play("rest")],
                },
                BtNode::RandomSelect {
                    children: vec![play("wander"), play("look_around"), play("stand")],
                },
            ],
        },
    }
}

/// The two-armed deterministic bandit with the gate closing half way.
pub fn default_bandit() -> BanditConfig {
    BanditConfig {
        payouts: vec![1.0, 0.0],
        learning_rate: 0.1,
        episodes: 500,
        gate: GateSchedule::Until { episode: 250 },
        epsilon: 0.1,
        payout_noise: 0.0,
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("scenario types serialise");
    s.push('\n');
    s
}

/// Every generated file under `scenarios/`, as `(file name, contents)`.
pub fn shipped_files() -> Vec<(&'static str, String)> {
    let (garage, corpus) = garage_scenario();
    let receiver_net = build_receiver(&default_receiver()).expect("default receiver is valid");
    vec![
        ("garage_trace.json", pretty(&garage)),
        ("garage_corpus.json", pretty(&corpus)),
        (
            "context_switch.json",
            pretty(&[context_switch_scenario(CONTEXT_SWITCH_SEED, CONTEXT_SWITCH_LEN)]),
        ),
        ("iid_control.json", pretty(&[iid_trace(CONTEXT_SWITCH_SEED, CONTEXT_SWITCH_LEN)])),
        ("receiver_bpsk.json", pretty(&default_receiver())),
        ("receiver_constrained.json", pretty(&constrained_receiver())),
        ("receiver_network.json", pretty(&receiver_net)),
        ("character.json", pretty(&default_character())),
        ("bandit.json", pretty(&default_bandit())),
    ]
}
