//! Game character: a behaviour tree over an animation state machine.
//!
//! The tree is compiled into one [`TransferFn::BinaryRuleTable`] whose input
//! bits are the condition vector, one "blocked" line per pose and the random
//! bits consumed by `random_select` nodes. The output is the code of the
//! behaviour that claims the tick (`0` when none does).
//!
//! Network nodes:
//!
//! * `blocked_k` fires when pose `k` cannot be entered from the current pose.
//!   These lines are the transition mask.
//! * `tree` is the compiled rule table.
//! * `pose_k` emits `k + 1` when the chosen behaviour uses pose `k`, and is
//!   inhibited by `blocked_k`.
//! * `pose` sums the `pose_k` outputs.
//!
//! Staying in the current pose is always allowed.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{config_err, edge, Result};
use crate::gcm::{Gcm, PortKind, Ports, TransferFn};
use crate::net::{InputDecl, Network};
use crate::rng::seeded;

pub const CONDITIONS_INPUT: &str = "conditions";
pub const RANDOM_INPUT: &str = "random";
pub const POSE_INPUT: &str = "pose";
pub const TREE_NODE: &str = "tree";
pub const POSE_NODE: &str = "pose_out";

/// Rule-table inputs are capped well below the module limit to keep the
/// table small.
pub const MAX_TREE_INPUTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BtNode {
    /// Succeeds when the named condition bit is set.
    Condition { name: String },
    /// Runs children in order; fails on the first failure.
    Sequence { children: Vec<BtNode> },
    /// First child that succeeds.
    Selector { children: Vec<BtNode> },
    /// Like a selector, starting from a random child and wrapping around.
    RandomSelect { children: Vec<BtNode> },
    /// Plays a behaviour if its pose is reachable. Claims the tick.
    Play { behaviour: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviourSpec {
    pub name: String,
    pub pose: String,
    /// Displacement per tick in the character's own frame.
    #[serde(default)]
    pub velocity: [f64; 2],
    /// Heading change per tick, radians.
    #[serde(default)]
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterConfig {
    pub poses: Vec<String>,
    pub initial_pose: String,
    /// Poses reachable from each pose.
    pub transitions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub conditions: Vec<String>,
    pub behaviours: Vec<BehaviourSpec>,
    pub tree: BtNode,
}

/// One tick of character output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub tick: usize,
    pub pose: String,
    pub position: [f64; 2],
    /// Root rotation `(w, x, y, z)` about the vertical axis.
    pub rotation: [f64; 4],
    pub behaviour: Option<String>,
}

impl PoseFrame {
    pub fn rotation_norm(&self) -> f64 {
        self.rotation.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Where each `random_select` node finds its random bits.
#[derive(Debug, Clone, Copy)]
struct RandomSlot {
    offset: usize,
    width: usize,
}

struct Compiled {
    pose_index: BTreeMap<String, usize>,
    behaviour_pose: Vec<usize>,
    condition_index: BTreeMap<String, usize>,
    random_slots: Vec<RandomSlot>,
    random_bits: usize,
}

impl CharacterConfig {
    fn compile(&self) -> Result<Compiled> {
        let pose_index: BTreeMap<String, usize> = self
            .poses
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        if self.poses.is_empty() {
            return config_err("character has no poses");
        }
        if pose_index.len() != self.poses.len() {
            return config_err("duplicate pose ids");
        }
        if !pose_index.contains_key(&self.initial_pose) {
            return config_err(format!("initial pose `{}` is not declared", self.initial_pose));
        }
        for (from, to) in &self.transitions {
            if !pose_index.contains_key(from) {
                return config_err(format!("transition from undeclared pose `{from}`"));
            }
            if let Some(bad) = to.iter().find(|p| !pose_index.contains_key(*p)) {
                return config_err(format!("transition to undeclared pose `{bad}`"));
            }
        }
        let condition_index: BTreeMap<String, usize> = self
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        if condition_index.len() != self.conditions.len() {
            return config_err("duplicate condition names");
        }
        let mut names = BTreeSet::new();
        let mut behaviour_pose = Vec::new();
        for b in &self.behaviours {
            if !names.insert(b.name.as_str()) {
                return config_err(format!("duplicate behaviour `{}`", b.name));
            }
            let Some(&p) = pose_index.get(&b.pose) else {
                return config_err(format!("behaviour `{}` uses undeclared pose `{}`", b.name, b.pose));
            };
            if !b.velocity.iter().all(|v| v.is_finite()) || !b.yaw_rate.is_finite() {
                return config_err(format!("behaviour `{}` has non-finite motion", b.name));
            }
            behaviour_pose.push(p);
        }
        let mut random_slots = Vec::new();
        let mut random_bits = 0;
        self.check_node(&self.tree, &names, &condition_index, &mut random_slots, &mut random_bits)?;
        let arity = self.conditions.len() + self.poses.len() + random_bits;
        if arity > MAX_TREE_INPUTS {
            return config_err(format!(
                "behaviour tree needs {arity} input bits, at most {MAX_TREE_INPUTS} supported"
            ));
        }
        Ok(Compiled {
            pose_index,
            behaviour_pose,
            condition_index,
            random_slots,
            random_bits,
        })
    }

    fn check_node(
        &self,
        node: &BtNode,
        behaviours: &BTreeSet<&str>,
        conditions: &BTreeMap<String, usize>,
        slots: &mut Vec<RandomSlot>,
        bits: &mut usize,
    ) -> Result<()> {
        match node {
            BtNode::Condition { name } => {
                if !conditions.contains_key(name) {
                    return config_err(format!("unknown condition `{name}`"));
                }
            }
            BtNode::Play { behaviour } => {
                if !behaviours.contains(behaviour.as_str()) {
                    return config_err(format!("unknown behaviour `{behaviour}`"));
                }
            }
            BtNode::Sequence { children }
            | BtNode::Selector { children }
            | BtNode::RandomSelect { children } => {
                if children.is_empty() {
                    return config_err("control node without children");
                }
                if matches!(node, BtNode::RandomSelect { .. }) {
                    let width = bits_for(children.len());
                    slots.push(RandomSlot {
                        offset: *bits,
                        width,
                    });
                    *bits += width;
                }
                for c in children {
                    self.check_node(c, behaviours, conditions, slots, bits)?;
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    /// Poses enterable from `from`, itself included.
    fn reachable(&self, c: &Compiled, from: usize) -> Vec<bool> {
        let mut ok = vec![false; self.poses.len()];
        ok[from] = true;
        if let Some(to) = self.transitions.get(&self.poses[from]) {
            for p in to {
                ok[c.pose_index[p]] = true;
            }
        }
        ok
    }

    fn behaviour_index(&self, name: &str) -> usize {
        self.behaviours
            .iter()
            .position(|b| b.name == name)
            .expect("validated")
    }
}

fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

enum Outcome {
    Failure,
    Success(Option<usize>),
}

struct TickInput<'a> {
    conditions: &'a [bool],
    blocked: &'a [bool],
    random: u64,
}

fn tick(
    cfg: &CharacterConfig,
    c: &Compiled,
    node: &BtNode,
    input: &TickInput<'_>,
    next_slot: &mut usize,
) -> Outcome {
    match node {
        BtNode::Condition { name } => {
            if input.conditions[c.condition_index[name]] {
                Outcome::Success(None)
            } else {
                Outcome::Failure
            }
        }
        BtNode::Play { behaviour } => {
            let b = cfg.behaviour_index(behaviour);
            if input.blocked[c.behaviour_pose[b]] {
                Outcome::Failure
            } else {
                Outcome::Success(Some(b))
            }
        }
        BtNode::Sequence { children } => {
            let mut result = Outcome::Success(None);
            let mut done = false;
            for child in children {
                // slots are numbered in tree order, so skipped subtrees still
                // have to consume theirs
                if done {
                    skip_slots(child, next_slot);
                    continue;
                }
                match tick(cfg, c, child, input, next_slot) {
                    Outcome::Failure => {
                        result = Outcome::Failure;
                        done = true;
                    }
                    Outcome::Success(Some(b)) => {
                        result = Outcome::Success(Some(b));
                        done = true;
                    }
                    Outcome::Success(None) => {}
                }
            }
            result
        }
        BtNode::Selector { children } => select(cfg, c, children, 0, input, next_slot),
        BtNode::RandomSelect { children } => {
            let slot = c.random_slots[*next_slot];
            *next_slot += 1;
            let mask = (1u64 << slot.width) - 1;
            let start = ((input.random >> slot.offset) & mask) as usize % children.len();
            select(cfg, c, children, start, input, next_slot)
        }
    }
}

fn select(
    cfg: &CharacterConfig,
    c: &Compiled,
    children: &[BtNode],
    start: usize,
    input: &TickInput<'_>,
    next_slot: &mut usize,
) -> Outcome {
    // evaluate in declaration order so slot numbering stays fixed, then pick
    // the first success in rotated order
    let outcomes: Vec<Outcome> = children
        .iter()
        .map(|ch| tick(cfg, c, ch, input, next_slot))
        .collect();
    let n = children.len();
    for k in 0..n {
        if let Outcome::Success(b) = outcomes[(start + k) % n] {
            return Outcome::Success(b);
        }
    }
    Outcome::Failure
}

fn skip_slots(node: &BtNode, next_slot: &mut usize) {
    match node {
        BtNode::Condition { .. } | BtNode::Play { .. } => {}
        BtNode::Sequence { children }
        | BtNode::Selector { children }
        | BtNode::RandomSelect { children } => {
            if matches!(node, BtNode::RandomSelect { .. }) {
                *next_slot += 1;
            }
            for ch in children {
                skip_slots(ch, next_slot);
            }
        }
    }
}

/// Build the character network; see the module docs for its layout.
pub fn build_character(cfg: &CharacterConfig) -> Result<Network> {
    let c = cfg.compile()?;
    let (nc, np, nr) = (cfg.conditions.len(), cfg.poses.len(), c.random_bits);
    let nb = cfg.behaviours.len();
    let arity = nc + np + nr;

    let mut table = vec![0.0; 1 << arity];
    for (idx, entry) in table.iter_mut().enumerate() {
        let bit = |i: usize| idx >> i & 1 == 1;
        let conditions: Vec<bool> = (0..nc).map(bit).collect();
        let blocked: Vec<bool> = (nc..nc + np).map(bit).collect();
        let random = (idx >> (nc + np)) as u64;
        let input = TickInput {
            conditions: &conditions,
            blocked: &blocked,
            random,
        };
        let mut slot = 0;
        if let Outcome::Success(Some(b)) = tick(cfg, &c, &cfg.tree, &input, &mut slot) {
            *entry = (b + 1) as f64;
        }
    }

    let inputs = vec![
        InputDecl {
            name: CONDITIONS_INPUT.into(),
            dim: nc,
        },
        InputDecl {
            name: RANDOM_INPUT.into(),
            dim: nr,
        },
        InputDecl {
            name: POSE_INPUT.into(),
            dim: 1,
        },
    ];
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let codes: Vec<f64> = (0..=np).map(|i| i as f64).collect();

    for k in 0..np {
        // index 0 of the table is an unused "no pose" code
        let mut values = vec![1.0];
        values.extend((0..np).map(|from| {
            if cfg.reachable(&c, from)[k] {
                0.0
            } else {
                1.0
            }
        }));
        let blocked = Gcm::frozen(
            TransferFn::TabulatedNonlinear {
                breakpoints: codes.clone(),
                values,
            },
            Ports::new(0, 1, 0, 0),
        )?;
        let id = format!("blocked_{k}");
        edges.push(edge(POSE_INPUT, &id, PortKind::Excitatory));
        nodes.push((id, blocked));
    }

    if nc > 0 {
        edges.push(edge(CONDITIONS_INPUT, TREE_NODE, PortKind::Excitatory));
    }
    for k in 0..np {
        edges.push(edge(&format!("blocked_{k}"), TREE_NODE, PortKind::Excitatory));
    }
    if nr > 0 {
        edges.push(edge(RANDOM_INPUT, TREE_NODE, PortKind::Excitatory));
    }
    nodes.push((
        TREE_NODE.into(),
        Gcm::frozen(
            TransferFn::BinaryRuleTable { arity, table },
            Ports::new(0, arity, 0, 0),
        )?,
    ));

    let behaviour_codes: Vec<f64> = (0..=nb).map(|i| i as f64).collect();
    for k in 0..np {
        let mut values = vec![0.0];
        values.extend(
            c.behaviour_pose
                .iter()
                .map(|&p| if p == k { (k + 1) as f64 } else { 0.0 }),
        );
        let (breakpoints, values) = if nb == 0 {
            (vec![0.0], vec![0.0])
        } else {
            (behaviour_codes.clone(), values)
        };
        let node = Gcm::frozen(
            TransferFn::TabulatedNonlinear { breakpoints, values },
            Ports::new(1, 1, 0, 0),
        )?;
        let id = format!("pose_{k}");
        edges.push(edge(&format!("blocked_{k}"), &id, PortKind::Inhibitory));
        edges.push(edge(TREE_NODE, &id, PortKind::Excitatory));
        edges.push(edge(&id, POSE_NODE, PortKind::Excitatory));
        nodes.push((id, node));
    }
    nodes.push((
        POSE_NODE.into(),
        Gcm::frozen(
            TransferFn::TabulatedNonlinear {
                breakpoints: vec![0.0, np as f64],
                values: vec![0.0, np as f64],
            },
            Ports::new(0, np, 0, 0),
        )?,
    ));
    Ok(Network::new(inputs, nodes, edges)?)
}

/// A built character plus the tick driver that integrates motion.
#[derive(Debug, Clone)]
pub struct Character {
    config: CharacterConfig,
    network: Network,
    random_bits: usize,
}

impl Character {
    pub fn new(config: CharacterConfig) -> Result<Self> {
        let random_bits = config.compile()?.random_bits;
        let network = build_character(&config)?;
        Ok(Self {
            config,
            network,
            random_bits,
        })
    }

    pub fn config(&self) -> &CharacterConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Run one tick per condition row. Random-select bits come from `seed`.
    pub fn run(&self, conditions: &[Vec<bool>], seed: u64) -> Result<Vec<PoseFrame>> {
        let cfg = &self.config;
        let mut rng = seeded(seed);
        let mut runner = self.network.runner()?;
        let mut pose = cfg
            .poses
            .iter()
            .position(|p| *p == cfg.initial_pose)
            .expect("validated");
        let mut position = [0.0, 0.0];
        let mut yaw = 0.0f64;
        let mut frames = Vec::with_capacity(conditions.len());
        for (t, row) in conditions.iter().enumerate() {
            if row.len() != cfg.conditions.len() {
                return config_err(format!(
                    "tick {t} has {} condition bits, expected {}",
                    row.len(),
                    cfg.conditions.len()
                ));
            }
            let cond: Vec<f64> = row.iter().map(|&b| f64::from(u8::from(b))).collect();
            let random: Vec<f64> = (0..self.random_bits)
                .map(|_| f64::from(u8::from(rng.random::<bool>())))
                .collect();
            runner.step(&[&cond, &random, &[(pose + 1) as f64]])?;
            let chosen = runner.output(TREE_NODE).expect("tree node").round() as usize;
            let behaviour = if chosen > 0 {
                let b = &cfg.behaviours[chosen - 1];
                let code = runner.output(POSE_NODE).expect("pose node").round() as usize;
                debug_assert!(code > 0, "a chosen behaviour always has a reachable pose");
                pose = code - 1;
                yaw += b.yaw_rate;
                let (s, c) = yaw.sin_cos();
                position[0] += c * b.velocity[0] - s * b.velocity[1];
                position[1] += s * b.velocity[0] + c * b.velocity[1];
                Some(b.name.clone())
            } else {
                None
            };
            let half = yaw / 2.0;
            frames.push(PoseFrame {
                tick: t,
                pose: cfg.poses[pose].clone(),
                position,
                rotation: [half.cos(), 0.0, 0.0, half.sin()],
                behaviour,
            });
        }
        Ok(frames)
    }

    /// Whether `to` may follow `from` under the transition mask.
    pub fn allows(&self, from: &str, to: &str) -> bool {
        from == to
            || self
                .config
                .transitions
                .get(from)
                .is_some_and(|t| t.iter().any(|p| p == to))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::scenarios::default_character;

    fn idle_rows(n: usize, k: usize) -> Vec<Vec<bool>> {
        vec![vec![false; k]; n]
    }

    #[test]
    fn bits() {
        assert_eq!(bits_for(1), 0);
        assert_eq!(bits_for(2), 1);
        assert_eq!(bits_for(3), 2);
        assert_eq!(bits_for(4), 2);
        assert_eq!(bits_for(5), 3);
    }

    #[test]
    fn deterministic_per_seed() {
        let ch = Character::new(default_character()).unwrap();
        let rows = idle_rows(200, ch.config().conditions.len());
        let a = ch.run(&rows, 9).unwrap();
        let b = ch.run(&rows, 9).unwrap();
        assert_eq!(a, b);
        let c = ch.run(&rows, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mask_is_respected() {
        let ch = Character::new(default_character()).unwrap();
        let k = ch.config().conditions.len();
        let mut rng = seeded(4);
        let rows: Vec<Vec<bool>> = (0..2000)
            .map(|_| (0..k).map(|_| rng.random::<bool>()).collect())
            .collect();
        let frames = ch.run(&rows, 1).unwrap();
        let mut prev = ch.config().initial_pose.clone();
        for f in &frames {
            assert!(ch.allows(&prev, &f.pose), "{prev} -> {}", f.pose);
            assert!((f.rotation_norm() - 1.0).abs() < 1e-9);
            prev = f.pose.clone();
        }
    }

    #[test]
    fn static_behaviour_keeps_identity_rotation() {
        let cfg = CharacterConfig {
            poses: vec!["stand".into()],
            initial_pose: "stand".into(),
            transitions: BTreeMap::new(),
            conditions: vec![],
            behaviours: vec![BehaviourSpec {
                name: "hold".into(),
                pose: "stand".into(),
                velocity: [0.0, 0.0],
                yaw_rate: 0.0,
            }],
            tree: BtNode::Play {
                behaviour: "hold".into(),
            },
        };
        let frames = Character::new(cfg).unwrap().run(&idle_rows(50, 0), 0).unwrap();
        for f in frames {
            assert_eq!(f.rotation, [1.0, 0.0, 0.0, 0.0]);
            assert_eq!(f.position, [0.0, 0.0]);
            assert_eq!(f.behaviour.as_deref(), Some("hold"));
        }
    }

    #[test]
    fn conditions_drive_the_tree() {
        let ch = Character::new(default_character()).unwrap();
        let conds = &ch.config().conditions;
        let tired = conds.iter().position(|c| c == "tired").unwrap();
        let mut row = vec![false; conds.len()];
        row[tired] = true;
        // idle -> sit is allowed, so a tired character rests at once
        let frames = ch.run(&[row], 0).unwrap();
        assert_eq!(frames[0].behaviour.as_deref(), Some("rest"));
        assert_eq!(frames[0].pose, "sit");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = default_character();
        cfg.initial_pose = "fly".into();
        assert!(Character::new(cfg).is_err());
        let mut cfg = default_character();
        cfg.tree = BtNode::Condition {
            name: "hungry".into(),
        };
        assert!(Character::new(cfg).is_err());
        let mut cfg = default_character();
        cfg.transitions.insert("walk".into(), vec!["swim".into()]);
        assert!(Character::new(cfg).is_err());
        let mut cfg = default_character();
        cfg.tree = BtNode::Sequence { children: vec![] };
        assert!(Character::new(cfg).is_err());
    }
}
