//! Cognitive systems: modules wired into a directed graph.
//!
//! Edges run from a source (an external input or another module's output) to
//! a port kind of a target module. Consecutive edges into the same
//! `(target, kind)` fill that module's lines in declaration order; unwired
//! lines read zero. Only inhibitory and excitatory edges count for
//! circularity and stratification, so reward/learning feedback loops stay
//! legal.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gcm::{Gcm, GcmError, PortKind, Signal};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("edge source `{0}` is neither an input nor a node")]
    UnknownSource(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("node `{node}` declares no {kind} ports")]
    NoSuchPort { node: String, kind: PortKind },
    #[error("node `{node}` has {declared} {kind} ports but {wired} lines are wired")]
    PortOverflow {
        node: String,
        kind: PortKind,
        declared: usize,
        wired: usize,
    },
    #[error("circular system: {}", .cycle.join(" -> "))]
    CircularSystem { cycle: Vec<String> },
    #[error("missing input signal `{0}`")]
    MissingInput(String),
    #[error("input `{name}` has dimension {got}, expected {expected}")]
    InputDim {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("input `{name}` has {got} ticks, need {needed}")]
    InputLength {
        name: String,
        needed: usize,
        got: usize,
    },
    #[error("membership degree {0} outside [0, 1]")]
    InvalidDegree(f64),
    #[error(transparent)]
    Gcm(#[from] GcmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDecl {
    pub name: String,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub kind: PortKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(flatten)]
    pub gcm: Gcm,
}

/// On-disk form of a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default)]
    pub inputs: Vec<InputDecl>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourceRef {
    Input(usize),
    Node(usize),
}

#[derive(Debug, Clone)]
struct Wire {
    source: SourceRef,
    offset: usize,
    width: usize,
}

/// A directed, port-wired graph of modules.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "NetworkFile", into = "NetworkFile")]
pub struct Network {
    inputs: Vec<InputDecl>,
    node_ids: Vec<String>,
    nodes: Vec<Gcm>,
    edges: Vec<Edge>,
    // wires[node][kind as usize]
    wires: Vec<[Vec<Wire>; 4]>,
}

fn kind_slot(kind: PortKind) -> usize {
    match kind {
        PortKind::Inhibitory => 0,
        PortKind::Excitatory => 1,
        PortKind::Reward => 2,
        PortKind::Learning => 3,
    }
}

impl TryFrom<NetworkFile> for Network {
    type Error = NetError;

    fn try_from(f: NetworkFile) -> Result<Self, Self::Error> {
        Network::new(
            f.inputs,
            f.nodes.into_iter().map(|n| (n.id, n.gcm)).collect(),
            f.edges,
        )
    }
}

impl From<Network> for NetworkFile {
    fn from(n: Network) -> Self {
        NetworkFile {
            inputs: n.inputs,
            nodes: n
                .node_ids
                .into_iter()
                .zip(n.nodes)
                .map(|(id, gcm)| NodeSpec { id, gcm })
                .collect(),
            edges: n.edges,
        }
    }
}

/// Outcome of [`Network::detect_circularity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Circularity {
    /// Topological order of the fast-pathway graph.
    Acyclic { order: Vec<String> },
    /// A witness cycle; the first node is repeated at the end.
    Circular { cycle: Vec<String> },
}

impl Circularity {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, Circularity::Acyclic { .. })
    }
}

impl Network {
    pub fn new(
        inputs: Vec<InputDecl>,
        nodes: Vec<(String, Gcm)>,
        edges: Vec<Edge>,
    ) -> Result<Self, NetError> {
        let mut seen = BTreeSet::new();
        for name in inputs.iter().map(|i| &i.name).chain(nodes.iter().map(|n| &n.0)) {
            if !seen.insert(name.clone()) {
                return Err(NetError::DuplicateId(name.clone()));
            }
        }
        let input_idx: BTreeMap<&str, usize> = inputs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), i))
            .collect();
        let node_idx: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.0.as_str(), i))
            .collect();

        let mut wires: Vec<[Vec<Wire>; 4]> = vec![Default::default(); nodes.len()];
        for e in &edges {
            let &target = node_idx
                .get(e.to.as_str())
                .ok_or_else(|| NetError::UnknownNode(e.to.clone()))?;
            let (source, width) = if let Some(&i) = input_idx.get(e.from.as_str()) {
                (SourceRef::Input(i), inputs[i].dim)
            } else if let Some(&i) = node_idx.get(e.from.as_str()) {
                (SourceRef::Node(i), 1)
            } else {
                return Err(NetError::UnknownSource(e.from.clone()));
            };
            let declared = nodes[target].1.ports().count(e.kind);
            if declared == 0 {
                return Err(NetError::NoSuchPort {
                    node: e.to.clone(),
                    kind: e.kind,
                });
            }
            let slot = &mut wires[target][kind_slot(e.kind)];
            let offset = slot.last().map_or(0, |w| w.offset + w.width);
            if offset + width > declared {
                return Err(NetError::PortOverflow {
                    node: e.to.clone(),
                    kind: e.kind,
                    declared,
                    wired: offset + width,
                });
            }
            slot.push(Wire {
                source,
                offset,
                width,
            });
        }
        let (node_ids, nodes) = nodes.into_iter().unzip();
        Ok(Self {
            inputs,
            node_ids,
            nodes,
            edges,
            wires,
        })
    }

    pub fn inputs(&self) -> &[InputDecl] {
        &self.inputs
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node(&self, id: &str) -> Option<&Gcm> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Node-to-node fast-pathway adjacency, deduplicated.
    fn fast_adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut succ = vec![BTreeSet::new(); self.nodes.len()];
        for (target, slots) in self.wires.iter().enumerate() {
            for kind in [PortKind::Inhibitory, PortKind::Excitatory] {
                for w in &slots[kind_slot(kind)] {
                    if let SourceRef::Node(src) = w.source {
                        succ[src].insert(target);
                    }
                }
            }
        }
        succ
    }

    /// Topological order of the fast graph, or a witness cycle.
    pub fn detect_circularity(&self) -> Circularity {
        let n = self.nodes.len();
        let succ = self.fast_adjacency();
        let mut pred = vec![BTreeSet::new(); n];
        for (s, targets) in succ.iter().enumerate() {
            for &t in targets {
                pred[t].insert(s);
            }
        }
        let mut indeg: Vec<usize> = pred.iter().map(BTreeSet::len).collect();
        // order ready nodes by id for a stable result
        let mut ready: BTreeSet<(&str, usize)> = (0..n)
            .filter(|&i| indeg[i] == 0)
            .map(|i| (self.node_ids[i].as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(first) = ready.pop_first() {
            let i = first.1;
            order.push(i);
            for &t in &succ[i] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert((self.node_ids[t].as_str(), t));
                }
            }
        }
        if order.len() == n {
            return Circularity::Acyclic {
                order: order.into_iter().map(|i| self.node_ids[i].clone()).collect(),
            };
        }

        // Every leftover node keeps a leftover predecessor; walk backwards
        // until a node repeats.
        let leftover: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] > 0).collect();
        let by_id = |set: &BTreeSet<usize>| -> usize {
            *set.iter()
                .filter(|i| leftover.contains(i))
                .min_by_key(|&&i| &self.node_ids[i])
                .expect("leftover nodes keep a leftover predecessor")
        };
        let start = *leftover
            .iter()
            .min_by_key(|&&i| &self.node_ids[i])
            .expect("non-empty");
        let mut walk = vec![start];
        let mut pos = BTreeMap::from([(start, 0usize)]);
        let mut cur = start;
        loop {
            let p = by_id(&pred[cur]);
            if let Some(&at) = pos.get(&p) {
                // walk[at..] is p, pred(p), pred(pred(p)), ...; reversing the
                // tail gives edge order starting from p.
                let mut cycle = vec![self.node_ids[p].clone()];
                cycle.extend(walk[at + 1..].iter().rev().map(|&i| self.node_ids[i].clone()));
                cycle.push(self.node_ids[p].clone());
                return Circularity::Circular { cycle };
            }
            pos.insert(p, walk.len());
            walk.push(p);
            cur = p;
        }
    }

    /// Level of every node: one more than its highest fast-pathway source,
    /// external inputs being level 0.
    pub fn stratify(&self) -> Result<BTreeMap<String, usize>, NetError> {
        let order = match self.detect_circularity() {
            Circularity::Acyclic { order } => order,
            Circularity::Circular { cycle } => return Err(NetError::CircularSystem { cycle }),
        };
        let mut level = vec![0usize; self.nodes.len()];
        for id in &order {
            let i = self.index_of(id).expect("order lists known nodes");
            let mut top = 0;
            for kind in [PortKind::Inhibitory, PortKind::Excitatory] {
                for w in &self.wires[i][kind_slot(kind)] {
                    if let SourceRef::Node(src) = w.source {
                        top = top.max(level[src]);
                    }
                }
            }
            level[i] = top + 1;
        }
        Ok(self
            .node_ids
            .iter()
            .cloned()
            .zip(level)
            .collect())
    }

    /// A stepping evaluator. Fails on circular systems.
    pub fn runner(&self) -> Result<NetworkRunner<'_>, NetError> {
        let order = match self.detect_circularity() {
            Circularity::Acyclic { order } => order
                .iter()
                .map(|id| self.index_of(id).expect("known"))
                .collect(),
            Circularity::Circular { cycle } => return Err(NetError::CircularSystem { cycle }),
        };
        Ok(NetworkRunner {
            net: self,
            order,
            modules: self.nodes.clone(),
            rngs: self.nodes.iter().map(|g| seeded(g.seed())).collect(),
            outputs: vec![0.0; self.nodes.len()],
            buffers: self
                .nodes
                .iter()
                .map(|g| {
                    let p = g.ports();
                    [
                        vec![0.0; p.inhibitory],
                        vec![0.0; p.excitatory],
                        vec![0.0; p.reward],
                        vec![0.0; p.learning],
                    ]
                })
                .collect(),
            tick: 0,
        })
    }

    /// Run for `ticks` ticks; returns each node's scalar output signal.
    pub fn run(
        &self,
        inputs: &BTreeMap<String, Signal>,
        ticks: usize,
    ) -> Result<BTreeMap<String, Signal>, NetError> {
        let signals = self.resolve_inputs(inputs, ticks)?;
        let mut runner = self.runner()?;
        let mut out = vec![Vec::with_capacity(ticks); self.nodes.len()];
        let mut rows: Vec<&[f64]> = Vec::with_capacity(signals.len());
        for t in 0..ticks {
            rows.clear();
            rows.extend(signals.iter().map(|s| s.row(t)));
            let o = runner.step(&rows)?;
            for (i, &v) in o.iter().enumerate() {
                out[i].push(v);
            }
        }
        Ok(self
            .node_ids
            .iter()
            .cloned()
            .zip(out)
            .map(|(id, v)| (id, Signal::scalar(v).expect("outputs are finite")))
            .collect())
    }

    fn resolve_inputs<'a>(
        &self,
        inputs: &'a BTreeMap<String, Signal>,
        ticks: usize,
    ) -> Result<Vec<&'a Signal>, NetError> {
        self.inputs
            .iter()
            .map(|decl| {
                let s = inputs
                    .get(&decl.name)
                    .ok_or_else(|| NetError::MissingInput(decl.name.clone()))?;
                if s.len() < ticks {
                    return Err(NetError::InputLength {
                        name: decl.name.clone(),
                        needed: ticks,
                        got: s.len(),
                    });
                }
                if ticks > 0 && s.dim() != decl.dim {
                    return Err(NetError::InputDim {
                        name: decl.name.clone(),
                        expected: decl.dim,
                        got: s.dim(),
                    });
                }
                Ok(s)
            })
            .collect()
    }

    /// Build a predicate from the outputs of `node` over a set of stimuli.
    ///
    /// Each stimulus runs on a fresh copy of the network for as many ticks as
    /// its shortest input signal; the membership degree is the mean output of
    /// `node`, clamped to `[0, 1]`. In crisp mode degrees become 1 when at
    /// least `threshold` and 0 otherwise.
    pub fn predicate_of(
        &self,
        node: &str,
        stimuli: &[(String, BTreeMap<String, Signal>)],
        threshold: f64,
        crisp: bool,
    ) -> Result<Predicate, NetError> {
        let levels = self.stratify()?;
        let level = *levels
            .get(node)
            .ok_or_else(|| NetError::UnknownNode(node.to_string()))?;
        let idx = self.index_of(node).expect("level implies node");
        let mut extension = BTreeMap::new();
        for (event, inputs) in stimuli {
            let ticks = self
                .inputs
                .iter()
                .filter_map(|d| inputs.get(&d.name).map(Signal::len))
                .min()
                .unwrap_or(0);
            let out = self.run(inputs, ticks)?;
            let series = out[&self.node_ids[idx]].scalars();
            let mean = if series.is_empty() {
                0.0
            } else {
                series.iter().sum::<f64>() / series.len() as f64
            };
            let mut degree = mean.clamp(0.0, 1.0);
            if crisp {
                degree = if degree >= threshold { 1.0 } else { 0.0 };
            }
            extension.insert(event.clone(), degree);
        }
        Predicate::new(node, extension, level)
    }
}

/// Tick-by-tick evaluation of a network.
///
/// Each node owns a clone of its module and a generator seeded from the
/// module's seed; the network definition itself is never mutated.
pub struct NetworkRunner<'a> {
    net: &'a Network,
    order: Vec<usize>,
    modules: Vec<Gcm>,
    rngs: Vec<SimRng>,
    outputs: Vec<f64>,
    buffers: Vec<[Vec<f64>; 4]>,
    tick: usize,
}

impl NetworkRunner<'_> {
    /// Advance one tick. `inputs` holds one row per declared input, in
    /// declaration order. Returns node outputs in node declaration order.
    pub fn step(&mut self, inputs: &[&[f64]]) -> Result<&[f64], NetError> {
        for (decl, row) in self.net.inputs.iter().zip(inputs) {
            if row.len() != decl.dim {
                return Err(NetError::InputDim {
                    name: decl.name.clone(),
                    expected: decl.dim,
                    got: row.len(),
                });
            }
        }
        if inputs.len() != self.net.inputs.len() {
            let missing = &self.net.inputs[inputs.len().min(self.net.inputs.len())];
            return Err(NetError::MissingInput(missing.name.clone()));
        }
        for &i in &self.order {
            for kind in [PortKind::Inhibitory, PortKind::Excitatory] {
                gather(
                    &self.net.wires[i][kind_slot(kind)],
                    inputs,
                    &self.outputs,
                    &mut self.buffers[i][kind_slot(kind)],
                );
            }
            let [p, n, _, _] = &self.buffers[i];
            self.outputs[i] = self.modules[i].step_fast(p, n, &mut self.rngs[i])?;
        }
        // slow pathway sees this tick's outputs
        for i in 0..self.modules.len() {
            if !(self.tick + 1).is_multiple_of(self.modules[i].slow_period()) {
                continue;
            }
            for kind in [PortKind::Reward, PortKind::Learning] {
                gather(
                    &self.net.wires[i][kind_slot(kind)],
                    inputs,
                    &self.outputs,
                    &mut self.buffers[i][kind_slot(kind)],
                );
            }
            let [_, _, r, l] = &self.buffers[i];
            self.modules[i].step_slow(l, r)?;
        }
        self.tick += 1;
        Ok(&self.outputs)
    }

    pub fn output(&self, node: &str) -> Option<f64> {
        self.net.index_of(node).map(|i| self.outputs[i])
    }

    pub fn module(&self, node: &str) -> Option<&Gcm> {
        self.net.index_of(node).map(|i| &self.modules[i])
    }
}

fn gather(wires: &[Wire], inputs: &[&[f64]], outputs: &[f64], buf: &mut [f64]) {
    buf.fill(0.0);
    for w in wires {
        match w.source {
            SourceRef::Input(k) => {
                buf[w.offset..w.offset + w.width].copy_from_slice(inputs[k]);
            }
            SourceRef::Node(k) => buf[w.offset] = outputs[k],
        }
    }
}

/// Tolerance used by [`Predicate::equiv`].
pub const EQUIV_TOL: f64 = 1e-9;

/// The set-valued output of a non-circular system, with fuzzy membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub id: String,
    extension: BTreeMap<String, f64>,
    pub level: usize,
}

impl Predicate {
    pub fn new(
        id: impl Into<String>,
        extension: BTreeMap<String, f64>,
        level: usize,
    ) -> Result<Self, NetError> {
        if let Some(&bad) = extension
            .values()
            .find(|d| !(0.0..=1.0).contains(*d))
        {
            return Err(NetError::InvalidDegree(bad));
        }
        Ok(Self {
            id: id.into(),
            extension,
            level,
        })
    }

    /// Crisp predicate holding of exactly `members`.
    pub fn crisp<I, S>(id: impl Into<String>, members: I, level: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            extension: members.into_iter().map(|m| (m.into(), 1.0)).collect(),
            level,
        }
    }

    /// Degree of membership `e ∈_α P`; events never presented count as 0.
    pub fn degree(&self, event: &str) -> f64 {
        self.extension.get(event).copied().unwrap_or(0.0)
    }

    pub fn extension(&self) -> &BTreeMap<String, f64> {
        &self.extension
    }

    pub fn contains(&self, event: &str) -> bool {
        self.degree(event) > 0.0
    }

    pub fn is_crisp(&self) -> bool {
        self.extension.values().all(|&d| d == 0.0 || d == 1.0)
    }

    /// Sigma-count; the plain size for crisp predicates.
    pub fn cardinality(&self) -> f64 {
        self.extension.values().sum()
    }

    fn combine(&self, other: &Predicate, id: String, f: impl Fn(f64, f64) -> f64) -> Predicate {
        let keys: BTreeSet<&String> = self.extension.keys().chain(other.extension.keys()).collect();
        Predicate {
            id,
            extension: keys
                .into_iter()
                .map(|k| (k.clone(), f(self.degree(k), other.degree(k))))
                .collect(),
            level: self.level.max(other.level),
        }
    }

    pub fn union(&self, other: &Predicate) -> Predicate {
        self.combine(other, format!("({}|{})", self.id, other.id), f64::max)
    }

    pub fn intersection(&self, other: &Predicate) -> Predicate {
        self.combine(other, format!("({}&{})", self.id, other.id), f64::min)
    }

    /// Equal degrees on every event, within [`EQUIV_TOL`].
    pub fn equiv(&self, other: &Predicate) -> bool {
        self.extension
            .keys()
            .chain(other.extension.keys())
            .all(|k| (self.degree(k) - other.degree(k)).abs() <= EQUIV_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcm::{FilterReadout, Ports, TransferFn};

    fn relay() -> Gcm {
        Gcm::frozen(TransferFn::identity_rule(), Ports::new(0, 1, 0, 0)).unwrap()
    }

    fn edge(from: &str, to: &str) -> Edge {
        Edge {
            from: from.into(),
            to: to.into(),
            kind: PortKind::Excitatory,
        }
    }

    fn chain3() -> Network {
        Network::new(
            vec![InputDecl {
                name: "x".into(),
                dim: 1,
            }],
            vec![
                ("n1".into(), relay()),
                ("n2".into(), relay()),
                ("n3".into(), relay()),
            ],
            vec![edge("x", "n1"), edge("n1", "n2"), edge("n2", "n3")],
        )
        .unwrap()
    }

    #[test]
    fn self_loop_is_circular() {
        let net = Network::new(vec![], vec![("n1".into(), relay())], vec![edge("n1", "n1")]).unwrap();
        assert_eq!(
            net.detect_circularity(),
            Circularity::Circular {
                cycle: vec!["n1".into(), "n1".into()]
            }
        );
        assert!(matches!(net.stratify(), Err(NetError::CircularSystem { .. })));
    }

    #[test]
    fn chain_order_and_levels() {
        let net = chain3();
        assert_eq!(
            net.detect_circularity(),
            Circularity::Acyclic {
                order: vec!["n1".into(), "n2".into(), "n3".into()]
            }
        );
        let lv = net.stratify().unwrap();
        assert_eq!((lv["n1"], lv["n2"], lv["n3"]), (1, 2, 3));
    }

    #[test]
    fn back_edge_cycle_witness() {
        let two_in = || Gcm::frozen(
            TransferFn::TabulatedNonlinear {
                breakpoints: vec![0.0, 1.0],
                values: vec![0.0, 1.0],
            },
            Ports::new(0, 2, 0, 0),
        )
        .unwrap();
        let net = Network::new(
            vec![],
            vec![
                ("n1".into(), relay()),
                ("n2".into(), two_in()),
                ("n3".into(), relay()),
                ("n4".into(), relay()),
            ],
            vec![
                edge("n1", "n2"),
                edge("n2", "n3"),
                edge("n3", "n4"),
                edge("n4", "n2"),
            ],
        )
        .unwrap();
        match net.detect_circularity() {
            Circularity::Circular { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                let mut members: Vec<_> = cycle[..cycle.len() - 1].to_vec();
                members.sort();
                assert_eq!(members, ["n2", "n3", "n4"]);
                // consecutive pairs must be real edges
                for w in cycle.windows(2) {
                    assert!(net.edges().iter().any(|e| e.from == w[0] && e.to == w[1]));
                }
            }
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn diamond_levels() {
        let two_in = Gcm::frozen(
            TransferFn::TabulatedNonlinear {
                breakpoints: vec![0.0, 2.0],
                values: vec![0.0, 1.0],
            },
            Ports::new(0, 2, 0, 0),
        )
        .unwrap();
        let net = Network::new(
            vec![InputDecl {
                name: "in".into(),
                dim: 1,
            }],
            vec![("a".into(), relay()), ("b".into(), relay()), ("c".into(), two_in)],
            vec![edge("in", "a"), edge("in", "b"), edge("a", "c"), edge("b", "c")],
        )
        .unwrap();
        let lv = net.stratify().unwrap();
        assert_eq!((lv["a"], lv["b"], lv["c"]), (1, 1, 2));
    }

    #[test]
    fn slow_edges_do_not_make_cycles() {
        let learner = Gcm::new(
            TransferFn::identity_rule(),
            crate::gcm::MetabolicFn::GatedRewardUpdate {
                learning_rate: 0.5,
                credit: vec![vec![0.0, 1.0]],
            },
            Ports::new(0, 1, 1, 1),
        )
        .unwrap();
        let net = Network::new(
            vec![InputDecl {
                name: "x".into(),
                dim: 1,
            }],
            vec![("a".into(), learner)],
            vec![
                edge("x", "a"),
                Edge {
                    from: "a".into(),
                    to: "a".into(),
                    kind: PortKind::Reward,
                },
                Edge {
                    from: "x".into(),
                    to: "a".into(),
                    kind: PortKind::Learning,
                },
            ],
        )
        .unwrap();
        assert!(net.detect_circularity().is_acyclic());
        assert_eq!(net.stratify().unwrap()["a"], 1);
    }

    #[test]
    fn wiring_errors() {
        let r = Network::new(vec![], vec![("a".into(), relay())], vec![edge("zz", "a")]);
        assert_eq!(r.unwrap_err(), NetError::UnknownSource("zz".into()));
        let r = Network::new(vec![], vec![("a".into(), relay())], vec![edge("a", "b")]);
        assert_eq!(r.unwrap_err(), NetError::UnknownNode("b".into()));
        let r = Network::new(
            vec![],
            vec![("a".into(), relay()), ("b".into(), relay())],
            vec![edge("a", "b"), edge("a", "b")],
        );
        assert!(matches!(r, Err(NetError::PortOverflow { .. })));
        let r = Network::new(
            vec![],
            vec![("a".into(), relay()), ("b".into(), relay())],
            vec![Edge {
                from: "a".into(),
                to: "b".into(),
                kind: PortKind::Inhibitory,
            }],
        );
        assert!(matches!(r, Err(NetError::NoSuchPort { .. })));
        let r = Network::new(
            vec![InputDecl {
                name: "a".into(),
                dim: 1,
            }],
            vec![("a".into(), relay())],
            vec![],
        );
        assert_eq!(r.unwrap_err(), NetError::DuplicateId("a".into()));
    }

    #[test]
    fn run_propagates_through_chain() {
        let net = chain3();
        let inputs = BTreeMap::from([("x".to_string(), Signal::scalar([0.0, 1.0, 1.0, 0.0]).unwrap())]);
        let out = net.run(&inputs, 4).unwrap();
        assert_eq!(out["n3"].scalars(), [0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            net.run(&BTreeMap::new(), 1),
            Err(NetError::MissingInput(_))
        ));
    }

    #[test]
    fn predicate_from_constant_and_vetoed_nodes() {
        let always = Gcm::frozen(
            TransferFn::BinaryRuleTable {
                arity: 1,
                table: vec![1.0, 1.0],
            },
            Ports::new(1, 1, 0, 0),
        )
        .unwrap();
        let net = Network::new(
            vec![
                InputDecl {
                    name: "x".into(),
                    dim: 1,
                },
                InputDecl {
                    name: "veto".into(),
                    dim: 1,
                },
            ],
            vec![("yes".into(), always.clone()), ("never".into(), always)],
            vec![
                edge("x", "yes"),
                edge("x", "never"),
                Edge {
                    from: "veto".into(),
                    to: "never".into(),
                    kind: PortKind::Inhibitory,
                },
            ],
        )
        .unwrap();
        let stimuli: Vec<_> = ["e1", "e2", "e3"]
            .iter()
            .enumerate()
            .map(|(i, e)| {
                (
                    e.to_string(),
                    BTreeMap::from([
                        ("x".to_string(), Signal::scalar(vec![i as f64; 4]).unwrap()),
                        ("veto".to_string(), Signal::scalar(vec![1.0; 4]).unwrap()),
                    ]),
                )
            })
            .collect();
        let yes = net.predicate_of("yes", &stimuli, 0.5, false).unwrap();
        assert!(yes.extension().values().all(|&d| d == 1.0));
        let never = net.predicate_of("never", &stimuli, 0.5, false).unwrap();
        assert!(never.extension().values().all(|&d| d == 0.0));
        assert!(matches!(
            net.predicate_of("nope", &stimuli, 0.5, false),
            Err(NetError::UnknownNode(_))
        ));
    }

    #[test]
    fn matched_filter_predicate() {
        let u = vec![0.5, 0.5, -0.5, 0.5];
        let v = vec![0.5, -0.5, 0.5, 0.5]; // orthogonal to u
        let mf = Gcm::frozen(
            TransferFn::MatchedFilterBank {
                templates: vec![u.clone()],
                readout: FilterReadout::Peak,
            },
            Ports::new(0, 4, 0, 0),
        )
        .unwrap();
        let net = Network::new(
            vec![InputDecl {
                name: "x".into(),
                dim: 4,
            }],
            vec![("mf".into(), mf)],
            vec![edge("x", "mf")],
        )
        .unwrap();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let stimuli: Vec<_> = [("match", u.clone()), ("anti", neg), ("ortho", v)]
            .into_iter()
            .map(|(e, s)| {
                (
                    e.to_string(),
                    BTreeMap::from([("x".to_string(), Signal::constant(s, 3).unwrap())]),
                )
            })
            .collect();
        // direct responses: <u,u>=1, <u,-u>=-1 -> 0, <u,v>=0
        let p = net.predicate_of("mf", &stimuli, 0.5, false).unwrap();
        let above: Vec<_> = p
            .extension()
            .iter()
            .filter(|(_, &d)| d >= 0.5)
            .map(|(e, _)| e.as_str())
            .collect();
        assert_eq!(above, ["match"]);
        let crisp = net.predicate_of("mf", &stimuli, 0.5, true).unwrap();
        assert!(crisp.is_crisp());
        assert_eq!(crisp.cardinality(), 1.0);
    }

    #[test]
    fn fuzzy_operations() {
        let p = Predicate::new("P", BTreeMap::from([("e".to_string(), 0.3)]), 1).unwrap();
        let q = Predicate::new("Q", BTreeMap::from([("e".to_string(), 0.8)]), 2).unwrap();
        assert_eq!(p.union(&q).degree("e"), 0.8);
        assert_eq!(p.intersection(&q).degree("e"), 0.3);
        assert_eq!(p.union(&q).level, 2);
        assert!(p.intersection(&p).equiv(&p));
        assert!(!p.equiv(&q));

        let a = Predicate::crisp("A", ["x", "y"], 1);
        let b = Predicate::crisp("B", ["z"], 1);
        assert_eq!(a.union(&b).cardinality(), a.cardinality() + b.cardinality());
        assert!(Predicate::new("bad", BTreeMap::from([("e".to_string(), 1.5)]), 1).is_err());
    }

    #[test]
    fn network_json_roundtrip() {
        let net = chain3();
        let text = serde_json::to_string(&net).unwrap();
        let back: Network = serde_json::from_str(&text).unwrap();
        assert_eq!(back.node_ids(), net.node_ids());
        assert_eq!(back.edges(), net.edges());
    }
}
