//! Random networks and a transitive-closure reachability oracle.

use matic_core::gcm::{Gcm, PortKind, Ports, TransferFn};
use matic_core::net::{Edge, InputDecl, Network};
use rand::Rng;

pub fn is_fast(k: PortKind) -> bool {
    matches!(k, PortKind::Inhibitory | PortKind::Excitatory)
}

/// Up to 50 nodes, about three edges per node, all four edge kinds.
pub fn random_network<R: Rng>(rng: &mut R) -> Network {
    let n = rng.random_range(1..=50);
    let density = rng.random_range(0.0..3.0) / n as f64;
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if rng.random_bool(density.min(1.0)) {
                let kind = [
                    PortKind::Excitatory,
                    PortKind::Excitatory,
                    PortKind::Inhibitory,
                    PortKind::Reward,
                    PortKind::Learning,
                ][rng.random_range(0..5)];
                edges.push(Edge {
                    from: format!("n{from}"),
                    to: format!("n{to}"),
                    kind,
                });
            }
        }
        if rng.random_bool(0.3) {
            edges.push(Edge {
                from: "in".into(),
                to: format!("n{from}"),
                kind: PortKind::Excitatory,
            });
        }
    }
    let nodes = (0..n)
        .map(|i| {
            let id = format!("n{i}");
            let count = |k: PortKind| edges.iter().filter(|e| e.to == id && e.kind == k).count();
            let ports = Ports::new(
                count(PortKind::Inhibitory),
                count(PortKind::Excitatory),
                count(PortKind::Reward),
                count(PortKind::Learning),
            );
            let h = TransferFn::TabulatedNonlinear {
                breakpoints: vec![0.0, 1.0],
                values: vec![0.0, 1.0],
            };
            (id, Gcm::frozen(h, ports).unwrap())
        })
        .collect();
    Network::new(vec![InputDecl { name: "in".into(), dim: 1 }], nodes, edges).unwrap()
}

/// `reach[i][j]`: a non-empty fast path from node `i` to node `j`, indexed
/// as in `node_ids()`.
pub fn closure(net: &Network) -> Vec<Vec<bool>> {
    let ids = net.node_ids();
    let n = ids.len();
    let idx = |s: &str| ids.iter().position(|i| i == s);
    let mut reach = vec![vec![false; n]; n];
    for e in net.edges().iter().filter(|e| is_fast(e.kind)) {
        if let (Some(a), Some(b)) = (idx(&e.from), idx(&e.to)) {
            reach[a][b] = true;
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|r| r[k]) {
            for (r, v) in row.iter_mut().zip(&via) {
                *r |= *v;
            }
        }
    }
    reach
}

pub fn is_circular(net: &Network) -> bool {
    let reach = closure(net);
    (0..reach.len()).any(|i| reach[i][i])
}

pub fn has_fast_edge(net: &Network, from: &str, to: &str) -> bool {
    net.edges()
        .iter()
        .any(|e| is_fast(e.kind) && e.from == from && e.to == to)
}
