//! Circularity detection and stratification against a transitive-closure
//! oracle on random networks.

mod oracles;

use matic_core::gcm::{Gcm, PortKind, Ports, TransferFn};
use matic_core::net::{Circularity, Edge, NetError, Network};
use matic_core::rng::seeded;
use oracles::network::{closure, has_fast_edge, is_fast, random_network};

#[test]
fn matches_reachability_oracle() {
    let mut rng = seeded(9);
    let (mut cyclic, mut acyclic) = (0, 0);
    for _ in 0..500 {
        let net = random_network(&mut rng);
        let reach = closure(&net);
        let circular = (0..reach.len()).any(|i| reach[i][i]);
        match net.detect_circularity() {
            Circularity::Circular { cycle } => {
                assert!(circular, "reported a cycle in an acyclic network");
                assert_eq!(cycle.first(), cycle.last());
                for w in cycle.windows(2) {
                    assert!(has_fast_edge(&net, &w[0], &w[1]), "{} -> {}", w[0], w[1]);
                }
                assert!(matches!(net.stratify(), Err(NetError::CircularSystem { .. })));
                assert!(net.runner().is_err());
                cyclic += 1;
            }
            Circularity::Acyclic { order } => {
                assert!(!circular, "missed a cycle");
                assert_eq!(order.len(), net.node_ids().len());
                let levels = net.stratify().unwrap();
                for e in net.edges().iter().filter(|e| is_fast(e.kind)) {
                    if let (Some(a), Some(b)) = (levels.get(&e.from), levels.get(&e.to)) {
                        assert!(a < b, "{} ({a}) -> {} ({b})", e.from, e.to);
                    }
                }
                let pos = |s: &str| order.iter().position(|o| o == s).unwrap();
                for e in net.edges().iter().filter(|e| is_fast(e.kind)) {
                    if levels.contains_key(&e.from) {
                        assert!(pos(&e.from) < pos(&e.to));
                    }
                }
                acyclic += 1;
            }
        }
    }
    assert!(cyclic > 50 && acyclic > 50, "{cyclic} cyclic, {acyclic} acyclic");
}

#[test]
fn slow_edges_never_close_a_loop() {
    let g = |ports| {
        Gcm::frozen(
            TransferFn::TabulatedNonlinear {
                breakpoints: vec![0.0],
                values: vec![0.0],
            },
            ports,
        )
        .unwrap()
    };
    let net = Network::new(
        vec![],
        vec![
            ("a".into(), g(Ports::new(0, 0, 1, 0))),
            ("b".into(), g(Ports::new(0, 1, 0, 0))),
        ],
        vec![
            Edge {
                from: "a".into(),
                to: "b".into(),
                kind: PortKind::Excitatory,
            },
            Edge {
                from: "b".into(),
                to: "a".into(),
                kind: PortKind::Reward,
            },
        ],
    )
    .unwrap();
    assert!(net.detect_circularity().is_acyclic());
    assert_eq!(net.stratify().unwrap()["b"], net.stratify().unwrap()["a"] + 1);
}
