//! Symbol receiver as a frozen network of matched-filter banks.
//!
//! Layout for an alphabet of `K` symbols (codes `1..=K`, code `0` is "no
//! symbol yet"):
//!
//! * `gate_s` for each state `s` in `0..=K` reads the `prev` input and fires
//!   whenever the previous symbol is not `s`.
//! * `state_s` is a matched-filter bank over the templates of the symbols
//!   allowed after `s`; its only inhibitory line is `gate_s`, so exactly one
//!   state node is live per tick.
//! * `decision` sums the state outputs, which is the code of the live bank.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_err, edge, Result};
use crate::gcm::{FilterReadout, Gcm, PortKind, Ports, TransferFn};
use crate::net::{InputDecl, Network};
use crate::rng::{derive_seed, seeded};

pub const SAMPLES_INPUT: &str = "samples";
pub const PREV_INPUT: &str = "prev";
pub const DECISION_NODE: &str = "decision";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub alphabet: Vec<String>,
    /// One template per symbol, `samples_per_symbol` long.
    pub templates: Vec<Vec<f64>>,
    /// Allowed successors of each symbol. Every symbol needs an entry.
    pub transitions: BTreeMap<String, Vec<String>>,
    /// Symbols allowed first; all of them when absent.
    #[serde(default)]
    pub initial: Option<Vec<String>>,
    /// Channel noise variance per sample.
    pub noise_var: f64,
    pub samples_per_symbol: usize,
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.alphabet.len();
        if k == 0 {
            return config_err("receiver alphabet is empty");
        }
        let index = self.index();
        if index.len() != k {
            return config_err("receiver alphabet has duplicate symbols");
        }
        if self.samples_per_symbol == 0 {
            return config_err("samples per symbol must be positive");
        }
        if self.templates.len() != k {
            return config_err(format!("{} templates for {k} symbols", self.templates.len()));
        }
        for (s, t) in self.alphabet.iter().zip(&self.templates) {
            if t.len() != self.samples_per_symbol {
                return config_err(format!(
                    "template for `{s}` has {} samples, expected {}",
                    t.len(),
                    self.samples_per_symbol
                ));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return config_err(format!("template for `{s}` has non-finite samples"));
            }
        }
        if !self.noise_var.is_finite() || self.noise_var < 0.0 {
            return config_err(format!("noise variance {} is not valid", self.noise_var));
        }
        for s in &self.alphabet {
            let Some(next) = self.transitions.get(s) else {
                return config_err(format!("transition graph has no entry for `{s}`"));
            };
            if next.is_empty() {
                return config_err(format!("`{s}` has no allowed successor"));
            }
        }
        for (from, next) in &self.transitions {
            if !index.contains_key(from.as_str()) {
                return config_err(format!("transition from unknown symbol `{from}`"));
            }
            if let Some(bad) = next.iter().find(|n| !index.contains_key(n.as_str())) {
                return config_err(format!("transition to unknown symbol `{bad}`"));
            }
        }
        if let Some(init) = &self.initial {
            if init.is_empty() {
                return config_err("initial symbol set is empty");
            }
            if let Some(bad) = init.iter().find(|n| !index.contains_key(n.as_str())) {
                return config_err(format!("unknown initial symbol `{bad}`"));
            }
        }
        Ok(())
    }

    fn index(&self) -> BTreeMap<&str, usize> {
        self.alphabet
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    /// Symbol indices allowed in state `s` (0 = start, `i + 1` = after symbol
    /// `i`), sorted and deduplicated.
    fn allowed(&self, state: usize) -> Vec<usize> {
        let index = self.index();
        let names: Vec<&String> = if state == 0 {
            match &self.initial {
                Some(init) => init.iter().collect(),
                None => self.alphabet.iter().collect(),
            }
        } else {
            self.transitions[&self.alphabet[state - 1]].iter().collect()
        };
        let mut out: Vec<usize> = names.iter().map(|n| index[n.as_str()]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn allows(&self, prev: Option<usize>, next: usize) -> bool {
        self.allowed(prev.map_or(0, |p| p + 1)).contains(&next)
    }
}

/// Build the receiver network; see the module docs for its layout.
pub fn build_receiver(cfg: &ReceiverConfig) -> Result<Network> {
    cfg.validate()?;
    let k = cfg.alphabet.len();
    let inputs = vec![
        InputDecl {
            name: SAMPLES_INPUT.into(),
            dim: cfg.samples_per_symbol,
        },
        InputDecl {
            name: PREV_INPUT.into(),
            dim: 1,
        },
    ];
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for s in 0..=k {
        let sf = s as f64;
        let (breakpoints, values) = if s == 0 {
            (vec![0.0, 1.0], vec![0.0, 1.0])
        } else {
            (vec![sf - 1.0, sf, sf + 1.0], vec![1.0, 0.0, 1.0])
        };
        let gate = Gcm::frozen(
            TransferFn::TabulatedNonlinear { breakpoints, values },
            Ports::new(0, 1, 0, 0),
        )?;
        let allowed = cfg.allowed(s);
        let bank = Gcm::frozen(
            TransferFn::MatchedFilterBank {
                templates: allowed.iter().map(|&i| cfg.templates[i].clone()).collect(),
                readout: FilterReadout::Label(allowed.iter().map(|&i| (i + 1) as f64).collect()),
            },
            Ports::new(1, cfg.samples_per_symbol, 0, 0),
        )?;
        let (g, st) = (format!("gate_{s}"), format!("state_{s}"));
        edges.push(edge(PREV_INPUT, &g, PortKind::Excitatory));
        edges.push(edge(&g, &st, PortKind::Inhibitory));
        edges.push(edge(SAMPLES_INPUT, &st, PortKind::Excitatory));
        edges.push(edge(&st, DECISION_NODE, PortKind::Excitatory));
        nodes.push((g, gate));
        nodes.push((st, bank));
    }
    let decision = Gcm::frozen(
        TransferFn::TabulatedNonlinear {
            breakpoints: vec![0.0, k as f64],
            values: vec![0.0, k as f64],
        },
        Ports::new(0, k + 1, 0, 0),
    )?;
    nodes.push((DECISION_NODE.into(), decision));
    Ok(Network::new(inputs, nodes, edges)?)
}

/// A built receiver plus the symbol-by-symbol driver around it.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: ReceiverConfig,
    network: Network,
    allowed: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverRun {
    pub sent: Vec<usize>,
    pub decoded: Vec<usize>,
    pub errors: usize,
}

impl ReceiverRun {
    pub fn error_rate(&self) -> f64 {
        if self.sent.is_empty() {
            0.0
        } else {
            self.errors as f64 / self.sent.len() as f64
        }
    }
}

impl Receiver {
    pub fn new(config: ReceiverConfig) -> Result<Self> {
        let network = build_receiver(&config)?;
        let allowed = (0..=config.alphabet.len()).map(|s| config.allowed(s)).collect();
        Ok(Self {
            config,
            network,
            allowed,
        })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Baseband samples for a symbol index sequence, one row per symbol.
    pub fn modulate(&self, symbols: &[usize]) -> Vec<Vec<f64>> {
        symbols.iter().map(|&s| self.config.templates[s].clone()).collect()
    }

    /// Additive white Gaussian noise at the configured variance.
    pub fn channel<R: Rng + ?Sized>(&self, rows: &mut [Vec<f64>], rng: &mut R) {
        if self.config.noise_var == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, self.config.noise_var.sqrt()).expect("validated variance");
        for x in rows.iter_mut().flatten() {
            *x += normal.sample(rng);
        }
    }

    /// Decode one symbol per row, feeding each decision back as `prev`.
    pub fn decode(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        let mut runner = self.network.runner()?;
        let mut prev = 0.0;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            runner.step(&[row, &[prev]])?;
            let code = runner.output(DECISION_NODE).expect("decision node exists");
            let sym = code.round() as usize;
            debug_assert!(sym >= 1, "exactly one state bank is live");
            out.push(sym - 1);
            prev = code;
        }
        Ok(out)
    }

    /// A random walk on the transition graph.
    pub fn random_message<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut state = 0;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let allowed = &self.allowed[state];
            let s = allowed[rng.random_range(0..allowed.len())];
            out.push(s);
            state = s + 1;
        }
        out
    }

    /// Send a random message of `len` symbols through the channel and decode.
    pub fn simulate(&self, len: usize, seed: u64) -> Result<ReceiverRun> {
        let mut rng = seeded(seed);
        let sent = self.random_message(len, &mut rng);
        let mut rows = self.modulate(&sent);
        self.channel(&mut rows, &mut rng);
        let decoded = self.decode(&rows)?;
        let errors = sent.iter().zip(&decoded).filter(|(a, b)| a != b).count();
        Ok(ReceiverRun {
            sent,
            decoded,
            errors,
        })
    }
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// `Q(sqrt(2 Eb/N0))`.
pub fn bpsk_theoretical_ber(ebn0_db: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    q_function((2.0 * ebn0).sqrt())
}

/// Antipodal rectangular pulses of unit amplitude, so `Eb` equals the number
/// of samples per symbol and the per-sample noise variance is `N0 / 2`.
pub fn bpsk_config(samples_per_symbol: usize, ebn0_db: f64) -> ReceiverConfig {
    let eb = samples_per_symbol as f64;
    let n0 = eb / 10f64.powf(ebn0_db / 10.0);
    let alphabet = vec!["0".to_string(), "1".to_string()];
    let transitions = alphabet
        .iter()
        .map(|s| (s.clone(), alphabet.clone()))
        .collect();
    ReceiverConfig {
        templates: vec![vec![-1.0; samples_per_symbol], vec![1.0; samples_per_symbol]],
        alphabet,
        transitions,
        initial: None,
        noise_var: n0 / 2.0,
        samples_per_symbol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub symbols: usize,
    pub errors: usize,
    pub ber: f64,
    pub theory: f64,
}

impl BerPoint {
    /// Distance from theory in binomial standard deviations.
    pub fn z_score(&self) -> f64 {
        let p = self.theory;
        let sd = (p * (1.0 - p) / self.symbols as f64).sqrt();
        (self.ber - p) / sd
    }
}

/// Monte Carlo BPSK bit error rate at each `Eb/N0` point. Points run in
/// parallel, each on its own stream derived from `seed`; results keep the
/// input order.
pub fn ber_curve(
    ebn0_db: &[f64],
    samples_per_symbol: usize,
    symbols: usize,
    seed: u64,
) -> Result<Vec<BerPoint>> {
    ebn0_db
        .par_iter()
        .enumerate()
        .map(|(i, &db)| {
            let rx = Receiver::new(bpsk_config(samples_per_symbol, db))?;
            let run = rx.simulate(symbols, derive_seed(seed, i as u64))?;
            Ok(BerPoint {
                ebn0_db: db,
                symbols,
                errors: run.errors,
                ber: run.error_rate(),
                theory: bpsk_theoretical_ber(db),
            })
        })
        .collect()
}
