//! Multi-armed bandit learned through the gated slow pathway.
//!
//! The module's rule table holds one value estimate per arm, addressed by the
//! binary arm index on the excitatory lines. Each arm has its own reward line
//! and a one-hot credit row, so a reward on arm `j` moves entry `j` by
//! `learning_rate * r_j` while the learning gate is open.
//!
//! The driver puts the prediction error `payout - estimate` on the pulled
//! arm's reward line, so each entry tracks an exponentially weighted mean of
//! that arm's payouts.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_err, Result};
use crate::gcm::{Gcm, MetabolicFn, Ports, TransferFn};
use crate::rng::{derive_seed, seeded};

/// When the learning line `l(t)` is high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateSchedule {
    Always,
    Never,
    /// Open for episodes `0..episode`, closed afterwards.
    Until { episode: usize },
}

impl GateSchedule {
    pub fn is_open(&self, episode: usize) -> bool {
        match self {
            GateSchedule::Always => true,
            GateSchedule::Never => false,
            GateSchedule::Until { episode: e } => episode < *e,
        }
    }
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    /// Mean payout of each arm.
    pub payouts: Vec<f64>,
    pub learning_rate: f64,
    pub episodes: usize,
    pub gate: GateSchedule,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Standard deviation of Gaussian payout noise; zero for deterministic
    /// arms.
    #[serde(default)]
    pub payout_noise: f64,
}

impl BanditConfig {
    pub fn arms(&self) -> usize {
        self.payouts.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.payouts.is_empty() {
            return config_err("bandit needs at least one arm");
        }
        if self.payouts.iter().any(|p| !p.is_finite()) {
            return config_err("payouts must be finite");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return config_err(format!("learning rate {} not in (0, 1]", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return config_err(format!("epsilon {} not in [0, 1]", self.epsilon));
        }
        if !self.payout_noise.is_finite() || self.payout_noise < 0.0 {
            return config_err(format!("payout noise {} is not valid", self.payout_noise));
        }
        Ok(())
    }

    fn index_bits(&self) -> usize {
        let n = self.arms();
        if n <= 1 {
            1
        } else {
            (usize::BITS - (n - 1).leading_zeros()) as usize
        }
    }
}

/// A zero-initialised value table with one-hot credit, updated every tick.
pub fn build_bandit(cfg: &BanditConfig) -> Result<Gcm> {
    cfg.validate()?;
    let bits = cfg.index_bits();
    let size = 1 << bits;
    let credit = (0..cfg.arms())
        .map(|j| (0..size).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let gcm = Gcm::new(
        TransferFn::BinaryRuleTable {
            arity: bits,
            table: vec![0.0; size],
        },
        MetabolicFn::GatedRewardUpdate {
            learning_rate: cfg.learning_rate,
            credit,
        },
        Ports::new(0, bits, cfg.arms(), 1),
    )?
    .with_slow_period(1)?;
    Ok(gcm)
}

fn arm_bits(arm: usize, bits: usize) -> Vec<f64> {
    (0..bits).map(|i| f64::from(u8::from(arm >> i & 1 == 1))).collect()
}

/// Value estimates read through the fast pathway.
pub fn estimates(gcm: &Gcm, arms: usize) -> Vec<f64> {
    let bits = gcm.ports().excitatory;
    let mut rng = gcm.rng();
    (0..arms)
        .map(|a| {
            gcm.step_fast(&[], &arm_bits(a, bits), &mut rng)
                .expect("ports match the arm encoding")
        })
        .collect()
}

/// Highest estimate, lowest index on ties.
pub fn greedy_arm(gcm: &Gcm, arms: usize) -> usize {
    let est = estimates(gcm, arms);
    let mut best = 0;
    for (a, &v) in est.iter().enumerate() {
        if v > est[best] {
            best = a;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub arm: usize,
    pub reward: f64,
    pub gate: bool,
}

#[derive(Debug, Clone)]
pub struct BanditRun {
    pub module: Gcm,
    pub history: Vec<EpisodeRecord>,
    /// Serialised transfer function after each episode.
    pub snapshots: Vec<String>,
    pub greedy_arm: usize,
}

impl BanditRun {
    pub fn total_reward(&self) -> f64 {
        self.history.iter().map(|e| e.reward).sum()
    }
}

/// Train for `cfg.episodes` episodes with epsilon-greedy exploration. Ties
/// between equal estimates are broken at random during training.
pub fn run_bandit(cfg: &BanditConfig, seed: u64) -> Result<BanditRun> {
    let mut module = build_bandit(cfg)?;
    let arms = cfg.arms();
    let mut rng = seeded(seed);
    let noise = (cfg.payout_noise > 0.0)
        .then(|| Normal::new(0.0, cfg.payout_noise).expect("validated"));
    let mut history = Vec::with_capacity(cfg.episodes);
    let mut snapshots = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let arm = if rng.random::<f64>() < cfg.epsilon {
            rng.random_range(0..arms)
        } else {
            let est = estimates(&module, arms);
            let top = est.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let best: Vec<usize> = (0..arms).filter(|&a| est[a] == top).collect();
            best[rng.random_range(0..best.len())]
        };
        let mut reward = cfg.payouts[arm];
        if let Some(n) = &noise {
            reward += n.sample(&mut rng);
        }
        let mut r = vec![0.0; arms];
        r[arm] = reward - estimates(&module, arms)[arm];
        let gate = cfg.gate.is_open(episode);
        module.step_slow(&[f64::from(u8::from(gate))], &r)?;
        history.push(EpisodeRecord {
            episode,
            arm,
            reward,
            gate,
        });
        snapshots.push(module.transfer().fingerprint());
    }
    let greedy_arm = greedy_arm(&module, arms);
    Ok(BanditRun {
        module,
        history,
        snapshots,
        greedy_arm,
    })
}

/// Fraction of `runs` independently seeded runs whose final greedy arm is
/// `target`. Runs are spread over threads; each owns its generator.
pub fn convergence_rate(cfg: &BanditConfig, root_seed: u64, runs: usize, target: usize) -> Result<f64> {
    if runs == 0 {
        return Ok(0.0);
    }
    let hits: Vec<bool> = (0..runs)
        .into_par_iter()
        .map(|i| run_bandit(cfg, derive_seed(root_seed, i as u64)).map(|r| r.greedy_arm == target))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / runs as f64)
}
