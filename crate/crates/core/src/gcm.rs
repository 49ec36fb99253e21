//! The general cognitive module (GCM).
//!
//! A module has a fast pathway `o(t) = h(p(t), n(t))` and a slow pathway
//! `h' = m(l(t), r(t))`:
//!
//! * `p` inhibitory lines. Any nonzero line vetoes the output to the
//!   baseline `0.0`.
//! * `n` excitatory lines, fed to the transfer function `h`.
//! * `r` reward lines and `l` learning lines, consumed by the metabolic
//!   function `m` every `slow_period` ticks. A closed learning gate (all `l`
//!   lines zero) leaves `h` untouched bit for bit.
//!
//! Output noise is additive Gaussian with variance `noise_var` and is drawn
//! from the module's own seeded generator.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{seeded, SimRng};

pub const BASELINE: f64 = 0.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcmError {
    #[error("{port} arity mismatch: expected {expected}, got {got}")]
    ArityMismatch {
        port: PortKind,
        expected: usize,
        got: usize,
    },
    #[error("{port} signal too short: need {needed} ticks, have {got}")]
    LengthMismatch {
        port: PortKind,
        needed: usize,
        got: usize,
    },
    #[error("signal rows have inconsistent dimension at tick {tick}")]
    RaggedSignal { tick: usize },
    #[error("signal contains a non-finite value at tick {tick}")]
    NonFinite { tick: usize },
    #[error("invalid module configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortKind {
    Inhibitory,
    Excitatory,
    Reward,
    Learning,
}

impl PortKind {
    pub const ALL: [PortKind; 4] = [
        PortKind::Inhibitory,
        PortKind::Excitatory,
        PortKind::Reward,
        PortKind::Learning,
    ];

    /// Fast-pathway ports take part in circularity and stratification.
    pub fn is_fast(self) -> bool {
        matches!(self, PortKind::Inhibitory | PortKind::Excitatory)
    }
}

impl std::fmt::Display for PortKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PortKind::Inhibitory => "inhibitory",
            PortKind::Excitatory => "excitatory",
            PortKind::Reward => "reward",
            PortKind::Learning => "learning",
        })
    }
}

impl std::str::FromStr for PortKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inhibitory" | "p" => Ok(PortKind::Inhibitory),
            "excitatory" | "n" => Ok(PortKind::Excitatory),
            "reward" | "r" => Ok(PortKind::Reward),
            "learning" | "l" => Ok(PortKind::Learning),
            other => Err(format!("unknown port kind `{other}`")),
        }
    }
}

/// Input line counts. The output arity is always one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ports {
    #[serde(default)]
    pub inhibitory: usize,
    #[serde(default)]
    pub excitatory: usize,
    #[serde(default)]
    pub reward: usize,
    #[serde(default)]
    pub learning: usize,
}

impl Ports {
    pub fn new(inhibitory: usize, excitatory: usize, reward: usize, learning: usize) -> Self {
        Self {
            inhibitory,
            excitatory,
            reward,
            learning,
        }
    }

    pub fn count(&self, kind: PortKind) -> usize {
        match kind {
            PortKind::Inhibitory => self.inhibitory,
            PortKind::Excitatory => self.excitatory,
            PortKind::Reward => self.reward,
            PortKind::Learning => self.learning,
        }
    }
}

/// How a matched-filter bank turns its responses into one output value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReadout {
    /// The largest inner product.
    Peak,
    /// The code attached to the best-matching template (first on ties).
    Label(Vec<f64>),
}

/// The fast transfer function `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum TransferFn {
    /// Lookup on the binary reading of `n` (line `i` is bit `i`, nonzero is
    /// one). `table` has `2^arity` entries.
    BinaryRuleTable { arity: usize, table: Vec<f64> },
    /// Array of linear invariant matched filters over `n`.
    MatchedFilterBank {
        templates: Vec<Vec<f64>>,
        readout: FilterReadout,
    },
    /// Piecewise-linear response to the summed excitation, clamped at the
    /// end points.
    TabulatedNonlinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TransferFn {
    pub fn identity_rule() -> Self {
        TransferFn::BinaryRuleTable {
            arity: 1,
            table: vec![0.0, 1.0],
        }
    }

    fn validate(&self, ports: &Ports) -> Result<(), GcmError> {
        let bad = |m: String| Err(GcmError::InvalidConfig(m));
        match self {
            TransferFn::BinaryRuleTable { arity, table } => {
                if *arity >= 20 {
                    return bad(format!("rule table arity {arity} too large"));
                }
                if table.len() != 1 << arity {
                    return bad(format!(
                        "rule table of arity {arity} needs {} entries, has {}",
                        1usize << arity,
                        table.len()
                    ));
                }
                if ports.excitatory != *arity {
                    return bad(format!(
                        "rule table arity {arity} but {} excitatory ports",
                        ports.excitatory
                    ));
                }
                if table.iter().any(|v| !v.is_finite()) {
                    return bad("rule table has non-finite entries".into());
                }
            }
            TransferFn::MatchedFilterBank { templates, readout } => {
                if templates.is_empty() {
                    return bad("matched filter bank has no templates".into());
                }
                for t in templates {
                    if t.len() != ports.excitatory {
                        return bad(format!(
                            "template length {} but {} excitatory ports",
                            t.len(),
                            ports.excitatory
                        ));
                    }
                    if t.iter().any(|v| !v.is_finite()) {
                        return bad("template has non-finite samples".into());
                    }
                }
                if let FilterReadout::Label(codes) = readout {
                    if codes.len() != templates.len() {
                        return bad("one label code per template required".into());
                    }
                }
            }
            TransferFn::TabulatedNonlinear {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return bad("tabulated response needs matching non-empty tables".into());
                }
                if breakpoints.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                    return bad("breakpoints must be strictly increasing".into());
                }
                if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
                    return bad("tabulated response has non-finite entries".into());
                }
            }
        }
        Ok(())
    }

    /// Evaluate `h` on excitatory input `n` (arity already checked).
    pub fn eval(&self, n: &[f64]) -> f64 {
        match self {
            TransferFn::BinaryRuleTable { table, .. } => {
                let idx = n
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .fold(0usize, |acc, (i, _)| acc | (1 << i));
                table[idx]
            }
            TransferFn::MatchedFilterBank { templates, readout } => {
                let mut best = 0;
                let mut best_resp = f64::NEG_INFINITY;
                for (j, t) in templates.iter().enumerate() {
                    let resp: f64 = t.iter().zip(n).map(|(a, b)| a * b).sum();
                    if resp > best_resp {
                        best_resp = resp;
                        best = j;
                    }
                }
                match readout {
                    FilterReadout::Peak => best_resp,
                    FilterReadout::Label(codes) => codes[best],
                }
            }
            TransferFn::TabulatedNonlinear {
                breakpoints,
                values,
            } => {
                let x: f64 = n.iter().sum();
                interpolate(breakpoints, values, x)
            }
        }
    }

    fn params_mut(&mut self) -> Option<&mut Vec<f64>> {
        match self {
            TransferFn::BinaryRuleTable { table, .. } => Some(table),
            TransferFn::TabulatedNonlinear { values, .. } => Some(values),
            TransferFn::MatchedFilterBank { .. } => None,
        }
    }

    /// Tunable parameters touched by the metabolic pathway.
    pub fn params(&self) -> Option<&[f64]> {
        match self {
            TransferFn::BinaryRuleTable { table, .. } => Some(table),
            TransferFn::TabulatedNonlinear { values, .. } => Some(values),
            TransferFn::MatchedFilterBank { .. } => None,
        }
    }

    /// Canonical serialisation, used to compare tables bit for bit.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("transfer functions always serialise")
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&b| b <= x);
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// The metabolic function `m`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetabolicFn {
    /// `h' = h`.
    #[default]
    Frozen,
    /// While the learning gate is open, entry `i` of the parameter table
    /// moves by `learning_rate * sum_j credit[j][i] * r_j`.
    GatedRewardUpdate {
        learning_rate: f64,
        credit: Vec<Vec<f64>>,
    },
}

fn default_slow_period() -> usize {
    10
}

/// On-disk form of a module; see [`Gcm`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcmConfig {
    #[serde(flatten)]
    pub transfer: TransferFn,
    #[serde(default)]
    pub metabolic: MetabolicFn,
    pub ports: Ports,
    #[serde(default)]
    pub noise_var: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_slow_period")]
    pub slow_period: usize,
}

/// A two-pathway processing unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GcmConfig", into = "GcmConfig")]
pub struct Gcm {
    transfer: TransferFn,
    metabolic: MetabolicFn,
    ports: Ports,
    noise_var: f64,
    seed: u64,
    slow_period: usize,
}

impl TryFrom<GcmConfig> for Gcm {
    type Error = GcmError;

    fn try_from(c: GcmConfig) -> Result<Self, Self::Error> {
        Gcm::new(c.transfer, c.metabolic, c.ports)?
            .with_noise(c.noise_var)?
            .with_seed(c.seed)
            .with_slow_period(c.slow_period)
    }
}

impl From<Gcm> for GcmConfig {
    fn from(g: Gcm) -> Self {
        GcmConfig {
            transfer: g.transfer,
            metabolic: g.metabolic,
            ports: g.ports,
            noise_var: g.noise_var,
            seed: g.seed,
            slow_period: g.slow_period,
        }
    }
}

impl Gcm {
    pub fn new(
        transfer: TransferFn,
        metabolic: MetabolicFn,
        ports: Ports,
    ) -> Result<Self, GcmError> {
        transfer.validate(&ports)?;
        if let MetabolicFn::GatedRewardUpdate {
            learning_rate,
            credit,
        } = &metabolic
        {
            let Some(params) = transfer.params() else {
                return Err(GcmError::InvalidConfig(
                    "reward updates need a rule table or tabulated response".into(),
                ));
            };
            if !learning_rate.is_finite() || *learning_rate <= 0.0 {
                return Err(GcmError::InvalidConfig(format!(
                    "learning rate must be positive, got {learning_rate}"
                )));
            }
            if credit.len() != ports.reward {
                return Err(GcmError::InvalidConfig(format!(
                    "credit table has {} rows for {} reward ports",
                    credit.len(),
                    ports.reward
                )));
            }
            if credit
                .iter()
                .any(|row| row.len() != params.len() || row.iter().any(|v| !v.is_finite()))
            {
                return Err(GcmError::InvalidConfig(format!(
                    "credit rows must have {} finite entries",
                    params.len()
                )));
            }
        }
        Ok(Self {
            transfer,
            metabolic,
            ports,
            noise_var: 0.0,
            seed: 0,
            slow_period: default_slow_period(),
        })
    }

    /// Frozen module without noise.
    pub fn frozen(transfer: TransferFn, ports: Ports) -> Result<Self, GcmError> {
        Self::new(transfer, MetabolicFn::Frozen, ports)
    }

    pub fn with_noise(mut self, noise_var: f64) -> Result<Self, GcmError> {
        if !noise_var.is_finite() || noise_var < 0.0 {
            return Err(GcmError::InvalidConfig(format!(
                "noise variance must be a finite non-negative number, got {noise_var}"
            )));
        }
        self.noise_var = noise_var;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_slow_period(mut self, period: usize) -> Result<Self, GcmError> {
        if period == 0 {
            return Err(GcmError::InvalidConfig("slow period must be at least 1".into()));
        }
        self.slow_period = period;
        Ok(self)
    }

    pub fn transfer(&self) -> &TransferFn {
        &self.transfer
    }

    pub fn metabolic(&self) -> &MetabolicFn {
        &self.metabolic
    }

    pub fn ports(&self) -> Ports {
        self.ports
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slow_period(&self) -> usize {
        self.slow_period
    }

    fn check_arity(&self, kind: PortKind, v: &[f64]) -> Result<(), GcmError> {
        let expected = self.ports.count(kind);
        if v.len() != expected {
            return Err(GcmError::ArityMismatch {
                port: kind,
                expected,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// One tick of the fast pathway.
    pub fn step_fast<R: Rng + ?Sized>(
        &self,
        p: &[f64],
        n: &[f64],
        rng: &mut R,
    ) -> Result<f64, GcmError> {
        self.check_arity(PortKind::Inhibitory, p)?;
        self.check_arity(PortKind::Excitatory, n)?;
        if p.iter().any(|&v| v != 0.0) {
            return Ok(BASELINE);
        }
        let mut out = self.transfer.eval(n);
        if self.noise_var > 0.0 {
            let normal = Normal::new(0.0, self.noise_var.sqrt())
                .expect("variance validated at construction");
            out += normal.sample(rng);
        }
        Ok(out)
    }

    /// One application of the metabolic pathway, in place.
    pub fn step_slow(&mut self, l: &[f64], r: &[f64]) -> Result<(), GcmError> {
        self.check_arity(PortKind::Learning, l)?;
        self.check_arity(PortKind::Reward, r)?;
        let MetabolicFn::GatedRewardUpdate {
            learning_rate,
            credit,
        } = &self.metabolic
        else {
            return Ok(());
        };
        if l.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let params = self
            .transfer
            .params_mut()
            .expect("checked at construction");
        for (row, &reward) in credit.iter().zip(r) {
            if reward == 0.0 {
                continue;
            }
            for (w, &c) in params.iter_mut().zip(row) {
                *w += learning_rate * c * reward;
            }
        }
        Ok(())
    }

    /// Run for `ticks` ticks: the fast pathway every tick, the slow pathway
    /// after every `slow_period`-th tick. Consumes and returns the module so
    /// callers can inspect the updated transfer function.
    pub fn run(
        mut self,
        inputs: &SignalBundle,
        ticks: usize,
    ) -> Result<(Signal, Gcm), GcmError> {
        inputs.check(&self.ports, ticks)?;
        let mut rng = seeded(self.seed);
        let mut out = Vec::with_capacity(ticks);
        for t in 0..ticks {
            let o = self.step_fast(
                inputs.row(PortKind::Inhibitory, t),
                inputs.row(PortKind::Excitatory, t),
                &mut rng,
            )?;
            out.push(vec![o]);
            if (t + 1) % self.slow_period == 0 {
                self.step_slow(
                    inputs.row(PortKind::Learning, t),
                    inputs.row(PortKind::Reward, t),
                )?;
            }
        }
        Ok((Signal::from_rows_unchecked(1, out), self))
    }

    /// A fresh generator for this module's seed.
    pub fn rng(&self) -> SimRng {
        seeded(self.seed)
    }
}

/// Convenience wrapper matching [`Gcm::run`] but discarding the final state.
pub fn run_gcm(gcm: &Gcm, inputs: &SignalBundle, ticks: usize) -> Result<Signal, GcmError> {
    gcm.clone().run(inputs, ticks).map(|(s, _)| s)
}

/// One real vector per tick.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Signal {
    dim: usize,
    values: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for Signal {
    type Error = GcmError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        let dim = rows.first().map_or(0, Vec::len);
        Signal::new(dim, rows)
    }
}

impl From<Signal> for Vec<Vec<f64>> {
    fn from(s: Signal) -> Self {
        s.values
    }
}

impl Signal {
    pub fn new(dim: usize, values: Vec<Vec<f64>>) -> Result<Self, GcmError> {
        for (tick, row) in values.iter().enumerate() {
            if row.len() != dim {
                return Err(GcmError::RaggedSignal { tick });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(GcmError::NonFinite { tick });
            }
        }
        Ok(Self { dim, values })
    }

    fn from_rows_unchecked(dim: usize, values: Vec<Vec<f64>>) -> Self {
        Self { dim, values }
    }

    pub fn constant(row: Vec<f64>, ticks: usize) -> Result<Self, GcmError> {
        Self::new(row.len(), vec![row; ticks])
    }

    /// Scalar signal from a sequence of values.
    pub fn scalar(values: impl IntoIterator<Item = f64>) -> Result<Self, GcmError> {
        Self::new(1, values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    /// First component of every row.
    pub fn scalars(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.first().copied().unwrap_or(0.0)).collect()
    }
}

/// The four input signals of one module.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalBundle {
    #[serde(default, rename = "p")]
    pub inhibitory: Signal,
    #[serde(default, rename = "n")]
    pub excitatory: Signal,
    #[serde(default, rename = "r")]
    pub reward: Signal,
    #[serde(default, rename = "l")]
    pub learning: Signal,
}

impl SignalBundle {
    pub fn signal(&self, kind: PortKind) -> &Signal {
        match kind {
            PortKind::Inhibitory => &self.inhibitory,
            PortKind::Excitatory => &self.excitatory,
            PortKind::Reward => &self.reward,
            PortKind::Learning => &self.learning,
        }
    }

    /// Unused port kinds may be left empty.
    pub fn check(&self, ports: &Ports, ticks: usize) -> Result<(), GcmError> {
        for kind in PortKind::ALL {
            let expected = ports.count(kind);
            let s = self.signal(kind);
            if s.is_empty() && (expected == 0 || ticks == 0) {
                continue;
            }
            if s.dim() != expected {
                return Err(GcmError::ArityMismatch {
                    port: kind,
                    expected,
                    got: s.dim(),
                });
            }
            if s.len() < ticks {
                return Err(GcmError::LengthMismatch {
                    port: kind,
                    needed: ticks,
                    got: s.len(),
                });
            }
        }
        Ok(())
    }

    fn row(&self, kind: PortKind, t: usize) -> &[f64] {
        let s = self.signal(kind);
        if s.is_empty() {
            &[]
        } else {
            s.row(t)
        }
    }

    /// Shortest non-empty signal length, if any signal is present.
    pub fn ticks(&self) -> Option<usize> {
        PortKind::ALL
            .iter()
            .map(|&k| self.signal(k))
            .filter(|s| !s.is_empty())
            .map(Signal::len)
            .min()
    }
}
