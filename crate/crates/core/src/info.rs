//! Information measures over symbol traces.
//!
//! Entropies are in bits. A [`PossibilitySet`] is read as a 0/1 indicator of
//! which symbols can occur in a given context; projecting a distribution
//! onto it zeroes the impossible symbols and renormalises.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Chain, ContextPolicy, EventError, Trace};
use crate::implicature::ConditionalModel;

/// Probabilities must sum to one within this tolerance.
pub const SUM_TOL: f64 = 1e-9;
/// Default Jensen-Shannon threshold for [`stationarity_test`].
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("no symbol of the distribution is possible")]
    EmptySupport,
    #[error("model has an empty alphabet")]
    UntrainedModel,
    #[error("need at least two non-empty windows, found {0}")]
    InsufficientData(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Event(#[from] EventError),
}

type Result<T> = std::result::Result<T, InfoError>;

/// A probability mass function over labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct SymbolDistribution {
    probs: BTreeMap<String, f64>,
}

impl TryFrom<BTreeMap<String, f64>> for SymbolDistribution {
    type Error = InfoError;

    fn try_from(probs: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<SymbolDistribution> for BTreeMap<String, f64> {
    fn from(d: SymbolDistribution) -> Self {
        d.probs
    }
}

impl SymbolDistribution {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(InfoError::InvalidDistribution("no symbols".into()));
        }
        if let Some((l, p)) = probs.iter().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(InfoError::InvalidDistribution(format!("p({l}) = {p}")));
        }
        let sum: f64 = probs.values().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(InfoError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let p = 1.0 / labels.len() as f64;
        Self::new(labels.into_iter().map(|l| (l, p)).collect())
    }

    /// Normalised counts.
    pub fn from_counts<'a, I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a String, &'a u64)>,
    {
        let counts: Vec<_> = counts.into_iter().collect();
        let total: u64 = counts.iter().map(|(_, &c)| c).sum();
        if total == 0 {
            return Err(InfoError::InvalidDistribution("all counts are zero".into()));
        }
        Self::new(
            counts
                .into_iter()
                .map(|(l, &c)| (l.clone(), c as f64 / total as f64))
                .collect(),
        )
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn p(&self, label: &str) -> f64 {
        self.probs.get(label).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> BTreeSet<&str> {
        self.probs
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(l, _)| l.as_str())
            .collect()
    }

    /// `w·self + (1−w)·other` over the union of labels.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(InfoError::InvalidParameter(format!("mixing weight {w}")));
        }
        let labels: BTreeSet<&String> = self.probs.keys().chain(other.probs.keys()).collect();
        Self::new(
            labels
                .into_iter()
                .map(|l| (l.clone(), w * self.p(l) + (1.0 - w) * other.p(l)))
                .collect(),
        )
    }
}

/// `H = −Σ p log2 p`, with `0·log 0 = 0`.
pub fn entropy(d: &SymbolDistribution) -> f64 {
    let h: f64 = d
        .probs
        .values()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Symbols that may occur in some context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossibilitySet {
    pub possible: BTreeSet<String>,
}

impl PossibilitySet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            possible: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.possible.contains(label)
    }

    pub fn len(&self) -> usize {
        self.possible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.possible.is_empty()
    }
}

/// Zero out impossible symbols and renormalise.
pub fn possibility_project(d: &SymbolDistribution, pos: &PossibilitySet) -> Result<SymbolDistribution> {
    let kept: f64 = d
        .probs
        .iter()
        .filter(|(l, _)| pos.contains(l))
        .map(|(_, p)| p)
        .sum();
    if kept <= 0.0 {
        return Err(InfoError::EmptySupport);
    }
    let mut probs: BTreeMap<String, f64> = d
        .probs
        .iter()
        .map(|(l, &p)| (l.clone(), if pos.contains(l) { p / kept } else { 0.0 }))
        .collect();
    // absorb rounding so the result validates
    let sum: f64 = probs.values().sum();
    if let Some(p) = probs.values_mut().find(|p| **p > 0.0) {
        *p += 1.0 - sum;
    }
    SymbolDistribution::new(probs)
}

/// `JSD(P‖Q)` in bits; symmetric and within `[0, 1]`.
pub fn jensen_shannon(p: &SymbolDistribution, q: &SymbolDistribution) -> f64 {
    let labels: BTreeSet<&String> = p.probs.keys().chain(q.probs.keys()).collect();
    let kl_to_mid = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            a * (a / m).log2()
        } else {
            0.0
        }
    };
    let js: f64 = labels
        .into_iter()
        .map(|l| {
            let (a, b) = (p.p(l), q.p(l));
            0.5 * kl_to_mid(a, b) + 0.5 * kl_to_mid(b, a)
        })
        .sum();
    js.clamp(0.0, 1.0)
}

/// The model's prediction for whatever follows `chain`, with its
/// possibility set.
///
/// The chain's last event is the cause and the rest is the context; an empty
/// chain falls back to marginal counts. Possible symbols are those observed
/// after that context and cause, or the whole alphabet when nothing was.
pub fn conditional(
    model: &ConditionalModel,
    chain: &Chain,
) -> Result<(SymbolDistribution, PossibilitySet)> {
    if model.alphabet().is_empty() {
        return Err(InfoError::UntrainedModel);
    }
    let (dist, counts) = match chain.events.split_last() {
        None => (model.marginal_distribution(), Some(model.marginal_counts())),
        Some((cause, context)) => {
            let labels: Vec<&str> = context.iter().map(|e| e.label.as_str()).collect();
            (
                model.distribution(&labels, &cause.label),
                model.counts(&labels, &cause.label),
            )
        }
    };
    let pos = match counts {
        Some(c) if !c.is_empty() => PossibilitySet::new(c.into_keys()),
        _ => PossibilitySet::new(model.alphabet().iter().cloned()),
    };
    Ok((SymbolDistribution::new(dist)?, pos))
}

/// Entropy of the projected prediction at every event of `trace`, as
/// `(t_start, bits)`.
pub fn time_varying_entropy(
    trace: &Trace,
    model: &ConditionalModel,
    policy: &ContextPolicy,
) -> Result<Vec<(u64, f64)>> {
    if model.alphabet().is_empty() {
        return Err(InfoError::UntrainedModel);
    }
    trace
        .events()
        .iter()
        .map(|e| {
            let chain = trace.context_of(&e.id, policy)?;
            let (d, pos) = conditional(model, &chain)?;
            Ok((e.t_start, entropy(&possibility_project(&d, &pos)?)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    Stationary,
    NonStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub verdict: Stationarity,
    pub max_divergence: f64,
    /// Start ticks of the two windows that realise the maximum.
    pub worst_pair: (u64, u64),
    pub windows: usize,
}

/// Compare per-window label distributions across `traces`.
///
/// Events fall into window `floor(t_start / window)`; counts are pooled over
/// all traces. The verdict is non-stationary iff the largest pairwise
/// Jensen-Shannon divergence exceeds `tau`.
pub fn stationarity_test(traces: &[Trace], window: u64, tau: f64) -> Result<StationarityReport> {
    if window == 0 {
        return Err(InfoError::InvalidParameter("window must be positive".into()));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(InfoError::InvalidParameter(format!("tau = {tau}")));
    }
    let mut buckets: BTreeMap<u64, BTreeMap<String, u64>> = BTreeMap::new();
    for t in traces {
        for e in t.events() {
            *buckets
                .entry(e.t_start / window)
                .or_default()
                .entry(e.label.clone())
                .or_default() += 1;
        }
    }
    if buckets.len() < 2 {
        return Err(InfoError::InsufficientData(buckets.len()));
    }
    let dists: Vec<(u64, SymbolDistribution)> = buckets
        .iter()
        .map(|(&w, c)| Ok((w * window, SymbolDistribution::from_counts(c)?)))
        .collect::<Result<_>>()?;
    let mut best = (0.0, (dists[0].0, dists[1].0));
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            let d = jensen_shannon(&dists[i].1, &dists[j].1);
            if d > best.0 {
                best = (d, (dists[i].0, dists[j].0));
            }
        }
    }
    Ok(StationarityReport {
        verdict: if best.0 > tau {
            Stationarity::NonStationary
        } else {
            Stationarity::Stationary
        },
        max_divergence: best.0,
        worst_pair: best.1,
        windows: dists.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;

    fn dist(pairs: &[(&str, f64)]) -> SymbolDistribution {
        SymbolDistribution::new(pairs.iter().map(|&(l, p)| (l.to_string(), p)).collect()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let u4 = SymbolDistribution::uniform(["a", "b", "c", "d"]).unwrap();
        assert!((entropy(&u4) - 2.0).abs() < 1e-12);
        assert_eq!(entropy(&dist(&[("a", 1.0), ("b", 0.0)])), 0.0);
        assert!((entropy(&dist(&[("a", 0.5), ("b", 0.25), ("c", 0.25)])) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_distributions() {
        let bad = |pairs: &[(&str, f64)]| {
            SymbolDistribution::new(pairs.iter().map(|&(l, p)| (l.to_string(), p)).collect())
        };
        assert!(bad(&[("a", 0.5)]).is_err());
        assert!(bad(&[("a", 1.5), ("b", -0.5)]).is_err());
        assert!(bad(&[("a", f64::NAN)]).is_err());
        assert!(bad(&[]).is_err());
    }

    #[test]
    fn projection_examples() {
        let u4 = SymbolDistribution::uniform(["a", "b", "c", "d"]).unwrap();
        let all = PossibilitySet::new(["a", "b", "c", "d"]);
        assert_eq!(possibility_project(&u4, &all).unwrap(), u4);
        let half = possibility_project(&u4, &PossibilitySet::new(["a", "b"])).unwrap();
        assert_eq!(half.p("a"), 0.5);
        assert_eq!(half.p("c"), 0.0);
        assert!((entropy(&half) - 1.0).abs() < 1e-12);
        let d = dist(&[("a", 1.0), ("b", 0.0)]);
        assert_eq!(
            possibility_project(&d, &PossibilitySet::new(["b"])),
            Err(InfoError::EmptySupport)
        );
    }

    #[test]
    fn jsd_closed_forms() {
        let p = dist(&[("a", 1.0), ("b", 0.0)]);
        let q = dist(&[("a", 0.0), ("b", 1.0)]);
        assert!((jensen_shannon(&p, &q) - 1.0).abs() < 1e-12);
        assert_eq!(jensen_shannon(&p, &p), 0.0);
        // H(M) − (H(P) + H(Q)) / 2
        let u4 = SymbolDistribution::uniform(["a", "b", "c", "d"]).unwrap();
        let u2 = dist(&[("a", 0.5), ("b", 0.5)]);
        let m = [0.375f64, 0.375, 0.125, 0.125];
        let hm: f64 = m.iter().map(|p| -p * p.log2()).sum();
        let expect = hm - 0.5 * (2.0 + 1.0);
        assert!((jensen_shannon(&u4, &u2) - expect).abs() < 1e-12);
        assert!((expect - 0.311278).abs() < 1e-6);
    }

    fn seq(labels: &[&str], alphabet: &[&str]) -> Trace {
        let events = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Event::new(format!("e{i}"), i as u64, *l))
            .collect();
        Trace::new(alphabet.iter().copied(), events).unwrap()
    }

    #[test]
    fn single_symbol_profile_is_zero() {
        let t = seq(&["a"; 6], &["a"]);
        let m = ConditionalModel::train(std::slice::from_ref(&t), 2, 1.0).unwrap();
        let prof = time_varying_entropy(&t, &m, &ContextPolicy::Window(2)).unwrap();
        assert_eq!(prof.len(), 6);
        assert!(prof.iter().all(|&(_, h)| h == 0.0));
    }

    #[test]
    fn context_free_profile_is_constant() {
        let t = seq(&["a", "b", "c", "a", "b", "c"], &["a", "b", "c"]);
        let m = ConditionalModel::train(std::slice::from_ref(&t), 0, 1.0).unwrap();
        let prof = time_varying_entropy(&t, &m, &ContextPolicy::Window(0)).unwrap();
        assert!(prof.iter().all(|&(_, h)| (h - prof[0].1).abs() < 1e-12));
        assert!((prof[0].1 - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn untrained_model() {
        let m = ConditionalModel::train(&[], 2, 1.0).unwrap();
        let t = seq(&["a"], &["a"]);
        assert_eq!(
            time_varying_entropy(&t, &m, &ContextPolicy::Window(1)),
            Err(InfoError::UntrainedModel)
        );
    }

    #[test]
    fn stationarity_examples() {
        let t = seq(&["a"; 40], &["a"]);
        let r = stationarity_test(std::slice::from_ref(&t), 10, DEFAULT_TAU).unwrap();
        assert_eq!(r.verdict, Stationarity::Stationary);
        assert_eq!(r.max_divergence, 0.0);
        assert_eq!(r.windows, 4);

        let mut labels = Vec::new();
        for i in 0..40 {
            labels.push(["a", "b", "c", "d"][i % 4]);
        }
        for i in 0..40 {
            labels.push(["a", "b"][i % 2]);
        }
        let switched = seq(&labels, &["a", "b", "c", "d"]);
        let r = stationarity_test(&[switched], 40, DEFAULT_TAU).unwrap();
        assert_eq!(r.verdict, Stationarity::NonStationary);
        assert!((r.max_divergence - 0.311278).abs() < 1e-5);

        assert_eq!(
            stationarity_test(&[seq(&["a"; 5], &["a"])], 10, 0.05),
            Err(InfoError::InsufficientData(1))
        );
        assert!(stationarity_test(&[t], 0, 0.05).is_err());
    }
}
