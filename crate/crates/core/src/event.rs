//! Timed events, chains, contexts and traces.
//!
//! Time is measured in integer ticks. A [`Trace`] keeps its events in the
//! total storage order `(t_start, id)`; the chain relation itself only
//! constrains start times, so simultaneous events are allowed and an event may
//! end after a later one starts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Tick = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EventError {
    #[error("chain is empty")]
    EmptyChain,
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("duplicate event id `{0}`")]
    DuplicateId(String),
    #[error("event `{id}` has label `{label}` outside the trace alphabet")]
    LabelNotInAlphabet { id: String, label: String },
    #[error("event `{event}` does not precede `{target}`")]
    NotAPredecessor { event: String, target: String },
}

/// A timed occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    #[serde(rename = "t")]
    pub t_start: Tick,
    #[serde(rename = "d", default)]
    pub duration: Tick,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
}

impl Event {
    pub fn new(id: impl Into<String>, t_start: Tick, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            t_start,
            duration: 0,
            label: label.into(),
            agent: None,
        }
    }

    pub fn with_duration(mut self, duration: Tick) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_agent(mut self, agent: impl Into<String>) -> Self {
        self.agent = Some(agent.into());
        self
    }

    pub fn t_end(&self) -> Tick {
        self.t_start + self.duration
    }

    fn order_key(&self) -> (Tick, &str) {
        (self.t_start, self.id.as_str())
    }
}

/// Result of [`validate_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainValidity {
    Valid,
    /// Start time at `index` is earlier than at `index - 1`.
    Invalid { index: usize },
}

/// Check that start times never decrease along `events`.
pub fn validate_chain<'a, I>(events: I) -> Result<ChainValidity, EventError>
where
    I: IntoIterator<Item = &'a Event>,
{
    let mut prev: Option<Tick> = None;
    let mut len = 0;
    for (i, e) in events.into_iter().enumerate() {
        len = i + 1;
        if let Some(p) = prev {
            if e.t_start < p {
                return Ok(ChainValidity::Invalid { index: i });
            }
        }
        prev = Some(e.t_start);
    }
    if len == 0 {
        return Err(EventError::EmptyChain);
    }
    Ok(ChainValidity::Valid)
}

/// A sequence of events written `a.b.c`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Chain {
    pub events: Vec<Event>,
}

impl Chain {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn validity(&self) -> Result<ChainValidity, EventError> {
        validate_chain(&self.events)
    }
}

impl std::fmt::Display for Chain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.ids().join("."))
    }
}

/// Which predecessors of an event form its context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextPolicy {
    /// The `k` most recent predecessors in `(t_start, id)` order.
    Window(usize),
    /// An explicit list of predecessor ids.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk form of a trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFile {
    pub alphabet: Vec<String>,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "is_default_meta")]
    pub metadata: TraceMetadata,
}

fn is_default_meta(m: &TraceMetadata) -> bool {
    *m == TraceMetadata::default()
}

/// A full scenario history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TraceFile", into = "TraceFile")]
pub struct Trace {
    alphabet: BTreeSet<String>,
    events: Vec<Event>,
    index: BTreeMap<String, usize>,
    pub metadata: TraceMetadata,
}

impl TryFrom<TraceFile> for Trace {
    type Error = EventError;

    fn try_from(file: TraceFile) -> Result<Self, Self::Error> {
        let mut trace = Trace::new(file.alphabet, file.events)?;
        trace.metadata = file.metadata;
        Ok(trace)
    }
}

impl From<Trace> for TraceFile {
    fn from(t: Trace) -> Self {
        TraceFile {
            alphabet: t.alphabet.into_iter().collect(),
            events: t.events,
            metadata: t.metadata,
        }
    }
}

impl Trace {
    pub fn empty<I, S>(alphabet: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            alphabet: alphabet.into_iter().map(Into::into).collect(),
            events: Vec::new(),
            index: BTreeMap::new(),
            metadata: TraceMetadata::default(),
        }
    }

    pub fn new<I, S>(alphabet: I, events: Vec<Event>) -> Result<Self, EventError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut trace = Self::empty(alphabet);
        for e in events {
            trace.insert(e)?;
        }
        Ok(trace)
    }

    /// Insert keeping `(t_start, id)` order.
    pub fn insert(&mut self, event: Event) -> Result<(), EventError> {
        if self.index.contains_key(&event.id) {
            return Err(EventError::DuplicateId(event.id));
        }
        if !self.alphabet.contains(&event.label) {
            return Err(EventError::LabelNotInAlphabet {
                id: event.id,
                label: event.label,
            });
        }
        let pos = self
            .events
            .partition_point(|e| e.order_key() < event.order_key());
        self.events.insert(pos, event);
        self.reindex(pos);
        Ok(())
    }

    fn reindex(&mut self, from: usize) {
        for (i, e) in self.events.iter().enumerate().skip(from) {
            self.index.insert(e.id.clone(), i);
        }
    }

    pub fn with_metadata(mut self, scenario: impl Into<String>, seed: Option<u64>) -> Self {
        self.metadata = TraceMetadata {
            scenario: Some(scenario.into()),
            seed,
        };
        self
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Event> {
        self.index.get(id).map(|&i| &self.events[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn require(&self, id: &str) -> Result<&Event, EventError> {
        self.get(id)
            .ok_or_else(|| EventError::UnknownEvent(id.to_string()))
    }

    /// Every event other than `y` that starts no later than `y`, in storage
    /// order.
    pub fn candidate_causes(&self, y: &str) -> Result<Vec<&Event>, EventError> {
        let target = self.require(y)?;
        Ok(self
            .events
            .iter()
            .take_while(|e| e.t_start <= target.t_start)
            .filter(|e| e.id != target.id)
            .collect())
    }

    /// The context chain `y*` selected by `policy`.
    pub fn context_of(&self, y: &str, policy: &ContextPolicy) -> Result<Chain, EventError> {
        let preds = self.candidate_causes(y)?;
        let events = match policy {
            ContextPolicy::Window(k) => {
                let skip = preds.len().saturating_sub(*k);
                preds[skip..].iter().map(|&e| e.clone()).collect()
            }
            ContextPolicy::Explicit(ids) => {
                let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
                for id in &wanted {
                    self.require(id)?;
                    if !preds.iter().any(|e| e.id == *id) {
                        return Err(EventError::NotAPredecessor {
                            event: id.to_string(),
                            target: y.to_string(),
                        });
                    }
                }
                preds
                    .iter()
                    .filter(|e| wanted.contains(e.id.as_str()))
                    .map(|&e| e.clone())
                    .collect()
            }
        };
        Ok(Chain { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(spec: &[(&str, Tick)]) -> Trace {
        let events = spec.iter().map(|&(id, t)| Event::new(id, t, "s")).collect();
        Trace::new(["s"], events).unwrap()
    }

    #[test]
    fn chain_validation() {
        let evs = |ts: &[Tick]| -> Vec<Event> {
            ts.iter()
                .enumerate()
                .map(|(i, &t)| Event::new(format!("e{i}"), t, "s"))
                .collect()
        };
        assert_eq!(validate_chain(&evs(&[0, 1, 2])), Ok(ChainValidity::Valid));
        assert_eq!(
            validate_chain(&evs(&[2, 1])),
            Ok(ChainValidity::Invalid { index: 1 })
        );
        assert_eq!(validate_chain(&evs(&[])), Err(EventError::EmptyChain));

        // a may still be running when b starts.
        let a = Event::new("a", 0, "s").with_duration(5);
        let b = Event::new("b", 1, "s").with_duration(1);
        assert!(a.t_end() > b.t_end());
        assert_eq!(validate_chain([&a, &b]), Ok(ChainValidity::Valid));
    }

    #[test]
    fn insertion_keeps_order() {
        let t = trace(&[("c", 2), ("b", 0), ("a", 0), ("d", 1)]);
        let ids: Vec<_> = t.events().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "d", "c"]);
        assert_eq!(t.position("c"), Some(3));
    }

    #[test]
    fn rejects_duplicates_and_foreign_labels() {
        let mut t = trace(&[("a", 0)]);
        assert_eq!(
            t.insert(Event::new("a", 3, "s")),
            Err(EventError::DuplicateId("a".into()))
        );
        assert!(matches!(
            t.insert(Event::new("z", 3, "q")),
            Err(EventError::LabelNotInAlphabet { .. })
        ));
    }

    #[test]
    fn context_window() {
        let t = trace(&[("a", 0), ("b", 1), ("c", 2)]);
        let ch = t.context_of("c", &ContextPolicy::Window(2)).unwrap();
        assert_eq!(ch.to_string(), "a.b");

        let t = trace(&[("a", 0)]);
        assert!(t.context_of("a", &ContextPolicy::Window(3)).unwrap().is_empty());

        // tie at t=0 broken by id, latest kept
        let t = trace(&[("a", 0), ("b", 0), ("c", 1)]);
        let ch = t.context_of("c", &ContextPolicy::Window(1)).unwrap();
        assert_eq!(ch.ids(), ["b"]);
    }

    #[test]
    fn context_explicit() {
        let t = trace(&[("a", 0), ("b", 1), ("c", 2), ("d", 3)]);
        let ch = t
            .context_of("c", &ContextPolicy::Explicit(vec!["b".into(), "a".into()]))
            .unwrap();
        assert_eq!(ch.ids(), ["a", "b"]);
        assert!(matches!(
            t.context_of("c", &ContextPolicy::Explicit(vec!["d".into()])),
            Err(EventError::NotAPredecessor { .. })
        ));
        assert!(matches!(
            t.context_of("c", &ContextPolicy::Explicit(vec!["zz".into()])),
            Err(EventError::UnknownEvent(_))
        ));
    }

    #[test]
    fn candidate_cause_examples() {
        let t = trace(&[("a", 0), ("b", 1)]);
        let ids = |v: Vec<&Event>| v.into_iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(t.candidate_causes("b").unwrap()), ["a"]);
        assert!(t.candidate_causes("a").unwrap().is_empty());

        let t = trace(&[("a", 0), ("b", 2), ("c", 2)]);
        assert_eq!(ids(t.candidate_causes("c").unwrap()), ["a", "b"]);
        // simultaneous events precede each other
        assert_eq!(ids(t.candidate_causes("b").unwrap()), ["a", "c"]);
        assert_eq!(
            t.candidate_causes("q"),
            Err(EventError::UnknownEvent("q".into()))
        );
    }

    #[test]
    fn json_roundtrip_uses_short_field_names() {
        let t = trace(&[("a", 0), ("b", 1)]);
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"t\":0"));
        let back: Trace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);

        let bad = r#"{"alphabet":["s"],"events":[{"id":"a","t":0,"d":0,"label":"s"},{"id":"a","t":1,"d":0,"label":"s"}]}"#;
        assert!(serde_json::from_str::<Trace>(bad).is_err());
    }
}
