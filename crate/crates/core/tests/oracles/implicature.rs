//! Independent re-derivation of the conditional counts and an exhaustive
//! scan over index subsets.

use std::collections::{BTreeMap, BTreeSet};

use matic_core::event::{Event, Trace};
use matic_core::rng::seeded;
use rand::Rng;

pub const ALPHABET: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_trace<R: Rng>(rng: &mut R, prefix: &str, len: usize, labels: usize) -> Trace {
    let mut t = 0u64;
    let events = (0..len)
        .map(|i| {
            // occasional simultaneous events
            if i > 0 && rng.random_bool(0.8) {
                t += rng.random_range(1..3);
            }
            Event::new(format!("{prefix}{i}"), t, ALPHABET[rng.random_range(0..labels)])
        })
        .collect();
    Trace::new(ALPHABET, events).unwrap()
}

pub fn preds<'a>(trace: &'a Trace, y: &Event) -> Vec<&'a Event> {
    trace
        .events()
        .iter()
        .filter(|e| e.id != y.id && e.t_start <= y.t_start)
        .collect()
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

type Key = (Vec<String>, String);
pub type Counts = BTreeMap<Key, BTreeMap<String, u64>>;

/// Every label multiset of size <= k drawn from the predecessors stored before
/// the last occurrence of the cause label, counted once per outcome event.
pub fn counts(corpus: &[Trace], k: usize) -> Counts {
    let mut counts: Counts = BTreeMap::new();
    for trace in corpus {
        for y in trace.events() {
            let p = preds(trace, y);
            let causes: BTreeSet<&str> = p.iter().map(|e| e.label.as_str()).collect();
            for cause in causes {
                let last = p.iter().rposition(|e| e.label == cause).unwrap();
                let mut sigs = BTreeSet::new();
                for s in subsets(last, k) {
                    let mut sig: Vec<String> = s.iter().map(|&i| p[i].label.clone()).collect();
                    sig.sort();
                    sigs.insert(sig);
                }
                for sig in sigs {
                    *counts
                        .entry((sig, cause.to_string()))
                        .or_default()
                        .entry(y.label.clone())
                        .or_default() += 1;
                }
            }
        }
    }
    counts
}

pub fn surprisal(counts: &Counts, context: &[&str], cause: &str, outcome: &str, lambda: f64) -> f64 {
    let mut sig: Vec<String> = context.iter().map(|s| s.to_string()).collect();
    sig.sort();
    let row = counts.get(&(sig, cause.to_string()));
    let total: u64 = row.map_or(0, |r| r.values().sum());
    let c = row.and_then(|r| r.get(outcome)).copied().unwrap_or(0);
    let a = ALPHABET.len() as f64;
    let p = (c as f64 + lambda) / (total as f64 + lambda * a);
    -p.log2()
}

pub struct Case {
    pub corpus: Vec<Trace>,
    pub trace: Trace,
    pub y: String,
    pub k: usize,
    pub lambda: f64,
}

/// A random corpus and a target event with between one and six
/// predecessors.
pub fn case(seed: u64) -> Case {
    let mut rng = seeded(seed);
    let labels = rng.random_range(2..=4);
    let corpus = (0..rng.random_range(2..6))
        .map(|i| {
            let len = rng.random_range(2..9);
            random_trace(&mut rng, &format!("c{i}_"), len, labels)
        })
        .collect();
    let len = rng.random_range(2..=7);
    let trace = random_trace(&mut rng, "e", len, labels);
    let ys: Vec<String> = trace
        .events()
        .iter()
        .filter(|y| !preds(&trace, y).is_empty())
        .map(|y| y.id.clone())
        .collect();
    let y = ys[rng.random_range(0..ys.len())].clone();
    let k = rng.random_range(0..=3);
    let lambda = [1.0, 0.5, 0.1][rng.random_range(0..3)];
    Case {
        corpus,
        trace,
        y,
        k,
        lambda,
    }
}

/// `(surprisal, cause id, context ids)` of the winner under the documented
/// tie-break: surprisal, context size, cause time, cause id, context indices.
pub fn best(c: &Case) -> (f64, String, Vec<String>) {
    let counts = counts(&c.corpus, c.k);
    let y = c.trace.get(&c.y).unwrap();
    let p = preds(&c.trace, y);
    let mut best: Option<(f64, usize, u64, String, Vec<usize>)> = None;
    for ctx in subsets(p.len(), c.k) {
        let labels: Vec<&str> = ctx.iter().map(|&i| p[i].label.as_str()).collect();
        for cause in (0..p.len()).filter(|i| !ctx.contains(i)) {
            let s = surprisal(&counts, &labels, &p[cause].label, &y.label, c.lambda);
            let key = (s, ctx.len(), p[cause].t_start, p[cause].id.clone(), ctx.clone());
            let better = match &best {
                None => true,
                Some(b) => (key.0, key.1, key.2, &key.3, &key.4) < (b.0, b.1, b.2, &b.3, &b.4),
            };
            if better {
                best = Some(key);
            }
        }
    }
    let (s, _, _, cause, ctx) = best.unwrap();
    (s, cause, ctx.iter().map(|&i| p[i].id.clone()).collect())
}
