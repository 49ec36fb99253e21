//! Causal implicature: which earlier event best explains `y`?
//!
//! Candidates are pairs `(context, cause)` drawn from the events preceding
//! `y`. Each pair is scored by the surprisal of `y`'s label under an
//! empirical conditional model keyed on the context's label multiset and the
//! cause's label; the minimiser is the implied cause.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, EventError, Trace};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_MAX_CONTEXT: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImplicatureError {
    #[error("event `{0}` has no preceding events")]
    NoCandidates(String),
    #[error("model has not seen label `{0}`")]
    UntrainedModel(String),
    #[error("smoothing constant must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),
    #[error("element is not in the lattice")]
    NotInLattice,
    #[error("no pseudo-complement: several maximal elements lie below the complement")]
    NoPseudoComplement,
    #[error("no relative pseudo-complement: several maximal candidates")]
    NoImplication,
    #[error("invalid candidate pair: {0}")]
    InvalidPair(String),
    #[error(transparent)]
    Event(#[from] EventError),
}

type Result<T> = std::result::Result<T, ImplicatureError>;

/// A lattice element: a set of atom indices.
pub type Element = BTreeSet<usize>;

/// Subsets of the events preceding `y` of size at most `k`, plus the full
/// set. Ordered by inclusion; meet is intersection.
///
/// The family is never materialised: membership is a size test.
#[derive(Debug, Clone)]
pub struct ImplicatureLattice {
    atoms: Vec<Event>,
    max_context: usize,
}

impl ImplicatureLattice {
    pub fn build(trace: &Trace, y: &str, max_context: usize) -> Result<Self> {
        let atoms = trace.candidate_causes(y)?.into_iter().cloned().collect();
        Ok(Self { atoms, max_context })
    }

    pub fn from_atoms(atoms: Vec<Event>, max_context: usize) -> Self {
        Self { atoms, max_context }
    }

    pub fn atoms(&self) -> &[Event] {
        &self.atoms
    }

    pub fn max_context(&self) -> usize {
        self.max_context
    }

    pub fn top(&self) -> Element {
        (0..self.atoms.len()).collect()
    }

    pub fn bottom(&self) -> Element {
        Element::new()
    }

    pub fn contains(&self, x: &Element) -> bool {
        x.iter().all(|&i| i < self.atoms.len())
            && (x.len() <= self.max_context || x.len() == self.atoms.len())
    }

    /// Number of distinct elements.
    pub fn len(&self) -> usize {
        let n = self.atoms.len();
        let below: usize = (0..=self.max_context.min(n)).map(|i| binomial(n, i)).sum();
        below + usize::from(n > self.max_context)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All elements, by size then lexicographically.
    pub fn elements(&self) -> Vec<Element> {
        let n = self.atoms.len();
        let mut out = Vec::with_capacity(self.len());
        for size in 0..=self.max_context.min(n) {
            for_each_combination(n, size, |c| out.push(c.iter().copied().collect()));
        }
        if n > self.max_context {
            out.push(self.top());
        }
        out
    }

    fn require(&self, x: &Element) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(ImplicatureError::NotInLattice)
        }
    }

    pub fn meet(&self, x: &Element, y: &Element) -> Result<Element> {
        self.require(x)?;
        self.require(y)?;
        Ok(x.intersection(y).copied().collect())
    }

    pub fn leq(&self, x: &Element, y: &Element) -> bool {
        x.is_subset(y)
    }

    /// Greatest family member contained in `w`, if there is exactly one.
    fn largest_below(&self, w: Element) -> Option<Element> {
        if self.contains(&w) {
            Some(w)
        } else if self.max_context == 0 {
            Some(Element::new())
        } else {
            None
        }
    }

    /// Greatest `z` with `x ∧ z = ⊥`.
    ///
    /// When `⊤ \ x` is larger than `k` atoms the subsets of size `k` below it
    /// are pairwise incomparable and no greatest one exists.
    pub fn pseudo_complement(&self, x: &Element) -> Result<Element> {
        self.require(x)?;
        let c: Element = self.top().difference(x).copied().collect();
        self.largest_below(c)
            .ok_or(ImplicatureError::NoPseudoComplement)
    }

    /// Greatest `z` with `x ∧ z ≤ y`.
    pub fn heyting_implies(&self, x: &Element, y: &Element) -> Result<Element> {
        self.require(x)?;
        self.require(y)?;
        let w: Element = self
            .top()
            .into_iter()
            .filter(|i| !x.contains(i) || y.contains(i))
            .collect();
        self.largest_below(w).ok_or(ImplicatureError::NoImplication)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Calls `f` with every strictly increasing `size`-tuple from `0..n`, in
/// lexicographic order.
pub(crate) fn for_each_combination(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A scored `(context, cause)` candidate for the implied cause of `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    /// Context event ids, in trace order.
    pub context: Vec<String>,
    pub cause: String,
    pub surprisal: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Row {
    counts: Vec<u64>,
    total: u64,
}

impl Row {
    fn zeros(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            total: 0,
        }
    }

    fn bump(&mut self, outcome: usize, by: u64) {
        self.counts[outcome] += by;
        self.total += by;
    }
}

// (sorted context label indices, cause label index)
type Key = (Vec<u32>, u32);

/// Empirical outcome counts keyed by context signature and cause label.
///
/// Training visits every event `y` of every corpus trace. For each distinct
/// cause label among `y`'s predecessors and each distinct label multiset of
/// size at most `max_context` drawn from predecessors stored before some
/// instance of that cause, the count for `y`'s label is incremented once.
/// Contexts therefore precede their cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ConditionalModel {
    alphabet: Vec<String>,
    lambda: f64,
    max_context: usize,
    table: HashMap<Key, Row>,
    marginal: Row,
}

/// JSON form of a [`ConditionalModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub alphabet: Vec<String>,
    pub lambda: f64,
    pub max_context: usize,
    pub marginal: BTreeMap<String, u64>,
    pub records: Vec<CountRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountRecord {
    pub context: Vec<String>,
    pub cause: String,
    pub outcome: String,
    pub count: u64,
}

impl TryFrom<ModelFile> for ConditionalModel {
    type Error = ImplicatureError;

    fn try_from(f: ModelFile) -> Result<Self> {
        let mut model = ConditionalModel::untrained(f.alphabet, f.max_context, f.lambda)?;
        let idx = |m: &ConditionalModel, l: &str| {
            m.label_index(l)
                .ok_or_else(|| ImplicatureError::UntrainedModel(l.to_string()))
        };
        for (label, count) in &f.marginal {
            let o = idx(&model, label)? as usize;
            model.marginal.bump(o, *count);
        }
        let n = model.alphabet.len();
        for r in &f.records {
            let mut sig = r
                .context
                .iter()
                .map(|l| idx(&model, l))
                .collect::<Result<Vec<_>>>()?;
            sig.sort_unstable();
            let cause = idx(&model, &r.cause)?;
            let o = idx(&model, &r.outcome)? as usize;
            model
                .table
                .entry((sig, cause))
                .or_insert_with(|| Row::zeros(n))
                .bump(o, r.count);
        }
        Ok(model)
    }
}

impl From<ConditionalModel> for ModelFile {
    fn from(m: ConditionalModel) -> Self {
        let name = |i: u32| m.alphabet[i as usize].clone();
        let mut records = Vec::new();
        for ((sig, cause), row) in &m.table {
            for (o, &count) in row.counts.iter().enumerate() {
                if count > 0 {
                    records.push(CountRecord {
                        context: sig.iter().map(|&i| name(i)).collect(),
                        cause: name(*cause),
                        outcome: m.alphabet[o].clone(),
                        count,
                    });
                }
            }
        }
        records.sort();
        let marginal = m
            .alphabet
            .iter()
            .zip(&m.marginal.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l.clone(), c))
            .collect();
        ModelFile {
            alphabet: m.alphabet,
            lambda: m.lambda,
            max_context: m.max_context,
            marginal,
            records,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(ImplicatureError::InvalidSmoothing(lambda))
    }
}

impl ConditionalModel {
    fn untrained<I, S>(alphabet: I, max_context: usize, lambda: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        check_lambda(lambda)?;
        let alphabet: Vec<String> = alphabet
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = alphabet.len();
        Ok(Self {
            alphabet,
            lambda,
            max_context,
            table: HashMap::new(),
            marginal: Row::zeros(n),
        })
    }

    /// Count outcomes over `corpus`. The alphabet is the union of the
    /// traces' alphabets.
    pub fn train(corpus: &[Trace], max_context: usize, lambda: f64) -> Result<Self> {
        let mut model = Self::untrained(
            corpus.iter().flat_map(|t| t.alphabet().iter().cloned()),
            max_context,
            lambda,
        )?;
        let n = model.alphabet.len();
        for trace in corpus {
            let labels: Vec<u32> = trace
                .events()
                .iter()
                .map(|e| model.label_index(&e.label).expect("alphabet covers trace"))
                .collect();
            for (pos, y) in trace.events().iter().enumerate() {
                let outcome = labels[pos] as usize;
                model.marginal.bump(outcome, 1);
                let preds: Vec<usize> = trace
                    .candidate_causes(&y.id)?
                    .iter()
                    .map(|e| labels[trace.position(&e.id).expect("own event")] as usize)
                    .collect();
                // the prefix before the last instance of a label contains
                // the prefixes of all earlier instances
                let mut last = vec![usize::MAX; n];
                for (j, &l) in preds.iter().enumerate() {
                    last[l] = j;
                }
                let mut running = vec![0usize; n];
                for (j, &cause) in preds.iter().enumerate() {
                    if last[cause] == j {
                        for_each_submultiset(&running, max_context, |sig| {
                            model
                                .table
                                .entry((sig.to_vec(), cause as u32))
                                .or_insert_with(|| Row::zeros(n))
                                .bump(outcome, 1);
                        });
                    }
                    running[cause] += 1;
                }
            }
        }
        Ok(model)
    }

    /// Same counts, different smoothing.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_context(&self) -> usize {
        self.max_context
    }

    fn label_index(&self, label: &str) -> Option<u32> {
        self.alphabet
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
            .map(|i| i as u32)
    }

    fn signature(&self, context: &[&str]) -> Option<Vec<u32>> {
        let mut sig = context
            .iter()
            .map(|l| self.label_index(l))
            .collect::<Option<Vec<_>>>()?;
        sig.sort_unstable();
        Some(sig)
    }

    fn row(&self, context: &[&str], cause: &str) -> Option<&Row> {
        let key = (self.signature(context)?, self.label_index(cause)?);
        self.table.get(&key)
    }

    fn smoothed(&self, count: u64, total: u64) -> f64 {
        let denom = total as f64 + self.lambda * self.alphabet.len() as f64;
        if denom == 0.0 {
            1.0 / self.alphabet.len() as f64
        } else {
            (count as f64 + self.lambda) / denom
        }
    }

    fn row_probability(&self, row: Option<&Row>, outcome: usize) -> f64 {
        match row {
            Some(r) => self.smoothed(r.counts[outcome], r.total),
            None => self.smoothed(0, 0),
        }
    }

    fn require_outcome(&self, outcome: &str) -> Result<usize> {
        self.label_index(outcome)
            .map(|i| i as usize)
            .ok_or_else(|| ImplicatureError::UntrainedModel(outcome.to_string()))
    }

    /// Smoothed `p(outcome | context labels, cause label)`. Unknown context
    /// or cause labels read as unseen.
    pub fn probability(&self, context: &[&str], cause: &str, outcome: &str) -> Result<f64> {
        let o = self.require_outcome(outcome)?;
        Ok(self.row_probability(self.row(context, cause), o))
    }

    /// `-log2` of [`Self::probability`], in bits.
    pub fn surprisal(&self, context: &[&str], cause: &str, outcome: &str) -> Result<f64> {
        self.probability(context, cause, outcome).map(bits)
    }

    /// Raw outcome counts for a context and cause; `None` when never seen.
    pub fn counts(&self, context: &[&str], cause: &str) -> Option<BTreeMap<String, u64>> {
        self.row(context, cause).map(|r| self.named(r))
    }

    pub fn marginal_counts(&self) -> BTreeMap<String, u64> {
        self.named(&self.marginal)
    }

    fn named(&self, row: &Row) -> BTreeMap<String, u64> {
        self.alphabet
            .iter()
            .zip(&row.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l.clone(), c))
            .collect()
    }

    /// Smoothed outcome distribution, over the whole alphabet.
    pub fn distribution(&self, context: &[&str], cause: &str) -> BTreeMap<String, f64> {
        let row = self.row(context, cause);
        (0..self.alphabet.len())
            .map(|o| (self.alphabet[o].clone(), self.row_probability(row, o)))
            .collect()
    }

    /// Smoothed marginal outcome distribution.
    pub fn marginal_distribution(&self) -> BTreeMap<String, f64> {
        (0..self.alphabet.len())
            .map(|o| {
                (
                    self.alphabet[o].clone(),
                    self.smoothed(self.marginal.counts[o], self.marginal.total),
                )
            })
            .collect()
    }

    fn surprisal_idx(&self, sig: &[u32], cause: u32, outcome: usize) -> f64 {
        // lookups need an owned key
        let row = self.table.get(&(sig.to_vec(), cause));
        bits(self.row_probability(row, outcome))
    }
}

fn bits(p: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else {
        // avoid -0.0 when p == 1
        (-p.log2()).max(0.0)
    }
}

/// Visits every sorted multiset of size `<= max` drawn from `available`
/// (a count per label index).
fn for_each_submultiset(available: &[usize], max: usize, mut f: impl FnMut(&[u32])) {
    fn go(
        available: &[usize],
        label: usize,
        budget: usize,
        cur: &mut Vec<u32>,
        f: &mut dyn FnMut(&[u32]),
    ) {
        if label == available.len() {
            f(cur);
            return;
        }
        let take_max = available[label].min(budget);
        for take in 0..=take_max {
            for _ in 0..take {
                cur.push(label as u32);
            }
            go(available, label + 1, budget - take, cur, f);
            for _ in 0..take {
                cur.pop();
            }
        }
    }
    go(available, 0, max, &mut Vec::new(), &mut f);
}

/// Surprisal of `y` under a specific pair from `trace`.
pub fn score_candidate(
    model: &ConditionalModel,
    trace: &Trace,
    y: &str,
    pair: &CandidatePair,
) -> Result<f64> {
    let target = trace
        .get(y)
        .ok_or_else(|| EventError::UnknownEvent(y.to_string()))?;
    let preds = trace.candidate_causes(y)?;
    let find = |id: &str| -> Result<&Event> {
        preds
            .iter()
            .find(|e| e.id == id)
            .copied()
            .ok_or_else(|| ImplicatureError::InvalidPair(format!("`{id}` does not precede `{y}`")))
    };
    if pair.context.contains(&pair.cause) {
        return Err(ImplicatureError::InvalidPair(format!(
            "cause `{}` is also in the context",
            pair.cause
        )));
    }
    let cause = find(&pair.cause)?;
    let context = pair
        .context
        .iter()
        .map(|id| find(id).map(|e| e.label.as_str()))
        .collect::<Result<Vec<_>>>()?;
    model.surprisal(&context, &cause.label, &target.label)
}

/// Full tie-break key: surprisal, context size, cause time, cause id, then
/// context atom indices.
fn compare(
    a: (f64, &[usize], &Event),
    b: (f64, &[usize], &Event),
) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.len().cmp(&b.1.len()))
        .then(a.2.t_start.cmp(&b.2.t_start))
        .then_with(|| a.2.id.cmp(&b.2.id))
        .then_with(|| a.1.cmp(b.1))
}

fn pair_from(atoms: &[&Event], context: &[usize], cause: usize, surprisal: f64) -> CandidatePair {
    CandidatePair {
        context: context.iter().map(|&i| atoms[i].id.clone()).collect(),
        cause: atoms[cause].id.clone(),
        surprisal,
    }
}

fn setup<'t>(
    model: &ConditionalModel,
    trace: &'t Trace,
    y: &str,
) -> Result<(Vec<&'t Event>, usize)> {
    let atoms = trace.candidate_causes(y)?;
    if atoms.is_empty() {
        return Err(ImplicatureError::NoCandidates(y.to_string()));
    }
    let label = &trace.get(y).expect("checked by candidate_causes").label;
    let outcome = model.require_outcome(label)?;
    Ok((atoms, outcome))
}

/// The minimal-surprisal pair among all contexts of size `<= k`.
///
/// Pairs that share a context signature and cause label score identically,
/// so each distinct signature is scored once per cause label and only the
/// lexicographically earliest realising subset is materialised.
pub fn infer_cause(
    model: &ConditionalModel,
    trace: &Trace,
    y: &str,
    k: usize,
) -> Result<CandidatePair> {
    let (atoms, outcome) = setup(model, trace, y)?;
    let n_labels = model.alphabet.len();
    // atoms with labels unknown to the model get a private index past the
    // alphabet; their rows are always unseen
    let mut extra: BTreeMap<&str, u32> = BTreeMap::new();
    let label_of: Vec<u32> = atoms
        .iter()
        .map(|e| {
            model.label_index(&e.label).unwrap_or_else(|| {
                let next = (n_labels + extra.len()) as u32;
                *extra.entry(e.label.as_str()).or_insert(next)
            })
        })
        .collect();
    let width = n_labels + extra.len();
    let mut multiset = vec![0usize; width];
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); width];
    for (i, &l) in label_of.iter().enumerate() {
        multiset[l as usize] += 1;
        by_label[l as usize].push(i);
    }

    let cause_labels: Vec<u32> = (0..width as u32)
        .filter(|&l| multiset[l as usize] > 0)
        .collect();
    let per_label: Vec<(f64, Vec<Vec<u32>>)> = cause_labels
        .par_iter()
        .map(|&cl| {
            let mut rest = multiset.clone();
            rest[cl as usize] -= 1;
            let mut best = f64::INFINITY;
            let mut best_size = usize::MAX;
            let mut sigs: Vec<Vec<u32>> = Vec::new();
            for_each_submultiset(&rest, k, |sig| {
                let s = if (cl as usize) < n_labels && sig.iter().all(|&l| (l as usize) < n_labels)
                {
                    model.surprisal_idx(sig, cl, outcome)
                } else {
                    bits(model.row_probability(None, outcome))
                };
                match s.total_cmp(&best).then(sig.len().cmp(&best_size)) {
                    Ordering::Less => {
                        best = s;
                        best_size = sig.len();
                        sigs.clear();
                        sigs.push(sig.to_vec());
                    }
                    Ordering::Equal => sigs.push(sig.to_vec()),
                    Ordering::Greater => {}
                }
            });
            (best, sigs)
        })
        .collect();

    let mut winner: Option<(f64, Vec<usize>, usize)> = None;
    for (&cl, (score, sigs)) in cause_labels.iter().zip(&per_label) {
        for &cause in &by_label[cl as usize] {
            for sig in sigs {
                let context = realise(sig, &by_label, cause);
                let better = match &winner {
                    None => true,
                    Some((ws, wc, wcause)) => {
                        compare(
                            (*score, &context, atoms[cause]),
                            (*ws, wc, atoms[*wcause]),
                        ) == Ordering::Less
                    }
                };
                if better {
                    winner = Some((*score, context, cause));
                }
            }
        }
    }
    let (score, context, cause) = winner.expect("at least one cause");
    Ok(pair_from(&atoms, &context, cause, score))
}

/// Earliest atoms realising `sig`, skipping the cause.
fn realise(sig: &[u32], by_label: &[Vec<usize>], cause: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(sig.len());
    let mut i = 0;
    while i < sig.len() {
        let l = sig[i];
        let m = sig[i..].iter().take_while(|&&x| x == l).count();
        out.extend(
            by_label[l as usize]
                .iter()
                .filter(|&&a| a != cause)
                .take(m),
        );
        i += m;
    }
    out.sort_unstable();
    out
}

/// Every candidate pair with context size `<= k`, scored and sorted best
/// first. Exhaustive; no signature sharing.
pub fn rank_candidates(
    model: &ConditionalModel,
    trace: &Trace,
    y: &str,
    k: usize,
) -> Result<Vec<CandidatePair>> {
    let (atoms, _) = setup(model, trace, y)?;
    let y_label = &trace.get(y).expect("checked").label;
    let n = atoms.len();
    let mut scored: Vec<(f64, Vec<usize>, usize)> = Vec::new();
    for size in 0..=k.min(n) {
        let mut err = None;
        for_each_combination(n, size, |ctx| {
            let labels: Vec<&str> = ctx.iter().map(|&i| atoms[i].label.as_str()).collect();
            for cause in (0..n).filter(|c| !ctx.contains(c)) {
                match model.surprisal(&labels, &atoms[cause].label, y_label) {
                    Ok(s) => scored.push((s, ctx.to_vec(), cause)),
                    Err(e) => err = Some(e),
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    scored.sort_by(|a, b| compare((a.0, &a.1, atoms[a.2]), (b.0, &b.1, atoms[b.2])));
    Ok(scored
        .into_iter()
        .map(|(s, ctx, cause)| pair_from(&atoms, &ctx, cause, s))
        .collect())
}

/// Reference answer for [`infer_cause`]: the head of [`rank_candidates`].
pub fn brute_force_oracle(
    model: &ConditionalModel,
    trace: &Trace,
    y: &str,
    k: usize,
) -> Result<CandidatePair> {
    let ranked = rank_candidates(model, trace, y, k)?;
    Ok(ranked.into_iter().next().expect("non-empty candidate set"))
}
