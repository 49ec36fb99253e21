//! Exhaustive search over integer levels for the stratification check.
//!
//! Formulas are built from membership and equality between variables and
//! set literals, with connectives and quantifiers. Bound variables count as
//! separate level variables.

use std::collections::{BTreeMap, BTreeSet};

use matic_core::logic::{Formula, Modifier, Quantifier, Term};
use rand::Rng;

pub const NAMES: [&str; 4] = ["x", "y", "z", "w"];
pub const MAX_VARS: usize = 4;
pub const LEVEL_RANGE: i64 = 12;

pub fn gen_term<R: Rng>(rng: &mut R, nest: usize) -> Term {
    if nest == 0 || rng.random_bool(0.75) {
        Term::var(NAMES[rng.random_range(0..NAMES.len())])
    } else {
        let n = rng.random_range(1..=2);
        Term::SetLit((0..n).map(|_| gen_term(rng, nest - 1)).collect())
    }
}

pub fn gen_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.3) {
        let (a, b) = (gen_term(rng, 2), gen_term(rng, 2));
        return if rng.random_bool(0.7) {
            Formula::member(a, b)
        } else {
            Formula::Eq(a, b)
        };
    }
    let var = NAMES[rng.random_range(0..NAMES.len())];
    match rng.random_range(0..6) {
        0 => Formula::not(gen_formula(rng, depth - 1)),
        1 => Formula::and(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        2 => Formula::or(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        3 => Formula::implies(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        4 => Formula::quant(Quantifier::Forall, Modifier::Plain, var, gen_formula(rng, depth - 1)),
        _ => Formula::quant(Quantifier::Exists, Modifier::Plain, var, gen_formula(rng, depth - 1)),
    }
}

/// `level(a) - level(b) = d`
pub type Constraint = (usize, usize, i64);

pub struct Collector {
    pub names: Vec<String>,
    used: BTreeSet<String>,
    scopes: Vec<(String, usize)>,
    free: BTreeMap<String, usize>,
    pub constraints: Vec<Constraint>,
}

impl Collector {
    fn new(free: BTreeSet<String>) -> Self {
        let mut c = Self {
            names: Vec::new(),
            used: free.clone(),
            scopes: Vec::new(),
            free: BTreeMap::new(),
            constraints: Vec::new(),
        };
        for v in free {
            c.free.insert(v.clone(), c.names.len());
            c.names.push(v);
        }
        c
    }

    fn var(&self, v: &str) -> usize {
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, i)| *i)
            .unwrap_or_else(|| self.free[v])
    }

    /// Level of a term as `(variable, offset)`.
    fn term(&mut self, t: &Term) -> (usize, i64) {
        match t {
            Term::Var(v) => (self.var(v), 0),
            Term::SetLit(items) => {
                let parts: Vec<(usize, i64)> = items.iter().map(|i| self.term(i)).collect();
                let (v0, o0) = parts[0];
                for &(v, o) in &parts[1..] {
                    self.constraints.push((v, v0, o0 - o));
                }
                (v0, o0 + 1)
            }
            other => panic!("generator does not produce {other}"),
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::Member(a, b) => {
                let ((va, oa), (vb, ob)) = (self.term(a), self.term(b));
                self.constraints.push((vb, va, oa + 1 - ob));
            }
            Formula::Eq(a, b) => {
                let ((va, oa), (vb, ob)) = (self.term(a), self.term(b));
                self.constraints.push((vb, va, oa - ob));
            }
            Formula::Not(x) => self.formula(x),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            Formula::Quant { var, body, .. } => {
                let label = if self.used.contains(var) {
                    (1..).map(|k| format!("{var}#{k}")).find(|c| !self.used.contains(c)).unwrap()
                } else {
                    var.clone()
                };
                self.used.insert(label.clone());
                self.scopes.push((var.clone(), self.names.len()));
                self.names.push(label);
                self.formula(body);
                self.scopes.pop();
            }
            other => panic!("generator does not produce {other}"),
        }
    }
}

pub fn satisfies(levels: &[i64], cs: &[Constraint]) -> bool {
    cs.iter().all(|&(a, b, d)| levels[a] - levels[b] == d)
}

pub fn search(levels: &mut Vec<i64>, n: usize, cs: &[Constraint]) -> bool {
    let i = levels.len();
    if i == n {
        return true;
    }
    for l in 0..=LEVEL_RANGE {
        levels.push(l);
        let ok = cs
            .iter()
            .filter(|&&(a, b, _)| a.max(b) == i)
            .all(|&(a, b, d)| levels[a] - levels[b] == d);
        if ok && search(levels, n, cs) {
            return true;
        }
        levels.pop();
    }
    false
}

pub fn oracle(f: &Formula) -> (Collector, bool) {
    let mut c = Collector::new(f.free_vars());
    c.formula(f);
    let mut levels = Vec::new();
    let ok = search(&mut levels, c.names.len(), &c.constraints);
    (c, ok)
}

/// Compare `stratify_formula` with the search. Returns whether the formula
/// is stratified, or a description of the disagreement.
pub fn check(f: &Formula) -> Result<bool, String> {
    use matic_core::logic::{stratify_formula, Stratification};
    let (c, expected) = oracle(f);
    match stratify_formula(f) {
        Stratification::Stratified(levels) => {
            if !expected {
                return Err(format!("`{f}` stratified but the search found no levels"));
            }
            let assigned: Vec<i64> = c.names.iter().map(|n| levels[n]).collect();
            if !satisfies(&assigned, &c.constraints) {
                return Err(format!("`{f}`: levels {levels:?} violate a constraint"));
            }
        }
        Stratification::NotStratified { cycle } => {
            if expected {
                return Err(format!("`{f}` rejected but the search found levels"));
            }
            if cycle.len() < 2 || cycle.first() != cycle.last() {
                return Err(format!("`{f}`: malformed cycle {cycle:?}"));
            }
        }
    }
    Ok(expected)
}

/// Generated formulas within the variable budget, in generation order.
pub fn formulas(seed: u64, count: usize) -> Vec<Formula> {
    let mut rng = matic_core::rng::seeded(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let f = gen_formula(&mut rng, 3);
        if oracle(&f).0.names.len() <= MAX_VARS {
            out.push(f);
        }
    }
    out
}
