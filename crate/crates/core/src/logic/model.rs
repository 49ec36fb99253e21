//! Finite models: evaluation with standardness, plus incremental and
//! inductive sets over a finite universe.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Formula, Modifier, Quantifier, Term};
use super::LogicError;

/// A finite structure with a membership relation and a standardness mark.
///
/// `^st` and `^stfin` quantifiers both range over the standard elements:
/// every element of a finite model is finite.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteModel {
    pub universe: BTreeSet<String>,
    pub standard: BTreeSet<String>,
    /// `(member, set)` pairs.
    pub membership: BTreeSet<(String, String)>,
    /// Element interpreting the numeral `0`, unless `constants` says
    /// otherwise.
    pub zero: Option<String>,
    pub constants: BTreeMap<String, String>,
    pub relations: BTreeMap<String, BTreeSet<Vec<String>>>,
    pub functions: BTreeMap<String, BTreeMap<Vec<String>, String>>,
}

/// What a term denotes: an element, or a collection not (yet) identified
/// with one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Element(String),
    Extension(BTreeSet<String>),
}

pub type Env = BTreeMap<String, Value>;

impl FiniteModel {
    pub fn new<I, S>(universe: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            universe: universe.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn with_standard<I, S>(mut self, standard: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.standard = standard.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_member(mut self, member: &str, set: &str) -> Self {
        self.membership.insert((member.to_string(), set.to_string()));
        self
    }

    pub fn with_zero(mut self, zero: &str) -> Self {
        self.zero = Some(zero.to_string());
        self
    }

    pub fn with_constant(mut self, name: &str, element: &str) -> Self {
        self.constants.insert(name.to_string(), element.to_string());
        self
    }

    pub fn with_relation(mut self, name: &str, tuple: &[&str]) -> Self {
        self.relations
            .entry(name.to_string())
            .or_default()
            .insert(tuple.iter().map(|s| s.to_string()).collect());
        self
    }

    /// Declare a relation that may be empty.
    pub fn with_empty_relation(mut self, name: &str) -> Self {
        self.relations.entry(name.to_string()).or_default();
        self
    }

    pub fn with_function(mut self, name: &str, args: &[&str], value: &str) -> Self {
        self.functions
            .entry(name.to_string())
            .or_default()
            .insert(args.iter().map(|s| s.to_string()).collect(), value.to_string());
        self
    }

    /// Everything mentioned must lie in the universe.
    pub fn validate(&self) -> Result<(), LogicError> {
        let bad = |what: &str, e: &str| Err(LogicError::InvalidModel(format!("{what} `{e}` is not in the universe")));
        if let Some(e) = self.standard.iter().find(|e| !self.universe.contains(*e)) {
            return bad("standard element", e);
        }
        for (a, b) in &self.membership {
            for e in [a, b] {
                if !self.universe.contains(e) {
                    return bad("membership element", e);
                }
            }
        }
        for e in self.zero.iter().chain(self.constants.values()) {
            if !self.universe.contains(e) {
                return bad("constant", e);
            }
        }
        for tuple in self.relations.values().flatten() {
            if let Some(e) = tuple.iter().find(|e| !self.universe.contains(*e)) {
                return bad("relation element", e);
            }
        }
        for (args, v) in self.functions.values().flatten() {
            if let Some(e) = args.iter().chain([v]).find(|e| !self.universe.contains(*e)) {
                return bad("function element", e);
            }
        }
        Ok(())
    }

    /// Members of element `e`.
    pub fn extension_of(&self, e: &str) -> BTreeSet<String> {
        self.membership
            .iter()
            .filter(|(_, s)| s == e)
            .map(|(m, _)| m.clone())
            .collect()
    }

    /// The least element whose members are exactly `ext`, if any.
    fn identify(&self, ext: &BTreeSet<String>) -> Option<String> {
        self.universe
            .iter()
            .find(|e| self.extension_of(e) == *ext)
            .cloned()
    }

    fn as_element(&self, v: Value) -> Option<String> {
        match v {
            Value::Element(e) => Some(e),
            Value::Extension(s) => self.identify(&s),
        }
    }

    fn as_set(&self, v: Value) -> BTreeSet<String> {
        match v {
            Value::Element(e) => self.extension_of(&e),
            Value::Extension(s) => s,
        }
    }

    pub fn eval_term(&self, t: &Term, env: &Env) -> Result<Value, LogicError> {
        match t {
            Term::Var(v) => env
                .get(v)
                .cloned()
                .or_else(|| self.constants.get(v).map(|e| Value::Element(e.clone())))
                .ok_or_else(|| LogicError::UnboundVariable(v.clone())),
            Term::Num(n) => self
                .constants
                .get(n)
                .or(if n == "0" { self.zero.as_ref() } else { None })
                .map(|e| Value::Element(e.clone()))
                .ok_or_else(|| LogicError::UnknownSymbol(n.clone())),
            Term::SetLit(items) => {
                let mut out = BTreeSet::new();
                for item in items {
                    let v = self.eval_term(item, env)?;
                    if let Some(e) = self.as_element(v) {
                        out.insert(e);
                    }
                }
                Ok(Value::Extension(out))
            }
            Term::Comprehension { var, body } => {
                let mut inner = env.clone();
                let mut out = BTreeSet::new();
                for u in &self.universe {
                    inner.insert(var.clone(), Value::Element(u.clone()));
                    if self.eval_in(body, &mut inner)? {
                        out.insert(u.clone());
                    }
                }
                Ok(Value::Extension(out))
            }
            Term::App { func, args } => {
                let table = self
                    .functions
                    .get(func)
                    .ok_or_else(|| LogicError::UnknownSymbol(func.clone()))?;
                let mut key = Vec::with_capacity(args.len());
                for a in args {
                    let v = self.eval_term(a, env)?;
                    match self.as_element(v) {
                        Some(e) => key.push(e),
                        None => return Err(LogicError::UnknownSymbol(format!("{t}"))),
                    }
                }
                table
                    .get(&key)
                    .map(|e| Value::Element(e.clone()))
                    .ok_or_else(|| LogicError::UnknownSymbol(format!("{func}({})", key.join(", "))))
            }
        }
    }

    /// Truth of `f` with free variables bound by `env`.
    pub fn eval(&self, f: &Formula, env: &Env) -> Result<bool, LogicError> {
        let mut env = env.clone();
        self.eval_in(f, &mut env)
    }

    fn eval_in(&self, f: &Formula, env: &mut Env) -> Result<bool, LogicError> {
        Ok(match f {
            Formula::Member(a, b) => {
                let a = self.eval_term(a, env)?;
                let b = self.eval_term(b, env)?;
                match self.as_element(a) {
                    Some(e) => self.as_set(b).contains(&e),
                    None => false,
                }
            }
            Formula::Eq(a, b) => {
                let a = self.eval_term(a, env)?;
                let b = self.eval_term(b, env)?;
                match (a, b) {
                    (Value::Element(x), Value::Element(y)) => x == y,
                    (a, b) => self.as_set(a) == self.as_set(b),
                }
            }
            Formula::St(t) => {
                let v = self.eval_term(t, env)?;
                self.as_element(v)
                    .is_some_and(|e| self.standard.contains(&e))
            }
            Formula::Rel { name, args } => {
                let tuples = self
                    .relations
                    .get(name)
                    .ok_or_else(|| LogicError::UnknownSymbol(name.clone()))?;
                let mut key = Vec::with_capacity(args.len());
                for a in args {
                    let v = self.eval_term(a, env)?;
                    match self.as_element(v) {
                        Some(e) => key.push(e),
                        None => return Ok(false),
                    }
                }
                tuples.contains(&key)
            }
            Formula::Not(x) => !self.eval_in(x, env)?,
            Formula::And(a, b) => self.eval_in(a, env)? && self.eval_in(b, env)?,
            Formula::Or(a, b) => self.eval_in(a, env)? || self.eval_in(b, env)?,
            Formula::Implies(a, b) => !self.eval_in(a, env)? || self.eval_in(b, env)?,
            Formula::Iff(a, b) => self.eval_in(a, env)? == self.eval_in(b, env)?,
            Formula::Quant {
                q,
                modifier,
                var,
                range,
                body,
            } => {
                let domain: Vec<String> = {
                    let base = match modifier {
                        Modifier::Plain => &self.universe,
                        Modifier::St | Modifier::StFin => &self.standard,
                    };
                    match range {
                        None => base.iter().cloned().collect(),
                        Some(r) => {
                            let v = self.eval_term(r, env)?;
                            let set = self.as_set(v);
                            base.iter().filter(|e| set.contains(*e)).cloned().collect()
                        }
                    }
                };
                let saved = env.remove(var);
                let mut result = matches!(q, Quantifier::Forall);
                for u in domain {
                    env.insert(var.clone(), Value::Element(u));
                    let holds = match self.eval_in(body, env) {
                        Ok(h) => h,
                        Err(e) => {
                            restore(env, var, saved);
                            return Err(e);
                        }
                    };
                    if holds != result {
                        result = holds;
                        break;
                    }
                }
                restore(env, var, saved);
                result
            }
        })
    }
}

fn restore(env: &mut Env, var: &str, saved: Option<Value>) {
    match saved {
        Some(v) => env.insert(var.to_string(), v),
        None => env.remove(var),
    };
}

/// A collection of subsets of a universe.
pub type Family = BTreeSet<BTreeSet<String>>;

/// `{ a ∪ {x} | a ∈ A, x ∉ a }`, with `x` ranging over the universe.
pub fn incremental_set(a: &Family, m: &FiniteModel) -> Family {
    let mut out = Family::new();
    for set in a {
        for x in m.universe.iter().filter(|x| !set.contains(*x)) {
            let mut grown = set.clone();
            grown.insert(x.clone());
            out.insert(grown);
        }
    }
    out
}

/// Contains the empty set (0) and the incremental set of each member.
pub fn is_inductive(a: &Family, m: &FiniteModel) -> bool {
    a.contains(&BTreeSet::new()) && incremental_set(a, m).is_subset(a)
}

/// The least element not marked standard.
pub fn nonstandard_witness(m: &FiniteModel) -> Result<String, LogicError> {
    m.universe
        .iter()
        .find(|e| !m.standard.contains(*e))
        .cloned()
        .ok_or(LogicError::AllStandard)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn holds(m: &FiniteModel, s: &str) -> bool {
        m.eval(&parse_formula(s).unwrap(), &Env::new()).unwrap()
    }

    fn family(sets: &[&[&str]]) -> Family {
        sets.iter()
            .map(|s| s.iter().map(|x| x.to_string()).collect())
            .collect()
    }

    #[test]
    fn nonstandard_elements() {
        let m = FiniteModel::new(["a", "b"]).with_standard(["a"]);
        assert!(holds(&m, "exists y . not st(y)"));
        assert_eq!(nonstandard_witness(&m).unwrap(), "b");
        let all = FiniteModel::new(["a"]).with_standard(["a"]);
        assert!(!holds(&all, "exists y . not st(y)"));
        assert_eq!(nonstandard_witness(&all), Err(LogicError::AllStandard));
        let five = FiniteModel::new(["e1", "e2", "e3", "e4", "e5"]).with_standard(["e1", "e3", "e4"]);
        assert_eq!(nonstandard_witness(&five).unwrap(), "e2");
    }

    #[test]
    fn universe_is_standard() {
        let m = FiniteModel::new(["a", "b", "c"]).with_standard(["a", "c"]);
        assert!(holds(&m, "forall^st x . x in {y | y = y}"));
        let env = Env::from([(
            "V".to_string(),
            Value::Extension(m.universe.clone()),
        )]);
        assert!(m.eval(&parse_formula("forall^st x . x in V").unwrap(), &env).unwrap());
    }

    #[test]
    fn unbound_and_unknown() {
        let m = FiniteModel::new(["a"]);
        assert_eq!(
            m.eval(&parse_formula("x in y").unwrap(), &Env::new()),
            Err(LogicError::UnboundVariable("x".into()))
        );
        assert_eq!(
            m.eval(&parse_formula("forall x . p(x)").unwrap(), &Env::new()),
            Err(LogicError::UnknownSymbol("p".into()))
        );
    }

    #[test]
    fn membership_relations_functions() {
        let m = FiniteModel::new(["0", "1", "s"])
            .with_zero("0")
            .with_constant("s", "s")
            .with_constant("1", "1")
            .with_member("0", "s")
            .with_member("1", "s")
            .with_relation(">=", &["1", "1"])
            .with_relation(">=", &["1", "0"])
            .with_relation(">=", &["0", "0"])
            .with_function("*", &["1", "1"], "1")
            .with_function("*", &["1", "0"], "0")
            .with_function("*", &["0", "1"], "0")
            .with_function("*", &["0", "0"], "0");
        m.validate().unwrap();
        assert!(holds(&m, "forall x in s . exists n in s . n * x >= 0"));
        assert!(holds(&m, "exists n in s . n * 1 >= 1"));
        assert!(!holds(&m, "exists n in s . n * 0 >= 1"));
        assert!(holds(&m, "[0, 1] = s"));
        assert!(holds(&m, "0 in [0]"));
        assert!(FiniteModel::new(["a"]).with_standard(["b"]).validate().is_err());
    }

    #[test]
    fn incremental_examples() {
        let m = FiniteModel::new(["u", "v"]);
        assert_eq!(incremental_set(&family(&[&[]]), &m), family(&[&["u"], &["v"]]));
        assert!(incremental_set(&family(&[&["u", "v"]]), &m).is_empty());
        assert_eq!(incremental_set(&family(&[&["u"]]), &m), family(&[&["u", "v"]]));
    }

    #[test]
    fn inductive_examples() {
        let m = FiniteModel::new(["u", "v"]);
        assert!(is_inductive(&family(&[&[], &["u"], &["v"], &["u", "v"]]), &m));
        assert!(!is_inductive(&family(&[&[]]), &m));
        assert!(!is_inductive(&Family::new(), &m));
    }
}
