use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Numeral; interpreted through a model's constants.
    Num(String),
    /// `[a, b, ...]`
    SetLit(Vec<Term>),
    /// `{x | φ}`
    Comprehension { var: String, body: Box<Formula> },
    /// `f(a, ...)`, and the infix `a * b`, `a + b`.
    App { func: String, args: Vec<Term> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modifier {
    Plain,
    St,
    StFin,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Member(Term, Term),
    Eq(Term, Term),
    St(Term),
    /// Named relation, including the comparisons `<`, `<=`, `>`, `>=`.
    Rel { name: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Quant {
        q: Quantifier,
        modifier: Modifier,
        var: String,
        /// `forall x in T . φ`
        range: Option<Term>,
        body: Box<Formula>,
    },
}

pub(crate) const COMPARISONS: [&str; 4] = ["<", "<=", ">", ">="];
pub(crate) const INFIX_FUNCS: [&str; 2] = ["+", "*"];

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Num(_) => {}
            Term::SetLit(ts) | Term::App { args: ts, .. } => {
                ts.iter().for_each(|t| t.collect_free(out));
            }
            Term::Comprehension { var, body } => {
                let mut inner = body.free_vars();
                inner.remove(var);
                out.extend(inner);
            }
        }
    }

    /// Capture-avoiding simultaneous substitution.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Num(_) => self.clone(),
            Term::SetLit(ts) => Term::SetLit(ts.iter().map(|t| t.substitute(map)).collect()),
            Term::App { func, args } => Term::App {
                func: func.clone(),
                args: args.iter().map(|t| t.substitute(map)).collect(),
            },
            Term::Comprehension { var, body } => {
                let (var, body) = subst_binder(var, body, map);
                Term::Comprehension {
                    var,
                    body: Box::new(body),
                }
            }
        }
    }

    fn walk<'a>(&'a self, f: &mut dyn FnMut(Node<'a>)) {
        f(Node::Term(self));
        match self {
            Term::Var(_) | Term::Num(_) => {}
            Term::SetLit(ts) | Term::App { args: ts, .. } => ts.iter().for_each(|t| t.walk(f)),
            Term::Comprehension { body, .. } => body.walk(f),
        }
    }
}

/// A subterm or subformula, for traversals.
#[derive(Debug, Clone, Copy)]
pub enum Node<'a> {
    Term(&'a Term),
    Formula(&'a Formula),
}

fn subst_binder(var: &str, body: &Formula, map: &BTreeMap<String, Term>) -> (String, Formula) {
    let mut map = map.clone();
    map.remove(var);
    let body_free = body.free_vars();
    map.retain(|k, _| body_free.contains(k));
    let incoming: BTreeSet<String> = map.values().flat_map(Term::free_vars).collect();
    if incoming.contains(var) {
        let mut avoid = incoming;
        avoid.extend(body_free);
        avoid.extend(map.keys().cloned());
        let fresh = fresh_name(var, &avoid);
        map.insert(var.to_string(), Term::Var(fresh.clone()));
        (fresh, body.substitute(&map))
    } else {
        (var.to_string(), body.substitute(&map))
    }
}

/// `base'`, `base''`, ... until unused.
pub(crate) fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn quant(q: Quantifier, modifier: Modifier, var: impl Into<String>, body: Formula) -> Self {
        Formula::Quant {
            q,
            modifier,
            var: var.into(),
            range: None,
            body: Box::new(body),
        }
    }

    pub fn member(a: Term, b: Term) -> Self {
        Formula::Member(a, b)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Member(a, b) | Formula::Eq(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::St(t) => t.collect_free(out),
            Formula::Rel { args, .. } => args.iter().for_each(|t| t.collect_free(out)),
            Formula::Not(f) => f.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Quant {
                var, range, body, ..
            } => {
                if let Some(r) = range {
                    r.collect_free(out);
                }
                let mut inner = body.free_vars();
                inner.remove(var);
                out.extend(inner);
            }
        }
    }

    /// Capture-avoiding simultaneous substitution of free variables.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        let s = |t: &Term| t.substitute(map);
        let b = |f: &Formula| Box::new(f.substitute(map));
        match self {
            Formula::Member(x, y) => Formula::Member(s(x), s(y)),
            Formula::Eq(x, y) => Formula::Eq(s(x), s(y)),
            Formula::St(t) => Formula::St(s(t)),
            Formula::Rel { name, args } => Formula::Rel {
                name: name.clone(),
                args: args.iter().map(s).collect(),
            },
            Formula::Not(f) => Formula::Not(b(f)),
            Formula::And(x, y) => Formula::And(b(x), b(y)),
            Formula::Or(x, y) => Formula::Or(b(x), b(y)),
            Formula::Implies(x, y) => Formula::Implies(b(x), b(y)),
            Formula::Iff(x, y) => Formula::Iff(b(x), b(y)),
            Formula::Quant {
                q,
                modifier,
                var,
                range,
                body,
            } => {
                let range = range.as_ref().map(s);
                let (var, body) = subst_binder(var, body, map);
                Formula::Quant {
                    q: *q,
                    modifier: *modifier,
                    var,
                    range,
                    body: Box::new(body),
                }
            }
        }
    }

    /// Pre-order traversal over every subformula and subterm.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(Node<'a>)) {
        f(Node::Formula(self));
        match self {
            Formula::Member(a, b) | Formula::Eq(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::St(t) => t.walk(f),
            Formula::Rel { args, .. } => args.iter().for_each(|t| t.walk(f)),
            Formula::Not(x) => x.walk(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::Quant { range, body, .. } => {
                if let Some(r) = range {
                    r.walk(f);
                }
                body.walk(f);
            }
        }
    }

    /// Nesting depth of connectives and quantifiers; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Member(..) | Formula::Eq(..) | Formula::St(_) | Formula::Rel { .. } => 0,
            Formula::Not(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Quant { body, .. } => 1 + body.depth(),
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modifier::Plain => "",
            Modifier::St => "^st",
            Modifier::StFin => "^stfin",
        })
    }
}

// term precedence: 0 sum, 1 product, 2 primary
fn fmt_term(t: &Term, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(v) | Term::Num(v) => f.write_str(v),
        Term::SetLit(ts) => {
            f.write_str("[")?;
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                fmt_term(t, 0, f)?;
            }
            f.write_str("]")
        }
        Term::Comprehension { var, body } => write!(f, "{{{var} | {body}}}"),
        Term::App { func, args } if INFIX_FUNCS.contains(&func.as_str()) && args.len() == 2 => {
            let own = if func == "+" { 0 } else { 1 };
            if prec > own {
                f.write_str("(")?;
            }
            fmt_term(&args[0], own, f)?;
            write!(f, " {func} ")?;
            fmt_term(&args[1], own + 1, f)?;
            if prec > own {
                f.write_str(")")?;
            }
            Ok(())
        }
        Term::App { func, args } => {
            write!(f, "{func}(")?;
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                fmt_term(t, 0, f)?;
            }
            f.write_str(")")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, 0, f)
    }
}

// formula precedence: 0 quantifier body, 1 iff, 2 implies, 3 or, 4 and, 5 unary.
// `last` is set when nothing follows this subformula up to the enclosing
// bracket, so a quantifier there can extend to the right unbracketed.
fn fmt_formula(x: &Formula, prec: u8, last: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let binary = |f: &mut fmt::Formatter<'_>, a: &Formula, op: &str, b: &Formula, own: u8, lp: u8, rp: u8| {
        let wrap = prec > own;
        if wrap {
            f.write_str("(")?;
        }
        fmt_formula(a, lp, false, f)?;
        write!(f, " {op} ")?;
        fmt_formula(b, rp, last || wrap, f)?;
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    };
    match x {
        Formula::Member(a, b) => write!(f, "{a} in {b}"),
        Formula::Eq(a, b) => write!(f, "{a} = {b}"),
        Formula::St(t) => write!(f, "st({t})"),
        Formula::Rel { name, args } if COMPARISONS.contains(&name.as_str()) && args.len() == 2 => {
            write!(f, "{} {name} {}", args[0], args[1])
        }
        Formula::Rel { name, args } if args.is_empty() => f.write_str(name),
        Formula::Rel { name, args } => {
            write!(f, "{name}(")?;
            for (i, t) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")
        }
        Formula::Not(inner) => {
            f.write_str("not ")?;
            fmt_formula(inner, 5, last, f)
        }
        Formula::And(a, b) => binary(f, a, "and", b, 4, 4, 5),
        Formula::Or(a, b) => binary(f, a, "or", b, 3, 3, 4),
        Formula::Implies(a, b) => binary(f, a, "->", b, 2, 3, 2),
        Formula::Iff(a, b) => binary(f, a, "<->", b, 1, 2, 2),
        Formula::Quant {
            q,
            modifier,
            var,
            range,
            body,
        } => {
            let wrap = !last;
            if wrap {
                f.write_str("(")?;
            }
            write!(f, "{q}{modifier} {var}")?;
            if let Some(r) = range {
                write!(f, " in {r}")?;
            }
            f.write_str(" . ")?;
            fmt_formula(body, 0, true, f)?;
            if wrap {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, true, f)
    }
}
