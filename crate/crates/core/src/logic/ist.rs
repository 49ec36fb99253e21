//! Internal/external formulas, legal set formation, and the idealisation,
//! selection and transference rewrites.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{fresh_name, Formula, Modifier, Node, Quantifier, Term};
use super::strat::{stratify_term, Stratification};
use super::LogicError;

/// No `st(·)` anywhere and no `^st`/`^stfin` quantifier, including inside
/// comprehension terms.
pub fn is_internal(f: &Formula) -> bool {
    let mut internal = true;
    f.walk(&mut |n| {
        if let Node::Formula(Formula::St(_))
        | Node::Formula(Formula::Quant {
            modifier: Modifier::St | Modifier::StFin,
            ..
        }) = n
        {
            internal = false;
        }
    });
    internal
}

pub fn term_is_internal(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Num(_) => true,
        Term::SetLit(ts) | Term::App { args: ts, .. } => ts.iter().all(term_is_internal),
        Term::Comprehension { body, .. } => is_internal(body),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComprehensionVerdict {
    Legal,
    IllegalSetFormation,
    NotStratified { cycle: Vec<String> },
}

impl fmt::Display for ComprehensionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComprehensionVerdict::Legal => f.write_str("legal"),
            ComprehensionVerdict::IllegalSetFormation => f.write_str("illegal set formation"),
            ComprehensionVerdict::NotStratified { cycle } => {
                write!(f, "not stratified ({})", cycle.join(" -> "))
            }
        }
    }
}

/// A comprehension `{x | φ}` is legal iff `φ` is internal and the term is
/// stratified. Externality is reported first.
pub fn check_comprehension(t: &Term) -> Result<ComprehensionVerdict, LogicError> {
    let Term::Comprehension { body, .. } = t else {
        return Err(LogicError::PatternMismatch(format!("`{t}` is not a comprehension")));
    };
    if !is_internal(body) {
        return Ok(ComprehensionVerdict::IllegalSetFormation);
    }
    Ok(match stratify_term(t) {
        Stratification::Stratified(_) => ComprehensionVerdict::Legal,
        Stratification::NotStratified { cycle } => ComprehensionVerdict::NotStratified { cycle },
    })
}

/// Every comprehension term in `f`, outermost first.
pub fn comprehensions(f: &Formula) -> Vec<&Term> {
    let mut out = Vec::new();
    f.walk(&mut |n| {
        if let Node::Term(t @ Term::Comprehension { .. }) = n {
            out.push(t);
        }
    });
    out
}

/// `forall^stfin Y . exists x . forall y in Y . A`  becomes
/// `exists x . forall^st y . A`.
///
/// `Y` must not occur free in `A`; the idealised form has no place for it.
pub fn apply_idealisation(f: &Formula) -> Result<Formula, LogicError> {
    let mismatch = || {
        LogicError::PatternMismatch(format!(
            "expected `forall^stfin Y . exists x . forall y in Y . A`, got `{f}`"
        ))
    };
    let Formula::Quant {
        q: Quantifier::Forall,
        modifier: Modifier::StFin,
        var: big_y,
        range: None,
        body,
    } = f
    else {
        return Err(mismatch());
    };
    let Formula::Quant {
        q: Quantifier::Exists,
        modifier: Modifier::Plain,
        var: x,
        range: None,
        body,
    } = body.as_ref()
    else {
        return Err(mismatch());
    };
    let Formula::Quant {
        q: Quantifier::Forall,
        modifier: Modifier::Plain,
        var: y,
        range: Some(Term::Var(range)),
        body: a,
    } = body.as_ref()
    else {
        return Err(mismatch());
    };
    if range != big_y || x == big_y || y == big_y || a.free_vars().contains(big_y) {
        return Err(mismatch());
    }
    Ok(Formula::Quant {
        q: Quantifier::Exists,
        modifier: Modifier::Plain,
        var: x.clone(),
        range: None,
        body: Box::new(Formula::Quant {
            q: Quantifier::Forall,
            modifier: Modifier::St,
            var: y.clone(),
            range: None,
            body: a.clone(),
        }),
    })
}

/// `{z | z in X and z in Y}`, or `{z | z in X}` when the two coincide.
///
/// Both arguments must be internal; the result is certified legal.
pub fn apply_selection(x: &Term, y: &Term) -> Result<Term, LogicError> {
    if !term_is_internal(x) || !term_is_internal(y) {
        return Err(LogicError::IllegalSetFormation);
    }
    let mut avoid = x.free_vars();
    avoid.extend(y.free_vars());
    let z = if avoid.contains("z") {
        fresh_name("z", &avoid)
    } else {
        "z".to_string()
    };
    let zv = Term::Var(z.clone());
    let body = if x == y {
        Formula::Member(zv, x.clone())
    } else {
        Formula::and(
            Formula::Member(zv.clone(), x.clone()),
            Formula::Member(zv, y.clone()),
        )
    };
    let t = Term::Comprehension {
        var: z,
        body: Box::new(body),
    };
    match check_comprehension(&t)? {
        ComprehensionVerdict::Legal => Ok(t),
        ComprehensionVerdict::IllegalSetFormation => Err(LogicError::IllegalSetFormation),
        ComprehensionVerdict::NotStratified { cycle } => Err(LogicError::NotStratified { cycle }),
    }
}

/// Why a transfer was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransferIssue {
    ExternalFormula,
    NonStandardParameter(String),
}

impl fmt::Display for TransferIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferIssue::ExternalFormula => f.write_str("ExternalFormula"),
            TransferIssue::NonStandardParameter(p) => write!(f, "NonStandardParameter({p})"),
        }
    }
}

/// `forall^st y . A` becomes `forall y . A` (dually for `exists^st`).
///
/// Legal only when `A` (and any range term) is internal and every other
/// free variable is declared standard. No normalisation is attempted: an
/// external body is refused even if some rewrite could make it internal.
pub fn apply_transference(
    f: &Formula,
    standard: &BTreeSet<String>,
) -> Result<Formula, LogicError> {
    let Formula::Quant {
        q,
        modifier: Modifier::St,
        var,
        range,
        body,
    } = f
    else {
        return Err(LogicError::PatternMismatch(format!(
            "expected `forall^st y . A` or `exists^st y . A`, got `{f}`"
        )));
    };
    let range_internal = range.as_ref().is_none_or(term_is_internal);
    if !is_internal(body) || !range_internal {
        return Err(LogicError::IllegalTransfer(TransferIssue::ExternalFormula));
    }
    let mut params = body.free_vars();
    params.remove(var);
    if let Some(r) = range {
        params.extend(r.free_vars());
    }
    if let Some(p) = params.into_iter().find(|p| !standard.contains(p)) {
        return Err(LogicError::IllegalTransfer(TransferIssue::NonStandardParameter(p)));
    }
    Ok(Formula::Quant {
        q: *q,
        modifier: Modifier::Plain,
        var: var.clone(),
        range: range.clone(),
        body: body.clone(),
    })
}
