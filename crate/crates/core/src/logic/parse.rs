//! ASCII surface syntax.
//!
//! ```text
//! formula  := iff
//! iff      := implies ("<->" iff)?
//! implies  := or ("->" implies)?
//! or       := and ("or" and)*
//! and      := unary ("and" unary)*
//! unary    := "not" unary | quant | "st" "(" term ")" | "(" formula ")" | atom
//! quant    := ("forall" | "exists") ("^st" | "^stfin")? ident ("in" term)? "." formula
//! atom     := term ("in" | "=" | "!=" | "<" | "<=" | ">" | ">=") term
//!           | ident "(" terms ")" | ident
//! term     := product ("+" product)*
//! product  := primary ("*" primary)*
//! primary  := ident ("(" terms ")")? | numeral | "[" terms "]"
//!           | "{" ident "|" formula "}" | "(" term ")"
//! ```
//!
//! A program is a sequence of lines holding either a formula or a definition
//! `def name(x, y) := formula`. Definitions are expanded where used; `#`
//! starts a comment line.

use std::collections::BTreeMap;

use super::ast::{Formula, Modifier, Quantifier, Term, COMPARISONS};
use super::LogicError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 20] = [
    "<->", ":=", "->", "<=", ">=", "!=", "^", ".", ",", "(", ")", "[", "]", "{", "}", "|", "=",
    "<", ">", "*",
];

const KEYWORDS: [&str; 7] = ["in", "not", "and", "or", "forall", "exists", "def"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LogicError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Num(text[start..i].to_string()), start));
            continue;
        }
        if c == b'+' {
            out.push((Tok::Sym("+"), i));
            i += 1;
            continue;
        }
        for s in SYMBOLS {
            if text[i..].starts_with(s) {
                out.push((Tok::Sym(s), i));
                i += s.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().expect("in bounds");
        return Err(LogicError::Syntax {
            pos: i,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

#[derive(Debug, Clone)]
struct Definition {
    params: Vec<String>,
    body: Formula,
}

struct Parser<'d> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    defs: &'d BTreeMap<String, Definition>,
}

type PResult<T> = Result<T, LogicError>;

impl<'d> Parser<'d> {
    fn new(text: &str, defs: &'d BTreeMap<String, Definition>) -> PResult<Self> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            defs,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(LogicError::Syntax {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn end(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => self.error(format!("unexpected {} after formula", describe(other))),
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.implies()?;
        if self.eat_sym("<->") {
            let rhs = self.formula()?;
            return Ok(Formula::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Formula> {
        let lhs = self.or()?;
        if self.eat_sym("->") {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut acc = self.and()?;
        while self.eat_kw("or") {
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut acc = self.unary()?;
        while self.eat_kw("and") {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.eat_kw("not") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_kw("forall") || self.is_kw("exists") {
            return self.quant();
        }
        if self.is_kw("st") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            let t = self.term()?;
            self.expect_sym(")")?;
            return Ok(Formula::St(t));
        }
        if self.is_sym("(") {
            // either a parenthesised formula or a term like `(a * b) >= c`
            let save = self.pos;
            self.bump();
            if let Ok(f) = self.formula() {
                if self.eat_sym(")") && !self.continues_term() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.atom()
    }

    fn continues_term(&self) -> bool {
        self.is_kw("in")
            || ["=", "!=", "<", "<=", ">", ">=", "*", "+"]
                .iter()
                .any(|s| self.is_sym(s))
    }

    fn quant(&mut self) -> PResult<Formula> {
        let q = match self.bump() {
            Tok::Ident(k) if k == "forall" => Quantifier::Forall,
            _ => Quantifier::Exists,
        };
        let modifier = if self.eat_sym("^") {
            match self.bump() {
                Tok::Ident(m) if m == "st" => Modifier::St,
                Tok::Ident(m) if m == "stfin" => Modifier::StFin,
                other => {
                    self.pos -= 1;
                    return self.error(format!(
                        "expected `st` or `stfin` after `^`, found {}",
                        describe(&other)
                    ));
                }
            }
        } else {
            Modifier::Plain
        };
        let var = self.ident()?;
        let range = if self.eat_kw("in") {
            Some(self.term()?)
        } else {
            None
        };
        self.expect_sym(".")?;
        let body = self.formula()?;
        Ok(Formula::Quant {
            q,
            modifier,
            var,
            range,
            body: Box::new(body),
        })
    }

    fn atom(&mut self) -> PResult<Formula> {
        let start = self.offset();
        let lhs = self.term()?;
        if self.eat_kw("in") {
            return Ok(Formula::Member(lhs, self.term()?));
        }
        if self.eat_sym("=") {
            return Ok(Formula::Eq(lhs, self.term()?));
        }
        if self.eat_sym("!=") {
            return Ok(Formula::not(Formula::Eq(lhs, self.term()?)));
        }
        for op in COMPARISONS {
            if self.eat_sym(op) {
                let rhs = self.term()?;
                return self.relation(op.to_string(), vec![lhs, rhs], start);
            }
        }
        match lhs {
            Term::App { func, args } if !["*", "+"].contains(&func.as_str()) => {
                self.relation(func, args, start)
            }
            Term::Var(name) => self.relation(name, Vec::new(), start),
            other => Err(LogicError::Syntax {
                pos: start,
                message: format!("`{other}` is a term, not a formula"),
            }),
        }
    }

    fn relation(&self, name: String, args: Vec<Term>, at: usize) -> PResult<Formula> {
        match self.defs.get(&name) {
            None => Ok(Formula::Rel { name, args }),
            Some(def) if def.params.len() != args.len() => Err(LogicError::Syntax {
                pos: at,
                message: format!(
                    "`{name}` takes {} argument(s), got {}",
                    def.params.len(),
                    args.len()
                ),
            }),
            Some(def) => {
                let map = def.params.iter().cloned().zip(args).collect();
                Ok(def.body.substitute(&map))
            }
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let mut acc = self.product()?;
        while self.eat_sym("+") {
            acc = Term::App {
                func: "+".into(),
                args: vec![acc, self.product()?],
            };
        }
        Ok(acc)
    }

    fn product(&mut self) -> PResult<Term> {
        let mut acc = self.primary()?;
        while self.eat_sym("*") {
            acc = Term::App {
                func: "*".into(),
                args: vec![acc, self.primary()?],
            };
        }
        Ok(acc)
    }

    fn terms_until(&mut self, close: &str) -> PResult<Vec<Term>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::Num(n))
            }
            Tok::Sym("[") => {
                self.bump();
                Ok(Term::SetLit(self.terms_until("]")?))
            }
            Tok::Sym("{") => {
                self.bump();
                let var = self.ident()?;
                self.expect_sym("|")?;
                let body = self.formula()?;
                self.expect_sym("}")?;
                Ok(Term::Comprehension {
                    var,
                    body: Box::new(body),
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("(") {
                    let args = self.terms_until(")")?;
                    Ok(Term::App { func: name, args })
                } else {
                    Ok(Term::Var(name))
                }
            }
            other => self.error(format!("expected a term, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(s) => format!("`{s}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parse a single formula.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let defs = BTreeMap::new();
    let mut p = Parser::new(text, &defs)?;
    let f = p.formula()?;
    p.end()?;
    Ok(f)
}

/// Parse a single term.
pub fn parse_term(text: &str) -> Result<Term, LogicError> {
    let defs = BTreeMap::new();
    let mut p = Parser::new(text, &defs)?;
    let t = p.term()?;
    p.end()?;
    Ok(t)
}

/// A formula read from a program, with its 1-based line number and source.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramLine {
    pub line: usize,
    pub source: String,
    pub formula: Formula,
}

/// Parse a formula file. Definitions apply to later lines only.
pub fn parse_program(text: &str) -> Result<Vec<ProgramLine>, LogicError> {
    let mut defs: BTreeMap<String, Definition> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at_line = |e: LogicError| match e {
            LogicError::Syntax { pos, message } => LogicError::SyntaxAt {
                line: i + 1,
                column: pos + 1 + (raw.len() - raw.trim_start().len()),
                message,
            },
            other => other,
        };
        let mut p = Parser::new(line, &defs).map_err(at_line)?;
        if p.eat_kw("def") {
            let name = p.ident().map_err(at_line)?;
            p.expect_sym("(").map_err(at_line)?;
            let mut params = Vec::new();
            if !p.eat_sym(")") {
                loop {
                    params.push(p.ident().map_err(at_line)?);
                    if p.eat_sym(")") {
                        break;
                    }
                    p.expect_sym(",").map_err(at_line)?;
                }
            }
            p.expect_sym(":=").map_err(at_line)?;
            let body = p.formula().map_err(at_line)?;
            p.end().map_err(at_line)?;
            defs.insert(name, Definition { params, body });
        } else {
            let formula = p.formula().map_err(at_line)?;
            p.end().map_err(at_line)?;
            out.push(ProgramLine {
                line: i + 1,
                source: line.to_string(),
                formula,
            });
        }
    }
    Ok(out)
}
