//! A first-order language with membership, comprehension and standardness.
//!
//! Formulas are parsed from an ASCII syntax (see [`parse`]), checked for
//! stratification and internality, rewritten by the idealisation, selection
//! and transference principles, and evaluated on finite models.

mod ast;
mod ist;
mod model;
pub mod parse;
mod strat;

use thiserror::Error;

pub use ast::{Formula, Modifier, Node, Quantifier, Term};
pub use ist::{
    apply_idealisation, apply_selection, apply_transference, check_comprehension, comprehensions,
    is_internal, term_is_internal, ComprehensionVerdict, TransferIssue,
};
pub use model::{
    incremental_set, is_inductive, nonstandard_witness, Env, Family, FiniteModel, Value,
};
pub use parse::{parse_formula, parse_program, parse_term, ProgramLine};
pub use strat::{stratify_formula, stratify_term, LevelAssignment, Stratification};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxAt {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("not stratified: {}", .cycle.join(" -> "))]
    NotStratified { cycle: Vec<String> },
    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("illegal set formation: external formula in comprehension")]
    IllegalSetFormation,
    #[error("illegal transfer: {0}")]
    IllegalTransfer(TransferIssue),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("symbol `{0}` has no interpretation in the model")]
    UnknownSymbol(String),
    #[error("every element of the model is standard")]
    AllStandard,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
