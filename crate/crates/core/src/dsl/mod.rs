//! The s-expression rule language: templates, globals, rules and facts.
//!
//! ```text
//! (deftemplate answer (slot ident) (slot text))
//! (defglobal ?*weightage* = 0)
//! (defrule spastic
//!   (answer (ident spasticity) (text yes))
//!   =>
//!   (bind ?*weightage* (+ ?*weightage* 5)))
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_program, Parser};
pub use printer::pretty_print;

/// 1-based line and column of a character in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslErrorKind {
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unknown escape sequence `\\{0}`")]
    BadEscape(char),
    #[error("illegal character `{0}`")]
    IllegalCharacter(char),
    #[error("malformed global variable `{0}` (expected ?*name*)")]
    MalformedGlobal(String),
    #[error("malformed variable `{0}`")]
    MalformedVariable(String),
    #[error("integer literal `{0}` out of range")]
    IntegerOutOfRange(String),
    #[error("unexpected `)`")]
    UnexpectedCloseParen,
    #[error("unclosed `(`")]
    UnclosedList,
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("{0}")]
    Syntax(String),
    #[error("unknown top-level form `{0}`")]
    UnknownConstruct(String),
    #[error("rule `{0}` has no `=>`")]
    MissingArrow(String),
    #[error("rule `{0}` has no patterns")]
    EmptyLhs(String),
    #[error("rule `{0}` has no actions")]
    EmptyRhs(String),
    #[error("variable ?{0} is not bound on the left-hand side")]
    UnboundVariable(String),
    #[error("template `{0}` is already defined")]
    DuplicateTemplate(String),
    #[error("slot `{0}` given more than once")]
    DuplicateSlot(String),
    #[error("fact-address variable ?{0} is bound more than once")]
    AddressConflict(String),
    #[error("?{0} is not a fact-address variable")]
    NotAnAddress(String),
    #[error("fact-address variable ?{0} cannot be used as a value")]
    AddressAsValue(String),
    #[error("conditional element `{0}` is not supported")]
    UnsupportedElement(String),
    #[error("`{0}` is not a declared template")]
    UndeclaredTemplate(String),
}

/// A lexical or syntactic error with the position it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub pos: Position,
}

impl DslError {
    pub fn new(kind: DslErrorKind, pos: Position) -> Self {
        DslError { kind, pos }
    }
}

/// Tokenize and parse in one step.
pub fn parse_str(source: &str) -> Result<Vec<Construct>, DslError> {
    parse_program(&tokenize(source)?)
}
