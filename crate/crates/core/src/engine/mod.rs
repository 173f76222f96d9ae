//! Forward-chaining inference over a RETE network.
//!
//! A [`RuleBase`] is compiled once from parsed constructs and shared by
//! any number of [`Session`]s, each owning its working memory, agenda and
//! global registers.

mod eval;
mod fact;
mod network;
mod session;

use std::sync::Arc;

pub use eval::ActionError;
pub use fact::{Fact, FactFields, FactId};
pub use network::{CompileError, CompiledRule, NetworkStats, RuleBase, Template};
pub use session::{
    AgendaEntry, AssertOutcome, MemoryStats, Session, TraceEvent, TraceKind,
};

use crate::dsl::{DslError, Value};

/// An action failure raised while firing a rule.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("rule `{rule}`: {error}")]
pub struct RuntimeError {
    pub rule: String,
    pub error: ActionError,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] DslError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("global ?*{0}* is not declared")]
    UndeclaredGlobal(String),
    #[error("global ?*{name}* can only hold numbers, got {value}")]
    NonNumericGlobal { name: String, value: Value },
    #[error("expected only fact literals, found {0}")]
    NotAFact(String),
}

/// Parse and compile rule source in one step.
pub fn compile_str(source: &str) -> Result<Arc<RuleBase>, EngineError> {
    let constructs = crate::dsl::parse_str(source)?;
    Ok(Arc::new(RuleBase::compile(&constructs)?))
}
