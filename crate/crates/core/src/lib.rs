//! A small forward-chaining production-rule engine and the weighted
//! symptom knowledge base for cerebral palsy screening built on it.
//!
//! * [`dsl`]: lexer, parser and pretty-printer for the rule language
//! * [`engine`]: RETE network, working memory, agenda and action interpreter
//! * [`oracle`]: brute-force matcher used to check the network
//! * [`cp`]: symptom table, scoring, banding and rule generation
//! * [`cli`]: the `cpexpert` command-line front end

pub mod cli;
pub mod cp;
pub mod dsl;
pub mod engine;
pub mod oracle;
