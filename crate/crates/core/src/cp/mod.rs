//! Cerebral palsy screening knowledge base.
//!
//! A [`SymptomTable`] lists yes/no symptoms with integer weights. An
//! answer set is scored directly with [`diagnose`], or the table is turned
//! into a rule program with [`generate_ruleset`] and run through the
//! engine with [`run_generated`]. Both paths must agree.

mod generate;
mod scoring;
mod table;

pub use generate::{
    answer_fact, generate_constructs, generate_ruleset, run_generated, trigger_fact,
    EngineVerdict, VerdictError, ANSWER_TEMPLATE, DIAGNOSIS_RULE, DIAGNOSIS_SALIENCE,
    SCORE_GLOBAL,
};
pub use scoring::{
    classify, diagnose, percentage_score, raw_score, Answer, AnswerSet, AnswersError,
    AnswersErrorKind, Band, BandThresholds, Contribution, DiagnosisResult, ScoreError,
    ThresholdError,
};
pub use table::{load_symptom_table, Symptom, SymptomTable, TableError, TableErrorKind, BUNDLED_TABLE};

/// Printed with every diagnosis.
pub const DISCLAIMER: &str =
    "Note: this screening aid does not replace assessment by a qualified medical professional.";
