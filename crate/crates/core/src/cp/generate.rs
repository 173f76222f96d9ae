//! Compile a symptom table into a rule program.
//!
//! The program holds an `answer` template, a `?*weightage*` accumulator,
//! one rule per symptom that adds its weight when the symptom is answered
//! yes, and a `diagnosis` rule that prints the band sentence once the
//! `(result diagnosis-rule)` trigger is asserted.

use std::sync::Arc;

use crate::dsl::{
    pretty_print, ActionSpec, ArithOp, CmpOp, CondExpr, Constraint, Construct, Expr, FactBody,
    FactLiteral, GlobalDef, PatternBody, PatternSpec, RuleDef, SlotDef, TemplateDef, Value,
};
use crate::engine::{EngineError, RuleBase, Session};

use super::scoring::{AnswerSet, Band, BandThresholds, ScoreError};
use super::table::SymptomTable;

pub const ANSWER_TEMPLATE: &str = "answer";
pub const SCORE_GLOBAL: &str = "weightage";
pub const DIAGNOSIS_RULE: &str = "diagnosis";
/// Runs after every symptom rule regardless of fact recency.
pub const DIAGNOSIS_SALIENCE: i64 = -10;

fn sym(s: &str) -> Value {
    Value::symbol(s)
}

fn int(i: u64) -> Expr {
    Expr::Literal(Value::Integer(i64::try_from(i).expect("score fits in i64")))
}

fn score() -> Expr {
    Expr::Global(SCORE_GLOBAL.into())
}

fn symptom_rule(id: &str, weight: u32) -> RuleDef {
    RuleDef {
        name: id.to_string(),
        salience: 0,
        lhs: vec![PatternSpec {
            address: None,
            name: ANSWER_TEMPLATE.into(),
            constraints: PatternBody::Templated(vec![
                ("ident".into(), Constraint::Literal(sym(id))),
                ("text".into(), Constraint::Literal(sym("yes"))),
            ]),
        }],
        rhs: vec![ActionSpec::Bind(
            SCORE_GLOBAL.into(),
            Expr::Arith(ArithOp::Add, vec![score(), int(u64::from(weight))]),
        )],
    }
}

fn diagnosis_rule(max: u64, thresholds: &BandThresholds) -> RuleDef {
    // 100 * score compared against threshold * max keeps every test integral
    let scaled = || Box::new(Expr::Arith(ArithOp::Mul, vec![score(), int(100)]));
    let cmp = |op, bound: u64| CondExpr::Compare(op, scaled(), Box::new(int(bound)));
    let [mild, moderate, severe] = thresholds.as_array().map(|t| t * max);
    let say = |band: Band| ActionSpec::Print {
        items: vec![Expr::Literal(Value::String(band.sentence()))],
        newline: true,
    };
    let branch = |cond, band| ActionSpec::If {
        cond,
        then: vec![say(band)],
        otherwise: None,
    };
    RuleDef {
        name: DIAGNOSIS_RULE.into(),
        salience: DIAGNOSIS_SALIENCE,
        lhs: vec![PatternSpec {
            address: Some("p".into()),
            name: "result".into(),
            constraints: PatternBody::Ordered(vec![Constraint::Literal(sym("diagnosis-rule"))]),
        }],
        rhs: vec![
            ActionSpec::Print {
                items: vec![
                    Expr::Literal(Value::String("Cumulative weightage: ".into())),
                    score(),
                    Expr::Literal(Value::String(format!(" of {max}"))),
                ],
                newline: true,
            },
            branch(cmp(CmpOp::Lt, mild), Band::None),
            branch(
                CondExpr::And(vec![cmp(CmpOp::Ge, mild), cmp(CmpOp::Lt, moderate)]),
                Band::Mild,
            ),
            branch(
                CondExpr::And(vec![cmp(CmpOp::Ge, moderate), cmp(CmpOp::Le, severe)]),
                Band::Moderate,
            ),
            branch(cmp(CmpOp::Gt, severe), Band::Severe),
        ],
    }
}

/// The generated program as constructs.
pub fn generate_constructs(table: &SymptomTable, thresholds: &BandThresholds) -> Vec<Construct> {
    let mut out = vec![
        Construct::Template(TemplateDef {
            name: ANSWER_TEMPLATE.into(),
            slots: vec![
                SlotDef { name: "ident".into(), default: None },
                SlotDef { name: "text".into(), default: None },
            ],
        }),
        Construct::Global(GlobalDef {
            name: SCORE_GLOBAL.into(),
            value: Value::Integer(0),
        }),
    ];
    out.extend(
        table
            .symptoms()
            .iter()
            .map(|s| Construct::Rule(symptom_rule(&s.id, s.weight))),
    );
    out.push(Construct::Rule(diagnosis_rule(table.max_score(), thresholds)));
    out
}

/// The generated program as rule-language source.
pub fn generate_ruleset(table: &SymptomTable, thresholds: &BandThresholds) -> String {
    let [a, b, c] = thresholds.as_array();
    format!(
        "; Generated from a {n}-symptom table (maximum score {max}).\n\
         ; Bands: none < {a}% <= mild < {b}% <= moderate <= {c}% < severe\n\n{}",
        pretty_print(&generate_constructs(table, thresholds)),
        n = table.len(),
        max = table.max_score(),
    )
}

/// An answer fact as asserted by the questionnaire.
pub fn answer_fact(id: &str, yes: bool) -> FactLiteral {
    FactLiteral {
        name: ANSWER_TEMPLATE.into(),
        body: FactBody::Templated(vec![
            ("ident".into(), Expr::Literal(sym(id))),
            ("text".into(), Expr::Literal(sym(if yes { "yes" } else { "no" }))),
        ]),
    }
}

pub fn trigger_fact() -> FactLiteral {
    FactLiteral {
        name: "result".into(),
        body: FactBody::Ordered(vec![Expr::Literal(sym("diagnosis-rule"))]),
    }
}

/// What a run of the generated program reported.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineVerdict {
    pub raw_score: i64,
    pub band: Option<Band>,
    pub firings: u64,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerdictError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("global ?*{SCORE_GLOBAL}* holds a non-integer value {0}")]
    NonIntegerScore(Value),
}

/// Assert every answer (in table order) and the trigger, run to
/// quiescence and read back the accumulator and printed band.
pub fn run_generated(
    rules: &Arc<RuleBase>,
    table: &SymptomTable,
    answers: &AnswerSet,
) -> Result<EngineVerdict, VerdictError> {
    answers.validate(table, true)?;
    let mut session = Session::new(Arc::clone(rules));
    for s in table.symptoms() {
        let yes = answers.get(&s.id) == Some(super::scoring::Answer::Yes);
        session.assert_fact(&answer_fact(&s.id, yes))?;
    }
    session.assert_fact(&trigger_fact())?;
    let firings = session.run(None).map_err(EngineError::from)?;
    let raw_score = match session.get_global(SCORE_GLOBAL)? {
        Value::Integer(i) => i,
        other => return Err(VerdictError::NonIntegerScore(other)),
    };
    let output = session.take_output();
    let band = output.lines().find_map(Band::from_sentence);
    Ok(EngineVerdict {
        raw_score,
        band,
        firings,
        output,
    })
}
