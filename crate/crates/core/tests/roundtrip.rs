//! parse -> pretty-print -> parse keeps the AST.

mod support;

use cpexpert::dsl::{parse_str, pretty_print, tokenize};
use support::{random_program, rng};

#[test]
fn random_programs_round_trip() {
    let mut r = rng(0xabc);
    for i in 0..500 {
        let program = random_program(&mut r);
        let text = pretty_print(&program);
        let back = parse_str(&text).unwrap_or_else(|e| panic!("program {i}: {e}\n{text}"));
        assert_eq!(back, program, "program {i}:\n{text}");
        // printing is a fixed point
        assert_eq!(pretty_print(&back), text);
    }
}

#[test]
fn tokenizing_is_deterministic() {
    let mut r = rng(9);
    for _ in 0..50 {
        let text = pretty_print(&random_program(&mut r));
        assert_eq!(tokenize(&text).unwrap(), tokenize(&text).unwrap());
    }
}

#[test]
fn comments_and_whitespace_do_not_matter() {
    let mut r = rng(10);
    for _ in 0..50 {
        let program = random_program(&mut r);
        let text = pretty_print(&program)
            .replace('\n', " ; trailing comment\n")
            .replace("  ", "\t \t");
        assert_eq!(parse_str(&text).unwrap(), program, "{text}");
    }
}

mod literals {
    use cpexpert::dsl::{parse_str, pretty_print, Construct, Expr, FactBody, FactLiteral, Value};
    use proptest::prelude::*;

    fn fact_of(v: Value) -> Vec<Construct> {
        vec![Construct::Fact(FactLiteral {
            name: "v".into(),
            body: FactBody::Ordered(vec![Expr::Literal(v)]),
        })]
    }

    fn round_trips(v: Value) -> Result<(), TestCaseError> {
        let program = fact_of(v);
        let text = pretty_print(&program);
        let back = parse_str(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(back, program);
        Ok(())
    }

    proptest! {
        #[test]
        fn strings(s in any::<String>()) {
            round_trips(Value::String(s))?;
        }

        #[test]
        fn integers(i in any::<i64>()) {
            round_trips(Value::Integer(i))?;
        }

        #[test]
        fn floats(f in any::<f64>().prop_filter("finite", |f| f.is_finite())) {
            round_trips(Value::Float(f))?;
        }

        #[test]
        fn symbols(s in "[a-z][a-z0-9_-]{0,12}") {
            prop_assume!(!matches!(s.as_str(), "crlf" | "then" | "else" | "and"));
            round_trips(Value::Symbol(s))?;
        }
    }
}
