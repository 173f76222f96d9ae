use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::dsl::{ArithOp, CmpOp, CondExpr, Expr, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error("`{op}` expects numbers, got {value}")]
    NonNumeric { op: &'static str, value: Value },
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in `{0}`")]
    Overflow(&'static str),
    #[error("variable ?{0} is unbound")]
    Unbound(String),
    #[error("global ?*{0}* is not declared")]
    UndeclaredGlobal(String),
    #[error("global ?*{name}* can only hold numbers, got {value}")]
    NonNumericGlobal { name: String, value: Value },
    #[error("fact bound to ?{0} has already been retracted")]
    FactGone(String),
    #[error("{0}")]
    Fact(String),
}

pub(crate) type Bindings = BTreeMap<String, Value>;

pub(crate) struct Env<'a> {
    pub bindings: &'a Bindings,
    pub globals: &'a BTreeMap<String, Value>,
}

enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    fn of(v: &Value, op: ArithOp) -> Result<Num, ActionError> {
        match *v {
            Value::Integer(i) => Ok(Num::Int(i)),
            Value::Float(f) => Ok(Num::Float(f)),
            _ => Err(ActionError::NonNumeric {
                op: op.symbol(),
                value: v.clone(),
            }),
        }
    }

    fn f64(&self) -> f64 {
        match *self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }

    fn into_value(self) -> Value {
        match self {
            Num::Int(i) => Value::Integer(i),
            Num::Float(f) => Value::Float(f),
        }
    }
}

fn apply(op: ArithOp, a: Num, b: Num) -> Result<Num, ActionError> {
    let overflow = || ActionError::Overflow(op.symbol());
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => match op {
            ArithOp::Add => x.checked_add(y).map(Num::Int).ok_or_else(overflow),
            ArithOp::Sub => x.checked_sub(y).map(Num::Int).ok_or_else(overflow),
            ArithOp::Mul => x.checked_mul(y).map(Num::Int).ok_or_else(overflow),
            ArithOp::Div => {
                if y == 0 {
                    Err(ActionError::DivisionByZero)
                } else if x.checked_rem(y) == Some(0) {
                    x.checked_div(y).map(Num::Int).ok_or_else(overflow)
                } else {
                    // inexact integer quotient becomes a float
                    Ok(Num::Float(x as f64 / y as f64))
                }
            }
        },
        (a, b) => {
            let (x, y) = (a.f64(), b.f64());
            let r = match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => {
                    if y == 0.0 {
                        return Err(ActionError::DivisionByZero);
                    }
                    x / y
                }
            };
            if r.is_finite() {
                Ok(Num::Float(r))
            } else {
                Err(overflow())
            }
        }
    }
}

pub(crate) fn eval(expr: &Expr, env: &Env<'_>) -> Result<Value, ActionError> {
    match expr {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Variable(name) => env
            .bindings
            .get(name)
            .cloned()
            .ok_or_else(|| ActionError::Unbound(name.clone())),
        Expr::Global(name) => env
            .globals
            .get(name)
            .cloned()
            .ok_or_else(|| ActionError::UndeclaredGlobal(name.clone())),
        Expr::Arith(op, args) => {
            let mut values = args.iter().map(|a| eval(a, env).and_then(|v| Num::of(&v, *op)));
            let first = values.next().expect("parser guarantees an operand")?;
            let mut acc = match (args.len(), op) {
                (1, ArithOp::Sub) => apply(ArithOp::Sub, Num::Int(0), first)?,
                (1, ArithOp::Div) => apply(ArithOp::Div, Num::Int(1), first)?,
                _ => first,
            };
            for v in values {
                acc = apply(*op, acc, v?)?;
            }
            Ok(acc.into_value())
        }
    }
}

fn compare_numbers(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Integer(x), Value::Integer(y)) => Some(x.cmp(y)),
        _ => a.as_f64()?.partial_cmp(&b.as_f64()?),
    }
}

pub(crate) fn eval_cond(cond: &CondExpr, env: &Env<'_>) -> Result<bool, ActionError> {
    match cond {
        CondExpr::And(parts) => {
            for p in parts {
                if !eval_cond(p, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        CondExpr::Compare(op, a, b) => {
            let a = eval(a, env)?;
            let b = eval(b, env)?;
            if a.is_numeric() && b.is_numeric() {
                let ord = compare_numbers(&a, &b);
                Ok(match op {
                    CmpOp::Lt => ord == Some(Ordering::Less),
                    CmpOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
                    CmpOp::Gt => ord == Some(Ordering::Greater),
                    CmpOp::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
                    CmpOp::Eq => ord == Some(Ordering::Equal),
                    CmpOp::Ne => ord != Some(Ordering::Equal),
                })
            } else {
                match op {
                    CmpOp::Eq => Ok(a == b),
                    CmpOp::Ne => Ok(a != b),
                    _ => {
                        let bad = if a.is_numeric() { b } else { a };
                        Err(ActionError::NonNumeric {
                            op: op.symbol(),
                            value: bad,
                        })
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_str, ActionSpec, Construct};

    fn expr_of(src: &str) -> Expr {
        let prog = format!("(defglobal ?*g* = 0) (defrule r (a ?x) => (bind ?*g* {src}))");
        let cs = parse_str(&prog).unwrap();
        let Construct::Rule(r) = &cs[1] else { panic!() };
        let ActionSpec::Bind(_, e) = &r.rhs[0] else { panic!() };
        e.clone()
    }

    fn run(src: &str, x: Value) -> Result<Value, ActionError> {
        let bindings = Bindings::from([("x".to_string(), x)]);
        let globals = BTreeMap::from([("g".to_string(), Value::Integer(7))]);
        eval(&expr_of(src), &Env { bindings: &bindings, globals: &globals })
    }

    #[test]
    fn integer_arithmetic_stays_integral() {
        assert_eq!(run("(+ ?*g* 5)", Value::Integer(0)), Ok(Value::Integer(12)));
        assert_eq!(run("(* ?x 100)", Value::Integer(3)), Ok(Value::Integer(300)));
        assert_eq!(run("(/ 10 ?x)", Value::Integer(5)), Ok(Value::Integer(2)));
        assert_eq!(run("(- ?x)", Value::Integer(5)), Ok(Value::Integer(-5)));
        assert_eq!(run("(- 10 ?x 2)", Value::Integer(5)), Ok(Value::Integer(3)));
    }

    #[test]
    fn inexact_division_promotes() {
        assert_eq!(run("(/ (* ?x 100) 51)", Value::Integer(15)), Ok(Value::Float(1500.0 / 51.0)));
        assert_eq!(run("(/ ?x)", Value::Integer(4)), Ok(Value::Float(0.25)));
        assert_eq!(run("(+ ?x 0.5)", Value::Integer(1)), Ok(Value::Float(1.5)));
    }

    #[test]
    fn errors() {
        assert_eq!(run("(/ 1 ?x)", Value::Integer(0)), Err(ActionError::DivisionByZero));
        assert_eq!(run("(/ 1.0 ?x)", Value::Float(0.0)), Err(ActionError::DivisionByZero));
        assert!(matches!(run("(+ ?x 1)", Value::symbol("a")), Err(ActionError::NonNumeric { .. })));
        assert!(matches!(run("(* ?x 2)", Value::Integer(i64::MAX)), Err(ActionError::Overflow(_))));
    }

    #[test]
    fn comparisons() {
        let bindings = Bindings::from([("x".to_string(), Value::Integer(16))]);
        let globals = BTreeMap::new();
        let env = Env { bindings: &bindings, globals: &globals };
        let cond = |src: &str| {
            let cs = parse_str(&format!("(defrule r (a ?x) => (if {src} then (printout t 1)))")).unwrap();
            let Construct::Rule(r) = &cs[0] else { panic!() };
            let ActionSpec::If { cond, .. } = &r.rhs[0] else { panic!() };
            eval_cond(cond, &env)
        };
        assert_eq!(cond("(>= ?x 16)"), Ok(true));
        assert_eq!(cond("(< ?x 16)"), Ok(false));
        assert_eq!(cond("(= ?x 16.0)"), Ok(true));
        assert_eq!(cond("(and (>= ?x 16) (<= ?x 38))"), Ok(true));
        assert_eq!(cond("(and (>= ?x 16) (> ?x 38))"), Ok(false));
        assert_eq!(cond("(= abc abc)"), Ok(true));
        assert_eq!(cond("(<> abc \"abc\")"), Ok(true));
        assert!(cond("(< abc 1)").is_err());
    }
}
