use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A field value: the atoms that can live in a fact or a literal.
///
/// Floats compare and hash by bit pattern so that values can key the
/// working-memory duplicate index.
#[derive(Debug, Clone)]
pub enum Value {
    Symbol(String),
    String(String),
    Integer(i64),
    Float(f64),
}

impl Value {
    pub fn symbol(s: impl Into<String>) -> Self {
        Value::Symbol(s.into())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Integer(_) | Value::Float(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Integer(i) => Some(i as f64),
            Value::Float(f) => Some(f),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Symbol(_) => 0,
            Value::String(_) => 1,
            Value::Integer(_) => 2,
            Value::Float(_) => 3,
        }
    }

    /// Text as printed by `printout`: strings without quotes.
    pub fn display_plain(&self) -> String {
        match self {
            Value::Symbol(s) | Value::String(s) => s.clone(),
            Value::Integer(i) => i.to_string(),
            Value::Float(f) => format_float(*f),
        }
    }
}

/// Shortest representation that reads back as the same float and is
/// never mistaken for an integer.
pub(crate) fn format_float(f: f64) -> String {
    let s = format!("{f:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Symbol(a), Value::Symbol(b)) | (Value::String(a), Value::String(b)) => a == b,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Symbol(s) | Value::String(s) => s.hash(state),
            Value::Integer(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Symbol(a), Value::Symbol(b)) | (Value::String(a), Value::String(b)) => a.cmp(b),
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Source form: strings quoted and escaped.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Symbol(s) => f.write_str(s),
            Value::String(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Integer(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Construct {
    Template(TemplateDef),
    Global(GlobalDef),
    Rule(RuleDef),
    Fact(FactLiteral),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDef {
    pub name: String,
    pub slots: Vec<SlotDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDef {
    pub name: String,
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDef {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDef {
    pub name: String,
    pub salience: i64,
    pub lhs: Vec<PatternSpec>,
    pub rhs: Vec<ActionSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    /// `?p <- (...)`
    pub address: Option<String>,
    pub name: String,
    pub constraints: PatternBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternBody {
    Ordered(Vec<Constraint>),
    Templated(Vec<(String, Constraint)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Literal(Value),
    Variable(String),
    Wildcard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactLiteral {
    pub name: String,
    pub body: FactBody,
}

/// Field expressions of a fact literal. Top-level facts only ever hold
/// `Expr::Literal`; facts asserted from a rule RHS may reference variables.
#[derive(Debug, Clone, PartialEq)]
pub enum FactBody {
    Ordered(Vec<Expr>),
    Templated(Vec<(String, Expr)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpec {
    Assert(FactLiteral),
    Retract(String),
    Bind(String, Expr),
    Print { items: Vec<Expr>, newline: bool },
    If {
        cond: CondExpr,
        then: Vec<ActionSpec>,
        otherwise: Option<Vec<ActionSpec>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => ArithOp::Add,
            "-" => ArithOp::Sub,
            "*" => ArithOp::Mul,
            "/" => ArithOp::Div,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "=" => CmpOp::Eq,
            "<>" => CmpOp::Ne,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    Variable(String),
    Global(String),
    Arith(ArithOp, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CondExpr {
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    And(Vec<CondExpr>),
}

impl Expr {
    pub fn visit_variables<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Variable(v) => f(v),
            Expr::Arith(_, args) => args.iter().for_each(|a| a.visit_variables(f)),
            Expr::Literal(_) | Expr::Global(_) => {}
        }
    }

    pub fn visit_globals<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Global(g) => f(g),
            Expr::Arith(_, args) => args.iter().for_each(|a| a.visit_globals(f)),
            Expr::Literal(_) | Expr::Variable(_) => {}
        }
    }
}

impl CondExpr {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            CondExpr::Compare(_, a, b) => vec![a, b],
            CondExpr::And(parts) => parts.iter().flat_map(|p| p.exprs()).collect(),
        }
    }
}

impl FactBody {
    pub fn exprs(&self) -> Box<dyn Iterator<Item = &Expr> + '_> {
        match self {
            FactBody::Ordered(v) => Box::new(v.iter()),
            FactBody::Templated(v) => Box::new(v.iter().map(|(_, e)| e)),
        }
    }
}

impl ActionSpec {
    /// Every expression reachable from this action, including nested `if` branches.
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            ActionSpec::Assert(fact) => fact.body.exprs().for_each(f),
            ActionSpec::Retract(_) => {}
            ActionSpec::Bind(_, e) => f(e),
            ActionSpec::Print { items, .. } => items.iter().for_each(f),
            ActionSpec::If {
                cond,
                then,
                otherwise,
            } => {
                cond.exprs().into_iter().for_each(&mut *f);
                for a in then.iter().chain(otherwise.iter().flatten()) {
                    a.walk_exprs(f);
                }
            }
        }
    }

    /// Every action in this subtree, depth-first, self included.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ActionSpec)) {
        f(self);
        if let ActionSpec::If {
            then, otherwise, ..
        } = self
        {
            for a in then.iter().chain(otherwise.iter().flatten()) {
                a.walk(f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_display_reads_back_as_float() {
        assert_eq!(Value::Float(1.0).to_string(), "1.0");
        assert_eq!(Value::Float(-0.5).to_string(), "-0.5");
        assert_eq!(Value::Float(1e20).to_string(), "1e20");
        assert_eq!(Value::Float(29.5).display_plain(), "29.5");
    }

    #[test]
    fn values_are_type_strict() {
        assert_ne!(Value::Integer(1), Value::Float(1.0));
        assert_ne!(Value::symbol("a"), Value::String("a".into()));
        assert!(Value::Integer(3) < Value::Float(0.0));
    }

    #[test]
    fn string_display_escapes() {
        assert_eq!(Value::String("a\"b\\c\n".into()).to_string(), r#""a\"b\\c\n""#);
    }
}
