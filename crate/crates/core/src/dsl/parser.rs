//! Parser from token stream to [`Construct`]s.
//!
//! Parsing happens in two passes: tokens are first grouped into a tree of
//! positioned lists and atoms, then each top-level list is interpreted as a
//! construct. Whether a form like `(answer ...)` is a templated or an
//! ordered fact is decided by whether `answer` names a template declared
//! earlier in the program (or handed to the parser up front).

use std::collections::{BTreeSet, HashSet};

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::{DslError, DslErrorKind, Position};

#[derive(Debug)]
enum Node {
    Atom(Token),
    List { open: Position, items: Vec<Node> },
}

impl Node {
    fn pos(&self) -> Position {
        match self {
            Node::Atom(t) => t.pos,
            Node::List { open, .. } => *open,
        }
    }

    fn describe(&self) -> String {
        match self {
            Node::Atom(t) if t.kind == TokenKind::String => format!("string \"{}\"", t.lexeme),
            Node::Atom(t) => format!("{} `{}`", t.kind, t.lexeme),
            Node::List { .. } => "list".to_string(),
        }
    }

    fn symbol(&self) -> Option<&str> {
        match self {
            Node::Atom(t) if t.kind == TokenKind::Symbol => Some(&t.lexeme),
            _ => None,
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Node::List { items, .. } => items.first().and_then(Node::symbol),
            Node::Atom(_) => None,
        }
    }
}

fn build_tree(tokens: &[Token]) -> Result<Vec<Node>, DslError> {
    let mut stack: Vec<(Position, Vec<Node>)> = Vec::new();
    let mut top = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::LeftParen => stack.push((tok.pos, Vec::new())),
            TokenKind::RightParen => {
                let (open, items) = stack
                    .pop()
                    .ok_or_else(|| DslError::new(DslErrorKind::UnexpectedCloseParen, tok.pos))?;
                let node = Node::List { open, items };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(node),
                    None => top.push(node),
                }
            }
            _ => match stack.last_mut() {
                Some((_, parent)) => parent.push(Node::Atom(tok.clone())),
                None => top.push(Node::Atom(tok.clone())),
            },
        }
    }
    if let Some((open, _)) = stack.pop() {
        return Err(DslError::new(DslErrorKind::UnclosedList, open));
    }
    Ok(top)
}

const RESERVED: &[&str] = &[
    "deftemplate", "defglobal", "defrule", "assert", "retract", "bind", "printout", "if", "and",
    "declare", "not", "test", "or", "exists", "forall", "logical",
];

fn expected(what: impl Into<String>, found: &Node) -> DslError {
    DslError::new(
        DslErrorKind::Expected {
            expected: what.into(),
            found: found.describe(),
        },
        found.pos(),
    )
}

fn literal_of(tok: &Token) -> Option<Value> {
    Some(match tok.kind {
        TokenKind::Symbol => Value::Symbol(tok.lexeme.clone()),
        TokenKind::String => Value::String(tok.lexeme.clone()),
        TokenKind::Integer => Value::Integer(tok.lexeme.parse().ok()?),
        TokenKind::Float => Value::Float(tok.lexeme.parse().ok()?),
        _ => return None,
    })
}

/// Parse a whole program.
pub fn parse_program(tokens: &[Token]) -> Result<Vec<Construct>, DslError> {
    Parser::default().parse(tokens)
}

/// Parser that can be seeded with template names declared elsewhere,
/// e.g. when reading a facts file against an already compiled rule base.
#[derive(Debug, Default, Clone)]
pub struct Parser {
    templates: HashSet<String>,
}

impl Parser {
    pub fn with_templates<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Parser {
            templates: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(mut self, tokens: &[Token]) -> Result<Vec<Construct>, DslError> {
        let tree = build_tree(tokens)?;
        tree.iter().map(|node| self.construct(node)).collect()
    }

    fn construct(&mut self, node: &Node) -> Result<Construct, DslError> {
        let Node::List { items, open } = node else {
            return Err(expected("top-level form", node));
        };
        let Some(head) = items.first() else {
            return Err(DslError::new(
                DslErrorKind::UnknownConstruct("()".into()),
                *open,
            ));
        };
        let Some(name) = head.symbol() else {
            return Err(DslError::new(
                DslErrorKind::UnknownConstruct(head.describe()),
                head.pos(),
            ));
        };
        match name {
            "deftemplate" => self.template(items, *open).map(Construct::Template),
            "defglobal" => self.global(items, *open).map(Construct::Global),
            "defrule" => self.rule(items, *open).map(Construct::Rule),
            n if n.starts_with("def") || RESERVED.contains(&n) => Err(DslError::new(
                DslErrorKind::UnknownConstruct(n.to_string()),
                head.pos(),
            )),
            _ => self
                .fact(node, &HashSet::new(), true)
                .map(Construct::Fact),
        }
    }

    fn template(&mut self, items: &[Node], open: Position) -> Result<TemplateDef, DslError> {
        let name_node = items
            .get(1)
            .ok_or_else(|| DslError::new(DslErrorKind::Syntax("deftemplate needs a name".into()), open))?;
        let name = self.fact_name(name_node)?;
        if self.templates.contains(&name) {
            return Err(DslError::new(
                DslErrorKind::DuplicateTemplate(name),
                name_node.pos(),
            ));
        }
        let mut slots: Vec<SlotDef> = Vec::new();
        for slot in &items[2..] {
            let Node::List { items: parts, .. } = slot else {
                return Err(expected("(slot <name> [(default <value>)])", slot));
            };
            if slot.head() != Some("slot") || !(2..=3).contains(&parts.len()) {
                return Err(expected("(slot <name> [(default <value>)])", slot));
            }
            let slot_name = parts[1]
                .symbol()
                .filter(|s| *s != "?")
                .ok_or_else(|| expected("slot name", &parts[1]))?;
            if slots.iter().any(|s| s.name == slot_name) {
                return Err(DslError::new(
                    DslErrorKind::DuplicateSlot(slot_name.to_string()),
                    parts[1].pos(),
                ));
            }
            let default = match parts.get(2) {
                None => None,
                Some(d @ Node::List { items: dv, .. })
                    if d.head() == Some("default") && dv.len() == 2 =>
                {
                    match &dv[1] {
                        Node::Atom(t) => Some(literal_of(t).ok_or_else(|| expected("literal default", &dv[1]))?),
                        other => return Err(expected("literal default", other)),
                    }
                }
                Some(other) => return Err(expected("(default <value>)", other)),
            };
            slots.push(SlotDef {
                name: slot_name.to_string(),
                default,
            });
        }
        self.templates.insert(name.clone());
        Ok(TemplateDef { name, slots })
    }

    fn global(&mut self, items: &[Node], open: Position) -> Result<GlobalDef, DslError> {
        let shape = || DslError::new(DslErrorKind::Syntax("expected (defglobal ?*name* = <number>)".into()), open);
        if items.len() != 4 {
            return Err(shape());
        }
        let name = match &items[1] {
            Node::Atom(t) if t.kind == TokenKind::GlobalVariable => t.var_name().to_string(),
            other => return Err(expected("global variable ?*name*", other)),
        };
        if items[2].symbol() != Some("=") {
            return Err(expected("`=`", &items[2]));
        }
        let value = match &items[3] {
            Node::Atom(t) if matches!(t.kind, TokenKind::Integer | TokenKind::Float) => {
                literal_of(t).expect("numeric token")
            }
            other => return Err(expected("numeric initial value", other)),
        };
        Ok(GlobalDef { name, value })
    }

    fn fact_name(&self, node: &Node) -> Result<String, DslError> {
        match node.symbol() {
            Some(s) if s != "?" && !RESERVED.contains(&s) => Ok(s.to_string()),
            _ => Err(expected("fact name", node)),
        }
    }

    fn rule(&mut self, items: &[Node], open: Position) -> Result<RuleDef, DslError> {
        let name_node = items
            .get(1)
            .ok_or_else(|| DslError::new(DslErrorKind::Syntax("defrule needs a name".into()), open))?;
        let name = name_node
            .symbol()
            .filter(|s| *s != "?")
            .ok_or_else(|| expected("rule name", name_node))?
            .to_string();
        let arrow = items
            .iter()
            .position(|n| matches!(n, Node::Atom(t) if t.kind == TokenKind::Arrow && t.lexeme == "=>"))
            .ok_or_else(|| DslError::new(DslErrorKind::MissingArrow(name.clone()), open))?;

        let mut lhs_nodes = &items[2..arrow];
        let mut salience = 0;
        if let Some(first) = lhs_nodes.first() {
            if first.head() == Some("declare") {
                salience = parse_declare(first)?;
                lhs_nodes = &lhs_nodes[1..];
            }
        }

        let mut lhs = Vec::new();
        let mut addresses: BTreeSet<String> = BTreeSet::new();
        let mut slot_vars: BTreeSet<String> = BTreeSet::new();
        let mut i = 0;
        while i < lhs_nodes.len() {
            let node = &lhs_nodes[i];
            let mut address = None;
            let pattern_node = match node {
                Node::Atom(t) if t.kind == TokenKind::Variable => {
                    match lhs_nodes.get(i + 1) {
                        Some(Node::Atom(a)) if a.kind == TokenKind::Arrow && a.lexeme == "<-" => {}
                        Some(other) => return Err(expected("`<-`", other)),
                        None => return Err(DslError::new(DslErrorKind::Syntax("dangling fact-address variable".into()), t.pos)),
                    }
                    let var = t.var_name().to_string();
                    if !addresses.insert(var.clone()) {
                        return Err(DslError::new(DslErrorKind::AddressConflict(var), t.pos));
                    }
                    address = Some(var);
                    i += 2;
                    lhs_nodes
                        .get(i)
                        .ok_or_else(|| DslError::new(DslErrorKind::Syntax("`<-` without pattern".into()), t.pos))?
                }
                Node::List { .. } => node,
                other => return Err(expected("pattern", other)),
            };
            let pattern = self.pattern(pattern_node, address)?;
            collect_pattern_vars(&pattern, &mut slot_vars);
            lhs.push(pattern);
            i += 1;
        }
        if lhs.is_empty() {
            return Err(DslError::new(DslErrorKind::EmptyLhs(name), open));
        }
        if let Some(clash) = addresses.intersection(&slot_vars).next() {
            return Err(DslError::new(
                DslErrorKind::AddressConflict(clash.clone()),
                open,
            ));
        }

        let scope = RhsScope {
            values: &slot_vars,
            addresses: &addresses,
        };
        let rhs = items[arrow + 1..]
            .iter()
            .map(|n| self.action(n, &scope))
            .collect::<Result<Vec<_>, _>>()?;
        if rhs.is_empty() {
            return Err(DslError::new(DslErrorKind::EmptyRhs(name), items[arrow].pos()));
        }
        Ok(RuleDef {
            name,
            salience,
            lhs,
            rhs,
        })
    }

    fn pattern(&self, node: &Node, address: Option<String>) -> Result<PatternSpec, DslError> {
        let Node::List { items, .. } = node else {
            return Err(expected("pattern", node));
        };
        let head = items.first().ok_or_else(|| expected("pattern", node))?;
        if let Some(h @ ("not" | "test" | "or" | "exists" | "forall" | "logical")) = head.symbol() {
            return Err(DslError::new(
                DslErrorKind::UnsupportedElement(h.to_string()),
                head.pos(),
            ));
        }
        let name = self.fact_name(head)?;
        let constraints = if self.templates.contains(&name) {
            let mut slots: Vec<(String, Constraint)> = Vec::new();
            for part in &items[1..] {
                let (slot, value) = slot_pair(part)?;
                if slots.iter().any(|(s, _)| *s == slot) {
                    return Err(DslError::new(DslErrorKind::DuplicateSlot(slot), part.pos()));
                }
                slots.push((slot, constraint(value)?));
            }
            PatternBody::Templated(slots)
        } else {
            let fields = items[1..]
                .iter()
                .map(|n| match n {
                    Node::List { .. } => Err(DslError::new(
                        DslErrorKind::UndeclaredTemplate(name.clone()),
                        n.pos(),
                    )),
                    _ => constraint(n),
                })
                .collect::<Result<Vec<_>, _>>()?;
            PatternBody::Ordered(fields)
        };
        Ok(PatternSpec {
            address,
            name,
            constraints,
        })
    }

    fn fact(
        &self,
        node: &Node,
        bound: &HashSet<&str>,
        ground: bool,
    ) -> Result<FactLiteral, DslError> {
        let Node::List { items, .. } = node else {
            return Err(expected("fact", node));
        };
        let head = items.first().ok_or_else(|| expected("fact", node))?;
        let name = self.fact_name(head)?;
        let field = |n: &Node| -> Result<Expr, DslError> {
            let e = expr(n)?;
            if ground && !matches!(e, Expr::Literal(_)) {
                return Err(expected("literal value", n));
            }
            let mut unbound = None;
            e.visit_variables(&mut |v| {
                if unbound.is_none() && !bound.contains(v) {
                    unbound = Some(v.to_string());
                }
            });
            match unbound {
                Some(v) => Err(DslError::new(DslErrorKind::UnboundVariable(v), n.pos())),
                None => Ok(e),
            }
        };
        let body = if self.templates.contains(&name) {
            let mut slots: Vec<(String, Expr)> = Vec::new();
            for part in &items[1..] {
                let (slot, value) = slot_pair(part)?;
                if slots.iter().any(|(s, _)| *s == slot) {
                    return Err(DslError::new(DslErrorKind::DuplicateSlot(slot), part.pos()));
                }
                slots.push((slot, field(value)?));
            }
            FactBody::Templated(slots)
        } else {
            let mut fields = Vec::new();
            for n in &items[1..] {
                if ground && matches!(n, Node::List { .. }) {
                    return Err(DslError::new(
                        DslErrorKind::UndeclaredTemplate(name.clone()),
                        n.pos(),
                    ));
                }
                fields.push(field(n)?);
            }
            FactBody::Ordered(fields)
        };
        Ok(FactLiteral { name, body })
    }

    fn action(&self, node: &Node, scope: &RhsScope<'_>) -> Result<ActionSpec, DslError> {
        let Node::List { items, open } = node else {
            return Err(expected("action", node));
        };
        let head = items.first().ok_or_else(|| expected("action", node))?;
        let args = &items[1..];
        let action = match head.symbol() {
            Some("assert") => {
                let [fact] = args else {
                    return Err(DslError::new(DslErrorKind::Syntax("assert takes exactly one fact".into()), *open));
                };
                let bound: HashSet<&str> = scope.values.iter().map(String::as_str).collect();
                ActionSpec::Assert(self.fact(fact, &bound, false)?)
            }
            Some("retract") => match args {
                [Node::Atom(t)] if t.kind == TokenKind::Variable => {
                    let var = t.var_name().to_string();
                    if !scope.addresses.contains(&var) {
                        return Err(DslError::new(DslErrorKind::NotAnAddress(var), t.pos));
                    }
                    ActionSpec::Retract(var)
                }
                _ => {
                    return Err(DslError::new(
                        DslErrorKind::Syntax("retract takes exactly one fact-address variable".into()),
                        *open,
                    ))
                }
            },
            Some("bind") => match args {
                [Node::Atom(t), value] if t.kind == TokenKind::GlobalVariable => {
                    ActionSpec::Bind(t.var_name().to_string(), expr(value)?)
                }
                [Node::Atom(t), _] if t.kind == TokenKind::Variable => {
                    return Err(DslError::new(
                        DslErrorKind::Syntax("bind targets only global variables".into()),
                        t.pos,
                    ))
                }
                _ => {
                    return Err(DslError::new(
                        DslErrorKind::Syntax("expected (bind ?*global* <expr>)".into()),
                        *open,
                    ))
                }
            },
            Some("printout") => {
                match args.first() {
                    Some(n) if n.symbol() == Some("t") => {}
                    Some(n) => return Err(expected("router `t`", n)),
                    None => return Err(DslError::new(DslErrorKind::Syntax("printout needs router `t`".into()), *open)),
                }
                let mut rest = &args[1..];
                let newline = rest.last().and_then(Node::symbol) == Some("crlf");
                if newline {
                    rest = &rest[..rest.len() - 1];
                }
                let items = rest
                    .iter()
                    .map(|n| {
                        if n.symbol() == Some("crlf") {
                            Err(DslError::new(
                                DslErrorKind::Syntax("crlf is only allowed as the last printout item".into()),
                                n.pos(),
                            ))
                        } else {
                            expr(n)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ActionSpec::Print { items, newline }
            }
            Some("if") => {
                let cond_node = args
                    .first()
                    .ok_or_else(|| DslError::new(DslErrorKind::Syntax("if needs a condition".into()), *open))?;
                let cond = cond_expr(cond_node)?;
                match args.get(1) {
                    Some(n) if n.symbol() == Some("then") => {}
                    Some(n) => return Err(expected("`then`", n)),
                    None => return Err(DslError::new(DslErrorKind::Syntax("if needs `then`".into()), *open)),
                }
                let body = &args[2..];
                let else_at = body.iter().position(|n| n.symbol() == Some("else"));
                let (then_nodes, else_nodes) = match else_at {
                    Some(k) => (&body[..k], Some(&body[k + 1..])),
                    None => (body, None),
                };
                let then = then_nodes
                    .iter()
                    .map(|n| self.action(n, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                let otherwise = else_nodes
                    .map(|ns| ns.iter().map(|n| self.action(n, scope)).collect::<Result<Vec<_>, _>>())
                    .transpose()?;
                ActionSpec::If {
                    cond,
                    then,
                    otherwise,
                }
            }
            _ => return Err(expected("action (assert, retract, bind, printout, if)", head)),
        };

        // nested if-branches were checked when they were parsed
        let own_exprs: Vec<&Expr> = match &action {
            ActionSpec::If { cond, .. } => cond.exprs(),
            other => {
                let mut v = Vec::new();
                other.walk_exprs(&mut |e| v.push(e));
                v
            }
        };
        let mut problem = None;
        for e in own_exprs {
            e.visit_variables(&mut |v| {
                if problem.is_some() {
                    return;
                }
                if scope.addresses.contains(v) {
                    problem = Some(DslErrorKind::AddressAsValue(v.to_string()));
                } else if !scope.values.contains(v) {
                    problem = Some(DslErrorKind::UnboundVariable(v.to_string()));
                }
            });
        }
        match problem {
            Some(kind) => Err(DslError::new(kind, *open)),
            None => Ok(action),
        }
    }
}

struct RhsScope<'a> {
    values: &'a BTreeSet<String>,
    addresses: &'a BTreeSet<String>,
}

fn parse_declare(node: &Node) -> Result<i64, DslError> {
    let shape = || expected("(declare (salience <integer>))", node);
    let Node::List { items, .. } = node else {
        return Err(shape());
    };
    match items.as_slice() {
        [_, inner @ Node::List { items: parts, .. }] if inner.head() == Some("salience") => {
            match parts.as_slice() {
                [_, Node::Atom(t)] if t.kind == TokenKind::Integer => {
                    Ok(t.lexeme.parse().expect("lexer validated integer"))
                }
                [_, other] => Err(expected("integer salience", other)),
                _ => Err(shape()),
            }
        }
        _ => Err(shape()),
    }
}

fn slot_pair(node: &Node) -> Result<(String, &Node), DslError> {
    match node {
        Node::List { items, .. } if items.len() == 2 => {
            let slot = items[0]
                .symbol()
                .filter(|s| *s != "?")
                .ok_or_else(|| expected("slot name", &items[0]))?;
            Ok((slot.to_string(), &items[1]))
        }
        other => Err(expected("(<slot> <value>)", other)),
    }
}

fn constraint(node: &Node) -> Result<Constraint, DslError> {
    match node {
        Node::Atom(t) => match t.kind {
            TokenKind::Variable => Ok(Constraint::Variable(t.var_name().to_string())),
            TokenKind::Symbol if t.lexeme == "?" => Ok(Constraint::Wildcard),
            _ => literal_of(t)
                .map(Constraint::Literal)
                .ok_or_else(|| expected("constraint", node)),
        },
        Node::List { .. } => Err(expected("constraint", node)),
    }
}

fn expr(node: &Node) -> Result<Expr, DslError> {
    match node {
        Node::Atom(t) => match t.kind {
            TokenKind::Variable => Ok(Expr::Variable(t.var_name().to_string())),
            TokenKind::GlobalVariable => Ok(Expr::Global(t.var_name().to_string())),
            TokenKind::Symbol if t.lexeme == "?" => Err(expected("expression", node)),
            _ => literal_of(t)
                .map(Expr::Literal)
                .ok_or_else(|| expected("expression", node)),
        },
        Node::List { items, open } => {
            let op = items
                .first()
                .and_then(Node::symbol)
                .and_then(ArithOp::from_symbol)
                .ok_or_else(|| match items.first() {
                    Some(h) => expected("arithmetic operator (+ - * /)", h),
                    None => DslError::new(DslErrorKind::Syntax("empty expression".into()), *open),
                })?;
            if items.len() < 2 {
                return Err(DslError::new(
                    DslErrorKind::Syntax(format!("`{}` needs at least one operand", op.symbol())),
                    *open,
                ));
            }
            let args = items[1..].iter().map(expr).collect::<Result<Vec<_>, _>>()?;
            Ok(Expr::Arith(op, args))
        }
    }
}

fn cond_expr(node: &Node) -> Result<CondExpr, DslError> {
    let Node::List { items, open } = node else {
        return Err(expected("condition", node));
    };
    let head = items.first().ok_or_else(|| expected("condition", node))?;
    match head.symbol() {
        Some("and") => {
            if items.len() < 2 {
                return Err(DslError::new(DslErrorKind::Syntax("`and` needs at least one condition".into()), *open));
            }
            Ok(CondExpr::And(
                items[1..].iter().map(cond_expr).collect::<Result<_, _>>()?,
            ))
        }
        Some(s) => {
            let op = CmpOp::from_symbol(s).ok_or_else(|| expected("comparison or `and`", head))?;
            match &items[1..] {
                [a, b] => Ok(CondExpr::Compare(op, Box::new(expr(a)?), Box::new(expr(b)?))),
                _ => Err(DslError::new(
                    DslErrorKind::Syntax(format!("`{s}` takes exactly two operands")),
                    *open,
                )),
            }
        }
        None => Err(expected("comparison or `and`", head)),
    }
}

fn collect_pattern_vars(p: &PatternSpec, out: &mut BTreeSet<String>) {
    let constraints: Vec<&Constraint> = match &p.constraints {
        PatternBody::Ordered(cs) => cs.iter().collect(),
        PatternBody::Templated(cs) => cs.iter().map(|(_, c)| c).collect(),
    };
    for c in constraints {
        if let Constraint::Variable(v) = c {
            out.insert(v.clone());
        }
    }
}
