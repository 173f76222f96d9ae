#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use cpexpert::dsl::{
    ActionSpec, ArithOp, CmpOp, CondExpr, Constraint, Construct, Expr, FactBody, FactLiteral,
    GlobalDef, PatternBody, PatternSpec, RuleDef, SlotDef, TemplateDef, Value,
};
use cpexpert::engine::{AssertOutcome, Fact, FactId, RuleBase, Session, TraceKind};
use cpexpert::oracle::match_all;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// differential instances

const VARS: [&str; 3] = ["x", "y", "z"];
const SLOTS: [&str; 3] = ["a", "b", "c"];

#[derive(Debug, Clone)]
pub struct FactName {
    pub name: String,
    /// Slot names for a template, `None` for an ordered fact.
    pub slots: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub enum Op {
    Assert(FactLiteral),
    /// Retract the fact returned by the k-th assert so far.
    Retract(usize),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub names: Vec<FactName>,
    pub program: Vec<Construct>,
    pub ops: Vec<Op>,
}

/// Small domain so that joins and duplicates are common. `1` and `1.0`,
/// `x` and `"x"` are distinct values.
fn small_value(rng: &mut TestRng) -> Value {
    match rng.random_range(0..9) {
        0 | 1 => Value::symbol("x"),
        2 => Value::symbol("y"),
        3 => Value::symbol("nil"),
        4 | 5 => Value::Integer(1),
        6 => Value::Integer(2),
        7 => Value::Float(1.0),
        _ => Value::String("x".into()),
    }
}

fn small_constraint(rng: &mut TestRng) -> Constraint {
    match rng.random_range(0..20) {
        0..=5 => Constraint::Literal(small_value(rng)),
        6..=14 => Constraint::Variable(VARS.choose(rng).unwrap().to_string()),
        _ => Constraint::Wildcard,
    }
}

fn subset<'a>(rng: &mut TestRng, items: &'a [String]) -> Vec<&'a String> {
    let mut out: Vec<&String> = items.iter().filter(|_| rng.random_bool(0.6)).collect();
    // slot order in a pattern is free
    if out.len() > 1 && rng.random_bool(0.3) {
        out.reverse();
    }
    out
}

fn random_pattern(rng: &mut TestRng, names: &[FactName], index: usize) -> PatternSpec {
    let n = names.choose(rng).unwrap();
    let constraints = match &n.slots {
        Some(slots) => PatternBody::Templated(
            subset(rng, slots)
                .into_iter()
                .map(|s| (s.clone(), small_constraint(rng)))
                .collect(),
        ),
        None => PatternBody::Ordered(
            (0..rng.random_range(0..=2)).map(|_| small_constraint(rng)).collect(),
        ),
    };
    PatternSpec {
        address: rng.random_bool(0.25).then(|| format!("f{index}")),
        name: n.name.clone(),
        constraints,
    }
}

pub fn random_fact(rng: &mut TestRng, names: &[FactName]) -> FactLiteral {
    let n = names.choose(rng).unwrap();
    let lit = |rng: &mut TestRng| Expr::Literal(small_value(rng));
    let body = match &n.slots {
        Some(slots) => FactBody::Templated(
            subset(rng, slots).into_iter().map(|s| (s.clone(), lit(rng))).collect(),
        ),
        None => FactBody::Ordered((0..rng.random_range(0..=2)).map(|_| lit(rng)).collect()),
    };
    FactLiteral { name: n.name.clone(), body }
}

/// An RHS that can change working memory so that runs exercise
/// mid-run agenda updates.
fn random_rhs(rng: &mut TestRng, lhs: &[PatternSpec], names: &[FactName]) -> Vec<ActionSpec> {
    let mut rhs = vec![ActionSpec::Print {
        items: vec![Expr::Literal(Value::String("fired".into()))],
        newline: true,
    }];
    if rng.random_bool(0.3) {
        rhs.push(ActionSpec::Assert(random_fact(rng, names)));
    }
    let addresses: Vec<&String> = lhs.iter().filter_map(|p| p.address.as_ref()).collect();
    if let Some(a) = addresses.choose(rng) {
        if rng.random_bool(0.5) {
            rhs.push(ActionSpec::Retract((*a).clone()));
        }
    }
    rhs
}

/// ≤5 fact names, ≤8 rules of 1–3 patterns, ≤30 operations asserting at most 20 facts.
pub fn random_instance(rng: &mut TestRng) -> Instance {
    let names: Vec<FactName> = (0..rng.random_range(1..=5))
        .map(|i| {
            if rng.random_bool(0.5) {
                let k = rng.random_range(1..=3);
                FactName {
                    name: format!("t{i}"),
                    slots: Some(SLOTS[..k].iter().map(|s| s.to_string()).collect()),
                }
            } else {
                FactName { name: format!("o{i}"), slots: None }
            }
        })
        .collect();

    let mut program = Vec::new();
    for n in &names {
        if let Some(slots) = &n.slots {
            program.push(Construct::Template(TemplateDef {
                name: n.name.clone(),
                slots: slots
                    .iter()
                    .map(|s| SlotDef {
                        name: s.clone(),
                        default: rng.random_bool(0.3).then(|| small_value(rng)),
                    })
                    .collect(),
            }));
        }
    }
    for r in 0..rng.random_range(1..=8) {
        let lhs: Vec<PatternSpec> = (0..rng.random_range(1..=3))
            .map(|i| random_pattern(rng, &names, i))
            .collect();
        let rhs = random_rhs(rng, &lhs, &names);
        program.push(Construct::Rule(RuleDef {
            name: format!("r{r}"),
            salience: *[-3, 0, 0, 0, 5].choose(rng).unwrap(),
            lhs,
            rhs,
        }));
    }

    let mut ops = Vec::new();
    let mut asserts = 0;
    for _ in 0..rng.random_range(1..=30) {
        if asserts > 0 && rng.random_bool(0.3) {
            ops.push(Op::Retract(rng.random_range(0..asserts)));
        } else if asserts < 20 {
            ops.push(Op::Assert(random_fact(rng, &names)));
            asserts += 1;
        }
    }
    Instance { names, program, ops }
}

pub fn rules_of(program: &[Construct]) -> Vec<RuleDef> {
    program
        .iter()
        .filter_map(|c| match c {
            Construct::Rule(r) => Some(r.clone()),
            _ => None,
        })
        .collect()
}

type Key = (String, Vec<FactId>, BTreeMap<String, Value>);

fn agenda_set(s: &Session) -> BTreeSet<Key> {
    s.agenda()
        .into_iter()
        .map(|a| (a.rule, a.facts, a.bindings))
        .collect()
}

fn oracle_set(rules: &[RuleDef], s: &Session) -> BTreeSet<Key> {
    let facts: Vec<Fact> = s.facts().cloned().collect();
    match_all(rules, &facts)
        .into_iter()
        .map(|a| (a.rule, a.facts, a.bindings))
        .collect()
}

/// Agenda listing must be in firing order: salience, then recency.
fn check_agenda_order(s: &Session) -> Result<(), String> {
    let agenda = s.agenda();
    for pair in agenda.windows(2) {
        let key = |e: &cpexpert::engine::AgendaEntry| {
            (e.salience, e.facts.iter().max().copied().unwrap_or(FactId(0)))
        };
        if key(&pair[0]) < key(&pair[1]) {
            return Err(format!("agenda out of order: {:?} before {:?}", pair[0], pair[1]));
        }
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct DiffStats {
    pub steps: usize,
    pub activations: usize,
    pub firings: u64,
    pub quiescent: bool,
}

/// Apply the operations, comparing the agenda with the oracle after every
/// step; then run one firing at a time, checking order, refraction and
/// that the agenda equals the oracle set minus what already fired; finally
/// retract everything and check that all memories drained.
pub fn check_instance(inst: &Instance) -> Result<DiffStats, String> {
    let rb = Arc::new(RuleBase::compile(&inst.program).map_err(|e| format!("compile: {e}"))?);
    let rules = rules_of(&inst.program);
    let mut s = Session::new(Arc::clone(&rb));
    let mut stats = DiffStats::default();
    let mut asserted: Vec<FactId> = Vec::new();

    for (step, op) in inst.ops.iter().enumerate() {
        match op {
            Op::Assert(f) => {
                let before = agenda_set(&s);
                let trace_len = s.trace().len();
                match s.assert_fact(f).map_err(|e| format!("assert: {e}"))? {
                    AssertOutcome::Asserted(id) => asserted.push(id),
                    AssertOutcome::Duplicate(id) => {
                        if agenda_set(&s) != before || s.trace().len() != trace_len {
                            return Err(format!("step {step}: duplicate assert changed state"));
                        }
                        asserted.push(id);
                    }
                }
            }
            Op::Retract(k) => {
                let id = asserted[*k];
                let live = s.fact(id).is_some();
                if s.retract_fact(id) != live {
                    return Err(format!("step {step}: retract {id} disagreed with liveness"));
                }
            }
        }
        let (got, want) = (agenda_set(&s), oracle_set(&rules, &s));
        if got != want {
            return Err(format!(
                "step {step}: agenda/oracle mismatch\n  only in agenda: {:?}\n  only in oracle: {:?}",
                got.difference(&want).collect::<Vec<_>>(),
                want.difference(&got).collect::<Vec<_>>()
            ));
        }
        if s.agenda().len() != got.len() {
            return Err(format!("step {step}: agenda holds duplicate activations"));
        }
        check_agenda_order(&s)?;
        if !s.tokens_reference_live_facts() {
            return Err(format!("step {step}: beta memory references a retracted fact"));
        }
        stats.steps += 1;
        stats.activations += got.len();
    }

    let mut fired: BTreeSet<(String, Vec<FactId>)> = BTreeSet::new();
    for _ in 0..50 {
        let agenda = s.agenda();
        let Some(top) = agenda.first().cloned() else { break };
        let n = s.run(Some(1)).map_err(|e| format!("run: {e}"))?;
        if n != 1 {
            return Err(format!("run(Some(1)) fired {n} with a non-empty agenda"));
        }
        let last = s
            .trace()
            .iter()
            .rev()
            .find_map(|e| match &e.kind {
                TraceKind::RuleFired { rule, facts } => Some((rule.clone(), facts.clone())),
                _ => None,
            })
            .unwrap();
        if last != (top.rule.clone(), top.facts.clone()) {
            return Err(format!("fired {last:?} but the agenda head was {top:?}"));
        }
        if !fired.insert(last) {
            return Err(format!("activation {top:?} fired twice"));
        }
        stats.firings += 1;
        // the oracle is exponential; stay within the harness bound of 20 facts
        if s.facts().count() > 20 {
            check_agenda_order(&s)?;
            continue;
        }
        let want: BTreeSet<Key> = oracle_set(&rules, &s)
            .into_iter()
            .filter(|(r, f, _)| !fired.contains(&(r.clone(), f.clone())))
            .collect();
        if agenda_set(&s) != want {
            return Err(format!("after firing {top:?}: agenda differs from oracle minus fired"));
        }
        check_agenda_order(&s)?;
    }
    // a random program may cycle forever (retract in one rule, re-assert in another)
    if s.agenda().is_empty() {
        stats.quiescent = true;
        if s.run(None).map_err(|e| format!("rerun: {e}"))? != 0 {
            return Err("second run fired again (refraction broken)".into());
        }
    }

    let ids: Vec<FactId> = s.facts().map(|f| f.id).collect();
    for id in ids {
        s.retract_fact(id);
    }
    let m = s.memory_stats();
    if m.facts != 0 || m.alpha_entries != 0 || m.beta_tokens != 0 || m.activations != 0 {
        return Err(format!("memories not empty after retracting everything: {m:?}"));
    }
    Ok(stats)
}

/// Replays the operations and run on a fresh session and renders the trace.
pub fn trace_log(inst: &Instance) -> Vec<String> {
    let rb = Arc::new(RuleBase::compile(&inst.program).unwrap());
    let mut s = Session::new(rb);
    let mut asserted = Vec::new();
    for op in &inst.ops {
        match op {
            Op::Assert(f) => asserted.push(s.assert_fact(f).unwrap().id()),
            Op::Retract(k) => {
                s.retract_fact(asserted[*k]);
            }
        }
    }
    let _ = s.run(Some(500));
    s.trace().iter().map(ToString::to_string).collect()
}

// ---------------------------------------------------------------------------
// round-trip programs

const WORDS: [&str; 10] = [
    "answer", "result", "spasticity", "yes", "no", "nil", "a-b", "x1", "diagnosis-rule", "gait",
];

fn word(rng: &mut TestRng) -> String {
    if rng.random_bool(0.6) {
        WORDS.choose(rng).unwrap().to_string()
    } else {
        let len = rng.random_range(1..=8);
        let mut s = String::new();
        for i in 0..len {
            let c = if i == 0 {
                rng.random_range(b'a'..=b'z')
            } else {
                *b"abcdefghijklmnopqrstuvwxyz0123456789-_".choose(rng).unwrap()
            };
            s.push(c as char);
        }
        if matches!(s.as_str(), "crlf" | "then" | "else" | "and") {
            s.push('x');
        }
        s
    }
}

fn literal(rng: &mut TestRng) -> Value {
    match rng.random_range(0..6) {
        0 | 1 => Value::Symbol(word(rng)),
        2 => {
            let chars = ['a', 'Z', ' ', '"', '\\', '\n', '\t', ';', '(', ')', 'é'];
            Value::String((0..rng.random_range(0..6)).map(|_| *chars.choose(rng).unwrap()).collect())
        }
        3 => Value::Integer(rng.random_range(-1000..=1000)),
        4 => Value::Integer(*[i64::MIN, i64::MAX, 0, -1].choose(rng).unwrap()),
        _ => {
            let f = match rng.random_range(0..4) {
                0 => rng.random_range(-1e6..1e6),
                1 => rng.random::<f64>() * 1e-300,
                2 => *[0.0, -0.0, 0.5, 1e300, 29.41176470588235].choose(rng).unwrap(),
                _ => rng.random_range(-100i32..100) as f64,
            };
            Value::Float(f)
        }
    }
}

struct Scope {
    vars: Vec<String>,
    addresses: Vec<String>,
    globals: Vec<String>,
}

fn random_expr(rng: &mut TestRng, scope: &Scope, depth: u32) -> Expr {
    let pick = rng.random_range(0..if depth == 0 { 3 } else { 5 });
    match pick {
        0 => Expr::Literal(literal(rng)),
        1 if !scope.vars.is_empty() => Expr::Variable(scope.vars.choose(rng).unwrap().clone()),
        2 if !scope.globals.is_empty() => Expr::Global(scope.globals.choose(rng).unwrap().clone()),
        3 | 4 => {
            let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div].choose(rng).unwrap();
            Expr::Arith(op, (0..rng.random_range(1..=3)).map(|_| random_expr(rng, scope, depth - 1)).collect())
        }
        _ => Expr::Literal(Value::Integer(rng.random_range(0..100))),
    }
}

fn random_cond(rng: &mut TestRng, scope: &Scope, depth: u32) -> CondExpr {
    if depth > 0 && rng.random_bool(0.3) {
        CondExpr::And((0..rng.random_range(1..=3)).map(|_| random_cond(rng, scope, depth - 1)).collect())
    } else {
        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne].choose(rng).unwrap();
        CondExpr::Compare(op, Box::new(random_expr(rng, scope, 2)), Box::new(random_expr(rng, scope, 2)))
    }
}

fn random_body(rng: &mut TestRng, names: &[FactName], scope: &Scope, ground: bool) -> FactLiteral {
    let n = names.choose(rng).unwrap();
    let value = |rng: &mut TestRng| {
        if ground {
            Expr::Literal(literal(rng))
        } else {
            random_expr(rng, scope, 2)
        }
    };
    let body = match &n.slots {
        Some(slots) => FactBody::Templated(subset(rng, slots).into_iter().map(|s| (s.clone(), value(rng))).collect()),
        None => FactBody::Ordered((0..rng.random_range(0..=3)).map(|_| value(rng)).collect()),
    };
    FactLiteral { name: n.name.clone(), body }
}

fn random_actions(rng: &mut TestRng, names: &[FactName], scope: &Scope, depth: u32) -> Vec<ActionSpec> {
    (0..rng.random_range(1..=3))
        .map(|_| match rng.random_range(0..if depth == 0 { 4 } else { 5 }) {
            0 => ActionSpec::Assert(random_body(rng, names, scope, false)),
            1 if !scope.addresses.is_empty() => ActionSpec::Retract(scope.addresses.choose(rng).unwrap().clone()),
            2 if !scope.globals.is_empty() => {
                ActionSpec::Bind(scope.globals.choose(rng).unwrap().clone(), random_expr(rng, scope, 2))
            }
            4 => ActionSpec::If {
                cond: random_cond(rng, scope, 2),
                then: random_actions(rng, names, scope, depth - 1),
                otherwise: rng.random_bool(0.5).then(|| random_actions(rng, names, scope, depth - 1)),
            },
            _ => ActionSpec::Print {
                items: (0..rng.random_range(1..=3)).map(|_| random_expr(rng, scope, 1)).collect(),
                newline: rng.random_bool(0.5),
            },
        })
        .collect()
}

/// A well-formed program exercising every construct and action form.
pub fn random_program(rng: &mut TestRng) -> Vec<Construct> {
    let mut out = Vec::new();
    let mut names = Vec::new();
    for i in 0..rng.random_range(0..=3) {
        let slots: Vec<String> = (0..rng.random_range(1..=4)).map(|j| format!("s{j}")).collect();
        out.push(Construct::Template(TemplateDef {
            name: format!("tmpl{i}"),
            slots: slots
                .iter()
                .map(|s| SlotDef { name: s.clone(), default: rng.random_bool(0.4).then(|| literal(rng)) })
                .collect(),
        }));
        names.push(FactName { name: format!("tmpl{i}"), slots: Some(slots) });
    }
    for i in 0..rng.random_range(1..=3) {
        names.push(FactName { name: format!("fact{i}"), slots: None });
    }
    let globals: Vec<String> = (0..rng.random_range(0..=2)).map(|i| format!("g{i}")).collect();
    for g in &globals {
        let value = if rng.random_bool(0.5) {
            Value::Integer(rng.random_range(-50..50))
        } else {
            Value::Float(rng.random_range(-50.0..50.0))
        };
        out.push(Construct::Global(GlobalDef { name: g.clone(), value }));
    }
    for r in 0..rng.random_range(1..=4) {
        let mut vars = Vec::new();
        let lhs: Vec<PatternSpec> = (0..rng.random_range(1..=3))
            .map(|i| {
                let mut p = random_pattern(rng, &names, i);
                p.address = rng.random_bool(0.3).then(|| format!("addr{i}"));
                let mut randomize = |c: &mut Constraint| {
                    if let Constraint::Literal(v) = c {
                        *v = literal(rng);
                    }
                };
                match &mut p.constraints {
                    PatternBody::Ordered(cs) => cs.iter_mut().for_each(&mut randomize),
                    PatternBody::Templated(cs) => cs.iter_mut().for_each(|(_, c)| randomize(c)),
                }
                let cs: Vec<&Constraint> = match &p.constraints {
                    PatternBody::Ordered(cs) => cs.iter().collect(),
                    PatternBody::Templated(cs) => cs.iter().map(|(_, c)| c).collect(),
                };
                for c in cs {
                    if let Constraint::Variable(v) = c {
                        if !vars.contains(v) {
                            vars.push(v.clone());
                        }
                    }
                }
                p
            })
            .collect();
        let scope = Scope {
            vars,
            addresses: lhs.iter().filter_map(|p| p.address.clone()).collect(),
            globals: globals.clone(),
        };
        let rhs = random_actions(rng, &names, &scope, 2);
        out.push(Construct::Rule(RuleDef {
            name: format!("rule-{r}"),
            salience: if rng.random_bool(0.5) { 0 } else { rng.random_range(-10000..10000) },
            lhs,
            rhs,
        }));
    }
    let empty = Scope { vars: vec![], addresses: vec![], globals: vec![] };
    for _ in 0..rng.random_range(0..=3) {
        out.push(Construct::Fact(random_body(rng, &names, &empty, true)));
    }
    out
}
