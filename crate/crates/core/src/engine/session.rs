use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::dsl::{ActionSpec, Construct, FactBody, FactLiteral, Parser, Value};

use super::eval::{eval, eval_cond, ActionError, Bindings, Env};
use super::fact::{Fact, FactFields, FactId};
use super::network::{FieldValues, JoinId, RuleBase};
use super::{EngineError, RuntimeError};

/// A partial match: one fact per pattern matched so far.
#[derive(Debug, Clone, PartialEq)]
struct Token {
    facts: Vec<FactId>,
    bindings: Bindings,
}

#[derive(Debug, Clone)]
struct Activation {
    rule: usize,
    token: Token,
}

/// Agenda order: highest salience, then most recent fact, then latest
/// activation. Smaller keys fire first.
type AgendaKey = (Reverse<i64>, Reverse<FactId>, Reverse<u64>);

#[derive(Debug, Clone, PartialEq)]
pub struct AgendaEntry {
    pub rule: String,
    pub facts: Vec<FactId>,
    pub salience: i64,
    pub bindings: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertOutcome {
    Asserted(FactId),
    /// Content-identical to a live fact; nothing changed.
    Duplicate(FactId),
}

impl AssertOutcome {
    pub fn id(self) -> FactId {
        match self {
            AssertOutcome::Asserted(id) | AssertOutcome::Duplicate(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    FactAsserted { id: FactId, fact: String },
    FactRetracted { id: FactId, fact: String },
    ActivationAdded { rule: String, facts: Vec<FactId> },
    ActivationRemoved { rule: String, facts: Vec<FactId> },
    RuleFired { rule: String, facts: Vec<FactId> },
    GlobalChanged { name: String, old: Value, new: Value },
    OutputEmitted { text: String },
}

impl TraceKind {
    pub fn label(&self) -> &'static str {
        match self {
            TraceKind::FactAsserted { .. } => "fact-asserted",
            TraceKind::FactRetracted { .. } => "fact-retracted",
            TraceKind::ActivationAdded { .. } => "activation-added",
            TraceKind::ActivationRemoved { .. } => "activation-removed",
            TraceKind::RuleFired { .. } => "rule-fired",
            TraceKind::GlobalChanged { .. } => "global-changed",
            TraceKind::OutputEmitted { .. } => "output-emitted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: TraceKind,
}

fn fact_list(ids: &[FactId]) -> String {
    ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// `step<TAB>event-kind<TAB>details`
impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.step, self.kind.label())?;
        match &self.kind {
            TraceKind::FactAsserted { id, fact } | TraceKind::FactRetracted { id, fact } => {
                write!(f, "{id} {fact}")
            }
            TraceKind::ActivationAdded { rule, facts }
            | TraceKind::ActivationRemoved { rule, facts }
            | TraceKind::RuleFired { rule, facts } => write!(f, "{rule} {}", fact_list(facts)),
            TraceKind::GlobalChanged { name, old, new } => write!(f, "?*{name}* {old} -> {new}"),
            TraceKind::OutputEmitted { text } => write!(f, "{}", Value::String(text.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MemoryStats {
    pub facts: usize,
    pub alpha_entries: usize,
    pub beta_tokens: usize,
    pub activations: usize,
}

/// Mutable inference state over a shared, immutable [`RuleBase`].
#[derive(Debug, Clone)]
pub struct Session {
    rules: Arc<RuleBase>,
    facts: BTreeMap<FactId, Fact>,
    by_name: HashMap<String, BTreeSet<FactId>>,
    content: HashMap<(String, FactFields), FactId>,
    next_fact: u64,
    alpha_mem: Vec<Vec<FactId>>,
    beta_mem: Vec<Vec<Token>>,
    agenda: BTreeMap<AgendaKey, Activation>,
    next_seq: u64,
    globals: BTreeMap<String, Value>,
    output: String,
    trace: Vec<TraceEvent>,
    step: u64,
    firings: u64,
}

fn normalize_global(name: &str) -> &str {
    name.strip_prefix("?*")
        .and_then(|n| n.strip_suffix('*'))
        .unwrap_or(name)
}

impl Session {
    pub fn new(rules: Arc<RuleBase>) -> Self {
        let alpha_mem = vec![Vec::new(); rules.network.alphas.len()];
        let beta_mem = vec![Vec::new(); rules.network.joins.len()];
        let globals = rules.globals().iter().cloned().collect();
        Session {
            rules,
            facts: BTreeMap::new(),
            by_name: HashMap::new(),
            content: HashMap::new(),
            next_fact: 1,
            alpha_mem,
            beta_mem,
            agenda: BTreeMap::new(),
            next_seq: 0,
            globals,
            output: String::new(),
            trace: Vec::new(),
            step: 0,
            firings: 0,
        }
    }

    pub fn rule_base(&self) -> &Arc<RuleBase> {
        &self.rules
    }

    fn record(&mut self, kind: TraceKind) {
        self.step += 1;
        self.trace.push(TraceEvent {
            step: self.step,
            kind,
        });
    }

    /// Assert a fact literal whose fields are all literal values.
    pub fn assert_fact(&mut self, lit: &FactLiteral) -> Result<AssertOutcome, EngineError> {
        let fields = self.rules.instantiate_ground(lit)?;
        Ok(self.assert_fields(lit.name.clone(), fields))
    }

    /// Parse `source` as a sequence of fact literals and assert them in order.
    pub fn assert_str(&mut self, source: &str) -> Result<Vec<AssertOutcome>, EngineError> {
        let tokens = crate::dsl::tokenize(source)?;
        let constructs = Parser::with_templates(self.rules.templates().map(|t| t.name.clone()))
            .parse(&tokens)?;
        let facts = constructs
            .into_iter()
            .map(|c| match c {
                Construct::Fact(f) => Ok(f),
                other => Err(EngineError::NotAFact(format!("{other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        facts.iter().map(|f| self.assert_fact(f)).collect()
    }

    fn assert_fields(&mut self, name: String, fields: FactFields) -> AssertOutcome {
        let key = (name, fields);
        if let Some(&id) = self.content.get(&key) {
            return AssertOutcome::Duplicate(id);
        }
        let id = FactId(self.next_fact);
        self.next_fact += 1;
        let (name, fields) = key.clone();
        let fact = Fact { id, name, fields };
        self.record(TraceKind::FactAsserted {
            id,
            fact: fact.to_string(),
        });
        self.by_name.entry(fact.name.clone()).or_default().insert(id);
        self.content.insert(key, id);

        let rb = Arc::clone(&self.rules);
        let mut successors: Vec<JoinId> = Vec::new();
        for &a in rb.network.alpha_by_name.get(&fact.name).into_iter().flatten() {
            let node = &rb.network.alphas[a];
            if node.key.matches(&fact) {
                self.alpha_mem[a].push(id);
                successors.extend(&node.successors);
            }
        }
        self.facts.insert(id, fact);

        // deepest joins first, so that no parent memory already holds a
        // token built from this fact when a join is right-activated
        successors.sort_by_key(|j| (Reverse(rb.network.joins[*j].depth), *j));
        successors.dedup();
        for j in successors {
            self.right_activate(&rb, j, id);
        }
        AssertOutcome::Asserted(id)
    }

    fn join_pairs(&self, rb: &RuleBase, join: JoinId, fact: FactId) -> Vec<(String, Value)> {
        let fact = &self.facts[&fact];
        rb.network.joins[join]
            .bindings
            .iter()
            .map(|(i, var)| (var.clone(), fact.field(*i).cloned().expect("alpha test checked shape")))
            .collect()
    }

    fn right_activate(&mut self, rb: &RuleBase, join: JoinId, fact: FactId) {
        let pairs = self.join_pairs(rb, join, fact);
        let parents = match rb.network.joins[join].parent {
            None => vec![Token {
                facts: Vec::new(),
                bindings: Bindings::new(),
            }],
            Some(p) => self.beta_mem[p].clone(),
        };
        for parent in parents {
            if let Some(token) = extend(&parent, fact, &pairs) {
                self.left_activate(rb, join, token);
            }
        }
    }

    fn left_activate(&mut self, rb: &RuleBase, join: JoinId, token: Token) {
        self.beta_mem[join].push(token.clone());
        let node = &rb.network.joins[join];
        match node.child {
            Some(child) => {
                let candidates = self.alpha_mem[rb.network.joins[child].alpha].clone();
                for fact in candidates {
                    let pairs = self.join_pairs(rb, child, fact);
                    if let Some(next) = extend(&token, fact, &pairs) {
                        self.left_activate(rb, child, next);
                    }
                }
            }
            None => self.add_activation(rb, node.rule, token),
        }
    }

    fn add_activation(&mut self, rb: &RuleBase, rule: usize, token: Token) {
        let recency = token.facts.iter().copied().max().expect("non-empty token");
        let seq = self.next_seq;
        self.next_seq += 1;
        let compiled = &rb.rules()[rule];
        self.record(TraceKind::ActivationAdded {
            rule: compiled.name().to_string(),
            facts: token.facts.clone(),
        });
        self.agenda.insert(
            (Reverse(compiled.salience()), Reverse(recency), Reverse(seq)),
            Activation { rule, token },
        );
    }

    /// Remove a fact and everything derived from it. Returns `false` if the
    /// id is not live.
    pub fn retract_fact(&mut self, id: FactId) -> bool {
        let Some(fact) = self.facts.remove(&id) else {
            return false;
        };
        self.record(TraceKind::FactRetracted {
            id,
            fact: fact.to_string(),
        });
        if let Some(ids) = self.by_name.get_mut(&fact.name) {
            ids.remove(&id);
            if ids.is_empty() {
                self.by_name.remove(&fact.name);
            }
        }
        self.content.remove(&(fact.name.clone(), fact.fields.clone()));

        let rb = Arc::clone(&self.rules);
        let mut seen = HashSet::new();
        for &a in rb.network.alpha_by_name.get(&fact.name).into_iter().flatten() {
            let before = self.alpha_mem[a].len();
            self.alpha_mem[a].retain(|f| *f != id);
            if self.alpha_mem[a].len() == before {
                continue;
            }
            for &j in &rb.network.alphas[a].successors {
                let mut cur = Some(j);
                while let Some(node) = cur {
                    if !seen.insert(node) {
                        break;
                    }
                    self.beta_mem[node].retain(|t| !t.facts.contains(&id));
                    cur = rb.network.joins[node].child;
                }
            }
        }

        let dead: Vec<AgendaKey> = self
            .agenda
            .iter()
            .filter(|(_, act)| act.token.facts.contains(&id))
            .map(|(k, _)| *k)
            .collect();
        for key in dead {
            let act = self.agenda.remove(&key).expect("key collected above");
            self.record(TraceKind::ActivationRemoved {
                rule: rb.rules()[act.rule].name().to_string(),
                facts: act.token.facts,
            });
        }
        true
    }

    /// Fire activations until the agenda is empty or `limit` firings happened.
    pub fn run(&mut self, limit: Option<u64>) -> Result<u64, RuntimeError> {
        let rb = Arc::clone(&self.rules);
        let mut fired = 0;
        while limit.is_none_or(|l| fired < l) {
            let Some((_, act)) = self.agenda.pop_first() else {
                break;
            };
            fired += 1;
            self.firings += 1;
            let rule = &rb.rules()[act.rule];
            self.record(TraceKind::RuleFired {
                rule: rule.name().to_string(),
                facts: act.token.facts.clone(),
            });
            self.execute(&rb, act.rule, &rule.def.rhs, &act.token)
                .map_err(|error| RuntimeError {
                    rule: rule.name().to_string(),
                    error,
                })?;
        }
        Ok(fired)
    }

    fn execute(
        &mut self,
        rb: &RuleBase,
        rule: usize,
        actions: &[ActionSpec],
        token: &Token,
    ) -> Result<(), ActionError> {
        for action in actions {
            match action {
                ActionSpec::Assert(lit) => {
                    let env = Env {
                        bindings: &token.bindings,
                        globals: &self.globals,
                    };
                    let values = match &lit.body {
                        FactBody::Ordered(es) => FieldValues::Ordered(
                            es.iter().map(|e| eval(e, &env)).collect::<Result<_, _>>()?,
                        ),
                        FactBody::Templated(es) => FieldValues::Templated(
                            es.iter()
                                .map(|(s, e)| Ok((s.clone(), eval(e, &env)?)))
                                .collect::<Result<_, ActionError>>()?,
                        ),
                    };
                    let fields = rb
                        .instantiate(&lit.name, values)
                        .map_err(|e| ActionError::Fact(e.to_string()))?;
                    self.assert_fields(lit.name.clone(), fields);
                }
                ActionSpec::Retract(var) => {
                    let idx = rb.rules()[rule].addresses[var];
                    let id = token.facts[idx];
                    if !self.retract_fact(id) {
                        return Err(ActionError::FactGone(var.clone()));
                    }
                }
                ActionSpec::Bind(name, e) => {
                    let value = eval(
                        e,
                        &Env {
                            bindings: &token.bindings,
                            globals: &self.globals,
                        },
                    )?;
                    self.write_global(name, value)?;
                }
                ActionSpec::Print { items, newline } => {
                    let env = Env {
                        bindings: &token.bindings,
                        globals: &self.globals,
                    };
                    let mut text = String::new();
                    for item in items {
                        text.push_str(&eval(item, &env)?.display_plain());
                    }
                    if *newline {
                        text.push('\n');
                    }
                    self.output.push_str(&text);
                    self.record(TraceKind::OutputEmitted { text });
                }
                ActionSpec::If {
                    cond,
                    then,
                    otherwise,
                } => {
                    let holds = eval_cond(
                        cond,
                        &Env {
                            bindings: &token.bindings,
                            globals: &self.globals,
                        },
                    )?;
                    if holds {
                        self.execute(rb, rule, then, token)?;
                    } else if let Some(branch) = otherwise {
                        self.execute(rb, rule, branch, token)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn write_global(&mut self, name: &str, value: Value) -> Result<Value, ActionError> {
        if !value.is_numeric() {
            return Err(ActionError::NonNumericGlobal {
                name: name.to_string(),
                value,
            });
        }
        let slot = self
            .globals
            .get_mut(name)
            .ok_or_else(|| ActionError::UndeclaredGlobal(name.to_string()))?;
        let old = std::mem::replace(slot, value.clone());
        self.record(TraceKind::GlobalChanged {
            name: name.to_string(),
            old: old.clone(),
            new: value,
        });
        Ok(old)
    }

    /// Accepts either `weightage` or `?*weightage*`.
    pub fn get_global(&self, name: &str) -> Result<Value, EngineError> {
        let name = normalize_global(name);
        self.globals
            .get(name)
            .cloned()
            .ok_or_else(|| EngineError::UndeclaredGlobal(name.to_string()))
    }

    /// Replace a global register, returning the previous value.
    pub fn set_global(&mut self, name: &str, value: Value) -> Result<Value, EngineError> {
        let name = normalize_global(name).to_string();
        self.write_global(&name, value).map_err(|e| match e {
            ActionError::UndeclaredGlobal(n) => EngineError::UndeclaredGlobal(n),
            ActionError::NonNumericGlobal { name, value } => {
                EngineError::NonNumericGlobal { name, value }
            }
            other => unreachable!("write_global only fails on declaration or type: {other}"),
        })
    }

    pub fn globals(&self) -> &BTreeMap<String, Value> {
        &self.globals
    }

    /// Pending activations in firing order.
    pub fn agenda(&self) -> Vec<AgendaEntry> {
        self.agenda
            .values()
            .map(|act| {
                let rule = &self.rules.rules()[act.rule];
                AgendaEntry {
                    rule: rule.name().to_string(),
                    facts: act.token.facts.clone(),
                    salience: rule.salience(),
                    bindings: act.token.bindings.clone(),
                }
            })
            .collect()
    }

    /// Drain the text printed so far.
    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.output)
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn firings(&self) -> u64 {
        self.firings
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact> {
        self.facts.get(&id)
    }

    /// Live facts in assertion order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values()
    }

    pub fn facts_named(&self, name: &str) -> impl Iterator<Item = &Fact> {
        self.by_name
            .get(name)
            .into_iter()
            .flatten()
            .map(|id| &self.facts[id])
    }

    pub fn memory_stats(&self) -> MemoryStats {
        MemoryStats {
            facts: self.facts.len(),
            alpha_entries: self.alpha_mem.iter().map(Vec::len).sum(),
            beta_tokens: self.beta_mem.iter().map(Vec::len).sum(),
            activations: self.agenda.len(),
        }
    }

    /// Check that every token in every beta memory references live facts only.
    pub fn tokens_reference_live_facts(&self) -> bool {
        self.beta_mem
            .iter()
            .flatten()
            .all(|t| t.facts.iter().all(|f| self.facts.contains_key(f)))
    }
}

fn extend(parent: &Token, fact: FactId, pairs: &[(String, Value)]) -> Option<Token> {
    let mut bindings = parent.bindings.clone();
    for (var, value) in pairs {
        match bindings.get(var) {
            Some(existing) if existing != value => return None,
            Some(_) => {}
            None => {
                bindings.insert(var.clone(), value.clone());
            }
        }
    }
    let mut facts = parent.facts.clone();
    facts.push(fact);
    Some(Token { facts, bindings })
}
