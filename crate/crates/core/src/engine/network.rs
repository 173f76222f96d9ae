//! Compilation of rules into a RETE network.
//!
//! Each pattern becomes an alpha node holding its constant tests; patterns
//! with identical tests share a node (and hence an alpha memory) across
//! rules. Each rule then gets a left-linear chain of join nodes, one per
//! pattern, ending in the rule's production.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::dsl::{
    ActionSpec, Construct, Constraint, FactBody, FactLiteral, GlobalDef, PatternBody,
    PatternSpec, RuleDef, TemplateDef, Value,
};

use super::fact::{Fact, FactFields};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("rule `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error("template `{0}` is defined more than once")]
    DuplicateTemplate(String),
    #[error("global ?*{0}* is defined more than once")]
    DuplicateGlobal(String),
    #[error("global ?*{0}* must have a numeric initial value")]
    NonNumericGlobal(String),
    #[error("rule `{rule}` uses undeclared global ?*{global}*")]
    UndeclaredGlobal { rule: String, global: String },
    #[error("{context}: template `{template}` has no slot `{slot}`")]
    UnknownSlot {
        context: String,
        template: String,
        slot: String,
    },
    #[error("{context}: `{name}` is not a declared template")]
    UnknownTemplate { context: String, name: String },
    #[error("{context}: template `{name}` must be written with (slot value) pairs")]
    TemplateAsOrdered { context: String, name: String },
    #[error("fact literal {0} must contain only literal values")]
    NonGroundFact(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub name: String,
    pub slots: Vec<(String, Value)>,
}

impl Template {
    fn from_def(def: &TemplateDef) -> Self {
        Template {
            name: def.name.clone(),
            slots: def
                .slots
                .iter()
                .map(|s| {
                    (
                        s.name.clone(),
                        s.default.clone().unwrap_or_else(|| Value::symbol("nil")),
                    )
                })
                .collect(),
        }
    }

    pub fn slot_index(&self, slot: &str) -> Option<usize> {
        self.slots.iter().position(|(s, _)| s == slot)
    }
}

pub(crate) type AlphaId = usize;
pub(crate) type JoinId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Shape {
    Ordered(usize),
    Templated,
}

/// Constant tests applied to a single fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct AlphaKey {
    name: String,
    shape: Shape,
    tests: Vec<(usize, Value)>,
}

impl AlphaKey {
    pub(crate) fn matches(&self, fact: &Fact) -> bool {
        let shape_ok = match (&self.shape, &fact.fields) {
            (Shape::Ordered(n), FactFields::Ordered(vs)) => vs.len() == *n,
            (Shape::Templated, FactFields::Templated(_)) => true,
            _ => false,
        };
        shape_ok
            && fact.name == self.name
            && self
                .tests
                .iter()
                .all(|(i, v)| fact.field(*i) == Some(v))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AlphaNode {
    pub key: AlphaKey,
    /// Join nodes fed by this memory, deepest first.
    pub successors: Vec<JoinId>,
}

/// Binary join between the parent beta memory and an alpha memory.
#[derive(Debug, Clone)]
pub(crate) struct JoinNode {
    pub rule: usize,
    pub depth: usize,
    pub alpha: AlphaId,
    /// Variables bound from the incoming fact, as (field index, name).
    /// A name already present in the token is a consistency test.
    pub bindings: Vec<(usize, String)>,
    pub parent: Option<JoinId>,
    pub child: Option<JoinId>,
}

#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub def: RuleDef,
    /// fact-address variable -> pattern index
    pub(crate) addresses: HashMap<String, usize>,
    pub(crate) first_join: JoinId,
}

impl CompiledRule {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn salience(&self) -> i64 {
        self.def.salience
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkStats {
    pub alpha_nodes: usize,
    pub join_nodes: usize,
    pub production_nodes: usize,
    /// Alpha nodes a network without sharing would need (one per pattern).
    pub unshared_alpha_nodes: usize,
}

impl NetworkStats {
    pub fn total_nodes(&self) -> usize {
        self.alpha_nodes + self.join_nodes + self.production_nodes
    }

    pub fn unshared_total_nodes(&self) -> usize {
        self.unshared_alpha_nodes + self.join_nodes + self.production_nodes
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Network {
    pub alphas: Vec<AlphaNode>,
    pub alpha_by_name: HashMap<String, Vec<AlphaId>>,
    pub joins: Vec<JoinNode>,
}

/// An immutable compiled program: templates, globals, rules and network.
/// Shared by any number of sessions.
#[derive(Debug, Clone, Default)]
pub struct RuleBase {
    templates: BTreeMap<String, Template>,
    globals: Vec<(String, Value)>,
    rules: Vec<CompiledRule>,
    facts: Vec<FactLiteral>,
    pub(crate) network: Network,
}

impl RuleBase {
    pub fn compile(constructs: &[Construct]) -> Result<Self, CompileError> {
        let mut rb = RuleBase::default();
        let mut alpha_ids: HashMap<AlphaKey, AlphaId> = HashMap::new();
        let mut rule_names = HashSet::new();

        for c in constructs {
            match c {
                Construct::Template(def) => {
                    if rb.templates.contains_key(&def.name) {
                        return Err(CompileError::DuplicateTemplate(def.name.clone()));
                    }
                    rb.templates.insert(def.name.clone(), Template::from_def(def));
                }
                Construct::Global(GlobalDef { name, value }) => {
                    if rb.globals.iter().any(|(n, _)| n == name) {
                        return Err(CompileError::DuplicateGlobal(name.clone()));
                    }
                    if !value.is_numeric() {
                        return Err(CompileError::NonNumericGlobal(name.clone()));
                    }
                    rb.globals.push((name.clone(), value.clone()));
                }
                Construct::Fact(lit) => {
                    rb.instantiate_ground(lit)?;
                    rb.facts.push(lit.clone());
                }
                Construct::Rule(def) => {
                    if !rule_names.insert(def.name.clone()) {
                        return Err(CompileError::DuplicateRule(def.name.clone()));
                    }
                }
            }
        }

        for def in constructs.iter().filter_map(|c| match c {
            Construct::Rule(r) => Some(r),
            _ => None,
        }) {
            rb.check_rhs(def)?;
            rb.add_rule(def, &mut alpha_ids)?;
        }

        for alpha in &mut rb.network.alphas {
            let joins = &rb.network.joins;
            alpha
                .successors
                .sort_by_key(|j| (std::cmp::Reverse(joins[*j].depth), *j));
        }
        Ok(rb)
    }

    fn add_rule(
        &mut self,
        def: &RuleDef,
        alpha_ids: &mut HashMap<AlphaKey, AlphaId>,
    ) -> Result<(), CompileError> {
        let rule_idx = self.rules.len();
        let mut addresses = HashMap::new();
        let mut prev: Option<JoinId> = None;
        let mut first = None;
        for (depth, pattern) in def.lhs.iter().enumerate() {
            if let Some(a) = &pattern.address {
                addresses.insert(a.clone(), depth);
            }
            let (key, bindings) = self.pattern_key(pattern, &def.name)?;
            let next_alpha = self.network.alphas.len();
            let alpha = *alpha_ids.entry(key.clone()).or_insert_with(|| next_alpha);
            if alpha == next_alpha {
                self.network
                    .alpha_by_name
                    .entry(key.name.clone())
                    .or_default()
                    .push(alpha);
                self.network.alphas.push(AlphaNode {
                    key,
                    successors: Vec::new(),
                });
            }
            let join = self.network.joins.len();
            self.network.joins.push(JoinNode {
                rule: rule_idx,
                depth,
                alpha,
                bindings,
                parent: prev,
                child: None,
            });
            self.network.alphas[alpha].successors.push(join);
            if let Some(p) = prev {
                self.network.joins[p].child = Some(join);
            }
            first.get_or_insert(join);
            prev = Some(join);
        }
        self.rules.push(CompiledRule {
            def: def.clone(),
            addresses,
            first_join: first.expect("parser guarantees a non-empty LHS"),
        });
        Ok(())
    }

    fn pattern_key(
        &self,
        pattern: &PatternSpec,
        rule: &str,
    ) -> Result<(AlphaKey, Vec<(usize, String)>), CompileError> {
        let context = || format!("rule `{rule}`");
        let mut tests = Vec::new();
        let mut bindings = Vec::new();
        let mut add = |i: usize, c: &Constraint| match c {
            Constraint::Literal(v) => tests.push((i, v.clone())),
            Constraint::Variable(v) => bindings.push((i, v.clone())),
            Constraint::Wildcard => {}
        };
        let shape = match (&pattern.constraints, self.templates.get(&pattern.name)) {
            (PatternBody::Ordered(cs), None) => {
                cs.iter().enumerate().for_each(|(i, c)| add(i, c));
                Shape::Ordered(cs.len())
            }
            (PatternBody::Ordered(_), Some(_)) => {
                return Err(CompileError::TemplateAsOrdered {
                    context: context(),
                    name: pattern.name.clone(),
                })
            }
            (PatternBody::Templated(cs), Some(t)) => {
                let mut indexed = Vec::new();
                for (slot, c) in cs {
                    let i = t.slot_index(slot).ok_or_else(|| CompileError::UnknownSlot {
                        context: context(),
                        template: t.name.clone(),
                        slot: slot.clone(),
                    })?;
                    indexed.push((i, c));
                }
                indexed.sort_by_key(|(i, _)| *i);
                indexed.into_iter().for_each(|(i, c)| add(i, c));
                Shape::Templated
            }
            (PatternBody::Templated(_), None) => {
                return Err(CompileError::UnknownTemplate {
                    context: context(),
                    name: pattern.name.clone(),
                })
            }
        };
        tests.sort_by_key(|(i, _)| *i);
        Ok((
            AlphaKey {
                name: pattern.name.clone(),
                shape,
                tests,
            },
            bindings,
        ))
    }

    fn check_rhs(&self, def: &RuleDef) -> Result<(), CompileError> {
        let mut err = None;
        let mut check_global = |g: &str| {
            if err.is_none() && !self.globals.iter().any(|(n, _)| n == g) {
                err = Some(CompileError::UndeclaredGlobal {
                    rule: def.name.clone(),
                    global: g.to_string(),
                });
            }
        };
        let mut asserted = Vec::new();
        for action in &def.rhs {
            action.walk(&mut |a| {
                match a {
                    ActionSpec::Bind(g, _) => check_global(g),
                    ActionSpec::Assert(lit) => asserted.push(lit),
                    _ => {}
                }
            });
            action.walk_exprs(&mut |e| e.visit_globals(&mut check_global));
        }
        if let Some(e) = err {
            return Err(e);
        }
        for lit in asserted {
            self.check_fact_shape(lit, &format!("rule `{}`", def.name))?;
        }
        Ok(())
    }

    fn check_fact_shape(&self, lit: &FactLiteral, context: &str) -> Result<(), CompileError> {
        match (&lit.body, self.templates.get(&lit.name)) {
            (FactBody::Ordered(_), None) => Ok(()),
            (FactBody::Ordered(_), Some(_)) => Err(CompileError::TemplateAsOrdered {
                context: context.to_string(),
                name: lit.name.clone(),
            }),
            (FactBody::Templated(_), None) => Err(CompileError::UnknownTemplate {
                context: context.to_string(),
                name: lit.name.clone(),
            }),
            (FactBody::Templated(vs), Some(t)) => {
                for (slot, _) in vs {
                    if t.slot_index(slot).is_none() {
                        return Err(CompileError::UnknownSlot {
                            context: context.to_string(),
                            template: t.name.clone(),
                            slot: slot.clone(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Turn a fact literal whose fields are already evaluated into fact
    /// fields, filling template defaults.
    pub(crate) fn instantiate(
        &self,
        name: &str,
        body: FieldValues,
    ) -> Result<FactFields, CompileError> {
        let context = || "fact".to_string();
        match (body, self.templates.get(name)) {
            (FieldValues::Ordered(vs), None) => Ok(FactFields::Ordered(vs)),
            (FieldValues::Ordered(_), Some(_)) => Err(CompileError::TemplateAsOrdered {
                context: context(),
                name: name.to_string(),
            }),
            (FieldValues::Templated(_), None) => Err(CompileError::UnknownTemplate {
                context: context(),
                name: name.to_string(),
            }),
            (FieldValues::Templated(given), Some(t)) => {
                let mut slots = t.slots.clone();
                for (slot, v) in given {
                    let i = t.slot_index(&slot).ok_or_else(|| CompileError::UnknownSlot {
                        context: context(),
                        template: t.name.clone(),
                        slot: slot.clone(),
                    })?;
                    slots[i].1 = v;
                }
                Ok(FactFields::Templated(slots))
            }
        }
    }

    /// Instantiate a fact literal that must contain only literal values.
    pub(crate) fn instantiate_ground(&self, lit: &FactLiteral) -> Result<FactFields, CompileError> {
        let ground = |e: &crate::dsl::Expr| match e {
            crate::dsl::Expr::Literal(v) => Ok(v.clone()),
            _ => Err(CompileError::NonGroundFact(lit.name.clone())),
        };
        let values = match &lit.body {
            FactBody::Ordered(es) => {
                FieldValues::Ordered(es.iter().map(ground).collect::<Result<_, _>>()?)
            }
            FactBody::Templated(es) => FieldValues::Templated(
                es.iter()
                    .map(|(s, e)| Ok((s.clone(), ground(e)?)))
                    .collect::<Result<_, _>>()?,
            ),
        };
        self.instantiate(&lit.name, values)
    }

    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.templates.values()
    }

    pub fn template(&self, name: &str) -> Option<&Template> {
        self.templates.get(name)
    }

    pub fn globals(&self) -> &[(String, Value)] {
        &self.globals
    }

    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn rule_defs(&self) -> Vec<RuleDef> {
        self.rules.iter().map(|r| r.def.clone()).collect()
    }

    /// Fact literals that appeared at top level of the compiled program.
    pub fn facts(&self) -> &[FactLiteral] {
        &self.facts
    }

    pub fn network_stats(&self) -> NetworkStats {
        NetworkStats {
            alpha_nodes: self.network.alphas.len(),
            join_nodes: self.network.joins.len(),
            production_nodes: self.rules.len(),
            unshared_alpha_nodes: self.network.joins.len(),
        }
    }

    /// Check that following parent/child links never revisits a node.
    pub fn is_acyclic(&self) -> bool {
        self.rules.iter().all(|r| {
            let mut seen = HashSet::new();
            let mut cur = Some(r.first_join);
            while let Some(j) = cur {
                if !seen.insert(j) {
                    return false;
                }
                cur = self.network.joins[j].child;
            }
            true
        })
    }
}

/// Evaluated field values of a fact about to be asserted.
#[derive(Debug, Clone)]
pub(crate) enum FieldValues {
    Ordered(Vec<Value>),
    Templated(Vec<(String, Value)>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_str;

    fn compile(src: &str) -> Result<RuleBase, CompileError> {
        RuleBase::compile(&parse_str(src).unwrap())
    }

    #[test]
    fn empty_program() {
        let rb = compile("").unwrap();
        assert_eq!(rb.network_stats().total_nodes(), 0);
        assert!(rb.rules().is_empty());
    }

    #[test]
    fn identical_patterns_share_alpha_nodes() {
        let rb = compile(
            "(deftemplate answer (slot ident) (slot text))
             (defrule a (answer (ident x) (text yes)) => (printout t a))
             (defrule b (answer (text yes) (ident x)) => (printout t b))
             (defrule c (answer (ident y) (text yes)) => (printout t c))",
        )
        .unwrap();
        let stats = rb.network_stats();
        // naive: one alpha node per pattern
        assert_eq!(stats.unshared_alpha_nodes, 3);
        assert_eq!(stats.alpha_nodes, 2);
        assert!(stats.total_nodes() < stats.unshared_total_nodes());
        assert!(rb.is_acyclic());
    }

    #[test]
    fn variable_names_do_not_split_alpha_nodes() {
        let rb = compile(
            "(defrule a (p ?x 1) => (printout t ?x))
             (defrule b (p ?y 1) (q ?y) => (printout t ?y))",
        )
        .unwrap();
        assert_eq!(rb.network_stats().alpha_nodes, 2);
        assert_eq!(rb.network_stats().join_nodes, 3);
    }

    #[test]
    fn unknown_slot() {
        let err = compile("(deftemplate a (slot x)) (defrule r (a (y 1)) => (printout t 1))").unwrap_err();
        assert!(matches!(err, CompileError::UnknownSlot { ref slot, .. } if slot == "y"));
    }

    #[test]
    fn duplicate_rule() {
        let err = compile("(defrule r (a) => (printout t 1)) (defrule r (b) => (printout t 2))").unwrap_err();
        assert_eq!(err, CompileError::DuplicateRule("r".into()));
    }

    #[test]
    fn undeclared_global() {
        let err = compile("(defrule r (a) => (bind ?*g* 1))").unwrap_err();
        assert!(matches!(err, CompileError::UndeclaredGlobal { .. }));
        let err = compile("(defglobal ?*g* = 0) (defrule r (a) => (if (> ?*h* 1) then (bind ?*g* 1)))").unwrap_err();
        assert!(matches!(err, CompileError::UndeclaredGlobal { ref global, .. } if global == "h"));
    }

    #[test]
    fn template_defaults() {
        let rb = compile("(deftemplate a (slot x (default 3)) (slot y))").unwrap();
        let fields = rb
            .instantiate("a", FieldValues::Templated(vec![("y".into(), Value::Integer(1))]))
            .unwrap();
        assert_eq!(
            fields,
            FactFields::Templated(vec![("x".into(), Value::Integer(3)), ("y".into(), Value::Integer(1))])
        );
        let fields = rb.instantiate("a", FieldValues::Templated(vec![])).unwrap();
        assert_eq!(
            fields,
            FactFields::Templated(vec![("x".into(), Value::Integer(3)), ("y".into(), Value::symbol("nil"))])
        );
    }

    #[test]
    fn successors_are_deepest_first() {
        let rb = compile("(defrule r (p ?x) (p ?y) (p ?z) => (printout t 1))").unwrap();
        assert_eq!(rb.network.alphas.len(), 1);
        let depths: Vec<_> = rb.network.alphas[0]
            .successors
            .iter()
            .map(|j| rb.network.joins[*j].depth)
            .collect();
        assert_eq!(depths, vec![2, 1, 0]);
    }
}
