//! Brute-force matcher used as ground truth for the RETE network.
//!
//! Enumerates the full Cartesian product of facts over each rule's
//! patterns and keeps the assignments whose constants and shared
//! variables agree. It works directly on the parsed rules and shares no
//! code with the network compiler.

use std::collections::{BTreeMap, BTreeSet};

use crate::dsl::{Constraint, PatternBody, PatternSpec, RuleDef, Value};
use crate::engine::{Fact, FactId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleActivation {
    pub rule: String,
    pub facts: Vec<FactId>,
    pub bindings: BTreeMap<String, Value>,
}

pub type ActivationSet = BTreeSet<OracleActivation>;

fn constraints(p: &PatternSpec, fact: &Fact) -> Option<Vec<(Value, Constraint)>> {
    if p.name != fact.name {
        return None;
    }
    match &p.constraints {
        PatternBody::Ordered(cs) => {
            if fact.is_templated() || fact.arity() != cs.len() {
                return None;
            }
            Some(
                cs.iter()
                    .enumerate()
                    .map(|(i, c)| (fact.field(i).unwrap().clone(), c.clone()))
                    .collect(),
            )
        }
        PatternBody::Templated(cs) => {
            if !fact.is_templated() {
                return None;
            }
            cs.iter()
                .map(|(slot, c)| Some((fact.slot(slot)?.clone(), c.clone())))
                .collect()
        }
    }
}

fn assignment_matches(rule: &RuleDef, facts: &[&Fact]) -> Option<BTreeMap<String, Value>> {
    let mut bindings = BTreeMap::new();
    for (pattern, fact) in rule.lhs.iter().zip(facts) {
        for (value, c) in constraints(pattern, fact)? {
            match c {
                Constraint::Wildcard => {}
                Constraint::Literal(lit) => {
                    if lit != value {
                        return None;
                    }
                }
                Constraint::Variable(v) => match bindings.get(&v) {
                    Some(prev) if *prev != value => return None,
                    Some(_) => {}
                    None => {
                        bindings.insert(v, value);
                    }
                },
            }
        }
    }
    Some(bindings)
}

/// Every activation the rules have over `facts`.
pub fn match_all(rules: &[RuleDef], facts: &[Fact]) -> ActivationSet {
    let mut out = ActivationSet::new();
    for rule in rules {
        let n = rule.lhs.len();
        if facts.is_empty() || n == 0 {
            continue;
        }
        // odometer over facts^n
        let mut idx = vec![0usize; n];
        'product: loop {
            let chosen: Vec<&Fact> = idx.iter().map(|&i| &facts[i]).collect();
            if let Some(bindings) = assignment_matches(rule, &chosen) {
                out.insert(OracleActivation {
                    rule: rule.name.clone(),
                    facts: chosen.iter().map(|f| f.id).collect(),
                    bindings,
                });
            }
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < facts.len() {
                    continue 'product;
                }
                idx[k] = 0;
            }
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_str, Construct};
    use crate::engine::FactFields;

    fn rules(src: &str) -> Vec<RuleDef> {
        parse_str(src)
            .unwrap()
            .into_iter()
            .filter_map(|c| match c {
                Construct::Rule(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    fn slot_fact(id: u64, name: &str, x: i64) -> Fact {
        Fact {
            id: FactId(id),
            name: name.into(),
            fields: FactFields::Templated(vec![("x".into(), Value::Integer(x))]),
        }
    }

    #[test]
    fn single_pattern_single_fact() {
        let rs = rules("(defrule r (go) => (printout t 1))");
        let facts = [Fact {
            id: FactId(1),
            name: "go".into(),
            fields: FactFields::Ordered(vec![]),
        }];
        assert_eq!(match_all(&rs, &facts).len(), 1);
    }

    #[test]
    fn shared_variable_join() {
        let rs = rules(
            "(deftemplate p (slot x)) (deftemplate q (slot x))
             (defrule r (p (x ?v)) (q (x ?v)) => (printout t ?v))",
        );
        let facts = [slot_fact(1, "p", 1), slot_fact(2, "q", 1), slot_fact(3, "q", 2)];
        let acts = match_all(&rs, &facts);
        assert_eq!(acts.len(), 1);
        let a = acts.iter().next().unwrap();
        assert_eq!(a.facts, vec![FactId(1), FactId(2)]);
        assert_eq!(a.bindings["v"], Value::Integer(1));
    }

    #[test]
    fn no_facts_no_activations() {
        let rs = rules("(defrule r (a) => (printout t 1)) (defrule s (b ?x) (c ?x) => (printout t 1))");
        assert!(match_all(&rs, &[]).is_empty());
    }

    #[test]
    fn pure() {
        let rs = rules("(defrule r (p ?x) (p ?y) => (printout t 1))");
        let facts: Vec<Fact> = (1..=3)
            .map(|i| Fact {
                id: FactId(i),
                name: "p".into(),
                fields: FactFields::Ordered(vec![Value::Integer(i as i64)]),
            })
            .collect();
        let a = match_all(&rs, &facts);
        assert_eq!(a.len(), 9);
        assert_eq!(a, match_all(&rs, &facts));
    }
}
