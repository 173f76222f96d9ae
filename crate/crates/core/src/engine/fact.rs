use std::fmt;

use crate::dsl::Value;

/// Assertion timestamp of a fact. Ids start at 1 and are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u64);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FactFields {
    Ordered(Vec<Value>),
    /// Slots in template declaration order, every slot present.
    Templated(Vec<(String, Value)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fact {
    pub id: FactId,
    pub name: String,
    pub fields: FactFields,
}

impl Fact {
    /// Field by position: list position for ordered facts, slot
    /// declaration order for templated ones.
    pub fn field(&self, index: usize) -> Option<&Value> {
        match &self.fields {
            FactFields::Ordered(vs) => vs.get(index),
            FactFields::Templated(vs) => vs.get(index).map(|(_, v)| v),
        }
    }

    pub fn slot(&self, name: &str) -> Option<&Value> {
        match &self.fields {
            FactFields::Ordered(_) => None,
            FactFields::Templated(vs) => vs.iter().find(|(s, _)| s == name).map(|(_, v)| v),
        }
    }

    pub fn is_templated(&self) -> bool {
        matches!(self.fields, FactFields::Templated(_))
    }

    pub fn arity(&self) -> usize {
        match &self.fields {
            FactFields::Ordered(vs) => vs.len(),
            FactFields::Templated(vs) => vs.len(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        match &self.fields {
            FactFields::Ordered(vs) => {
                for v in vs {
                    write!(f, " {v}")?;
                }
            }
            FactFields::Templated(vs) => {
                for (s, v) in vs {
                    write!(f, " ({s} {v})")?;
                }
            }
        }
        f.write_str(")")
    }
}
