use std::collections::HashSet;

/// The bundled symptom table.
pub const BUNDLED_TABLE: &str = include_str!("../../data/symptoms.table");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symptom {
    pub id: String,
    pub question: String,
    pub weight: u32,
}

/// Ordered symptom list. Order is question order and rule order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymptomTable {
    symptoms: Vec<Symptom>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableErrorKind {
    #[error("expected `id|question|weight`")]
    Malformed,
    #[error("symptom id `{0}` must be lowercase letters, digits and single hyphens")]
    BadId(String),
    #[error("symptom `{0}` has an empty question")]
    EmptyQuestion(String),
    #[error("weight `{0}` is not a positive integer")]
    BadWeight(String),
    #[error("symptom id `{0}` appears more than once")]
    DuplicateId(String),
    #[error("table contains no symptoms")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct TableError {
    pub line: usize,
    pub kind: TableErrorKind,
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .split('-')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()))
}

/// Parse a symptom table. Blank lines and `#` comment lines are skipped.
pub fn load_symptom_table(source: &str) -> Result<SymptomTable, TableError> {
    let mut symptoms = Vec::new();
    let mut seen = HashSet::new();
    let mut last_line = 0;
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |kind| TableError { line, kind };
        let parts: Vec<&str> = text.split('|').collect();
        let [id, question, weight] = parts.as_slice() else {
            return Err(err(TableErrorKind::Malformed));
        };
        let (id, question, weight) = (id.trim(), question.trim(), weight.trim());
        if !valid_id(id) {
            return Err(err(TableErrorKind::BadId(id.to_string())));
        }
        if question.is_empty() {
            return Err(err(TableErrorKind::EmptyQuestion(id.to_string())));
        }
        let weight = match weight.parse::<u32>() {
            Ok(w) if w >= 1 => w,
            _ => return Err(err(TableErrorKind::BadWeight(weight.to_string()))),
        };
        if !seen.insert(id.to_string()) {
            return Err(err(TableErrorKind::DuplicateId(id.to_string())));
        }
        symptoms.push(Symptom {
            id: id.to_string(),
            question: question.to_string(),
            weight,
        });
    }
    if symptoms.is_empty() {
        return Err(TableError {
            line: last_line.max(1),
            kind: TableErrorKind::Empty,
        });
    }
    Ok(SymptomTable { symptoms })
}

impl SymptomTable {
    pub fn bundled() -> Self {
        load_symptom_table(BUNDLED_TABLE).expect("bundled table is valid")
    }

    /// Build a table directly. Fails on duplicate ids, invalid ids or zero weights.
    pub fn new(symptoms: Vec<Symptom>) -> Result<Self, TableError> {
        let text: String = symptoms
            .iter()
            .map(|s| format!("{}|{}|{}\n", s.id, s.question, s.weight))
            .collect();
        let table = load_symptom_table(&text)?;
        if table.symptoms != symptoms {
            // question text contained `|` or surrounding whitespace
            return Err(TableError {
                line: 1,
                kind: TableErrorKind::Malformed,
            });
        }
        Ok(table)
    }

    pub fn symptoms(&self) -> &[Symptom] {
        &self.symptoms
    }

    pub fn len(&self) -> usize {
        self.symptoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symptoms.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Symptom> {
        self.symptoms.iter().find(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn max_score(&self) -> u64 {
        self.symptoms.iter().map(|s| u64::from(s.weight)).sum()
    }

    /// Serialize back to the table file format.
    pub fn to_table_text(&self) -> String {
        self.symptoms
            .iter()
            .map(|s| format!("{}|{}|{}\n", s.id, s.question, s.weight))
            .collect()
    }
}
