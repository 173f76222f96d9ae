//! Cumulative weightage score and severity banding.
//!
//! The score of an answer set is the sum of the weights of the symptoms
//! answered yes, normalized against the table's maximum to a percentage.
//! Band boundaries are compared exactly, as `100 * raw` against
//! `threshold * max`, so no float rounding can move a score across one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::table::SymptomTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Yes,
    No,
}

impl FromStr for Answer {
    type Err = ();

    /// Accepts y/yes/n/no in any case.
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(Answer::Yes),
            "n" | "no" => Ok(Answer::No),
            _ => Err(()),
        }
    }
}

impl Answer {
    pub fn as_symbol(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerSet {
    answers: BTreeMap<String, Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("no answer given for symptom `{0}`")]
    Missing(String),
    #[error("unknown symptom id `{0}`")]
    Unknown(String),
    #[error("maximum score must be positive")]
    ZeroMax,
    #[error("raw score {raw} exceeds maximum {max}")]
    OutOfRange { raw: u64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnswersErrorKind {
    #[error("expected `symptom-id: yes|no`")]
    Malformed,
    #[error("answer `{0}` is not yes or no")]
    BadAnswer(String),
    #[error("unknown symptom id `{0}`")]
    UnknownId(String),
    #[error("symptom `{0}` answered more than once")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct AnswersError {
    pub line: usize,
    pub kind: AnswersErrorKind,
}

impl AnswerSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every symptom of `table` answered yes exactly when `yes(index)`.
    pub fn from_fn(table: &SymptomTable, mut yes: impl FnMut(usize) -> bool) -> Self {
        let answers = table
            .symptoms()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), if yes(i) { Answer::Yes } else { Answer::No }))
            .collect();
        AnswerSet { answers }
    }

    /// Bit `i` of `mask` answers symptom `i`.
    pub fn from_mask(table: &SymptomTable, mask: u64) -> Self {
        Self::from_fn(table, |i| mask >> i & 1 == 1)
    }

    pub fn insert(&mut self, id: impl Into<String>, answer: Answer) -> Option<Answer> {
        self.answers.insert(id.into(), answer)
    }

    pub fn get(&self, id: &str) -> Option<Answer> {
        self.answers.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Answer)> {
        self.answers.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Answer no for every table symptom not answered.
    pub fn fill_missing_with_no(&mut self, table: &SymptomTable) {
        for s in table.symptoms() {
            self.answers.entry(s.id.clone()).or_insert(Answer::No);
        }
    }

    /// Check that ids are known and, if `complete`, that every symptom is answered.
    pub fn validate(&self, table: &SymptomTable, complete: bool) -> Result<(), ScoreError> {
        if let Some(id) = self.answers.keys().find(|id| !table.contains(id)) {
            return Err(ScoreError::Unknown(id.clone()));
        }
        if complete {
            if let Some(s) = table.symptoms().iter().find(|s| !self.answers.contains_key(&s.id)) {
                return Err(ScoreError::Missing(s.id.clone()));
            }
        }
        Ok(())
    }

    /// Parse `id: yes|no` lines; `#` starts a comment line.
    pub fn parse(source: &str, table: &SymptomTable) -> Result<Self, AnswersError> {
        let mut set = AnswerSet::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let err = |kind| AnswersError { line, kind };
            let (id, answer) = text
                .split_once(':')
                .ok_or_else(|| err(AnswersErrorKind::Malformed))?;
            let (id, answer) = (id.trim(), answer.trim());
            let answer = match answer.to_ascii_lowercase().as_str() {
                "yes" => Answer::Yes,
                "no" => Answer::No,
                _ => return Err(err(AnswersErrorKind::BadAnswer(answer.to_string()))),
            };
            if !table.contains(id) {
                return Err(err(AnswersErrorKind::UnknownId(id.to_string())));
            }
            if set.insert(id, answer).is_some() {
                return Err(err(AnswersErrorKind::Duplicate(id.to_string())));
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    None,
    Mild,
    Moderate,
    Severe,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::None, Band::Mild, Band::Moderate, Band::Severe];

    pub fn name(self) -> &'static str {
        match self {
            Band::None => "none",
            Band::Mild => "mild",
            Band::Moderate => "moderate",
            Band::Severe => "severe",
        }
    }

    /// The word used in the diagnosis sentence.
    pub fn adjective(self) -> &'static str {
        match self {
            Band::None => "no",
            other => other.name(),
        }
    }

    pub fn sentence(self) -> String {
        format!("Symptoms show that you have {} Cerebral Palsy.", self.adjective())
    }

    /// Recover the band from a line printed by [`Band::sentence`].
    pub fn from_sentence(line: &str) -> Option<Band> {
        Band::ALL.into_iter().find(|b| line.trim() == b.sentence())
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Percent boundaries between bands: none < `mild`, mild < `moderate`,
/// moderate <= `severe` < severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandThresholds {
    mild: u64,
    moderate: u64,
    severe: u64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds {
            mild: 16,
            moderate: 39,
            severe: 66,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("band thresholds must be strictly increasing percentages in 0..=100, got {0:?}")]
pub struct ThresholdError(pub [u64; 3]);

impl BandThresholds {
    pub fn new(mild: u64, moderate: u64, severe: u64) -> Result<Self, ThresholdError> {
        if mild < moderate && moderate < severe && severe <= 100 {
            Ok(BandThresholds {
                mild,
                moderate,
                severe,
            })
        } else {
            Err(ThresholdError([mild, moderate, severe]))
        }
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.mild, self.moderate, self.severe]
    }
}

impl FromStr for BandThresholds {
    type Err = String;

    /// `16,39,66`
    fn from_str(s: &str) -> Result<Self, String> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        match parts.as_slice() {
            [a, b, c] => BandThresholds::new(*a, *b, *c).map_err(|e| e.to_string()),
            _ => Err("expected three comma-separated percentages".into()),
        }
    }
}

/// Sum of the weights of symptoms answered yes.
pub fn raw_score(table: &SymptomTable, answers: &AnswerSet) -> Result<u64, ScoreError> {
    answers.validate(table, true)?;
    Ok(table
        .symptoms()
        .iter()
        .filter(|s| answers.get(&s.id) == Some(Answer::Yes))
        .map(|s| u64::from(s.weight))
        .sum())
}

pub fn percentage_score(raw: u64, max: u64) -> Result<f64, ScoreError> {
    if max == 0 {
        return Err(ScoreError::ZeroMax);
    }
    if raw > max {
        return Err(ScoreError::OutOfRange { raw, max });
    }
    Ok(100.0 * raw as f64 / max as f64)
}

/// Band for `raw` out of `max`, compared in integers.
pub fn classify(raw: u64, max: u64, thresholds: &BandThresholds) -> Band {
    debug_assert!(max > 0 && raw <= max);
    let scaled = u128::from(raw) * 100;
    let bound = |t: u64| u128::from(t) * u128::from(max);
    if scaled < bound(thresholds.mild) {
        Band::None
    } else if scaled < bound(thresholds.moderate) {
        Band::Mild
    } else if scaled <= bound(thresholds.severe) {
        Band::Moderate
    } else {
        Band::Severe
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contribution {
    pub id: String,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosisResult {
    pub raw_score: u64,
    pub max_score: u64,
    pub percentage: f64,
    pub band: Band,
    pub contributions: Vec<Contribution>,
}

impl DiagnosisResult {
    pub fn sentence(&self) -> String {
        self.band.sentence()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Score a complete answer set.
pub fn diagnose(
    table: &SymptomTable,
    answers: &AnswerSet,
    thresholds: &BandThresholds,
) -> Result<DiagnosisResult, ScoreError> {
    let raw = raw_score(table, answers)?;
    let max = table.max_score();
    let contributions = table
        .symptoms()
        .iter()
        .filter(|s| answers.get(&s.id) == Some(Answer::Yes))
        .map(|s| Contribution {
            id: s.id.clone(),
            weight: s.weight,
        })
        .collect();
    Ok(DiagnosisResult {
        raw_score: raw,
        max_score: max,
        percentage: percentage_score(raw, max)?,
        band: classify(raw, max, thresholds),
        contributions,
    })
}
