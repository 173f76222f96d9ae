//! Python module `cpexpert`.
//!
//! ```python
//! import cpexpert
//! rb = cpexpert.RuleBase(cpexpert.generate_ruleset())
//! s = cpexpert.Session(rb)
//! s.assert_facts("(answer (ident spasticity) (text yes)) (result diagnosis-rule)")
//! s.run()
//! print(s.take_output())
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cpexpert::cp::{self, Answer, AnswerSet, BandThresholds, DiagnosisResult};
use cpexpert::dsl::{self, Value};
use cpexpert::engine::{self as eng, EngineError, FactId};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn engine_err(e: EngineError) -> PyErr {
    match e {
        EngineError::Runtime(r) => PyRuntimeError::new_err(r.to_string()),
        EngineError::UndeclaredGlobal(_) => PyKeyError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Symbol(s) | Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Integer(i) => i.into_pyobject(py)?.into_any().unbind(),
        Value::Float(f) => f.into_pyobject(py)?.into_any().unbind(),
    })
}

fn thresholds(t: Option<(u64, u64, u64)>) -> PyResult<BandThresholds> {
    match t {
        None => Ok(BandThresholds::default()),
        Some((a, b, c)) => BandThresholds::new(a, b, c).map_err(value_err),
    }
}

/// Split source into `(kind, lexeme, line, column)` tuples.
#[pyfunction]
fn tokenize(source: &str) -> PyResult<Vec<(String, String, usize, usize)>> {
    let tokens = dsl::tokenize(source).map_err(value_err)?;
    Ok(tokens
        .into_iter()
        .map(|t| (format!("{:?}", t.kind), t.lexeme, t.pos.line, t.pos.column))
        .collect())
}

/// Parse and re-print a program in canonical form.
#[pyfunction]
fn pretty_print(source: &str) -> PyResult<String> {
    let constructs = dsl::parse_str(source).map_err(value_err)?;
    Ok(dsl::pretty_print(&constructs))
}

#[pyclass(frozen, name = "RuleBase")]
struct PyRuleBase {
    inner: Arc<eng::RuleBase>,
}

#[pymethods]
impl PyRuleBase {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(PyRuleBase {
            inner: eng::compile_str(source).map_err(engine_err)?,
        })
    }

    #[getter]
    fn rule_names(&self) -> Vec<String> {
        self.inner.rules().iter().map(|r| r.name().to_string()).collect()
    }

    #[getter]
    fn template_names(&self) -> Vec<String> {
        self.inner.templates().map(|t| t.name.clone()).collect()
    }

    /// Node counts of the compiled network.
    fn network_stats(&self) -> HashMap<&'static str, usize> {
        let s = self.inner.network_stats();
        HashMap::from([
            ("alpha_nodes", s.alpha_nodes),
            ("join_nodes", s.join_nodes),
            ("production_nodes", s.production_nodes),
            ("total_nodes", s.total_nodes()),
            ("unshared_total_nodes", s.unshared_total_nodes()),
        ])
    }
}

#[pyclass(name = "Session")]
struct PySession {
    inner: eng::Session,
}

#[pymethods]
impl PySession {
    #[new]
    fn new(rule_base: &PyRuleBase) -> Self {
        PySession {
            inner: eng::Session::new(Arc::clone(&rule_base.inner)),
        }
    }

    /// Assert the facts in `source`; returns `(fact_id, is_new)` per fact.
    fn assert_facts(&mut self, source: &str) -> PyResult<Vec<(u64, bool)>> {
        let outcomes = self.inner.assert_str(source).map_err(engine_err)?;
        Ok(outcomes
            .into_iter()
            .map(|o| (o.id().0, matches!(o, eng::AssertOutcome::Asserted(_))))
            .collect())
    }

    fn retract(&mut self, fact_id: u64) -> bool {
        self.inner.retract_fact(FactId(fact_id))
    }

    #[pyo3(signature = (max_firings=None))]
    fn run(&mut self, max_firings: Option<u64>) -> PyResult<u64> {
        self.inner
            .run(max_firings)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// `(rule, [fact ids], salience)` in firing order.
    fn agenda(&self) -> Vec<(String, Vec<u64>, i64)> {
        self.inner
            .agenda()
            .into_iter()
            .map(|a| (a.rule, a.facts.iter().map(|f| f.0).collect(), a.salience))
            .collect()
    }

    fn facts(&self) -> Vec<(u64, String)> {
        self.inner.facts().map(|f| (f.id.0, f.to_string())).collect()
    }

    fn get_global(&self, py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.get_global(name).map_err(engine_err)?)
    }

    /// Set a numeric global and return the previous value.
    fn set_global(&mut self, py: Python<'_>, name: &str, value: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        let v = if let Ok(i) = value.extract::<i64>() {
            Value::Integer(i)
        } else {
            Value::Float(value.extract::<f64>()?)
        };
        to_py(py, &self.inner.set_global(name, v).map_err(engine_err)?)
    }

    fn take_output(&mut self) -> String {
        self.inner.take_output()
    }

    /// Trace lines, `step<TAB>kind<TAB>details`.
    fn trace(&self) -> Vec<String> {
        self.inner.trace().iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn firings(&self) -> u64 {
        self.inner.firings()
    }
}

#[pyclass(frozen, name = "SymptomTable")]
struct PySymptomTable {
    inner: cp::SymptomTable,
}

#[pymethods]
impl PySymptomTable {
    /// Parse `id|question|weight` lines; the bundled table if `text` is None.
    #[new]
    #[pyo3(signature = (text=None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            None => cp::SymptomTable::bundled(),
            Some(t) => cp::load_symptom_table(t).map_err(value_err)?,
        };
        Ok(PySymptomTable { inner })
    }

    /// `(id, question, weight)` rows in question order.
    fn symptoms(&self) -> Vec<(String, String, u32)> {
        self.inner
            .symptoms()
            .iter()
            .map(|s| (s.id.clone(), s.question.clone(), s.weight))
            .collect()
    }

    #[getter]
    fn max_score(&self) -> u64 {
        self.inner.max_score()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(frozen, name = "Diagnosis", get_all)]
struct PyDiagnosis {
    raw_score: u64,
    max_score: u64,
    percentage: f64,
    band: String,
    sentence: String,
    contributions: Vec<(String, u32)>,
}

impl From<DiagnosisResult> for PyDiagnosis {
    fn from(r: DiagnosisResult) -> Self {
        PyDiagnosis {
            sentence: r.sentence(),
            raw_score: r.raw_score,
            max_score: r.max_score,
            percentage: r.percentage,
            band: r.band.name().to_string(),
            contributions: r.contributions.into_iter().map(|c| (c.id, c.weight)).collect(),
        }
    }
}

#[pymethods]
impl PyDiagnosis {
    fn __repr__(&self) -> String {
        format!(
            "Diagnosis(raw_score={}, max_score={}, percentage={:.2}, band='{}')",
            self.raw_score, self.max_score, self.percentage, self.band
        )
    }
}

fn answer_set(answers: &Bound<'_, PyAny>, table: &cp::SymptomTable, assume_no: bool) -> PyResult<AnswerSet> {
    let mut set = AnswerSet::new();
    let map: HashMap<String, Bound<'_, PyAny>> = answers.extract()?;
    for (id, v) in map {
        if !table.contains(&id) {
            return Err(PyKeyError::new_err(format!("unknown symptom id `{id}`")));
        }
        let a = if let Ok(b) = v.extract::<bool>() {
            if b { Answer::Yes } else { Answer::No }
        } else {
            let s: String = v.extract()?;
            s.parse::<Answer>()
                .map_err(|()| value_err(format!("`{id}`: expected yes or no, got `{s}`")))?
        };
        set.insert(id, a);
    }
    if assume_no {
        set.fill_missing_with_no(table);
    }
    Ok(set)
}

fn table_or_bundled(table: Option<&PySymptomTable>) -> cp::SymptomTable {
    table.map_or_else(cp::SymptomTable::bundled, |t| t.inner.clone())
}

/// Score a questionnaire. `answers` maps symptom ids to bool or "yes"/"no".
#[pyfunction]
#[pyo3(signature = (answers, table=None, thresholds=None, assume_no=false))]
fn diagnose(
    answers: &Bound<'_, PyAny>,
    table: Option<&PySymptomTable>,
    thresholds: Option<(u64, u64, u64)>,
    assume_no: bool,
) -> PyResult<PyDiagnosis> {
    let table = table_or_bundled(table);
    let set = answer_set(answers, &table, assume_no)?;
    let th = self::thresholds(thresholds)?;
    Ok(cp::diagnose(&table, &set, &th).map_err(value_err)?.into())
}

/// Score a questionnaire by running the generated rule program.
/// Returns `(raw_score, band)`.
#[pyfunction]
#[pyo3(signature = (answers, table=None, thresholds=None, assume_no=false))]
fn diagnose_with_engine(
    answers: &Bound<'_, PyAny>,
    table: Option<&PySymptomTable>,
    thresholds: Option<(u64, u64, u64)>,
    assume_no: bool,
) -> PyResult<(i64, Option<String>)> {
    let table = table_or_bundled(table);
    let set = answer_set(answers, &table, assume_no)?;
    let th = self::thresholds(thresholds)?;
    let rules = eng::compile_str(&cp::generate_ruleset(&table, &th)).map_err(engine_err)?;
    let v = cp::run_generated(&rules, &table, &set).map_err(value_err)?;
    Ok((v.raw_score, v.band.map(|b| b.name().to_string())))
}

#[pyfunction]
#[pyo3(signature = (raw, max, thresholds=None))]
fn classify(raw: u64, max: u64, thresholds: Option<(u64, u64, u64)>) -> PyResult<String> {
    if max == 0 || raw > max {
        return Err(value_err(format!("need 0 <= raw <= max and max > 0, got {raw} of {max}")));
    }
    Ok(cp::classify(raw, max, &self::thresholds(thresholds)?).name().to_string())
}

#[pyfunction]
#[pyo3(signature = (table=None, thresholds=None))]
fn generate_ruleset(table: Option<&PySymptomTable>, thresholds: Option<(u64, u64, u64)>) -> PyResult<String> {
    Ok(cp::generate_ruleset(&table_or_bundled(table), &self::thresholds(thresholds)?))
}

#[pymodule]
#[pyo3(name = "cpexpert")]
fn cpexpert_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRuleBase>()?;
    m.add_class::<PySession>()?;
    m.add_class::<PySymptomTable>()?;
    m.add_class::<PyDiagnosis>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(pretty_print, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose_with_engine, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(generate_ruleset, m)?)?;
    m.add("DISCLAIMER", cp::DISCLAIMER)?;
    Ok(())
}
