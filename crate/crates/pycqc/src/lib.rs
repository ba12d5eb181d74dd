//! Python bindings for the completeness reasoner: a `Document` class
//! wrapping a parsed scenario, with the engine operations as methods.

use std::time::Duration;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use cqc::render::presentable;
use cqc::{is_complete, k_mcs, mcg, mcs_size_bound, Budget};

fn parse_document(text: &str, allow_unsafe: bool) -> PyResult<cqc::Document> {
    cqc::parse::parse_with_options(text, allow_unsafe)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn engine_err(e: cqc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed document: named queries, completeness statements and facts.
#[pyclass]
struct Document {
    inner: cqc::Document,
}

impl Document {
    fn query(&self, name: &str) -> PyResult<&cqc::ConjunctiveQuery> {
        self.inner
            .query(name)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown query '{}'", name)))
    }
}

#[pymethods]
impl Document {
    #[new]
    #[pyo3(signature = (text, allow_unsafe = false))]
    fn new(text: &str, allow_unsafe: bool) -> PyResult<Document> {
        Ok(Document {
            inner: parse_document(text, allow_unsafe)?,
        })
    }

    /// Names of the queries defined in the document.
    fn query_names(&self) -> Vec<String> {
        self.inner
            .queries()
            .iter()
            .map(|q| q.name().to_string())
            .collect()
    }

    /// Whether the named query is complete under the document's statements.
    fn check(&self, query: &str) -> PyResult<bool> {
        is_complete(self.query(query)?, self.inner.statements()).map_err(engine_err)
    }

    /// The minimal complete generalization as rendered text, or None.
    #[pyo3(signature = (query, minimize_output = false))]
    fn generalize(&self, query: &str, minimize_output: bool) -> PyResult<Option<String>> {
        let result = mcg(self.query(query)?, self.inner.statements()).map_err(engine_err)?;
        Ok(result.mcg.map(|q| {
            let q = if minimize_output { q.minimize() } else { q };
            q.to_string()
        }))
    }

    /// The k-bounded maximal complete specializations as rendered text,
    /// plus a flag telling whether the search exhausted its budget.
    #[pyo3(signature = (query, k, max_extensions = None, max_unifiers = None, time_limit_s = None))]
    fn specialize(
        &self,
        query: &str,
        k: usize,
        max_extensions: Option<usize>,
        max_unifiers: Option<usize>,
        time_limit_s: Option<f64>,
    ) -> PyResult<(Vec<String>, bool)> {
        let q = self.query(query)?;
        let budget = Budget {
            max_extensions,
            max_unifiers,
            time_limit: time_limit_s.map(Duration::from_secs_f64),
        };
        let result = k_mcs(q, self.inner.statements(), k, budget).map_err(engine_err)?;
        let known = q.variables();
        let rendered = result
            .queries
            .iter()
            .map(|found| presentable(found, &known).with_name(q.name()).to_string())
            .collect();
        Ok((rendered, result.budget_exhausted))
    }

    /// The minimized query as rendered text.
    fn minimize(&self, query: &str) -> PyResult<String> {
        let q = self.query(query)?;
        if !q.is_safe() {
            return Err(PyValueError::new_err(format!(
                "query '{}' is unsafe and cannot be minimized",
                query
            )));
        }
        Ok(q.minimize().to_string())
    }

    /// Whether the first query is contained in the second.
    fn contains(&self, query: &str, other: &str) -> PyResult<bool> {
        cqc::contained(self.query(query)?, self.query(other)?).map_err(engine_err)
    }

    /// Answers of the query over the facts of a data document, each tuple
    /// rendered term by term.
    fn evaluate(&self, query: &str, data: &str) -> PyResult<Vec<Vec<String>>> {
        let data_doc = parse_document(data, false)?;
        let answers = cqc::evaluate(self.query(query)?, data_doc.facts()).map_err(engine_err)?;
        Ok(answers
            .iter()
            .map(|tuple| tuple.iter().map(|t| t.to_string()).collect())
            .collect())
    }

    /// Per-statement satisfaction verdicts for an ideal/available pair of
    /// fact documents.
    fn satisfies(&self, ideal: &str, available: &str) -> PyResult<Vec<(String, bool)>> {
        let ideal_doc = parse_document(ideal, false)?;
        let available_doc = parse_document(available, false)?;
        let idb = cqc::IncompleteDatabase::new(
            ideal_doc.facts().clone(),
            available_doc.facts().clone(),
        )
        .map_err(engine_err)?;
        Ok(self
            .inner
            .statements()
            .iter()
            .map(|stmt| {
                (
                    stmt.label().unwrap_or("?").to_string(),
                    idb.satisfies(stmt),
                )
            })
            .collect())
    }

    /// (acyclic, bound, suggested_k) for the named query; a cyclic
    /// statement set yields (False, None, None).
    fn bound(&self, query: &str) -> PyResult<(bool, Option<u64>, Option<u64>)> {
        match mcs_size_bound(self.query(query)?, self.inner.statements()) {
            Ok(bound) => Ok((
                true,
                Some(bound.bound as u64),
                bound.suggested_k.map(|k| k as u64),
            )),
            Err(cqc::Error::CyclicTcs) => Ok((false, None, None)),
            Err(other) => Err(engine_err(other)),
        }
    }
}

#[pymodule]
fn pycqc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Document>()?;
    Ok(())
}
