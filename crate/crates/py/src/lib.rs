use meridian::agraph::{parse_paths, AGraph};
use meridian::freegroup::{self, PeripheralBasisResult, PeripheralConjugate, Word};
use meridian::graph_of_groups::TreeOfGroups;
use meridian::knot_tree::KnotTree;
use meridian::toruskit;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (v.to_string(),))?.unbind())
}

fn tree_of_groups(tree: &str) -> PyResult<TreeOfGroups> {
    TreeOfGroups::build(&KnotTree::parse(tree).map_err(value_error)?).map_err(value_error)
}

/// Bridge number of a tree given in the tree DSL.
#[pyfunction]
fn bridge_number(tree: &str) -> PyResult<u64> {
    KnotTree::parse(tree).and_then(|t| t.bridge_number()).map_err(value_error)
}

/// Bridge number, heights and vertex partition as a dict.
#[pyfunction]
fn tree_report(py: Python<'_>, tree: &str) -> PyResult<Py<PyAny>> {
    let t = KnotTree::parse(tree).map_err(value_error)?;
    to_py(py, &t.to_json().map_err(value_error)?)
}

#[pyfunction]
fn presentation(tree: &str) -> PyResult<String> {
    Ok(tree_of_groups(tree)?.presentation())
}

/// Basis `[(conjugator, index)]` of the subgroup generated by the
/// peripheral conjugates, or `None` for the whole group.
#[pyfunction]
fn peripheral_basis(rank: usize, generators: Vec<(String, usize)>) -> PyResult<Option<Vec<(String, usize)>>> {
    let gens = generators
        .iter()
        .map(|(w, i)| PeripheralConjugate::new(Word::parse(w, rank)?, *i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_error)?;
    match freegroup::peripheral_basis(&gens, rank).map_err(|e| PyRuntimeError::new_err(e.to_string()))? {
        PeripheralBasisResult::WholeGroup => Ok(None),
        PeripheralBasisResult::Basis(b) => {
            Ok(Some(b.elements.iter().map(|t| (t.conjugator.to_compact_string(), t.index)).collect()))
        }
    }
}

/// Folds the A-graph spanned by `paths` and returns the trace as a dict.
#[pyfunction]
#[pyo3(signature = (tree, paths, exact_torus = false, max_steps = None))]
fn fold(py: Python<'_>, tree: &str, paths: &str, exact_torus: bool, max_steps: Option<usize>) -> PyResult<Py<PyAny>> {
    let gog = tree_of_groups(tree)?;
    let paths = parse_paths(paths, &gog, exact_torus).map_err(value_error)?;
    let graph = AGraph::build_initial(&gog, &paths, exact_torus).map_err(value_error)?;
    let trace = graph.fold(max_steps);
    let mut report = trace.to_json();
    report["sound"] = Value::Bool(trace.is_sound());
    report["complete"] = Value::Bool(trace.graph.is_complete());
    report["c1"] = trace.graph.c1().into();
    to_py(py, &report)
}

#[pyfunction]
fn torus_certificate(py: Python<'_>, p: i64, q: i64, r: i64) -> PyResult<Py<PyAny>> {
    let c = toruskit::tameness_certificate(p, q, r).map_err(value_error)?;
    to_py(py, &c.to_json())
}

#[pymodule]
fn meridian_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bridge_number, m)?)?;
    m.add_function(wrap_pyfunction!(tree_report, m)?)?;
    m.add_function(wrap_pyfunction!(presentation, m)?)?;
    m.add_function(wrap_pyfunction!(peripheral_basis, m)?)?;
    m.add_function(wrap_pyfunction!(fold, m)?)?;
    m.add_function(wrap_pyfunction!(torus_certificate, m)?)?;
    Ok(())
}
