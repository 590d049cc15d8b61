//! Python bindings. Operators cross the boundary as the same JSON
//! documents the command-line tool reads and writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use causal_cones::causal_subspaces::{validity_subspace, Scenario};
use causal_cones::cli_io::{parse_scenario, OperatorJson, ResultJson};
use causal_cones::model_zoo::{gap_search as run_gap_search, GapSearchConfig, NamedModel};
use causal_cones::operator_core::ProcessOperator;
use causal_cones::robustness::{random_robustness, RobustnessOptions};
use causal_cones::sep_cones::{build_cone, ConeChoice};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_operator(text: &str) -> PyResult<ProcessOperator> {
    let j: OperatorJson = serde_json::from_str(text).map_err(err)?;
    j.to_operator("<python>").map_err(err)
}

/// Operator JSON of a named example (`wact`, `switch4`, `trd-switch`, `wgap`, ...).
#[pyfunction]
fn build_example(id: &str) -> PyResult<String> {
    let w = NamedModel::parse(id).and_then(|m| m.build(None)).map_err(err)?;
    serde_json::to_string(&OperatorJson::from_operator(&w)).map_err(err)
}

/// `(valid, trace, min_eigenvalue, validity_residual)`.
#[pyfunction]
fn validate(operator: &str) -> PyResult<(bool, f64, f64, f64)> {
    let w = parse_operator(operator)?;
    let scn = Scenario::from_space(w.space().clone()).map_err(err)?;
    let res = validity_subspace(&scn).and_then(|l| l.residual(&w)).map_err(err)?;
    let lam = w.min_eigenvalue();
    let normalized = (w.trace() - scn.d_out_total() as f64).abs() <= 1e-8 * scn.d_out_total() as f64;
    Ok((normalized && lam >= -1e-9 && res <= 1e-8, w.trace(), lam, res))
}

/// Random robustness; returns the result document as JSON.
#[pyfunction]
#[pyo3(signature = (operator, cone = "auto", tol = None))]
fn robustness(operator: &str, cone: &str, tol: Option<f64>) -> PyResult<String> {
    let w = parse_operator(operator)?;
    let choice: ConeChoice = cone.parse().map_err(err)?;
    let scn = Scenario::from_space(w.space().clone()).map_err(err)?;
    let spec = build_cone(&choice, &scn).map_err(err)?;
    let mut opts = RobustnessOptions::default();
    if let Some(t) = tol {
        opts.solver.eps_abs = t;
        opts.solver.eps_rel = t;
    }
    let res = random_robustness(&w, &spec, &opts).map_err(err)?;
    serde_json::to_string(&ResultJson::from(&res)).map_err(err)
}

/// `Tr[S·W]`.
#[pyfunction]
fn evaluate(witness: &str, operator: &str) -> PyResult<f64> {
    let s = parse_operator(witness)?;
    let w = parse_operator(operator)?;
    s.same_space(&w).map_err(err)?;
    Ok(s.hs_inner(&w))
}

/// Necessary vs sufficient bounds on random samples; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, n_samples, seed = 0))]
fn gap_search(scenario: &str, n_samples: usize, seed: u64) -> PyResult<String> {
    let scn = parse_scenario(scenario).map_err(err)?;
    let report = run_gap_search(&scn, n_samples, seed, &GapSearchConfig::for_scenario(&scn)).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[pymodule]
fn causalcones(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(build_example, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(robustness, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gap_search, m)?)?;
    Ok(())
}
