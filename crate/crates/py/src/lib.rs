//! Python bindings: lattice cohomology, obstruction certificates and map verifiers.
//!
//! Structured results come back as plain `dict`/`list` values mirroring the CLI's JSON.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;
use wlat::cohomology::{self, Guard};
use wlat::exactla::{self, IntMat};
use wlat::fingroup::{FinGroup, SignedPerm};
use wlat::glattice::{self, GLattice};
use wlat::qp::{self, Scope};

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn lattice(desc: &str) -> PyResult<GLattice> {
    glattice::catalog_from_descriptor(desc).map_err(err)
}

/// The lattice restricted to the group generated by `subgroup` (cycle strings), or itself.
fn restricted(l: &GLattice, subgroup: Option<Vec<String>>) -> PyResult<GLattice> {
    let Some(cycles) = subgroup else {
        return Ok(l.clone());
    };
    let n = l.group().degree();
    let perms = cycles.iter().map(|c| SignedPerm::parse_cycles(c, n)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let h = FinGroup::lazy(n, perms, "subgroup");
    h.try_order().map_err(err)?;
    l.restrict_to(&h).map_err(err)
}

fn json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Library version.
#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Catalog descriptors and their meaning.
#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &json(&glattice::catalog_listing()))
}

/// Rank, group and generator matrices of a catalog lattice.
#[pyfunction]
fn describe<'py>(py: Python<'py>, desc: &str) -> PyResult<Bound<'py, PyAny>> {
    let l = lattice(desc)?;
    let mats: Vec<Value> = l.generator_actions().iter().map(|m| json(&m.to_i64_rows())).collect();
    let v = serde_json::json!({
        "name": l.name(),
        "rank": l.rank(),
        "group": l.group().label(),
        "generators": l.group().generators().iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "generator_matrices": mats,
    });
    to_py(py, &v)
}

/// Tate cohomology `Ĥ^degree(S, L)` for `degree` in -1..=2; `subgroup` lists generating cycles.
#[pyfunction]
#[pyo3(signature = (desc, degree, subgroup=None, guard=cohomology::DEFAULT_SIZE_GUARD))]
fn cohom<'py>(py: Python<'py>, desc: &str, degree: i32, subgroup: Option<Vec<String>>, guard: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = restricted(&lattice(desc)?, subgroup)?;
    let res = cohomology::tate(&r, &r.group().whole(), degree, Guard { limit: guard }).map_err(err)?;
    to_py(py, &json(&res))
}

/// `Ш^degree(S, L)` for degree 1 or 2.
#[pyfunction]
#[pyo3(signature = (desc, degree, subgroup=None, guard=cohomology::DEFAULT_SIZE_GUARD))]
fn sha<'py>(py: Python<'py>, desc: &str, degree: usize, subgroup: Option<Vec<String>>, guard: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = restricted(&lattice(desc)?, subgroup)?;
    let s = r.group().whole();
    let g = Guard { limit: guard };
    let res = match degree {
        1 => cohomology::sha(&r, &s, 1, g),
        2 => cohomology::sha2_auto(&r, &s, g),
        _ => return Err(PyValueError::new_err("degree must be 1 or 2")),
    }
    .map_err(err)?;
    to_py(py, &json(&res))
}

/// Quasi-permutation obstruction certificate; `scope` is "full" or "all".
#[pyfunction]
#[pyo3(signature = (desc, scope="all"))]
fn qp_check<'py>(py: Python<'py>, desc: &str, scope: &str) -> PyResult<Bound<'py, PyAny>> {
    let sc = match scope {
        "full" => Scope::FullGroup,
        "all" => Scope::AllSubgroups,
        _ => return Err(PyValueError::new_err("scope must be 'full' or 'all'")),
    };
    let rep = qp::sha2_obstruction(&lattice(desc)?, sc).map_err(err)?;
    to_py(py, &json(&rep))
}

#[pyfunction]
fn reproduce_an(py: Python<'_>, n: usize, d: usize) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &json(&qp::reproduce_an(n, d).map_err(err)?))
}

#[pyfunction]
fn reproduce_dn(py: Python<'_>, m: usize) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &json(&qp::reproduce_dn(m).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (max_rank=5))]
fn classification(py: Python<'_>, max_rank: usize) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &json(&qp::classification_report(max_rank).map_err(err)?))
}

/// Invariant factors and free rank of the cokernel of an integer matrix given by rows.
#[pyfunction]
fn cokernel(py: Python<'_>, rows: Vec<Vec<i64>>) -> PyResult<Bound<'_, PyAny>> {
    let w = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    let m = IntMat::from_rows_shaped(rows.len(), w, &rows);
    to_py(py, &json(&exactla::cokernel_invariants(&m)))
}

/// Runs the `wlat` command line in-process; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> PyResult<(i32, String, String)> {
    let mut argv = vec!["wlat".to_string()];
    argv.extend(args);
    let (mut out, mut e) = (vec![], vec![]);
    let code = wlat_cli::run(&argv, &mut out, &mut e);
    let s = |b: Vec<u8>| String::from_utf8(b).map_err(|x| PyRuntimeError::new_err(x.to_string()));
    Ok((code, s(out)?, s(e)?))
}

#[pymodule]
fn pywlat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(cohom, m)?)?;
    m.add_function(wrap_pyfunction!(sha, m)?)?;
    m.add_function(wrap_pyfunction!(qp_check, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_an, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_dn, m)?)?;
    m.add_function(wrap_pyfunction!(classification, m)?)?;
    m.add_function(wrap_pyfunction!(cokernel, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
