use std::path::PathBuf;

use frontlab::evolution::minimal_steady_state;
use frontlab::scenario::{self, Experiment, Scenario, Severity};
use frontlab::speeds::{minimal_speed, speed_ladder, SpeedReport};
use frontlab::{CellProblem, Mode};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: frontlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: frontlab::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn mode(rung: Option<usize>) -> Mode {
    match rung {
        Some(rung) => Mode::Periodic { rung },
        None => Mode::Dirichlet,
    }
}

fn speed_dict<'py>(py: Python<'py>, r: &SpeedReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("c_star", r.c_star)?;
    d.set_item("lambda_star", r.lambda_star)?;
    d.set_item("interior", r.minimizer_interior)?;
    d.set_item("unimodal", r.unimodal)?;
    d.set_item("blocked", r.blocked_suspected)?;
    d.set_item("flatness", r.flatness)?;
    let samples: Vec<(f64, f64)> = r.samples().iter().map(|s| (s.lambda, s.k)).collect();
    d.set_item("samples", samples)?;
    Ok(d)
}

/// A periodic cell problem read from a scenario file.
///
/// `rung=None` selects the Dirichlet problem on the domain.
#[pyclass(name = "Problem", module = "frontlab")]
struct PyProblem {
    scenario: Scenario,
    inner: CellProblem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let scenario = Scenario::from_toml(text).map_err(value_err)?;
        let inner = scenario.problem().map_err(value_err)?;
        Ok(Self { scenario, inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let scenario = Scenario::load(&path).map_err(value_err)?;
        let inner = scenario.problem().map_err(value_err)?;
        Ok(Self { scenario, inner })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.grid().shape().to_vec()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.ladder().n_max()
    }

    fn positions(&self) -> Vec<[f64; 2]> {
        self.inner.grid().positions()
    }

    fn inside(&self) -> Vec<bool> {
        self.inner.mask().inside().to_vec()
    }

    #[pyo3(signature = (lam=0.0, e=None, rung=Some(0)))]
    fn eigenvalue(&self, lam: f64, e: Option<Vec<f64>>, rung: Option<usize>) -> PyResult<f64> {
        let e = e.unwrap_or_else(|| self.scenario.directions()[0].clone());
        self.inner.k(mode(rung), lam, &e, self.scenario.tolerances.eigen).map_err(runtime_err)
    }

    #[pyo3(signature = (lam=0.0, e=None, rung=Some(0)))]
    fn eigenfunction(&self, lam: f64, e: Option<Vec<f64>>, rung: Option<usize>) -> PyResult<(f64, Vec<f64>)> {
        let e = e.unwrap_or_else(|| self.scenario.directions()[0].clone());
        let r = self.inner.eigen(mode(rung), lam, &e, self.scenario.tolerances.eigen).map_err(runtime_err)?;
        Ok((r.value, r.eigenfunction))
    }

    #[pyo3(signature = (e=None, rung=Some(0)))]
    fn minimal_speed<'py>(&self, py: Python<'py>, e: Option<Vec<f64>>, rung: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let e = e.unwrap_or_else(|| self.scenario.directions()[0].clone());
        let r = minimal_speed(&self.inner, mode(rung), &e, &self.scenario.speed_options()).map_err(runtime_err)?;
        speed_dict(py, &r)
    }

    /// Speeds along the ladder, plus the Dirichlet lower bound when the
    /// Dirichlet zero state is unstable.
    #[pyo3(signature = (e=None, rungs=None))]
    fn speed_ladder(&self, e: Option<Vec<f64>>, rungs: Option<Vec<usize>>) -> PyResult<(Vec<(usize, f64)>, Option<f64>)> {
        let e = e.unwrap_or_else(|| self.scenario.directions()[0].clone());
        let rungs = rungs.unwrap_or_else(|| self.scenario.rungs());
        let l = speed_ladder(&self.inner, &e, &rungs, &self.scenario.speed_options(), true).map_err(runtime_err)?;
        let speeds = l.rungs.iter().copied().zip(l.speeds()).collect();
        Ok((speeds, l.lower_bound()))
    }

    #[pyo3(signature = (rung=Some(0)))]
    fn steady_state(&self, rung: Option<usize>) -> PyResult<Vec<f64>> {
        let r = minimal_steady_state(&self.inner, mode(rung), &self.scenario.evolution_options()).map_err(runtime_err)?;
        Ok(r.p)
    }
}

#[pyfunction]
fn list_experiments() -> Vec<(&'static str, &'static str)> {
    Experiment::ALL.iter().map(|x| (x.name(), x.description())).collect()
}

/// Findings as `(severity, message)` pairs.
#[pyfunction]
fn validate(text: &str) -> PyResult<Vec<(String, String)>> {
    let s = Scenario::from_toml(text).map_err(value_err)?;
    Ok(scenario::validate(&s)
        .into_iter()
        .map(|f| {
            let tag = match f.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Note => "note",
            };
            (tag.to_string(), f.message)
        })
        .collect())
}

/// Runs every experiment of a scenario; writes the CSV files and the report
/// when `out` is given. Returns `(passed, summary)`.
#[pyfunction]
#[pyo3(signature = (text, out=None))]
fn run(text: &str, out: Option<PathBuf>) -> PyResult<(bool, String)> {
    let s = Scenario::from_toml(text).map_err(value_err)?;
    let r = scenario::run(&s).map_err(runtime_err)?;
    if let Some(dir) = out {
        r.write(&dir).map_err(runtime_err)?;
    }
    Ok((r.passed(), r.summary_text()))
}

#[pymodule(name = "frontlab")]
fn frontlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
