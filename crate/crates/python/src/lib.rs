//! Python module `defect_forge`: circuits, ICM expansion, scheduling,
//! planning and the full pipeline. Reports come back as plain dicts.

use std::collections::BTreeMap;

use defect_forge::circuit::{self, normalize_gates, parse_circuit, print_circuit};
use defect_forge::distill::{DistillationSpec, MagicKind};
use defect_forge::icm::{self, CorrectionsReport};
use defect_forge::pipeline::{self, PipelineConfig, Stage};
use defect_forge::schedule;
use defect_forge::verify::{verify_program, VerifyConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON so nested reports arrive as dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Circuit", module = "defect_forge", frozen)]
struct PyCircuit {
    inner: circuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_circuit(text).map(|inner| PyCircuit { inner }).map_err(err)
    }

    fn to_qc(&self) -> String {
        print_circuit(&self.inner)
    }

    fn is_icm(&self) -> bool {
        circuit::is_icm(&self.inner)
    }

    fn normalize(&self) -> PyResult<PyCircuit> {
        normalize_gates(&self.inner).map(|inner| PyCircuit { inner }).map_err(err)
    }

    /// Expands into ICM form; normalizes first if needed.
    fn expand(&self) -> PyResult<PyIcmProgram> {
        let norm = normalize_gates(&self.inner).map_err(err)?;
        icm::expand_all(&norm).map(|inner| PyIcmProgram { inner }).map_err(err)
    }

    /// Wire assignment report: `wire_of`, `wire_count`, `max_live`.
    fn schedule<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let s = schedule::schedule(&self.inner).map_err(err)?;
        to_py(py, &s.assignment.report())
    }

    #[getter]
    fn qubits(&self) -> Vec<String> {
        self.inner.qubit_ids().map(|q| q.as_str().to_string()).collect()
    }

    #[getter]
    fn op_count(&self) -> usize {
        self.inner.ops().len()
    }

    #[getter]
    fn cnot_count(&self) -> usize {
        self.inner.cnot_count()
    }

    #[getter]
    fn t_count(&self) -> usize {
        icm::t_count(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.ops().len()
    }

    fn __eq__(&self, other: &PyCircuit) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Circuit({} qubits, {} ops)", self.inner.qubits().len(), self.inner.ops().len())
    }
}

#[pyclass(name = "IcmProgram", module = "defect_forge", frozen)]
struct PyIcmProgram {
    inner: icm::IcmProgram,
}

#[pymethods]
impl PyIcmProgram {
    #[staticmethod]
    fn from_parts(icm_text: &str, corrections_json: &str) -> PyResult<Self> {
        let c = parse_circuit(icm_text).map_err(err)?;
        let rep: CorrectionsReport = serde_json::from_str(corrections_json).map_err(err)?;
        Ok(PyIcmProgram { inner: icm::IcmProgram::from_parts(c, rep) })
    }

    #[getter]
    fn circuit(&self) -> PyCircuit {
        PyCircuit { inner: self.inner.circuit.clone() }
    }

    fn corrections<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.corrections_report())
    }

    fn corrections_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner.corrections_report()).expect("report serializes")
    }

    /// Branch-by-branch check against `source`; returns the report dict.
    #[pyo3(signature = (source, inputs = 4, seed = 0, max_qubits = 20))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        source: &PyCircuit,
        inputs: usize,
        seed: u64,
        max_qubits: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = VerifyConfig { inputs, seed, max_qubits, ..VerifyConfig::default() };
        let r = verify_program(&source.inner, &self.inner, &cfg).map_err(err)?;
        to_py(py, &r)
    }
}

/// Fewest boxes whose success count reaches `required` with probability
/// at least `target`.
#[pyfunction]
fn boxes_needed(required: usize, success_prob: f64, target: f64) -> PyResult<usize> {
    let spec = DistillationSpec::new(MagicKind::A, success_prob, DistillationSpec::default_for(MagicKind::A).box_dims)
        .map_err(err)?;
    defect_forge::distill::boxes_needed(required, &spec, target).map_err(err)
}

fn config(seed: u64, target: f64, p_a: f64, p_y: f64, stop_after: &str, obj: bool) -> PyResult<PipelineConfig> {
    let mut specs = BTreeMap::new();
    for (k, p) in [(MagicKind::A, p_a), (MagicKind::Y, p_y)] {
        specs.insert(k, DistillationSpec::new(k, p, DistillationSpec::default_for(k).box_dims).map_err(err)?);
    }
    let stop: Stage = stop_after.parse().map_err(PyValueError::new_err)?;
    Ok(PipelineConfig { reliability_target: target, specs, seed, stop_after: stop, obj, ..PipelineConfig::default() })
}

/// Runs the pipeline; returns `{file name: contents}`.
#[pyfunction]
#[pyo3(signature = (text, name = "circuit", seed = 0, target_reliability = 0.999, distill_p_a = 0.9, distill_p_y = 0.9, stop_after = "assembly", obj = false))]
#[allow(clippy::too_many_arguments)]
fn compile(
    text: &str,
    name: &str,
    seed: u64,
    target_reliability: f64,
    distill_p_a: f64,
    distill_p_y: f64,
    stop_after: &str,
    obj: bool,
) -> PyResult<BTreeMap<String, String>> {
    let cfg = config(seed, target_reliability, distill_p_a, distill_p_y, stop_after, obj)?;
    let r = pipeline::compile(name, text, None, &cfg).map_err(err)?;
    Ok(r.artifacts.into_iter().collect())
}

#[pyfunction]
#[pyo3(signature = (text, target_reliability = 0.999, distill_p_a = 0.9, distill_p_y = 0.9))]
fn stats<'py>(
    py: Python<'py>,
    text: &str,
    target_reliability: f64,
    distill_p_a: f64,
    distill_p_y: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(0, target_reliability, distill_p_a, distill_p_y, "assembly", false)?;
    to_py(py, &pipeline::stats(text, &cfg).map_err(err)?)
}

#[pyfunction]
fn parse(text: &str) -> PyResult<PyCircuit> {
    PyCircuit::parse(text)
}

#[pymodule]
#[pyo3(name = "defect_forge")]
fn defect_forge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyIcmProgram>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(boxes_needed, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    Ok(())
}
