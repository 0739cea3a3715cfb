//! Python bindings. Neuron ids cross the boundary as `(layer, index)` tuples
//! and patterns as lists with `None` for a silent slot.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;
use std::path::PathBuf;

use slotnet::growth::{GrowthConfig, Network, NeuronId};
use slotnet::logic::{self, SlotNetwork};
use slotnet::{ModelParams, ModulationContext};

fn runtime<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn id_tuple(id: Option<NeuronId>) -> Option<(usize, usize)> {
    id.map(|id| (id.layer, id.index))
}

/// Model constants and the integration step.
#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (json=None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => serde_json::from_str(text).map_err(value)?,
            None => ModelParams::default(),
        };
        inner.validate().map_err(value)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(runtime)
    }
}

/// A grown attribute-slot network.
#[pyclass(name = "Network")]
struct PyNetwork {
    inner: Network,
}

#[pymethods]
impl PyNetwork {
    /// `config` is a JSON growth configuration; the default two-layer
    /// network is used when it is omitted.
    #[new]
    #[pyo3(signature = (config=None, params=None, seed=0))]
    fn new(config: Option<&str>, params: Option<PyModelParams>, seed: u64) -> PyResult<Self> {
        let config: GrowthConfig = match config {
            Some(text) => serde_json::from_str(text).map_err(value)?,
            None => GrowthConfig::default(),
        };
        let params = params.map(|p| p.inner).unwrap_or_default();
        Ok(Self { inner: Network::new(config, params, seed).map_err(value)? })
    }

    #[staticmethod]
    #[pyo3(signature = (slot_sizes, neurons, d_max, seed=0))]
    fn single_layer(slot_sizes: Vec<usize>, neurons: usize, d_max: usize, seed: u64) -> PyResult<Self> {
        let config = GrowthConfig::single_layer(slot_sizes, neurons, d_max);
        Ok(Self { inner: Network::new(config, ModelParams::default(), seed).map_err(value)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Network::load(&path).map_err(runtime)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Network::from_json(text).map_err(value)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(runtime)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(runtime)
    }

    #[getter]
    fn slot_sizes(&self) -> Vec<usize> {
        self.inner.input_slots().to_vec()
    }

    /// Presents the pattern with plasticity on; returns the winner.
    #[pyo3(signature = (values, h=1.0))]
    fn learn(&mut self, values: Vec<Option<usize>>, h: f64) -> PyResult<Option<(usize, usize)>> {
        let p = self.inner.pattern(&values);
        let report = self.inner.learn(&p, &ModulationContext { m: 1.0, h }).map_err(value)?;
        Ok(id_tuple(report.encode.winner()))
    }

    fn encode(&self, values: Vec<Option<usize>>) -> PyResult<Option<(usize, usize)>> {
        let p = self.inner.pattern(&values);
        Ok(id_tuple(self.inner.encode(&p).map_err(value)?.winner()))
    }

    /// Winner and reconstructed input values.
    fn retrieve(&self, values: Vec<Option<usize>>) -> PyResult<(Option<(usize, usize)>, Vec<Option<usize>>)> {
        let p = self.inner.pattern(&values);
        let r = self.inner.retrieve(&p).map_err(value)?;
        Ok((id_tuple(r.winner), r.reconstruction.values()))
    }

    fn retrieval_score(&self, values: Vec<Option<usize>>, neuron: (usize, usize)) -> PyResult<f64> {
        let p = self.inner.pattern(&values);
        let id = NeuronId { layer: neuron.0, index: neuron.1 };
        self.inner.retrieval_score(&p, id).map_err(value)
    }

    /// Lets every synapse decay passively for `elapsed` time units.
    fn decay(&mut self, elapsed: f64) -> PyResult<()> {
        self.inner.decay_epoch(elapsed).map_err(value)
    }

    fn coding_neurons(&self) -> Vec<(usize, usize)> {
        self.inner.coding_neurons().into_iter().map(|id| (id.layer, id.index)).collect()
    }
}

/// A boolean expression compiled to a single hidden layer.
#[pyclass(name = "LogicNetwork")]
struct PyLogicNetwork {
    inner: SlotNetwork,
}

#[pymethods]
impl PyLogicNetwork {
    #[new]
    fn new(expr: &str) -> PyResult<Self> {
        let e = logic::parse_expr(expr).map_err(value)?;
        Ok(Self { inner: logic::compile(&logic::to_dnf(&e).map_err(value)?) })
    }

    #[staticmethod]
    fn xor() -> Self {
        Self { inner: logic::xor_network() }
    }

    #[getter]
    fn atoms(&self) -> Vec<String> {
        self.inner.atoms.clone()
    }

    fn eval(&self, assignment: BTreeMap<String, bool>) -> PyResult<bool> {
        logic::eval_network(&self.inner, &assignment).map_err(value)
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }
}

/// Runs the command-line tool in-process: `run(["xor"])` returns
/// `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run(args: Vec<String>) -> (i32, String, String) {
    let argv = std::iter::once("slotnet".to_string()).chain(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = slotnet::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

#[pymodule]
fn slotnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyLogicNetwork>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
