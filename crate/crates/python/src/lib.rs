//! Python bindings: click models, the three learners, the KL helpers and a
//! single-run regret simulation.

use batchrank::harness::{BoundInputs, DEFAULT_WINDOW};
use batchrank::{Algorithm, ExperimentConfig, Learner, LearnerEvent, ModelKind, RankedList};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: batchrank::Error) -> PyErr {
    match e {
        batchrank::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn events_to_tuples(events: Vec<LearnerEvent>) -> Vec<(String, usize, String)> {
    events
        .into_iter()
        .map(|e| (e.kind.as_str().to_string(), e.batch, e.detail))
        .collect()
}

#[pyfunction]
fn bernoulli_kl(p: f64, q: f64) -> PyResult<f64> {
    batchrank::bernoulli_kl(p, q).map_err(to_py)
}

#[pyfunction]
fn kl_ucb_upper(c_hat: f64, n: u64, delta: f64) -> PyResult<f64> {
    batchrank::kl_ucb_upper(c_hat, n, delta).map_err(to_py)
}

#[pyfunction]
fn kl_ucb_lower(c_hat: f64, n: u64, delta: f64) -> PyResult<f64> {
    batchrank::kl_ucb_lower(c_hat, n, delta).map_err(to_py)
}

#[pyfunction]
fn delta_t(horizon: u64) -> PyResult<f64> {
    batchrank::delta_t(horizon).map_err(to_py)
}

#[pyfunction]
fn stage_length(stage: u32, horizon: u64) -> PyResult<u64> {
    batchrank::stage_length(stage, horizon).map_err(to_py)
}

/// Regret bound of BatchRank for the given attraction probabilities.
#[pyfunction]
fn regret_bound(alpha: Vec<f64>, positions: usize, horizon: u64) -> PyResult<f64> {
    let inputs = BoundInputs::for_instance(&alpha, positions, horizon).map_err(to_py)?;
    batchrank::theorem1_bound(&inputs).map_err(to_py)
}

/// Cascade or position-based click model with its own random stream.
#[pyclass(name = "ClickModel", module = "batchrank_py")]
struct PyClickModel {
    inner: batchrank::ClickModel,
    rng: ChaCha8Rng,
}

impl PyClickModel {
    fn list(&self, items: Vec<usize>) -> PyResult<RankedList> {
        RankedList::new(items, self.inner.num_items()).map_err(to_py)
    }
}

#[pymethods]
impl PyClickModel {
    #[staticmethod]
    #[pyo3(signature = (alpha, positions, seed = 0))]
    fn cascade(alpha: Vec<f64>, positions: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: batchrank::ClickModel::cascade(alpha, positions).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, chi, seed = 0))]
    fn position_based(alpha: Vec<f64>, chi: Vec<f64>, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: batchrank::ClickModel::position_based(alpha, chi).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.num_items()
    }

    #[getter]
    fn num_positions(&self) -> usize {
        self.inner.num_positions()
    }

    fn expected_reward(&self, items: Vec<usize>) -> PyResult<f64> {
        self.inner.expected_reward(&self.list(items)?).map_err(to_py)
    }

    fn examination_prob(&self, items: Vec<usize>, position: usize) -> PyResult<f64> {
        self.inner
            .examination_prob(&self.list(items)?, position)
            .map_err(to_py)
    }

    fn optimal_list(&self) -> PyResult<Vec<usize>> {
        Ok(self.inner.optimal_list().map_err(to_py)?.into_inner())
    }

    /// Draws one click vector for `items`.
    fn sample(&mut self, items: Vec<usize>) -> PyResult<Vec<bool>> {
        let list = self.list(items)?;
        let outcome = self.inner.sample_step(&list, &mut self.rng).map_err(to_py)?;
        Ok(outcome.clicks)
    }

    fn __repr__(&self) -> String {
        format!(
            "ClickModel(kind={}, items={}, positions={})",
            self.inner.kind(),
            self.inner.num_items(),
            self.inner.num_positions()
        )
    }
}

macro_rules! learner_class {
    ($py_name:literal, $rust:ident, $inner:ty, { $($extra:tt)* }) => {
        #[pyclass(name = $py_name, module = "batchrank_py")]
        struct $rust {
            inner: $inner,
            rng: ChaCha8Rng,
        }

        #[pymethods]
        impl $rust {
            fn choose(&mut self) -> PyResult<Vec<usize>> {
                Ok(self.inner.choose(&mut self.rng).map_err(to_py)?.into_inner())
            }

            /// Feeds the clicks on `items`; returns `(kind, batch, detail)`
            /// for every structural change.
            fn update(
                &mut self,
                items: Vec<usize>,
                clicks: Vec<bool>,
            ) -> PyResult<Vec<(String, usize, String)>> {
                let list = RankedList::new(items, self.num_items()).map_err(to_py)?;
                let events = self
                    .inner
                    .update(&list, &clicks, &mut self.rng)
                    .map_err(to_py)?;
                Ok(events_to_tuples(events))
            }

            #[getter]
            fn name(&self) -> &'static str {
                self.inner.name()
            }

            $($extra)*
        }
    };
}

learner_class!("BatchRank", PyBatchRank, batchrank::BatchRank, {
    #[new]
    #[pyo3(signature = (num_items, num_positions, horizon, seed = 0))]
    fn new(num_items: usize, num_positions: usize, horizon: u64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: batchrank::BatchRank::new(num_items, num_positions, horizon).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.num_items()
    }

    /// Active batches as dicts with `id`, `first`, `last`, `stage` and `items`.
    fn active_batches<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .active_batches()
            .map(|b| {
                let d = PyDict::new(py);
                d.set_item("id", b.id)?;
                d.set_item("first", b.first)?;
                d.set_item("last", b.last)?;
                d.set_item("stage", b.stage)?;
                d.set_item("items", b.items.clone())?;
                Ok(d)
            })
            .collect()
    }
});

learner_class!("CascadeKlUcb", PyCascadeKlUcb, batchrank::CascadeKlUcb, {
    #[new]
    #[pyo3(signature = (num_items, num_positions, seed = 0))]
    fn new(num_items: usize, num_positions: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: batchrank::CascadeKlUcb::new(num_items, num_positions).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.clicks().len()
    }

    fn clicks(&self) -> Vec<u64> {
        self.inner.clicks().to_vec()
    }

    fn observations(&self) -> Vec<u64> {
        self.inner.observations().to_vec()
    }
});

learner_class!("RankedExp3", PyRankedExp3, batchrank::RankedExp3, {
    #[new]
    #[pyo3(signature = (num_items, num_positions, horizon, seed = 0))]
    fn new(num_items: usize, num_positions: usize, horizon: u64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: batchrank::RankedExp3::new(num_items, num_positions, horizon).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.inner.probabilities(0).len()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn probabilities(&self, position: usize) -> Vec<f64> {
        self.inner.probabilities(position)
    }
});

/// Simulates one seeded run and returns its regret trace as a dict.
#[pyfunction]
#[pyo3(signature = (
    model, alpha, positions, horizon, algorithm, seed = 0, chi = None, window = None, label = "py"
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    model: &str,
    alpha: Vec<f64>,
    positions: usize,
    horizon: u64,
    algorithm: &str,
    seed: u64,
    chi: Option<Vec<f64>>,
    window: Option<u64>,
    label: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig {
        label: label.to_string(),
        model: model.parse::<ModelKind>().map_err(to_py)?,
        alpha,
        chi: chi.unwrap_or_default(),
        positions,
        horizon,
        algorithm: algorithm.parse::<Algorithm>().map_err(to_py)?,
        seeds: vec![seed],
        window: window.unwrap_or(DEFAULT_WINDOW),
    };
    let trace = py
        .detach(|| batchrank::run_single(&config, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("run_id", &trace.run_id)?;
    d.set_item("cumulative_regret", trace.cumulative_regret)?;
    d.set_item(
        "window_regret",
        trace.windows.iter().map(|w| w.avg_per_step_regret).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "window_end",
        trace.windows.iter().map(|w| w.end).collect::<Vec<_>>(),
    )?;
    d.set_item("final_list", trace.final_list.items().to_vec())?;
    d.set_item(
        "events",
        trace
            .events
            .iter()
            .map(|e| (e.step, e.kind.as_str(), e.batch, e.detail.clone()))
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

#[pymodule]
pub fn batchrank_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bernoulli_kl, m)?)?;
    m.add_function(wrap_pyfunction!(kl_ucb_upper, m)?)?;
    m.add_function(wrap_pyfunction!(kl_ucb_lower, m)?)?;
    m.add_function(wrap_pyfunction!(delta_t, m)?)?;
    m.add_function(wrap_pyfunction!(stage_length, m)?)?;
    m.add_function(wrap_pyfunction!(regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<PyClickModel>()?;
    m.add_class::<PyBatchRank>()?;
    m.add_class::<PyCascadeKlUcb>()?;
    m.add_class::<PyRankedExp3>()?;
    Ok(())
}
