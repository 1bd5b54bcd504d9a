//! Python bindings for the retention-problem solver.
//!
//! Exposes one class, `Instance`, wrapping a parsed and immutable problem
//! instance, with methods mirroring the Rust API: validation, derived state
//! sets, kernel computation, exhaustive verification, and the splice-closure
//! check. States cross the boundary as `(t_label, x, omega)` tuples, using
//! the file's time labels and 0-based trajectory/disturbance indices.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use retain::absorb::ExecMode;
use retain::model::{DistId, State, StateSet, TrajId};
use retain::strategy::Verdict;

fn to_py_err(e: retain::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn state_tuple(inst: &retain::Instance, s: &State) -> (i64, usize, usize) {
    (inst.time().label(s.t), s.x.0, s.omega.0)
}

fn states_list(inst: &retain::Instance, set: &StateSet) -> Vec<(i64, usize, usize)> {
    set.iter().map(|s| state_tuple(inst, s)).collect()
}

/// A parsed retention-problem instance.
#[pyclass(module = "retain_py")]
struct Instance {
    inner: retain::Instance,
}

impl Instance {
    fn resolve(&self, t: i64, x: usize, omega: usize) -> PyResult<State> {
        let t = self
            .inner
            .time()
            .index_of(t)
            .ok_or_else(|| PyValueError::new_err(format!("t = {t} is not a grid point")))?;
        self.inner
            .canonical_state(t, TrajId(x), DistId(omega))
            .map_err(to_py_err)
    }
}

#[pymethods]
impl Instance {
    /// Parse instance text (the JSON file format).
    #[staticmethod]
    #[pyo3(signature = (text, close_constraint = false))]
    fn parse(text: &str, close_constraint: bool) -> PyResult<Self> {
        let opts = retain::ParseOptions { close_constraint };
        let inner = retain::parse_instance_with(text, &opts)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Instance { inner })
    }

    /// Parse an instance file from disk.
    #[staticmethod]
    #[pyo3(signature = (path, close_constraint = false))]
    fn from_file(path: &str, close_constraint: bool) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text, close_constraint)
    }

    /// Human-readable descriptions of every law violation; empty iff valid.
    fn validate(&self) -> Vec<String> {
        retain::validate_axioms(&self.inner)
            .violations()
            .iter()
            .map(|v| format!("{}: {v}", v.category()))
            .collect()
    }

    fn is_valid(&self) -> bool {
        retain::validate_axioms(&self.inner).is_valid()
    }

    #[getter]
    fn times(&self) -> Vec<i64> {
        self.inner.time().points().to_vec()
    }

    #[getter]
    fn t0(&self) -> i64 {
        self.inner.time().label(self.inner.time().t0())
    }

    #[getter]
    fn x0(&self) -> usize {
        self.inner.x0().0
    }

    #[getter]
    fn trajectory_count(&self) -> usize {
        self.inner.trajectory_count()
    }

    #[getter]
    fn disturbance_count(&self) -> usize {
        self.inner.disturbance_count()
    }

    /// All states reachable from the initial history, canonicalized.
    fn reachable_states(&self) -> PyResult<Vec<(i64, usize, usize)>> {
        Ok(states_list(&self.inner, &self.inner.reachable_states().map_err(to_py_err)?))
    }

    /// The reachable states the constraint allows.
    fn target_set(&self) -> PyResult<Vec<(i64, usize, usize)>> {
        Ok(states_list(&self.inner, &self.inner.target_set().map_err(to_py_err)?))
    }

    /// Trajectories admitted for history `x` at time label `t` under `omega`.
    fn bundle(&self, t: i64, x: usize, omega: usize) -> PyResult<Vec<usize>> {
        let s = self.resolve(t, x, omega)?;
        let bundle = self.inner.bundle(s.t, s.x, s.omega).map_err(to_py_err)?;
        Ok(bundle.iter().map(|h| h.0).collect())
    }

    /// Disturbances indistinguishable from `omega` at `(t, x)`.
    fn compatible_disturbances(&self, t: i64, x: usize, omega: usize) -> PyResult<Vec<usize>> {
        let s = self.resolve(t, x, omega)?;
        let compat = self.inner.compatible_disturbances(&s).map_err(to_py_err)?;
        Ok(compat.into_iter().map(|d| d.0).collect())
    }

    /// Iterate absorption to the kernel and render the verdict.
    ///
    /// Returns a dict with `kernel`, `trace`, `iterations`, `solvable`, and
    /// — when solvable — `omega0` plus the resolving procedure's `mapping`
    /// of disturbance index to trajectory list.
    fn solve(&self, py: Python<'_>) -> PyResult<Py<PyDict>> {
        let target = self.inner.target_set().map_err(to_py_err)?;
        let kr = retain::iterate_to_fixpoint(&self.inner, &target).map_err(to_py_err)?;
        let verdict = retain::solvable(&self.inner, &kr).map_err(to_py_err)?;

        let out = PyDict::new(py);
        out.set_item("kernel", states_list(&self.inner, &kr.kernel))?;
        out.set_item("trace", &kr.trace)?;
        out.set_item("iterations", kr.iterations)?;
        match verdict {
            Verdict::Solvable { omega0, strategy } => {
                out.set_item("solvable", true)?;
                out.set_item("omega0", omega0.0)?;
                let mapping = PyDict::new(py);
                for (nu, value) in strategy.mapping() {
                    let ids: Vec<usize> = value.iter().map(|h| h.0).collect();
                    mapping.set_item(nu.0, ids)?;
                }
                out.set_item("mapping", mapping)?;
            }
            Verdict::Unsolvable => {
                out.set_item("solvable", false)?;
            }
        }
        Ok(out.unbind())
    }

    /// Compare the fixpoint kernel against exhaustive procedure search.
    #[pyo3(signature = (budget = retain::DEFAULT_BUDGET))]
    fn verify(&self, py: Python<'_>, budget: u64) -> PyResult<Py<PyDict>> {
        let target = self.inner.target_set().map_err(to_py_err)?;
        let fixpoint = retain::iterate_to_fixpoint(&self.inner, &target)
            .map_err(to_py_err)?
            .kernel;
        let oracle = retain::oracle::oracle_kernel_with(&self.inner, budget, ExecMode::Sequential)
            .map_err(to_py_err)?;
        let out = PyDict::new(py);
        out.set_item("agree", fixpoint == oracle)?;
        out.set_item("fixpoint_kernel", states_list(&self.inner, &fixpoint))?;
        out.set_item("oracle_kernel", states_list(&self.inner, &oracle))?;
        Ok(out.unbind())
    }

    /// Splice-closure check: `(True, None)` or `(False, (omega1, omega2, t))`.
    fn decomposable(&self) -> (bool, Option<(usize, usize, i64)>) {
        let report = retain::is_decomposable(&self.inner);
        let witness = report
            .witness
            .map(|(o1, o2, t)| (o1.0, o2.0, self.inner.time().label(t)));
        (report.decomposable, witness)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(times={}, trajectories={}, disturbances={})",
            self.inner.time().len(),
            self.inner.trajectory_count(),
            self.inner.disturbance_count()
        )
    }
}

#[pymodule]
pub fn retain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add("DEFAULT_BUDGET", retain::DEFAULT_BUDGET)?;
    Ok(())
}
