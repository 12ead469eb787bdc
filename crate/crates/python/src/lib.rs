//! Python bindings for the hierarchy, induction, activation and statistics
//! modules, plus the file-based pipeline stages.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use neurolabel::activations::{confirm_values, NeuronStatus};
use neurolabel::induction::ScoredHypothesis;
use neurolabel::pipeline::{self, RunConfig};
use neurolabel::{
    ActivationMatrix, AnnotationStore, BeamWidth, ClassHierarchy, ConceptExpression, Error,
    ExampleSplit, InductionConfig, SelectionPolicy,
};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        Error::UnknownClass(_) | Error::UnknownInstance(_) => PyKeyError::new_err(err.to_string()),
        Error::GuardExceeded { .. } | Error::Json(_) | Error::Csv(_) => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Subclass hierarchy with its ancestor index.
#[pyclass(frozen, name = "Hierarchy")]
struct PyHierarchy {
    inner: Arc<ClassHierarchy>,
}

#[pymethods]
impl PyHierarchy {
    /// Parse `child<TAB>parent` text.
    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        let inner = ClassHierarchy::from_tsv(text.as_bytes()).map_err(to_py)?;
        Ok(PyHierarchy {
            inner: Arc::new(inner),
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = ClassHierarchy::load(path).map_err(to_py)?;
        Ok(PyHierarchy {
            inner: Arc::new(inner),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Ancestors-or-self of `name`, sorted by name.
    fn ancestors(&self, name: &str) -> PyResult<Vec<String>> {
        let id = self.inner.require(name).map_err(to_py)?;
        let mut out: Vec<String> = self
            .inner
            .ancestors(id)
            .iter()
            .map(|&a| self.inner.name(a).to_owned())
            .collect();
        out.sort();
        Ok(out)
    }

    fn is_ancestor(&self, ancestor: &str, descendant: &str) -> PyResult<bool> {
        let a = self.inner.require(ancestor).map_err(to_py)?;
        let d = self.inner.require(descendant).map_err(to_py)?;
        Ok(self.inner.is_ancestor(a, d))
    }
}

/// Instance annotations mapped onto a hierarchy.
#[pyclass(frozen, name = "Annotations")]
struct PyAnnotations {
    hierarchy: Arc<ClassHierarchy>,
    store: AnnotationStore,
}

#[pymethods]
impl PyAnnotations {
    #[new]
    #[pyo3(signature = (hierarchy, pairs, max_distance=0))]
    fn new(hierarchy: &PyHierarchy, pairs: Vec<(String, String)>, max_distance: usize) -> Self {
        let store = neurolabel::map_annotations(pairs, &hierarchy.inner, max_distance);
        PyAnnotations {
            hierarchy: hierarchy.inner.clone(),
            store,
        }
    }

    fn __len__(&self) -> usize {
        self.store.len()
    }

    fn classes(&self, instance: &str) -> PyResult<Vec<String>> {
        let ids = self.store.classes_of(instance).map_err(to_py)?;
        Ok(ids
            .iter()
            .map(|&c| self.hierarchy.name(c).to_owned())
            .collect())
    }

    /// Normalized labels that matched no class, with counts.
    fn unmapped(&self) -> Vec<(String, usize)> {
        self.store
            .unmapped()
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }

    /// Whether the instance belongs to the conjunction of `atoms`.
    fn entails(&self, atoms: Vec<String>, instance: &str) -> PyResult<bool> {
        let e = self.expression(&atoms)?;
        neurolabel::entails(&self.hierarchy, &self.store, &e, instance).map_err(to_py)
    }

    fn coverage(
        &self,
        atoms: Vec<String>,
        positives: Vec<String>,
        negatives: Vec<String>,
    ) -> PyResult<Hypothesis> {
        let e = self.expression(&atoms)?;
        let split = ExampleSplit::new(positives, negatives).map_err(to_py)?;
        let scored =
            neurolabel::coverage(&self.hierarchy, &self.store, &e, &split).map_err(to_py)?;
        Ok(Hypothesis::from_scored(&self.hierarchy, &scored))
    }

    /// Ranked hypotheses by beam search. `beam_width=None` means unbounded.
    #[pyo3(signature = (positives, negatives, max_conjuncts=2, beam_width=Some(64), top_k=10, min_pos_support=1))]
    fn induce(
        &self,
        positives: Vec<String>,
        negatives: Vec<String>,
        max_conjuncts: usize,
        beam_width: Option<usize>,
        top_k: usize,
        min_pos_support: usize,
    ) -> PyResult<Vec<Hypothesis>> {
        let split = ExampleSplit::new(positives, negatives).map_err(to_py)?;
        let cfg = InductionConfig {
            max_conjuncts,
            beam_width: beam_width.map_or(BeamWidth::Unbounded, BeamWidth::Bounded),
            top_k,
            min_pos_support,
        };
        let ranked =
            neurolabel::induce(&self.hierarchy, &self.store, &split, &cfg).map_err(to_py)?;
        Ok(self.wrap(&ranked))
    }

    #[pyo3(signature = (positives, negatives, max_conjuncts=2, top_k=10, min_pos_support=1, force=false))]
    fn induce_exhaustive(
        &self,
        positives: Vec<String>,
        negatives: Vec<String>,
        max_conjuncts: usize,
        top_k: usize,
        min_pos_support: usize,
        force: bool,
    ) -> PyResult<Vec<Hypothesis>> {
        let split = ExampleSplit::new(positives, negatives).map_err(to_py)?;
        let cfg = InductionConfig {
            max_conjuncts,
            beam_width: BeamWidth::Unbounded,
            top_k,
            min_pos_support,
        };
        let ranked =
            neurolabel::induce_exhaustive(&self.hierarchy, &self.store, &split, &cfg, force)
                .map_err(to_py)?;
        Ok(self.wrap(&ranked))
    }
}

impl PyAnnotations {
    fn expression(&self, atoms: &[String]) -> PyResult<ConceptExpression> {
        ConceptExpression::parse(&self.hierarchy, &atoms.join(",")).map_err(to_py)
    }

    fn wrap(&self, ranked: &[ScoredHypothesis]) -> Vec<Hypothesis> {
        ranked
            .iter()
            .map(|s| Hypothesis::from_scored(&self.hierarchy, s))
            .collect()
    }
}

#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Hypothesis {
    rank: usize,
    atoms: Vec<String>,
    z1: usize,
    z2: usize,
    coverage: f64,
}

impl Hypothesis {
    fn from_scored(h: &ClassHierarchy, s: &ScoredHypothesis) -> Self {
        Hypothesis {
            rank: s.rank,
            atoms: s
                .expression
                .names(h)
                .into_iter()
                .map(str::to_owned)
                .collect(),
            z1: s.z1,
            z2: s.z2,
            coverage: s.coverage,
        }
    }
}

#[pymethods]
impl Hypothesis {
    fn __repr__(&self) -> String {
        format!(
            "Hypothesis(rank={}, atoms={:?}, z1={}, z2={}, coverage={})",
            self.rank, self.atoms, self.z1, self.z2, self.coverage
        )
    }
}

#[pyclass(frozen, name = "ActivationMatrix")]
struct PyActivationMatrix {
    inner: ActivationMatrix,
}

#[pymethods]
impl PyActivationMatrix {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyActivationMatrix {
            inner: ActivationMatrix::from_csv(text.as_bytes()).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyActivationMatrix {
            inner: ActivationMatrix::load(path).map_err(to_py)?,
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_instances(), self.inner.n_neurons())
    }

    #[getter]
    fn instances(&self) -> Vec<String> {
        self.inner.instances().to_vec()
    }

    fn column(&self, neuron: usize) -> PyResult<Vec<f64>> {
        self.inner.column(neuron).map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Returns `(max_activation, positives, negatives, dead)` under a policy
    /// named `main` or `case1`..`case4`.
    #[pyo3(signature = (neuron, policy="main"))]
    fn profile(
        &self,
        neuron: usize,
        policy: &str,
    ) -> PyResult<(f64, Vec<String>, Vec<String>, bool)> {
        let policy: SelectionPolicy = policy.parse().map_err(to_py)?;
        let p = neurolabel::profile_neuron(&self.inner, neuron, &policy).map_err(to_py)?;
        Ok((
            p.max_activation,
            p.positives,
            p.negatives,
            p.status == NeuronStatus::Dead,
        ))
    }
}

/// `(target_pct, non_target_pct, confirmed)`.
#[pyfunction]
#[pyo3(signature = (targets, non_targets, max_activation, pos_frac=0.8, theta=0.8))]
fn confirm(
    targets: Vec<f64>,
    non_targets: Vec<f64>,
    max_activation: f64,
    pos_frac: f64,
    theta: f64,
) -> PyResult<(f64, f64, bool)> {
    let r = confirm_values(0, &targets, &non_targets, max_activation, pos_frac, theta)
        .map_err(to_py)?;
    Ok((r.target_pct, r.non_target_pct, r.confirmed))
}

#[pyfunction]
#[pyo3(signature = (instances, train_frac=0.8, seed=0))]
fn split_holdout(
    instances: Vec<String>,
    train_frac: f64,
    seed: u64,
) -> PyResult<(Vec<String>, Vec<String>)> {
    neurolabel::split_holdout(&instances, train_frac, seed).map_err(to_py)
}

#[pyclass(frozen, get_all)]
struct MannWhitney {
    n_target: usize,
    n_nontarget: usize,
    u_target: f64,
    u_nontarget: f64,
    z: f64,
    p_one_tailed: f64,
    mean_target: f64,
    median_target: f64,
    mean_nontarget: f64,
    median_nontarget: f64,
    degenerate: bool,
}

#[pyfunction]
fn mann_whitney(target: Vec<f64>, non_target: Vec<f64>) -> PyResult<MannWhitney> {
    let r = neurolabel::mann_whitney(&target, &non_target).map_err(to_py)?;
    Ok(MannWhitney {
        n_target: r.n_target,
        n_nontarget: r.n_nontarget,
        u_target: r.u_target,
        u_nontarget: r.u_nontarget,
        z: r.z,
        p_one_tailed: r.p_one_tailed,
        mean_target: r.mean_target,
        median_target: r.median_target,
        mean_nontarget: r.mean_nontarget,
        median_nontarget: r.median_nontarget,
        degenerate: r.degenerate,
    })
}

#[pyfunction]
fn normal_cdf(z: f64) -> f64 {
    neurolabel::normal_cdf(z)
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    neurolabel::levenshtein(a, b)
}

/// Runs one pipeline stage (`hypothesize`, `confirm`, `evaluate`, `oracle`)
/// and returns its report as JSON text.
#[pyfunction]
fn run_stage(py: Python<'_>, stage: &str, config: &str) -> PyResult<String> {
    let cfg = RunConfig::load(config).map_err(to_py)?;
    let stage = stage.to_owned();
    py.detach(move || -> Result<String, Error> {
        Ok(match stage.as_str() {
            "hypothesize" => serde_json::to_string(&pipeline::cmd_hypothesize(&cfg)?)?,
            "confirm" => serde_json::to_string(&pipeline::cmd_confirm(&cfg)?)?,
            "evaluate" => serde_json::to_string(&pipeline::cmd_evaluate(&cfg)?)?,
            "oracle" => serde_json::to_string(&pipeline::cmd_oracle(&cfg)?)?,
            other => return Err(Error::Config(format!("unknown stage `{other}`"))),
        })
    })
    .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "neurolabel")]
fn neurolabel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHierarchy>()?;
    m.add_class::<PyAnnotations>()?;
    m.add_class::<Hypothesis>()?;
    m.add_class::<PyActivationMatrix>()?;
    m.add_class::<MannWhitney>()?;
    m.add_function(wrap_pyfunction!(confirm, m)?)?;
    m.add_function(wrap_pyfunction!(split_holdout, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage, m)?)?;
    Ok(())
}
