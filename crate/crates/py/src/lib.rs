//! Python bindings for the tabmem toolkit.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use tabmem_core::association::{self as assoc, NumCatMeasure};
use tabmem_core::augment::{self as aug, AugmentConfig};
use tabmem_core::fidelity;
use tabmem_core::memorization;
use tabmem_core::scorelab::{self, FinalStep, LatentSet, SdeConfig, SigmaSchedule};
use tabmem_core::table as tbl;
use tabmem_core::{Cell, Feature, FeatureKind};

fn err(e: tabmem_core::Error) -> PyErr {
    match e {
        tabmem_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn measure(name: &str) -> PyResult<NumCatMeasure> {
    match name {
        "eta" => Ok(NumCatMeasure::Eta),
        "eta-squared" => Ok(NumCatMeasure::EtaSquared),
        _ => Err(PyValueError::new_err(format!("unknown measure `{name}`"))),
    }
}

/// Ordered features with kinds, plus an optional categorical target.
#[pyclass(frozen, skip_from_py_object, module = "tabmem")]
#[derive(Clone)]
struct Schema {
    inner: Arc<tbl::Schema>,
}

#[pymethods]
impl Schema {
    /// `features` is a list of `(name, "numerical" | "categorical")`.
    #[new]
    #[pyo3(signature = (features, target=None))]
    fn new(features: Vec<(String, String)>, target: Option<String>) -> PyResult<Self> {
        let features = features
            .into_iter()
            .map(|(name, kind)| match kind.as_str() {
                "numerical" => Ok(Feature::numerical(name)),
                "categorical" => Ok(Feature::categorical(name)),
                other => Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = tbl::Schema::new(features, target).map_err(err)?;
        Ok(Schema { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = tbl::Schema::from_json_str(text).map_err(err)?;
        Ok(Schema { inner: Arc::new(inner) })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = tbl::Schema::from_json_file(path).map_err(err)?;
        Ok(Schema { inner: Arc::new(inner) })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Non-target feature names.
    #[getter]
    fn features(&self) -> Vec<String> {
        self.inner.features().iter().map(|f| f.name.clone()).collect()
    }

    #[getter]
    fn target(&self) -> Option<String> {
        self.inner.target().map(str::to_owned)
    }

    fn __repr__(&self) -> String {
        format!("Schema({})", self.inner.to_json())
    }
}

#[pyclass(frozen, module = "tabmem")]
struct Table {
    inner: tbl::Table,
}

fn wrap(inner: tbl::Table) -> Table {
    Table { inner }
}

#[pymethods]
impl Table {
    /// Rows are lists of floats and strings in schema column order, the
    /// target last.
    #[new]
    fn new(schema: &Schema, rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let s = &schema.inner;
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != s.width() {
                    return Err(PyValueError::new_err(format!("row {i} has {} cells, expected {}", row.len(), s.width())));
                }
                row.iter()
                    .enumerate()
                    .map(|(c, v)| match s.column_kind(c) {
                        FeatureKind::Numerical => Ok(Cell::Float(v.extract::<f64>()?)),
                        FeatureKind::Categorical => Ok(Cell::from(v.extract::<String>()?.as_str())),
                    })
                    .collect::<PyResult<Vec<Cell>>>()
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(wrap(tbl::Table::new(s.clone(), rows).map_err(err)?))
    }

    #[staticmethod]
    fn read_csv(path: &str, schema: &Schema) -> PyResult<Self> {
        Ok(wrap(tbl::load_csv(path, schema.inner.clone()).map_err(err)?))
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        tbl::write_csv(&self.inner, path).map_err(err)
    }

    #[getter]
    fn schema(&self) -> Schema {
        Schema {
            inner: self.inner.schema_arc().clone(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        for row in self.inner.rows() {
            let r = PyList::empty(py);
            for cell in row {
                match cell {
                    Cell::Float(v) => r.append(*v)?,
                    Cell::Category(s) => r.append(s.as_str())?,
                }
            }
            out.append(r)?;
        }
        Ok(out)
    }

    /// Shuffled split into parts with the given fractions.
    fn split(&self, fractions: Vec<f64>, seed: u64) -> PyResult<Vec<Table>> {
        Ok(tbl::split(&self.inner, &fractions, seed).map_err(err)?.into_iter().map(wrap).collect())
    }

    fn __repr__(&self) -> String {
        format!("Table(rows={}, columns={})", self.inner.len(), self.inner.schema().width())
    }
}

#[pyfunction]
fn distance_ratios(generated: &Table, train: &Table) -> PyResult<Vec<f64>> {
    memorization::distance_ratios(&generated.inner, &train.inner).map_err(err)
}

#[pyfunction]
fn memorization_ratio(ratios: Vec<f64>, threshold: f64) -> PyResult<f64> {
    memorization::memorization_ratio(&ratios, threshold).map_err(err)
}

#[pyfunction]
fn mem_auc(ratios: Vec<f64>) -> PyResult<f64> {
    memorization::mem_auc(&ratios).map_err(err)
}

/// Memorization report as a dict.
#[pyfunction]
#[pyo3(signature = (generated, train, threshold=memorization::DEFAULT_THRESHOLD, bins=memorization::DEFAULT_BINS))]
fn audit<'py>(py: Python<'py>, generated: &Table, train: &Table, threshold: f64, bins: usize) -> PyResult<Bound<'py, PyDict>> {
    let report = py
        .detach(|| memorization::audit(&generated.inner, &train.inner, threshold, bins))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("threshold", report.threshold)?;
    d.set_item("mem_ratio", report.mem_ratio)?;
    d.set_item("mem_auc", report.mem_auc)?;
    d.set_item("histogram", report.histogram.counts)?;
    d.set_item("ratios", report.ratios)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (train, mode="cutmix", ratio=aug::DEFAULT_RATIO, seed=0, cluster_threshold=assoc::DEFAULT_CLUSTER_THRESHOLD, measure="eta"))]
fn augment(
    py: Python<'_>,
    train: &Table,
    mode: &str,
    ratio: f64,
    seed: u64,
    cluster_threshold: f64,
    measure: &str,
) -> PyResult<Table> {
    let cfg = AugmentConfig {
        mode: mode.parse().map_err(err)?,
        ratio,
        seed,
        cluster_threshold,
        num_cat: self::measure(measure)?,
    };
    Ok(wrap(py.detach(|| aug::augment(&train.inner, &cfg)).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (table, measure="eta"))]
fn association_matrix(table: &Table, measure: &str) -> PyResult<Vec<Vec<f64>>> {
    let m = assoc::association_matrix_with(&table.inner, self::measure(measure)?).map_err(err)?;
    Ok(m.rows().map(<[f64]>::to_vec).collect())
}

/// Feature clusters as lists of names.
#[pyfunction]
#[pyo3(signature = (table, threshold=assoc::DEFAULT_CLUSTER_THRESHOLD, measure="eta"))]
fn cluster(table: &Table, threshold: f64, measure: &str) -> PyResult<Vec<Vec<String>>> {
    let c = assoc::cluster_table(&table.inner, threshold, self::measure(measure)?).map_err(err)?;
    Ok(c.named(table.inner.schema()))
}

#[pyfunction]
fn pearson(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    assoc::pearson(&a, &b).map_err(err)
}

#[pyfunction]
fn cramers_v_from_counts(counts: Vec<Vec<u64>>) -> f64 {
    assoc::cramers_v_from_counts(&counts)
}

#[pyfunction]
fn eta_squared(num: Vec<f64>, cat: Vec<String>) -> PyResult<f64> {
    let cat: Vec<_> = cat.iter().map(|s| tabmem_core::Symbol::new(s)).collect();
    assoc::eta_squared(&num, &cat).map_err(err)
}

#[pyfunction]
fn shape_score(real: &Table, synthetic: &Table) -> PyResult<f64> {
    fidelity::shape_score(&real.inner, &synthetic.inner).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (real, synthetic, bins=fidelity::DEFAULT_TREND_BINS))]
fn trend_score(real: &Table, synthetic: &Table, bins: usize) -> PyResult<f64> {
    fidelity::trend_score(&real.inner, &synthetic.inner, bins).map_err(err)
}

#[pyfunction]
fn dcr_probability(synthetic: &Table, train: &Table, holdout: &Table) -> PyResult<f64> {
    fidelity::dcr_probability(&synthetic.inner, &train.inner, &holdout.inner).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (real, synthetic, seed=42))]
fn c2st_score(real: &Table, synthetic: &Table, seed: u64) -> PyResult<f64> {
    fidelity::c2st_score(&real.inner, &synthetic.inner, seed).map_err(err)
}

/// All fidelity metrics as a dict; `dcr_probability` only with a holdout.
#[pyfunction]
#[pyo3(signature = (real, synthetic, holdout=None, seed=42))]
fn fidelity_report<'py>(
    py: Python<'py>,
    real: &Table,
    synthetic: &Table,
    holdout: Option<&Table>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| fidelity::fidelity_report(&real.inner, &synthetic.inner, holdout.map(|h| &h.inner), seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("shape_score", r.shape_score)?;
    d.set_item("trend_score", r.trend_score)?;
    if let Some(v) = r.dcr_probability {
        d.set_item("dcr_probability", v)?;
    }
    d.set_item("c2st_score", r.c2st_score)?;
    d.set_item("alpha_precision", r.alpha_precision)?;
    d.set_item("beta_recall", r.beta_recall)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (train, seed=0))]
fn synthesize_ood(train: &Table, seed: u64) -> Table {
    wrap(fidelity::synthesize_ood(&train.inner, &mut tabmem_core::rng::seeded(seed)))
}

#[pyfunction]
fn optimal_score(z: Vec<f64>, sigma: f64, latents: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let latents = LatentSet::new(latents).map_err(err)?;
    scorelab::optimal_score_sigma(&z, sigma, &latents).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n_latents=16, dim=2, steps=10_000, trajectories=256, seed=1, final_step="nearest-latent"))]
fn simulate<'py>(
    py: Python<'py>,
    n_latents: usize,
    dim: usize,
    steps: usize,
    trajectories: usize,
    seed: u64,
    final_step: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let final_step = match final_step {
        "nearest-latent" => FinalStep::NearestLatent,
        "euler" => FinalStep::Euler,
        other => return Err(PyValueError::new_err(format!("unknown final step `{other}`"))),
    };
    let cfg = SdeConfig {
        steps,
        seed,
        trajectories,
        final_step,
    };
    let (_, report, _) = py
        .detach(|| scorelab::simulate(n_latents, dim, &SigmaSchedule::default(), &cfg, false))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("replication_fraction", report.replication_fraction)?;
    d.set_item("mean_final_nn_distance", report.mean_final_nn_distance)?;
    d.set_item("diameter", report.diameter)?;
    Ok(d)
}

#[pymodule]
fn tabmem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Schema>()?;
    m.add_class::<Table>()?;
    m.add_function(wrap_pyfunction!(distance_ratios, m)?)?;
    m.add_function(wrap_pyfunction!(memorization_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(mem_auc, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(augment, m)?)?;
    m.add_function(wrap_pyfunction!(association_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(cramers_v_from_counts, m)?)?;
    m.add_function(wrap_pyfunction!(eta_squared, m)?)?;
    m.add_function(wrap_pyfunction!(shape_score, m)?)?;
    m.add_function(wrap_pyfunction!(trend_score, m)?)?;
    m.add_function(wrap_pyfunction!(dcr_probability, m)?)?;
    m.add_function(wrap_pyfunction!(c2st_score, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_report, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_ood, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_score, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
