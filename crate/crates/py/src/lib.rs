//! Python bindings for `runnerdna`.
//!
//! Build with `cargo build -p runnerdna-py --features extension-module` and
//! import the resulting shared library as `runnerdna_py`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use runnerdna::dna::{self, AmplitudeSource, DnaParams, Indicator};
use runnerdna::eval::{self, ConfusionMatrix, GroupSummary};
use runnerdna::features::{self, Stat};
use runnerdna::forest::{self, Dataset, FeaturesPerSplit, ForestParams};
use runnerdna::ingest::{self, AlignPolicy};
use runnerdna::pipeline::{self, PipelineError};
use runnerdna::synth::{self, CohortSpec};
use runnerdna::{Channel, GpsPoint};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn align_policy(name: &str) -> PyResult<AlignPolicy> {
    match name {
        "mean" => Ok(AlignPolicy::MeanPerSecond),
        "first" => Ok(AlignPolicy::FirstPerSecond),
        _ => Err(PyValueError::new_err(format!("unknown alignment `{name}` (mean | first)"))),
    }
}

fn dna_params(m: usize, r_factor: f64, amplitude_source: &str) -> PyResult<DnaParams> {
    Ok(DnaParams {
        m,
        r_factor,
        amplitude_source: amplitude_source.parse::<AmplitudeSource>().map_err(value_err)?,
    })
}

/// One sensor session: 18 channels plus an optional GPS track.
#[pyclass(name = "ActivityRecord", module = "runnerdna_py", frozen)]
struct PyActivityRecord {
    inner: runnerdna::ActivityRecord,
}

#[pymethods]
impl PyActivityRecord {
    /// Reads `<dir>/<record_id>.{sensors.csv,gps.csv,meta.json}` without aligning.
    #[staticmethod]
    fn read(dir: PathBuf, record_id: &str) -> PyResult<Self> {
        ingest::read_record(&dir, record_id)
            .map(|inner| PyActivityRecord { inner })
            .map_err(|e| pipeline_err(e.into()))
    }

    #[getter]
    fn record_id(&self) -> &str {
        &self.inner.record_id
    }

    #[getter]
    fn label(&self) -> &'static str {
        self.inner.label.as_str()
    }

    #[getter]
    fn volunteer_id(&self) -> &str {
        &self.inner.volunteer.volunteer_id
    }

    #[getter]
    fn sex(&self) -> &'static str {
        self.inner.volunteer.sex.as_str()
    }

    fn timestamps(&self, channel: &str) -> PyResult<Vec<i64>> {
        let c: Channel = channel.parse().map_err(value_err)?;
        Ok(self.inner.series(c).timestamps.clone())
    }

    fn values(&self, channel: &str) -> PyResult<Vec<f64>> {
        let c: Channel = channel.parse().map_err(value_err)?;
        Ok(self.inner.series(c).values.clone())
    }

    /// GPS fixes as `(lat, lon, timestamp)` tuples.
    fn gps(&self) -> Option<Vec<(f64, f64, f64)>> {
        self.inner
            .gps
            .as_ref()
            .map(|t| t.iter().map(|p| (p.lat, p.lon, p.timestamp)).collect())
    }

    #[pyo3(signature = (policy = "mean"))]
    fn align(&self, policy: &str) -> PyResult<Self> {
        ingest::align_series(&self.inner, align_policy(policy)?)
            .map(|inner| PyActivityRecord { inner })
            .map_err(value_err)
    }

    /// The 540 statistics in canonical key order.
    fn features(&self) -> PyResult<Vec<f64>> {
        features::extract_feature_vector(&self.inner)
            .map(|f| f.values)
            .map_err(value_err)
    }

    #[pyo3(signature = (m = 2, r_factor = 0.2, amplitude_source = "accelerometer"))]
    fn dna_raw(&self, m: usize, r_factor: f64, amplitude_source: &str) -> PyResult<BTreeMap<&'static str, f64>> {
        let raw = dna::compute_dna_raw(&self.inner, &dna_params(m, r_factor, amplitude_source)?).map_err(value_err)?;
        Ok(Indicator::ALL.iter().map(|i| (i.as_str(), raw.get(*i))).collect())
    }

    /// GPS aggregates, or `None` without a usable track.
    fn kinematics(&self) -> PyResult<Option<BTreeMap<&'static str, f64>>> {
        let k = pipeline::record_kinematics(&self.inner).map_err(pipeline_err)?;
        Ok(k.map(|k| {
            runnerdna::KinematicFeatures::NAMES
                .iter()
                .copied()
                .zip(k.to_array())
                .collect()
        }))
    }

    fn __repr__(&self) -> String {
        format!(
            "ActivityRecord(id={:?}, label={:?}, volunteer={:?})",
            self.inner.record_id,
            self.inner.label.as_str(),
            self.inner.volunteer.volunteer_id
        )
    }
}

/// Loads and aligns every record of a directory, in id order.
#[pyfunction]
#[pyo3(signature = (dir, policy = "mean"))]
fn load_records(dir: PathBuf, policy: &str) -> PyResult<Vec<PyActivityRecord>> {
    let recs = pipeline::load_records(&dir, align_policy(policy)?).map_err(pipeline_err)?;
    Ok(recs.into_iter().map(|inner| PyActivityRecord { inner }).collect())
}

/// A trained random forest.
#[pyclass(name = "Forest", module = "runnerdna_py", frozen)]
struct PyForest {
    inner: forest::Forest,
}

fn dataset(rows: Vec<Vec<f64>>, labels: &[String], keys: Option<Vec<String>>) -> PyResult<Dataset> {
    let width = rows.first().map_or(0, Vec::len);
    let keys = keys.unwrap_or_else(|| (0..width).map(|i| format!("f{i}")).collect());
    Dataset::new(keys, rows, labels, None).map_err(value_err)
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    #[pyo3(signature = (rows, labels, n_trees = 200, seed = 0, max_depth = None, min_samples_leaf = 1, mtry = None, feature_keys = None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        n_trees: usize,
        seed: u64,
        max_depth: Option<usize>,
        min_samples_leaf: usize,
        mtry: Option<usize>,
        feature_keys: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let data = dataset(rows, &labels, feature_keys)?;
        let params = ForestParams {
            n_trees,
            max_depth,
            min_samples_leaf,
            features_per_split: mtry.map_or(FeaturesPerSplit::Sqrt, FeaturesPerSplit::Count),
            seed,
        };
        let inner = py
            .detach(|| forest::train_forest(&data, &params))
            .map_err(value_err)?;
        Ok(PyForest { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PyForest { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.classes.clone()
    }

    #[getter]
    fn feature_keys(&self) -> Vec<String> {
        self.inner.feature_keys.clone()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees.len()
    }

    /// `(label, vote_fractions)` for one row.
    fn predict(&self, row: Vec<f64>) -> PyResult<(String, Vec<f64>)> {
        let p = self.inner.predict(&row).map_err(value_err)?;
        Ok((p.label, p.vote_fractions))
    }

    fn predict_many(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<String>> {
        rows.iter()
            .map(|r| self.inner.predict(r).map(|p| p.label).map_err(value_err))
            .collect()
    }

    /// OOB error on the training rows.
    fn oob_error(&self, rows: Vec<Vec<f64>>, labels: Vec<String>) -> PyResult<f64> {
        let data = dataset(rows, &labels, Some(self.inner.feature_keys.clone()))?;
        forest::oob_error(&self.inner, &data).map_err(value_err)
    }

    /// Permutation importance per feature key, on the training rows.
    #[pyo3(signature = (rows, labels, permutations = 1, seed = 0))]
    fn importance(
        &self,
        py: Python<'_>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        permutations: usize,
        seed: u64,
    ) -> PyResult<BTreeMap<String, f64>> {
        let data = dataset(rows, &labels, Some(self.inner.feature_keys.clone()))?;
        let r = py
            .detach(|| features::mean_decrease_accuracy(&self.inner, &data, permutations, seed))
            .map_err(value_err)?;
        Ok(r.keys.into_iter().zip(r.scores).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Forest(n_trees={}, classes={:?}, features={})",
            self.inner.trees.len(),
            self.inner.classes,
            self.inner.feature_keys.len()
        )
    }
}

#[pyfunction]
fn parse_timestamp(text: &str) -> Option<i64> {
    ingest::parse_timestamp(text)
}

#[pyfunction]
fn haversine_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    runnerdna::gps::haversine_distance(&GpsPoint::new(lat1, lon1, 0.0), &GpsPoint::new(lat2, lon2, 0.0))
}

#[pyfunction]
fn haversine_velocity(p1: (f64, f64, f64), p2: (f64, f64, f64)) -> PyResult<f64> {
    runnerdna::gps::haversine_velocity(&GpsPoint::new(p1.0, p1.1, p1.2), &GpsPoint::new(p2.0, p2.1, p2.2))
        .map_err(value_err)
}

#[pyfunction]
fn fit_polynomial_rmse(values: Vec<f64>, degree: usize) -> PyResult<f64> {
    dna::fit_polynomial_rmse(&values, degree).map_err(value_err)
}

#[pyfunction]
fn approximate_entropy(values: Vec<f64>, m: usize, r: f64) -> PyResult<f64> {
    dna::approximate_entropy(&values, m, r).map_err(value_err)
}

#[pyfunction]
fn gaussian_nll(values: Vec<f64>) -> PyResult<f64> {
    dna::gaussian_nll(&values).map_err(value_err)
}

/// Min-max maps rows of five raw indicators onto [0, 5].
#[pyfunction]
fn normalize_dna(raw: Vec<[f64; 5]>) -> PyResult<Vec<[f64; 5]>> {
    let cohort: Vec<(String, dna::RawDna)> = raw
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i.to_string(), dna::RawDna::from_array(v)))
        .collect();
    Ok(dna::normalize_dna(&cohort)
        .map_err(value_err)?
        .into_iter()
        .map(|d| d.normalized)
        .collect())
}

#[pyfunction]
fn summary_features(values: Vec<f64>) -> PyResult<BTreeMap<&'static str, f64>> {
    let f = features::summary_features(&values).map_err(value_err)?;
    Ok(Stat::ALL.iter().map(|s| (s.name(), f.get(*s))).collect())
}

#[pyfunction]
fn feature_names() -> Vec<String> {
    features::feature_names()
}

#[pyfunction]
#[pyo3(signature = (values, bins = features::ENTROPY_BINS))]
fn shannon_entropy(values: Vec<f64>, bins: usize) -> PyResult<f64> {
    features::shannon_entropy(&values, bins).map_err(value_err)
}

#[pyfunction]
fn zero_crossing_rate(values: Vec<f64>) -> PyResult<f64> {
    features::zero_crossing_rate(&values).map_err(value_err)
}

#[pyfunction]
fn bootstrap_sample(n: usize, seed: u64) -> Vec<usize> {
    forest::bootstrap_sample(n, seed)
}

/// `counts[predicted][actual]` for string labels.
#[pyfunction]
fn confusion_matrix(truth: Vec<String>, preds: Vec<String>, classes: Vec<String>) -> PyResult<Vec<Vec<u64>>> {
    eval::confusion_matrix(&truth, &preds, &classes)
        .map(|cm| cm.counts)
        .map_err(value_err)
}

fn square(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
    ConfusionMatrix {
        classes: (0..counts.len()).map(|i| i.to_string()).collect(),
        counts,
    }
}

#[pyfunction]
fn accuracy(counts: Vec<Vec<u64>>) -> PyResult<f64> {
    eval::accuracy(&square(counts)).map_err(value_err)
}

#[pyfunction]
fn kappa(counts: Vec<Vec<u64>>) -> PyResult<f64> {
    eval::kappa(&square(counts)).map_err(value_err)
}

/// Pooled two-sample t-test from summaries; returns `(t, df, p)`.
#[pyfunction]
fn students_t(g1: (f64, f64, usize), g2: (f64, f64, usize)) -> PyResult<(f64, usize, f64)> {
    let r = eval::students_t(
        GroupSummary::from_mean_sd(g1.0, g1.1, g1.2),
        GroupSummary::from_mean_sd(g2.0, g2.1, g2.2),
    )
    .map_err(value_err)?;
    Ok((r.t, r.df, r.p))
}

#[pyfunction]
fn t_p_value(t: f64, df: f64) -> f64 {
    eval::t_p_value(t, df)
}

/// Writes a synthetic cohort and returns the number of records.
#[pyfunction]
#[pyo3(signature = (out_dir, seed, counts = None, n_volunteers = None, n_runners = None))]
fn synth_cohort(
    py: Python<'_>,
    out_dir: PathBuf,
    seed: u64,
    counts: Option<[usize; 4]>,
    n_volunteers: Option<usize>,
    n_runners: Option<usize>,
) -> PyResult<usize> {
    let mut spec = CohortSpec::paper_shape();
    if let Some(c) = counts {
        spec.counts = c;
    }
    if let Some(v) = n_volunteers {
        spec.n_volunteers = v;
    }
    if let Some(r) = n_runners {
        spec.n_runners = r;
    }
    py.detach(|| {
        let recs = synth::generate_cohort(&spec, seed)?;
        synth::write_cohort(&out_dir, &recs)?;
        Ok(recs.len())
    })
    .map_err(|e: synth::SynthError| value_err(e))
}

/// Runs the command-line driver; `argv` excludes the program name.
#[pyfunction]
fn cli_main(py: Python<'_>, argv: Vec<String>) -> i32 {
    let args: Vec<String> = std::iter::once("runnerdna".to_string()).chain(argv).collect();
    py.detach(|| runnerdna::cli::cli_main(args))
}

#[pymodule]
fn runnerdna_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`; lets an embedding interpreter
/// build the module without importing the shared library.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyActivityRecord>()?;
    m.add_class::<PyForest>()?;
    m.add_function(wrap_pyfunction!(load_records, m)?)?;
    m.add_function(wrap_pyfunction!(parse_timestamp, m)?)?;
    m.add_function(wrap_pyfunction!(haversine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(haversine_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(fit_polynomial_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(approximate_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_nll, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_dna, m)?)?;
    m.add_function(wrap_pyfunction!(summary_features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(zero_crossing_rate, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_sample, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(students_t, m)?)?;
    m.add_function(wrap_pyfunction!(t_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(synth_cohort, m)?)?;
    m.add_function(wrap_pyfunction!(cli_main, m)?)?;
    Ok(())
}
