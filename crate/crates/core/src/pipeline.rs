//! End-to-end orchestration shared by the CLI and the bindings: load a
//! record directory, compute features/indicators/kinematics, build model
//! datasets, train and evaluate, and read/write the CSV tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dna::{self, DnaBounds, DnaError, DnaParams, Indicator, RawDna};
use crate::eval::{self, ConfusionMatrix, EvalError, GroupSummary, TTestResult};
use crate::features::{self, FeatureError, FeatureVector};
use crate::forest::{self, Dataset, Forest, ForestError, ForestParams};
use crate::gps::{self, GpsError, KinematicFeatures};
use crate::ingest::{self, Activity, ActivityRecord, AlignPolicy, IngestError, Sex};
use crate::rng;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{record}: {source}")]
    Record {
        record: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dna(#[from] DnaError),
    #[error(transparent)]
    Gps(#[from] GpsError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn in_record<T, E: Into<PipelineError>>(id: &str, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| PipelineError::Record {
        record: id.to_string(),
        source: Box::new(e.into()),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Five normalized indicators.
    #[default]
    #[serde(rename = "dna")]
    Dna,
    /// Indicators plus five GPS aggregates.
    #[serde(rename = "dna+gps")]
    DnaGps,
    /// The 540 per-axis statistics.
    #[serde(rename = "raw540")]
    Raw540,
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dna" => Ok(FeatureSet::Dna),
            "dna+gps" => Ok(FeatureSet::DnaGps),
            "raw540" => Ok(FeatureSet::Raw540),
            _ => Err(format!("unknown feature set `{s}` (dna | dna+gps | raw540)")),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Dna => "dna",
            FeatureSet::DnaGps => "dna+gps",
            FeatureSet::Raw540 => "raw540",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Four activity classes over all records.
    #[default]
    Activity,
    /// Volunteer id over running records only.
    Identity,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "activity" => Ok(ModelKind::Activity),
            "identity" => Ok(ModelKind::Identity),
            _ => Err(format!("unknown model `{s}` (activity | identity)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Activity => "activity",
            ModelKind::Identity => "identity",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    /// OOB on the training part plus a stratified held-out part.
    Holdout { test_fraction: f64 },
    /// Train on everything; the confusion matrix comes from OOB votes.
    OobOnly,
    /// Stratified k-fold; the confusion matrix pools every fold's predictions.
    KFold { k: usize },
}

impl Default for EvalSplit {
    fn default() -> Self {
        EvalSplit::Holdout { test_fraction: 0.2 }
    }
}

impl FromStr for EvalSplit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "holdout" => Ok(EvalSplit::default()),
            "oob" => Ok(EvalSplit::OobOnly),
            _ => {
                if let Some(k) = s.strip_prefix("kfold:") {
                    let k: usize = k.parse().map_err(|_| format!("bad fold count `{k}`"))?;
                    if k < 2 {
                        return Err("k-fold needs k >= 2".into());
                    }
                    return Ok(EvalSplit::KFold { k });
                }
                if let Some(f) = s.strip_prefix("holdout:") {
                    let f: f64 = f.parse().map_err(|_| format!("bad test fraction `{f}`"))?;
                    if !(f > 0.0 && f < 1.0) {
                        return Err("test fraction must be in (0, 1)".into());
                    }
                    return Ok(EvalSplit::Holdout { test_fraction: f });
                }
                Err(format!("unknown split `{s}` (holdout[:f] | oob | kfold:K)"))
            }
        }
    }
}

/// Everything computed per record.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordAnalysis {
    pub record_id: String,
    pub label: Activity,
    pub volunteer_id: String,
    pub sex: Sex,
    pub features: FeatureVector,
    pub raw_dna: RawDna,
    pub kinematics: Option<KinematicFeatures>,
}

/// Per-record analyses plus the cohort normalization of the indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortAnalysis {
    pub records: Vec<RecordAnalysis>,
    pub dna_bounds: DnaBounds,
}

impl CohortAnalysis {
    pub fn normalized_dna(&self, i: usize) -> [f64; 5] {
        self.dna_bounds.apply(&self.records[i].raw_dna)
    }
}

/// Loads and aligns every record in `dir`, in record-id order.
pub fn load_records(dir: &Path, policy: AlignPolicy) -> Result<Vec<ActivityRecord>> {
    let ids = ingest::list_records(dir)?;
    if ids.is_empty() {
        return Err(PipelineError::Invalid(format!(
            "no records (*.meta.json) in {}",
            dir.display()
        )));
    }
    ids.par_iter()
        .map(|id| {
            let raw = in_record(id, ingest::read_record(dir, id))?;
            in_record(id, ingest::align_series(&raw, policy))
        })
        .collect()
}

pub fn record_kinematics(record: &ActivityRecord) -> Result<Option<KinematicFeatures>> {
    let Some(track) = &record.gps else {
        return Ok(None);
    };
    let track = gps::drop_jitter(track);
    if track.len() < 3 {
        return Ok(None);
    }
    Ok(Some(gps::track_kinematics(&track)?.1))
}

pub fn analyze_record(record: &ActivityRecord, params: &DnaParams) -> Result<RecordAnalysis> {
    let id = &record.record_id;
    Ok(RecordAnalysis {
        record_id: id.clone(),
        label: record.label,
        volunteer_id: record.volunteer.volunteer_id.clone(),
        sex: record.volunteer.sex,
        features: in_record(id, features::extract_feature_vector(record))?,
        raw_dna: in_record(id, dna::compute_dna_raw(record, params))?,
        kinematics: in_record(id, record_kinematics(record))?,
    })
}

pub fn analyze_cohort(records: &[ActivityRecord], params: &DnaParams) -> Result<CohortAnalysis> {
    let records = records
        .par_iter()
        .map(|r| analyze_record(r, params))
        .collect::<Result<Vec<_>>>()?;
    let dna_bounds = DnaBounds::fit(records.iter().map(|r| &r.raw_dna))?;
    Ok(CohortAnalysis {
        records,
        dna_bounds,
    })
}

pub fn feature_keys(set: FeatureSet) -> Vec<String> {
    let dna = Indicator::ALL.iter().map(|i| i.as_str().to_string());
    match set {
        FeatureSet::Dna => dna.collect(),
        FeatureSet::DnaGps => dna
            .chain(KinematicFeatures::NAMES.iter().map(|s| s.to_string()))
            .collect(),
        FeatureSet::Raw540 => features::feature_names(),
    }
}

fn feature_row(a: &RecordAnalysis, bounds: &DnaBounds, set: FeatureSet) -> Result<Vec<f64>> {
    let dna = bounds.apply(&a.raw_dna);
    Ok(match set {
        FeatureSet::Dna => dna.to_vec(),
        FeatureSet::DnaGps => {
            let k = a.kinematics.ok_or_else(|| {
                PipelineError::Invalid(format!("{}: no usable GPS track", a.record_id))
            })?;
            dna.into_iter().chain(k.to_array()).collect()
        }
        FeatureSet::Raw540 => a.features.values.clone(),
    })
}

/// Row indices of `cohort` that belong to the given model.
pub fn model_rows(cohort: &CohortAnalysis, kind: ModelKind) -> Vec<usize> {
    (0..cohort.records.len())
        .filter(|&i| kind == ModelKind::Activity || cohort.records[i].label == Activity::Running)
        .collect()
}

pub fn build_dataset(
    cohort: &CohortAnalysis,
    kind: ModelKind,
    set: FeatureSet,
) -> Result<(Dataset, Vec<String>)> {
    let idx = model_rows(cohort, kind);
    let rows = idx
        .iter()
        .map(|&i| feature_row(&cohort.records[i], &cohort.dna_bounds, set))
        .collect::<Result<Vec<_>>>()?;
    let (labels, classes): (Vec<String>, Option<Vec<String>>) = match kind {
        ModelKind::Activity => (
            idx.iter()
                .map(|&i| cohort.records[i].label.to_string())
                .collect(),
            Some(Activity::ALL.iter().map(|a| a.to_string()).collect()),
        ),
        ModelKind::Identity => (
            idx.iter()
                .map(|&i| cohort.records[i].volunteer_id.clone())
                .collect(),
            None,
        ),
    };
    let ids = idx
        .iter()
        .map(|&i| cohort.records[i].record_id.clone())
        .collect();
    Ok((Dataset::new(feature_keys(set), rows, &labels, classes)?, ids))
}

/// Per-class shuffled split; each class with ≥ 2 rows contributes at least
/// one test row and keeps at least one training row.
pub fn stratified_split(targets: &[usize], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        by_class.entry(t).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut rows) in by_class {
        rows.shuffle(&mut rng::seeded(rng::mix(seed, class as u64)));
        let n = rows.len();
        let mut n_test = (test_fraction * n as f64).round() as usize;
        if n >= 2 {
            n_test = n_test.clamp(1, n - 1);
        } else {
            n_test = 0;
        }
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Per-class round-robin assignment of shuffled rows into `k` folds.
pub fn stratified_folds(targets: &[usize], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        by_class.entry(t).or_default().push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for (class, mut rows) in by_class {
        rows.shuffle(&mut rng::seeded(rng::mix(seed, class as u64)));
        for r in rows {
            folds[slot % k].push(r);
            slot += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub forest: Forest,
    pub train_accuracy: f64,
    pub oob_error: f64,
    /// Held-out (holdout), OOB (oob) or pooled out-of-fold (k-fold) accuracy.
    pub test_accuracy: f64,
    pub kappa: f64,
    pub confusion: ConfusionMatrix,
    pub n_train: usize,
    pub n_test: usize,
}

fn accuracy_on(forest: &Forest, data: &Dataset) -> Result<(f64, Vec<usize>)> {
    let preds = forest.predict_dataset(data)?;
    let correct = preds.iter().zip(&data.targets).filter(|(p, t)| p == t).count();
    Ok((correct as f64 / data.len() as f64, preds))
}

pub fn evaluate(data: &Dataset, params: &ForestParams, split: EvalSplit) -> Result<EvalOutcome> {
    match split {
        EvalSplit::Holdout { test_fraction } => {
            let (train_idx, test_idx) = stratified_split(&data.targets, test_fraction, params.seed);
            let train = data.subset(&train_idx);
            let test = data.subset(&test_idx);
            let forest = forest::train_forest(&train, params)?;
            let (train_accuracy, _) = accuracy_on(&forest, &train)?;
            let oob_error = forest::oob_error(&forest, &train)?;
            let (test_accuracy, preds) = accuracy_on(&forest, &test)?;
            let confusion = ConfusionMatrix::from_indices(data.classes.clone(), &test.targets, &preds)?;
            Ok(EvalOutcome {
                kappa: eval::kappa(&confusion)?,
                forest,
                train_accuracy,
                oob_error,
                test_accuracy,
                confusion,
                n_train: train.len(),
                n_test: test.len(),
            })
        }
        EvalSplit::OobOnly => {
            let forest = forest::train_forest(data, params)?;
            let (train_accuracy, _) = accuracy_on(&forest, data)?;
            let votes = forest.oob_votes(data)?;
            let (mut truth, mut preds) = (Vec::new(), Vec::new());
            for (v, &t) in votes.iter().zip(&data.targets) {
                if v.iter().any(|&c| c > 0) {
                    truth.push(t);
                    let mut best = 0;
                    for (c, &n) in v.iter().enumerate() {
                        if n > v[best] {
                            best = c;
                        }
                    }
                    preds.push(best);
                }
            }
            let confusion = ConfusionMatrix::from_indices(data.classes.clone(), &truth, &preds)?;
            let oob_error = forest::oob_error(&forest, data)?;
            Ok(EvalOutcome {
                kappa: eval::kappa(&confusion)?,
                forest,
                train_accuracy,
                oob_error,
                test_accuracy: 1.0 - oob_error,
                n_train: data.len(),
                n_test: truth.len(),
                confusion,
            })
        }
        EvalSplit::KFold { k } => {
            let folds = stratified_folds(&data.targets, k, params.seed);
            let mut preds = vec![0usize; data.len()];
            for fold in &folds {
                let train_idx: Vec<usize> =
                    (0..data.len()).filter(|i| fold.binary_search(i).is_err()).collect();
                let f = forest::train_forest(&data.subset(&train_idx), params)?;
                let (_, p) = accuracy_on(&f, &data.subset(fold))?;
                for (&i, p) in fold.iter().zip(p) {
                    preds[i] = p;
                }
            }
            let confusion = ConfusionMatrix::from_indices(data.classes.clone(), &data.targets, &preds)?;
            let forest = forest::train_forest(data, params)?;
            let (train_accuracy, _) = accuracy_on(&forest, data)?;
            Ok(EvalOutcome {
                test_accuracy: eval::accuracy(&confusion)?,
                kappa: eval::kappa(&confusion)?,
                oob_error: forest::oob_error(&forest, data)?,
                forest,
                train_accuracy,
                confusion,
                n_train: data.len(),
                n_test: data.len(),
            })
        }
    }
}

/// A trained forest plus what is needed to rebuild its input rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub feature_set: FeatureSet,
    pub dna_params: DnaParams,
    pub dna_bounds: DnaBounds,
    pub forest: Forest,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &(serde_json::to_string(self)? + "\n"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_text(path)?)?)
    }

    /// Predicts every record of the analysis that fits this model's kind.
    /// Forests trained on a selected subset of the set's keys are fed the
    /// matching columns.
    pub fn predict(&self, analyses: &[RecordAnalysis]) -> Result<Vec<(String, String, forest::Prediction)>> {
        let keys = feature_keys(self.feature_set);
        analyses
            .iter()
            .filter(|a| self.kind == ModelKind::Activity || a.label == Activity::Running)
            .map(|a| {
                let row = feature_row(a, &self.dna_bounds, self.feature_set)?;
                let truth = match self.kind {
                    ModelKind::Activity => a.label.to_string(),
                    ModelKind::Identity => a.volunteer_id.clone(),
                };
                Ok((a.record_id.clone(), truth, self.forest.predict_named(&keys, &row)?))
            })
            .collect()
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn strings<'a>(items: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    items.into_iter().map(str::to_string).collect()
}

/// `record_id,label,<540 statistics>,<5 gps aggregates>`; GPS cells are empty
/// for records without a usable track.
pub fn features_csv(cohort: &CohortAnalysis) -> Result<String> {
    let mut header = strings(["record_id", "label"]);
    header.extend(features::feature_names());
    header.extend(strings(KinematicFeatures::NAMES));
    csv_text(
        &header,
        cohort.records.iter().map(|a| {
            let mut row = vec![a.record_id.clone(), a.label.to_string()];
            row.extend(a.features.values.iter().map(f64::to_string));
            match a.kinematics {
                Some(k) => row.extend(k.to_array().iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            row
        }),
    )
}

pub fn kinematics_csv(cohort: &CohortAnalysis) -> Result<String> {
    let mut header = strings(["record_id", "label"]);
    header.extend(strings(KinematicFeatures::NAMES));
    csv_text(
        &header,
        cohort
            .records
            .iter()
            .filter_map(|a| a.kinematics.map(|k| (a, k)))
            .map(|(a, k)| {
                let mut row = vec![a.record_id.clone(), a.label.to_string()];
                row.extend(k.to_array().iter().map(f64::to_string));
                row
            }),
    )
}

const RAW_DNA_COLUMNS: [&str; 5] = [
    "balance_rmse",
    "stride_apen",
    "steer_rmse",
    "stability_nll",
    "amplitude_nll",
];

/// One row of `dna.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct DnaRow {
    pub record_id: String,
    pub label: Activity,
    pub sex: Sex,
    pub raw: RawDna,
    pub normalized: [f64; 5],
}

pub fn dna_rows(cohort: &CohortAnalysis) -> Vec<DnaRow> {
    cohort
        .records
        .iter()
        .enumerate()
        .map(|(i, a)| DnaRow {
            record_id: a.record_id.clone(),
            label: a.label,
            sex: a.sex,
            raw: a.raw_dna,
            normalized: cohort.normalized_dna(i),
        })
        .collect()
}

/// `record_id,label,sex,<5 raw>,<5 normalized>`.
pub fn dna_csv(rows: &[DnaRow]) -> Result<String> {
    let mut header = strings(["record_id", "label", "sex"]);
    header.extend(strings(RAW_DNA_COLUMNS));
    header.extend(Indicator::ALL.iter().map(|i| i.as_str().to_string()));
    csv_text(
        &header,
        rows.iter().map(|r| {
            let mut row = vec![r.record_id.clone(), r.label.to_string(), r.sex.to_string()];
            row.extend(r.raw.to_array().iter().map(f64::to_string));
            row.extend(r.normalized.iter().map(f64::to_string));
            row
        }),
    )
}

fn parse_cell<T: FromStr>(rec: &csv::StringRecord, idx: usize, what: &str) -> Result<T> {
    let cell = rec.get(idx).unwrap_or("");
    cell.parse()
        .map_err(|_| PipelineError::Invalid(format!("bad {what} value `{cell}`")))
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PipelineError::Invalid(format!("missing column `{name}`")))
}

pub fn parse_dna_csv(text: &str) -> Result<Vec<DnaRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let id = header_index(&headers, "record_id")?;
    let label = header_index(&headers, "label")?;
    let sex = header_index(&headers, "sex")?;
    let raw = RAW_DNA_COLUMNS
        .iter()
        .map(|c| header_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let norm = Indicator::ALL
        .iter()
        .map(|i| header_index(&headers, i.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let mut r = [0.0; 5];
        let mut n = [0.0; 5];
        for k in 0..5 {
            r[k] = parse_cell(&rec, raw[k], RAW_DNA_COLUMNS[k])?;
            n[k] = parse_cell(&rec, norm[k], Indicator::ALL[k].as_str())?;
        }
        rows.push(DnaRow {
            record_id: rec.get(id).unwrap_or("").to_string(),
            label: parse_cell(&rec, label, "label")?,
            sex: parse_cell(&rec, sex, "sex")?,
            raw: RawDna::from_array(r),
            normalized: n,
        });
    }
    Ok(rows)
}

/// `kind,predicted,<classes>`: one `count` block and one `normalized` block,
/// columns are actual labels.
pub fn confusion_csv(cm: &ConfusionMatrix) -> Result<String> {
    let mut header = strings(["kind", "predicted"]);
    header.extend(cm.classes.iter().cloned());
    let counts = cm.counts.iter().zip(&cm.classes).map(|(row, c)| {
        let mut r = vec!["count".to_string(), c.clone()];
        r.extend(row.iter().map(u64::to_string));
        r
    });
    let normalized = cm.column_normalized();
    let norm = normalized.iter().zip(&cm.classes).map(|(row, c)| {
        let mut r = vec!["normalized".to_string(), c.clone()];
        r.extend(row.iter().map(f64::to_string));
        r
    });
    csv_text(&header, counts.chain(norm).collect::<Vec<_>>())
}

pub fn parse_confusion_csv(text: &str) -> Result<ConfusionMatrix> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let classes: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut counts = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.get(0) == Some("count") {
            counts.push(
                (0..classes.len())
                    .map(|j| parse_cell(&rec, j + 2, "count"))
                    .collect::<Result<Vec<u64>>>()?,
            );
        }
    }
    if counts.len() != classes.len() {
        return Err(PipelineError::Invalid("confusion matrix is not square".into()));
    }
    Ok(ConfusionMatrix { classes, counts })
}

pub fn metrics_csv(outcome: &EvalOutcome, kind: ModelKind, set: FeatureSet) -> Result<String> {
    let rows = [
        ("model", kind.to_string()),
        ("features", set.to_string()),
        ("n_train", outcome.n_train.to_string()),
        ("n_test", outcome.n_test.to_string()),
        ("train_accuracy", outcome.train_accuracy.to_string()),
        ("oob_error", outcome.oob_error.to_string()),
        ("oob_accuracy", (1.0 - outcome.oob_error).to_string()),
        ("test_accuracy", outcome.test_accuracy.to_string()),
        ("kappa", outcome.kappa.to_string()),
    ];
    csv_text(
        &strings(["metric", "value"]),
        rows.into_iter().map(|(k, v)| vec![k.to_string(), v]),
    )
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<(String, String)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r?;
            Ok((
                r.get(0).unwrap_or("").to_string(),
                r.get(1).unwrap_or("").to_string(),
            ))
        })
        .collect()
}

/// Indicator values (normalized) of one group.
fn group_values(rows: &[DnaRow], indicator: Indicator, keep: impl Fn(&DnaRow) -> bool) -> Vec<f64> {
    rows.iter()
        .filter(|r| keep(r))
        .map(|r| r.normalized[indicator.index()])
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TTestRow {
    pub indicator: Indicator,
    pub group1: String,
    pub group2: String,
    pub result: TTestResult,
}

/// Pairwise activity comparisons for one indicator, in
/// biking/e-bike/walking/running pair order. Pairs with fewer than two
/// records on a side, or no spread, are skipped.
pub fn activity_ttests(rows: &[DnaRow], indicator: Indicator) -> Vec<TTestRow> {
    let mut out = Vec::new();
    for (i, &a) in Activity::ALL.iter().enumerate() {
        for &b in &Activity::ALL[i + 1..] {
            let g1 = GroupSummary::from_samples(&group_values(rows, indicator, |r| r.label == a));
            let g2 = GroupSummary::from_samples(&group_values(rows, indicator, |r| r.label == b));
            if let Ok(result) = eval::students_t(g1, g2) {
                out.push(TTestRow {
                    indicator,
                    group1: a.title().to_string(),
                    group2: b.title().to_string(),
                    result,
                });
            }
        }
    }
    out
}

/// Men versus women within one activity (`t` is men minus women).
pub fn sex_ttest(rows: &[DnaRow], indicator: Indicator, activity: Activity) -> Result<TTestRow> {
    let men = group_values(rows, indicator, |r| r.label == activity && r.sex == Sex::Male);
    let women = group_values(rows, indicator, |r| r.label == activity && r.sex == Sex::Female);
    let result = eval::students_t(
        GroupSummary::from_samples(&men),
        GroupSummary::from_samples(&women),
    )?;
    Ok(TTestRow {
        indicator,
        group1: "Men".into(),
        group2: "Women".into(),
        result,
    })
}

pub fn ttest_csv(rows: &[TTestRow]) -> Result<String> {
    let header = strings([
        "indicator", "group1", "group2", "mean1", "sd1", "n1", "mean2", "sd2", "n2", "t", "df", "p",
    ]);
    csv_text(
        &header,
        rows.iter().map(|r| {
            let (g1, g2) = (r.result.group1, r.result.group2);
            vec![
                r.indicator.to_string(),
                r.group1.clone(),
                r.group2.clone(),
                g1.mean.to_string(),
                g1.sd().to_string(),
                g1.n.to_string(),
                g2.mean.to_string(),
                g2.sd().to_string(),
                g2.n.to_string(),
                r.result.t.to_string(),
                r.result.df.to_string(),
                r.result.p.to_string(),
            ]
        }),
    )
}

fn tier(p: f64) -> &'static str {
    if p < 0.01 {
        "p<0.01"
    } else if p < 0.05 {
        "p<0.05"
    } else if p < 0.10 {
        "p<0.10"
    } else {
        ""
    }
}

/// Plain-text tables shaped like the activity confusion matrix, the pairwise
/// activity t-tests and the running sex comparison.
pub fn render_report(
    confusion: Option<&ConfusionMatrix>,
    metrics: &[(String, String)],
    dna: &[DnaRow],
    sex_activity: Activity,
) -> Result<String> {
    use std::fmt::Write;
    let mut s = String::new();
    let w = &mut s;

    if let Some(cm) = confusion {
        writeln!(w, "Confusion matrix (columns = actual, rows = predicted; column-normalized)").ok();
        write!(w, "{:<16}", "").ok();
        for c in &cm.classes {
            write!(w, "{c:>10}").ok();
        }
        writeln!(w).ok();
        for (row, c) in cm.column_normalized().iter().zip(&cm.classes) {
            write!(w, "{c:<16}").ok();
            for v in row {
                write!(w, "{v:>10.3}").ok();
            }
            writeln!(w).ok();
        }
        writeln!(w, "accuracy {:.3}  kappa {:.3}  (n = {})", eval::accuracy(cm)?, eval::kappa(cm)?, cm.total()).ok();
        writeln!(w).ok();
    }
    if !metrics.is_empty() {
        writeln!(w, "Metrics").ok();
        for (k, v) in metrics {
            writeln!(w, "  {k:<16} {v}").ok();
        }
        writeln!(w).ok();
    }

    writeln!(w, "Indicator t-tests between activities (pooled variance, two-sided)").ok();
    writeln!(
        w,
        "{:<10} {:<14} {:<14} {:>16} {:>16} {:>8} {:>10}  sig",
        "indicator", "activity I", "activity II", "mean, sd I", "mean, sd II", "t", "p"
    )
    .ok();
    for ind in Indicator::ALL {
        for r in activity_ttests(dna, ind) {
            let (g1, g2) = (r.result.group1, r.result.group2);
            writeln!(
                w,
                "{:<10} {:<14} {:<14} {:>16} {:>16} {:>8.3} {:>10.4}  {}",
                ind.as_str(),
                r.group1,
                r.group2,
                format!("{:.3}, {:.3}", g1.mean, g1.sd()),
                format!("{:.3}, {:.3}", g2.mean, g2.sd()),
                r.result.t,
                r.result.p,
                tier(r.result.p)
            )
            .ok();
        }
    }
    writeln!(w).ok();

    writeln!(w, "Indicator t-tests by sex, {} records (t = men - women)", sex_activity).ok();
    writeln!(w, "{:<10} {:<6} {:>8} {:>8} {:>5} {:>8} {:>10}  sig", "indicator", "sex", "mean", "sd", "n", "t", "p").ok();
    for ind in Indicator::ALL {
        match sex_ttest(dna, ind, sex_activity) {
            Ok(r) => {
                let (men, women) = (r.result.group1, r.result.group2);
                writeln!(
                    w,
                    "{:<10} {:<6} {:>8.3} {:>8.3} {:>5} {:>8.3} {:>10.4}  {}",
                    ind.as_str(), "Women", women.mean, women.sd(), women.n, r.result.t, r.result.p, tier(r.result.p)
                )
                .ok();
                writeln!(w, "{:<10} {:<6} {:>8.3} {:>8.3} {:>5}", "", "Men", men.mean, men.sd(), men.n).ok();
            }
            Err(e) => {
                writeln!(w, "{:<10} not testable: {e}", ind.as_str()).ok();
            }
        }
    }
    writeln!(w).ok();
    writeln!(w, "significance tiers: p<0.10, p<0.05, p<0.01").ok();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_disjoint() {
        let targets: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let (train, test) = stratified_split(&targets, 0.2, 4);
        assert_eq!(train.len() + test.len(), 50);
        assert!(test.iter().all(|i| train.binary_search(i).is_err()));
        for c in 0..3 {
            assert!(test.iter().any(|&i| targets[i] == c));
        }
        assert_eq!(stratified_split(&targets, 0.2, 4), (train, test));
    }

    #[test]
    fn folds_partition_rows() {
        let targets: Vec<usize> = (0..23).map(|i| i % 4).collect();
        let folds = stratified_folds(&targets, 5, 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn split_names_parse() {
        assert_eq!("oob".parse::<EvalSplit>().unwrap(), EvalSplit::OobOnly);
        assert_eq!("kfold:5".parse::<EvalSplit>().unwrap(), EvalSplit::KFold { k: 5 });
        assert_eq!(
            "holdout:0.3".parse::<EvalSplit>().unwrap(),
            EvalSplit::Holdout { test_fraction: 0.3 }
        );
        assert!("kfold:1".parse::<EvalSplit>().is_err());
        assert_eq!("dna+gps".parse::<FeatureSet>().unwrap(), FeatureSet::DnaGps);
        assert!("all".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn confusion_csv_round_trip() {
        let cm = ConfusionMatrix {
            classes: vec!["a".into(), "b".into()],
            counts: vec![vec![3, 1], vec![0, 5]],
        };
        let text = confusion_csv(&cm).unwrap();
        assert!(text.starts_with("kind,predicted,a,b\ncount,a,3,1\n"));
        assert_eq!(parse_confusion_csv(&text).unwrap(), cm);
    }
}
