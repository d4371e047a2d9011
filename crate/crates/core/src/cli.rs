//! The `runnerdna` command-line driver.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when the
//! data or the pipeline fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dna::{AmplitudeSource, DnaParams, Indicator};
use crate::features;
use crate::forest::{self, FeaturesPerSplit, ForestParams};
use crate::ingest::{self, Activity, AlignPolicy};
use crate::pipeline::{
    self, CohortAnalysis, EvalSplit, FeatureSet, ModelFile, ModelKind, PipelineError, TTestRow,
};
use crate::synth::{self, CohortSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Settings shared by every subcommand. Loaded from `--config FILE` (JSON,
/// every field optional) and then overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub align: AlignPolicy,
    pub dna: DnaParams,
    pub model: ModelKind,
    pub feature_set: FeatureSet,
    pub split: EvalSplit,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` is ⌈√d⌉.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let forest = ForestParams::default();
        PipelineConfig {
            input: None,
            output: None,
            align: AlignPolicy::default(),
            dna: DnaParams::default(),
            model: ModelKind::default(),
            feature_set: FeatureSet::default(),
            split: EvalSplit::default(),
            n_trees: forest.n_trees,
            max_depth: forest.max_depth,
            min_samples_leaf: forest.min_samples_leaf,
            mtry: None,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.mtry.map_or(FeaturesPerSplit::Sqrt, FeaturesPerSplit::Count),
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if let (Some(i), Some(o)) = (&self.input, &self.output) {
            if i == o {
                return Err(format!("input and output are the same path: {}", i.display()));
            }
        }
        Ok(())
    }

    fn input(&self) -> Result<&Path, String> {
        self.input.as_deref().ok_or_else(|| "missing --in".to_string())
    }

    fn output(&self) -> Result<&Path, String> {
        self.output.as_deref().ok_or_else(|| "missing --out".to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "runnerdna", version, about = "Motion-style indicators and activity/identity forests for smartphone sensor logs")]
struct Cli {
    /// JSON pipeline configuration; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cohort of record triples.
    Synth(SynthArgs),
    /// Parse and align a record directory and summarize it.
    Ingest(IngestArgs),
    /// Write the 540-column statistics table (plus GPS aggregates).
    Features(FeaturesArgs),
    /// Write raw and normalized indicators per record.
    Dna(DnaArgs),
    /// Train a forest and save it as a model file.
    Train(TrainArgs),
    /// Predict records with a saved model.
    Predict(PredictArgs),
    /// Train and evaluate; writes confusion.csv and metrics.csv.
    Evaluate(EvaluateArgs),
    /// Two-sample t-tests on a dna.csv table.
    Ttest(TtestArgs),
    /// Render text tables from persisted CSVs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InOut {
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DnaFlags {
    /// Approximate-entropy embedding dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Approximate-entropy threshold as a fraction of the series SD.
    #[arg(long)]
    r_factor: Option<f64>,
    /// accelerometer | linear_acceleration
    #[arg(long)]
    amplitude_source: Option<AmplitudeSource>,
    /// mean | first: how samples within one second are collapsed.
    #[arg(long, value_parser = parse_align)]
    align: Option<AlignPolicy>,
}

#[derive(Debug, Args)]
struct ForestFlags {
    /// activity | identity
    #[arg(long)]
    model: Option<ModelKind>,
    /// dna | dna+gps | raw540
    #[arg(long)]
    features: Option<FeatureSet>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// 32/55/45/139 records over 33 volunteers, 20 of whom run.
    #[arg(long, conflicts_with_all = ["counts", "volunteers", "runners"])]
    paper_shape: bool,
    /// Records per activity as biking,ebike,walking,running.
    #[arg(long, value_parser = parse_counts)]
    counts: Option<[usize; 4]>,
    #[arg(long)]
    volunteers: Option<usize>,
    #[arg(long)]
    runners: Option<usize>,
    #[arg(long)]
    min_duration: Option<usize>,
    #[arg(long)]
    max_duration: Option<usize>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    io: InOut,
    #[arg(long, value_parser = parse_align)]
    align: Option<AlignPolicy>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[command(flatten)]
    io: InOut,
    /// Also write per-record GPS aggregates.
    #[arg(long, value_name = "FILE")]
    kinematics: Option<PathBuf>,
    #[command(flatten)]
    dna: DnaFlags,
}

#[derive(Debug, Args)]
struct DnaArgs {
    #[command(flatten)]
    io: InOut,
    #[command(flatten)]
    dna: DnaFlags,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    io: InOut,
    #[command(flatten)]
    forest: ForestFlags,
    #[command(flatten)]
    dna: DnaFlags,
    /// Write permutation importance of every feature.
    #[arg(long, value_name = "FILE")]
    importance: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    permutations: usize,
    /// Retrain on the K most important features.
    #[arg(long, value_name = "K")]
    top: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model_file: PathBuf,
    #[command(flatten)]
    io: InOut,
    #[arg(long, value_parser = parse_align)]
    align: Option<AlignPolicy>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    io: InOut,
    #[command(flatten)]
    forest: ForestFlags,
    #[command(flatten)]
    dna: DnaFlags,
    /// holdout[:fraction] | oob | kfold:K
    #[arg(long)]
    split: Option<EvalSplit>,
}

#[derive(Debug, Args)]
struct TtestArgs {
    #[command(flatten)]
    io: InOut,
    /// sex | activity
    #[arg(long, default_value = "sex", value_parser = ["sex", "activity"])]
    group: String,
    /// An indicator name or `all`.
    #[arg(long, default_value = "all")]
    indicator: String,
    /// Activity compared by sex.
    #[arg(long, default_value = "running")]
    activity: Activity,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding confusion.csv, metrics.csv and dna.csv.
    #[command(flatten)]
    io: InOut,
    #[arg(long, value_name = "FILE")]
    confusion: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    metrics: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    dna: Option<PathBuf>,
    #[arg(long, default_value = "running")]
    activity: Activity,
}

fn parse_align(s: &str) -> Result<AlignPolicy, String> {
    match s {
        "mean" => Ok(AlignPolicy::MeanPerSecond),
        "first" => Ok(AlignPolicy::FirstPerSecond),
        _ => Err(format!("unknown alignment `{s}` (mean | first)")),
    }
}

fn parse_counts(s: &str) -> Result<[usize; 4], String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    v.try_into()
        .map_err(|_| "expected four comma-separated counts".to_string())
}

enum Failure {
    Usage(String),
    Data(PipelineError),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Data(e)
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<(), Failure>;

/// Runs the CLI with stdout and stderr.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = load_config(cli.config.as_deref()).and_then(|cfg| dispatch(cli.command, cfg, out));
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            EXIT_DATA
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(PipelineConfig::from_json(&text)?)
        }
    }
}

fn apply_io(cfg: &mut PipelineConfig, io: &InOut) {
    if let Some(i) = &io.input {
        cfg.input = Some(i.clone());
    }
    if let Some(o) = &io.out {
        cfg.output = Some(o.clone());
    }
}

fn apply_dna(cfg: &mut PipelineConfig, f: &DnaFlags) {
    if let Some(m) = f.m {
        cfg.dna.m = m;
    }
    if let Some(r) = f.r_factor {
        cfg.dna.r_factor = r;
    }
    if let Some(a) = f.amplitude_source {
        cfg.dna.amplitude_source = a;
    }
    if let Some(a) = f.align {
        cfg.align = a;
    }
}

fn apply_forest(cfg: &mut PipelineConfig, f: &ForestFlags) {
    if let Some(m) = f.model {
        cfg.model = m;
    }
    if let Some(s) = f.features {
        cfg.feature_set = s;
    }
    if let Some(n) = f.trees {
        cfg.n_trees = n;
    }
    if f.max_depth.is_some() {
        cfg.max_depth = f.max_depth;
    }
    if let Some(n) = f.min_samples_leaf {
        cfg.min_samples_leaf = n;
    }
    if f.mtry.is_some() {
        cfg.mtry = f.mtry;
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
}

fn dispatch(command: Command, mut cfg: PipelineConfig, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Synth(a) => {
            if let Some(o) = &a.out {
                cfg.output = Some(o.clone());
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            cmd_synth(&a, &cfg, out)
        }
        Command::Ingest(a) => {
            apply_io(&mut cfg, &a.io);
            if let Some(p) = a.align {
                cfg.align = p;
            }
            cfg.validate()?;
            cmd_ingest(&cfg, out)
        }
        Command::Features(a) => {
            apply_io(&mut cfg, &a.io);
            apply_dna(&mut cfg, &a.dna);
            cfg.validate()?;
            cmd_features(&cfg, a.kinematics.as_deref(), out)
        }
        Command::Dna(a) => {
            apply_io(&mut cfg, &a.io);
            apply_dna(&mut cfg, &a.dna);
            cfg.validate()?;
            cmd_dna(&cfg, out)
        }
        Command::Train(a) => {
            apply_io(&mut cfg, &a.io);
            apply_forest(&mut cfg, &a.forest);
            apply_dna(&mut cfg, &a.dna);
            cfg.validate()?;
            cmd_train(&a, &cfg, out)
        }
        Command::Predict(a) => {
            apply_io(&mut cfg, &a.io);
            if let Some(p) = a.align {
                cfg.align = p;
            }
            cfg.validate()?;
            cmd_predict(&a.model_file, &cfg, out)
        }
        Command::Evaluate(a) => {
            apply_io(&mut cfg, &a.io);
            apply_forest(&mut cfg, &a.forest);
            apply_dna(&mut cfg, &a.dna);
            if let Some(s) = a.split {
                cfg.split = s;
            }
            cfg.validate()?;
            cmd_evaluate(&cfg, out)
        }
        Command::Ttest(a) => {
            apply_io(&mut cfg, &a.io);
            cfg.validate()?;
            cmd_ttest(&a, &cfg, out)
        }
        Command::Report(a) => {
            apply_io(&mut cfg, &a.io);
            cfg.validate()?;
            cmd_report(&a, &cfg, out)
        }
    }
}

fn say(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes()).map_err(|e| {
        Failure::Data(PipelineError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
    })
}

fn cmd_synth(a: &SynthArgs, cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let dir = cfg.output()?;
    let mut spec = CohortSpec::paper_shape();
    if !a.paper_shape {
        if let Some(c) = a.counts {
            spec.counts = c;
        }
        if let Some(v) = a.volunteers {
            spec.n_volunteers = v;
        }
        if let Some(r) = a.runners {
            spec.n_runners = r;
        }
    }
    if let Some(lo) = a.min_duration {
        spec.duration_s.0 = lo;
    }
    if let Some(hi) = a.max_duration {
        spec.duration_s.1 = hi;
    }
    let records = synth::generate_cohort(&spec, cfg.seed).map_err(PipelineError::from)?;
    synth::write_cohort(dir, &records).map_err(PipelineError::from)?;
    say(
        out,
        &format!(
            "wrote {} records ({} biking, {} ebike, {} walking, {} running) for {} volunteers to {}\n",
            records.len(),
            spec.counts[0],
            spec.counts[1],
            spec.counts[2],
            spec.counts[3],
            spec.n_volunteers,
            dir.display()
        ),
    )
}

fn cmd_ingest(cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let records = pipeline::load_records(cfg.input()?, cfg.align)?;
    let mut s = format!(
        "{:<12} {:<8} {:<6} {:<6} {:>8} {:>6}\n",
        "record", "label", "person", "sex", "seconds", "gps"
    );
    for r in &records {
        let n = r.series(ingest::Channel::all().next().expect("18 channels")).len();
        let gps = r.gps.as_ref().map_or(0, Vec::len);
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:<6} {:<6} {:>8} {:>6}",
            r.record_id, r.label, r.volunteer.volunteer_id, r.volunteer.sex, n, gps
        );
    }
    let _ = writeln!(s, "{} records aligned", records.len());
    if let Some(dir) = &cfg.output {
        for r in &records {
            ingest::write_record(dir, r).map_err(PipelineError::from)?;
        }
        let _ = writeln!(s, "aligned records written to {}", dir.display());
    }
    say(out, &s)
}

fn load_cohort(cfg: &PipelineConfig) -> Result<CohortAnalysis, Failure> {
    let records = pipeline::load_records(cfg.input()?, cfg.align)?;
    Ok(pipeline::analyze_cohort(&records, &cfg.dna)?)
}

fn cmd_features(cfg: &PipelineConfig, kinematics: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let path = cfg.output()?.to_path_buf();
    let cohort = load_cohort(cfg)?;
    pipeline::write_text(&path, &pipeline::features_csv(&cohort)?)?;
    let mut s = format!(
        "{} records x {} statistics -> {}\n",
        cohort.records.len(),
        features::feature_names().len(),
        path.display()
    );
    if let Some(k) = kinematics {
        pipeline::write_text(k, &pipeline::kinematics_csv(&cohort)?)?;
        let _ = writeln!(s, "GPS aggregates -> {}", k.display());
    }
    say(out, &s)
}

fn cmd_dna(cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let path = cfg.output()?.to_path_buf();
    let cohort = load_cohort(cfg)?;
    let rows = pipeline::dna_rows(&cohort);
    pipeline::write_text(&path, &pipeline::dna_csv(&rows)?)?;
    let mut s = format!("{:<10} {:>12} {:>12}\n", "indicator", "raw min", "raw max");
    for ind in Indicator::ALL {
        let i = ind.index();
        let _ = writeln!(
            s,
            "{:<10} {:>12.5} {:>12.5}",
            ind.as_str(),
            cohort.dna_bounds.lo[i],
            cohort.dna_bounds.hi[i]
        );
    }
    let _ = writeln!(s, "{} records -> {}", rows.len(), path.display());
    say(out, &s)
}

fn importance_csv(keys: &[String], scores: &[f64]) -> String {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut s = String::from("rank,feature,importance\n");
    for (rank, i) in order.into_iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", rank + 1, keys[i], scores[i]);
    }
    s
}

fn cmd_train(a: &TrainArgs, cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let path = cfg.output()?.to_path_buf();
    let cohort = load_cohort(cfg)?;
    let params = cfg.forest_params();
    let (data, _) = pipeline::build_dataset(&cohort, cfg.model, cfg.feature_set)?;
    let mut model = forest::train_forest(&data, &params).map_err(PipelineError::from)?;
    let mut data = data;
    let mut s = String::new();
    if a.importance.is_some() || a.top.is_some() {
        let ranking = features::mean_decrease_accuracy(&model, &data, a.permutations, cfg.seed)
            .map_err(PipelineError::from)?;
        if let Some(p) = &a.importance {
            pipeline::write_text(p, &importance_csv(&ranking.keys, &ranking.scores))?;
            let _ = writeln!(s, "importance -> {}", p.display());
        }
        if let Some(k) = a.top {
            let keys = features::select_top_features(&ranking, k).map_err(PipelineError::from)?;
            data = data.select_features(&keys).map_err(PipelineError::from)?;
            model = forest::train_forest(&data, &params).map_err(PipelineError::from)?;
            let _ = writeln!(s, "retrained on top {k}: {}", keys.join(", "));
        }
    }
    let oob = forest::oob_error(&model, &data).map_err(PipelineError::from)?;
    let file = ModelFile {
        kind: cfg.model,
        feature_set: cfg.feature_set,
        dna_params: cfg.dna,
        dna_bounds: cohort.dna_bounds.clone(),
        forest: model,
    };
    file.save(&path)?;
    let _ = writeln!(
        s,
        "{} model on {} ({} rows, {} classes, {} trees): OOB error {:.4} -> {}",
        cfg.model,
        cfg.feature_set,
        data.len(),
        data.classes.len(),
        params.n_trees,
        oob,
        path.display()
    );
    say(out, &s)
}

fn cmd_predict(model_path: &Path, cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let model = ModelFile::load(model_path)?;
    let records = pipeline::load_records(cfg.input()?, cfg.align)?;
    let analyses = records
        .iter()
        .map(|r| pipeline::analyze_record(r, &model.dna_params))
        .collect::<pipeline::Result<Vec<_>>>()?;
    let preds = model.predict(&analyses)?;
    let mut csv = String::from("record_id,truth,predicted,vote_fraction\n");
    let mut correct = 0;
    for (id, truth, p) in &preds {
        if *truth == p.label {
            correct += 1;
        }
        let _ = writeln!(csv, "{id},{truth},{},{}", p.label, p.vote_fractions[p.class]);
    }
    let mut s = String::new();
    if let Some(o) = &cfg.output {
        pipeline::write_text(o, &csv)?;
        let _ = writeln!(s, "predictions -> {}", o.display());
    } else {
        s.push_str(&csv);
    }
    if !preds.is_empty() {
        let _ = writeln!(
            s,
            "{} predictions, {} match the recorded label ({:.4})",
            preds.len(),
            correct,
            correct as f64 / preds.len() as f64
        );
    }
    say(out, &s)
}

fn cmd_evaluate(cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let cohort = load_cohort(cfg)?;
    let (data, _) = pipeline::build_dataset(&cohort, cfg.model, cfg.feature_set)?;
    let outcome = pipeline::evaluate(&data, &cfg.forest_params(), cfg.split)?;
    let metrics = pipeline::metrics_csv(&outcome, cfg.model, cfg.feature_set)?;
    let mut s = String::new();
    if let Some(dir) = &cfg.output {
        pipeline::write_text(&dir.join("confusion.csv"), &pipeline::confusion_csv(&outcome.confusion)?)?;
        pipeline::write_text(&dir.join("metrics.csv"), &metrics)?;
        let _ = writeln!(s, "confusion.csv, metrics.csv -> {}", dir.display());
    }
    let _ = writeln!(
        s,
        "{} model, {} features: train {:.4}  OOB {:.4}  held-out {:.4}  kappa {:.4}  (n_train {}, n_test {})",
        cfg.model,
        cfg.feature_set,
        outcome.train_accuracy,
        1.0 - outcome.oob_error,
        outcome.test_accuracy,
        outcome.kappa,
        outcome.n_train,
        outcome.n_test
    );
    say(out, &s)
}

fn cmd_ttest(a: &TtestArgs, cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let rows = pipeline::parse_dna_csv(&pipeline::read_text(cfg.input()?)?)?;
    let indicators: Vec<Indicator> = if a.indicator == "all" {
        Indicator::ALL.to_vec()
    } else {
        vec![a.indicator.parse().map_err(|e: crate::dna::DnaError| e.to_string())?]
    };
    let mut results: Vec<TTestRow> = Vec::new();
    let mut s = String::new();
    if a.group == "sex" {
        let _ = writeln!(
            s,
            "{:<10} {:<6} {:>8} {:>8} {:>5} {:>8} {:>10}",
            "indicator", "sex", "mean", "sd", "n", "t", "p"
        );
        for ind in indicators {
            let r = pipeline::sex_ttest(&rows, ind, a.activity)?;
            let (men, women) = (r.result.group1, r.result.group2);
            let _ = writeln!(
                s,
                "{:<10} {:<6} {:>8.3} {:>8.3} {:>5} {:>8.3} {:>10.4}",
                ind.as_str(),
                "Women",
                women.mean,
                women.sd(),
                women.n,
                r.result.t,
                r.result.p
            );
            let _ = writeln!(s, "{:<10} {:<6} {:>8.3} {:>8.3} {:>5}", "", "Men", men.mean, men.sd(), men.n);
            results.push(r);
        }
    } else {
        let _ = writeln!(
            s,
            "{:<10} {:<14} {:<14} {:>16} {:>16} {:>8} {:>10}",
            "indicator", "activity I", "activity II", "mean, sd I", "mean, sd II", "t", "p"
        );
        for ind in indicators {
            for r in pipeline::activity_ttests(&rows, ind) {
                let (g1, g2) = (r.result.group1, r.result.group2);
                let _ = writeln!(
                    s,
                    "{:<10} {:<14} {:<14} {:>16} {:>16} {:>8.3} {:>10.4}",
                    ind.as_str(),
                    r.group1,
                    r.group2,
                    format!("{:.3}, {:.3}", g1.mean, g1.sd()),
                    format!("{:.3}, {:.3}", g2.mean, g2.sd()),
                    r.result.t,
                    r.result.p
                );
                results.push(r);
            }
        }
    }
    if let Some(o) = &cfg.output {
        pipeline::write_text(o, &pipeline::ttest_csv(&results)?)?;
        let _ = writeln!(s, "ttest -> {}", o.display());
    }
    say(out, &s)
}

/// An explicit path must exist; a default one inside the input directory is
/// skipped when absent.
fn optional_table(explicit: Option<&PathBuf>, dir: Option<&Path>, name: &str) -> Result<Option<String>, Failure> {
    match (explicit, dir) {
        (Some(p), _) => Ok(Some(pipeline::read_text(p)?)),
        (None, Some(d)) if d.join(name).is_file() => Ok(Some(pipeline::read_text(&d.join(name))?)),
        _ => Ok(None),
    }
}

fn cmd_report(a: &ReportArgs, cfg: &PipelineConfig, out: &mut dyn Write) -> Outcome {
    let dir = cfg.input.as_deref();
    let dna_text = optional_table(a.dna.as_ref(), dir, "dna.csv")?
        .ok_or_else(|| "no dna.csv: pass --dna FILE or --in DIR containing it".to_string())?;
    let dna = pipeline::parse_dna_csv(&dna_text)?;
    let confusion = optional_table(a.confusion.as_ref(), dir, "confusion.csv")?
        .map(|t| pipeline::parse_confusion_csv(&t))
        .transpose()?;
    let metrics = optional_table(a.metrics.as_ref(), dir, "metrics.csv")?
        .map(|t| pipeline::parse_metrics_csv(&t))
        .transpose()?
        .unwrap_or_default();
    let report = pipeline::render_report(confusion.as_ref(), &metrics, &dna, a.activity)?;
    match &cfg.output {
        Some(o) => {
            pipeline::write_text(o, &report)?;
            say(out, &format!("{report}report -> {}\n", o.display()))
        }
        None => say(out, &report),
    }
}
