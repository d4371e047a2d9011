use std::collections::BTreeSet;
use std::path::Path;

use runnerdna::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use runnerdna::pipeline::{self, EvalSplit, FeatureSet, ModelFile, ModelKind};
use runnerdna::synth::{self, ActivityProfile, CohortSpec, StyleOffset};
use runnerdna::{Activity, ForestParams, RecordMeta, Sex, VolunteerProfile};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["runnerdna"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = cli(args);
    assert_eq!(code, EXIT_OK, "{args:?}\n{err}");
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_cohort(dir: &Path) {
    ok(&[
        "synth", "--out", s(dir), "--seed", "3", "--counts", "6,6,6,12", "--volunteers", "8", "--runners", "4",
        "--min-duration", "60", "--max-duration", "80",
    ]);
}

#[test]
fn walking_track_speed_matches_profile() {
    let meta = RecordMeta {
        record_id: "w".into(),
        label: Activity::Walking,
        volunteer: VolunteerProfile {
            volunteer_id: "v01".into(),
            sex: Sex::Female,
            height: 165.0,
            weight: 60.0,
        },
    };
    let profile = ActivityProfile::default_for(Activity::Walking);
    let rec = synth::generate_record(&meta, &profile, &StyleOffset::default(), 600, 17).unwrap();
    let k = pipeline::record_kinematics(&rec).unwrap().unwrap();
    assert!((k.mean_velocity - 1.4).abs() <= 0.14, "{}", k.mean_velocity);
}

#[test]
fn paper_shaped_cohort_layout_and_activity_oob() {
    let records = synth::generate_cohort(&CohortSpec::paper_shape(), 42).unwrap();
    assert_eq!(records.len(), 271);
    let count = |a| records.iter().filter(|r| r.label == a).count();
    assert_eq!(
        [count(Activity::Biking), count(Activity::EBikeRiding), count(Activity::Walking), count(Activity::Running)],
        [32, 55, 45, 139]
    );
    let runners: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.label == Activity::Running)
        .map(|r| r.volunteer.volunteer_id.as_str())
        .collect();
    assert_eq!(runners.len(), 20);
    let everyone: BTreeSet<&str> = records.iter().map(|r| r.volunteer.volunteer_id.as_str()).collect();
    assert_eq!(everyone.len(), 33);
    assert!(records.iter().all(|r| {
        let n = r.iter_series().next().unwrap().len();
        (120..=240).contains(&n)
    }));

    let cohort = pipeline::analyze_cohort(&records, &Default::default()).unwrap();
    let (data, _) = pipeline::build_dataset(&cohort, ModelKind::Activity, FeatureSet::Dna).unwrap();
    let out = pipeline::evaluate(&data, &ForestParams { n_trees: 100, seed: 1, ..Default::default() }, EvalSplit::OobOnly)
        .unwrap();
    assert!(out.oob_error <= 0.10, "{}", out.oob_error);
}

#[test]
fn synth_writes_record_triples_and_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    small_cohort(a.path());
    small_cohort(b.path());
    let names: Vec<String> = {
        let mut v: Vec<String> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    assert_eq!(names.len(), 90);
    assert!(names.contains(&"rec0001.sensors.csv".to_string()));
    assert!(names.contains(&"rec0030.gps.csv".to_string()));
    for n in &names {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn cli_pipeline_on_a_small_cohort() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_cohort(&data);
    let p = |n: &str| tmp.path().join(n);

    let summary = ok(&["ingest", "--in", s(&data)]);
    assert!(summary.contains("30 records aligned"));

    ok(&["features", "--in", s(&data), "--out", s(&p("features.csv")), "--kinematics", s(&p("kinematics.csv"))]);
    let features = std::fs::read_to_string(p("features.csv")).unwrap();
    let header: Vec<&str> = features.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 540 + 5);
    assert_eq!(features.lines().count(), 31);

    ok(&["dna", "--in", s(&data), "--out", s(&p("dna.csv"))]);
    let rows = pipeline::parse_dna_csv(&std::fs::read_to_string(p("dna.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 30);
    for k in 0..5 {
        let col: Vec<f64> = rows.iter().map(|r| r.normalized[k]).collect();
        assert!(col.iter().all(|v| (0.0..=5.0).contains(v)));
        assert!(col.contains(&0.0) && col.contains(&5.0));
    }

    let table = ok(&["ttest", "--group", "sex", "--indicator", "balance", "--activity", "running", "--in", s(&p("dna.csv"))]);
    let first = table.lines().next().unwrap();
    for col in ["mean", "sd", "t", "p"] {
        assert!(first.split_whitespace().any(|w| w == col), "{first}");
    }
    assert!(table.contains("Women") && table.contains("Men"));

    ok(&["ttest", "--group", "activity", "--in", s(&p("dna.csv")), "--out", s(&p("ttest.csv"))]);
    assert!(std::fs::read_to_string(p("ttest.csv")).unwrap().starts_with("indicator,group1,group2"));

    ok(&["train", "--in", s(&data), "--out", s(&p("model.json")), "--trees", "30", "--features", "dna+gps",
        "--importance", s(&p("importance.csv")), "--top", "4"]);
    let model = ModelFile::load(&p("model.json")).unwrap();
    assert_eq!(model.forest.feature_keys.len(), 4);
    assert_eq!(std::fs::read_to_string(p("importance.csv")).unwrap().lines().count(), 11);

    ok(&["predict", "--model-file", s(&p("model.json")), "--in", s(&data), "--out", s(&p("pred.csv"))]);
    assert_eq!(std::fs::read_to_string(p("pred.csv")).unwrap().lines().count(), 31);

    let eval_dir = p("eval");
    let line = ok(&["evaluate", "--in", s(&data), "--out", s(&eval_dir), "--trees", "30", "--split", "kfold:3"]);
    assert!(line.contains("held-out"));
    let cm = pipeline::parse_confusion_csv(&std::fs::read_to_string(eval_dir.join("confusion.csv")).unwrap()).unwrap();
    assert_eq!(cm.total(), 30);

    std::fs::copy(p("dna.csv"), eval_dir.join("dna.csv")).unwrap();
    let report = ok(&["report", "--in", s(&eval_dir)]);
    assert!(report.contains("Confusion matrix") && report.contains("t-tests by sex"));

    ok(&["evaluate", "--in", s(&data), "--model", "identity", "--trees", "30", "--split", "oob"]);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_cohort(&data);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, format!(r#"{{"input": "{}", "n_trees": 7, "split": "oob_only"}}"#, s(&data))).unwrap();
    let out = ok(&["--config", s(&cfg), "evaluate"]);
    assert!(out.contains("n_train 30"), "{out}");
    let model = tmp.path().join("m.json");
    ok(&["--config", s(&cfg), "train", "--out", s(&model), "--trees", "3"]);
    assert_eq!(ModelFile::load(&model).unwrap().forest.trees.len(), 3);

    std::fs::write(&cfg, r#"{"n_tree": 7}"#).unwrap();
    assert_eq!(cli(&["--config", s(&cfg), "evaluate"]).0, EXIT_USAGE);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(cli(&["evaluate", "--split", "kfold:1", "--in", "x"]).0, EXIT_USAGE);
    assert_eq!(cli(&["synth", "--help"]).0, EXIT_OK);

    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_cohort(&data);
    let sensors = data.join("rec0002.sensors.csv");
    let text = std::fs::read_to_string(&sensors).unwrap();
    std::fs::write(&sensors, text.replacen(",", ",oops", 30)).unwrap();
    let (code, _, err) = cli(&["dna", "--in", s(&data), "--out", s(&tmp.path().join("d.csv"))]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("rec0002"), "{err}");

    let (code, _, _) = cli(&["synth", "--out", s(&tmp.path().join("x")), "--counts", "0,1,1,1"]);
    assert_eq!(code, EXIT_DATA);
}
