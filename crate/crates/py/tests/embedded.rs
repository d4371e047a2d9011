//! Drives the bindings from an embedded interpreter.

use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn run_python(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "runnerdna_py").unwrap();
        runnerdna_py::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("rd", &m).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed: {e}");
        }
    });
}

#[test]
fn statistics_functions() {
    run_python(
        r#"
t, df, p = rd.students_t((1.995, 0.515, 55), (2.132, 0.715, 45))
assert abs(t + 1.091) <= 0.05 and df == 98, (t, df)
assert rd.t_p_value(0.0, 10.0) == 1.0
assert rd.kappa([[5, 0], [0, 7]]) == 1.0
assert rd.accuracy([[3, 1], [1, 3]]) == 0.75
cm = rd.confusion_matrix(["a", "b", "b"], ["a", "a", "b"], ["a", "b"])
assert cm == [[1, 1], [0, 1]], cm
"#,
    );
}

#[test]
fn indicator_and_feature_functions() {
    run_python(
        r#"
import math
xs = [math.sin(0.4 * i) for i in range(80)]
assert rd.fit_polynomial_rmse([i ** 3 - 2 * i for i in range(30)], 3) < 1e-6
assert rd.approximate_entropy(xs, 2, 0.2) >= 0.0
assert abs(rd.gaussian_nll(xs) - rd.gaussian_nll([x + 7.0 for x in xs])) < 1e-9
f = rd.summary_features(list(range(1, 31)))
assert f["mean"] == 15.5 and f["min"] == 1 and f["max"] == 30
assert 0.0 <= rd.zero_crossing_rate(xs) <= 1.0
assert abs(rd.shannon_entropy([0.0, 1.0] * 10) - math.log(2)) < 1e-12
norm = rd.normalize_dna([[1, 2, 3, 4, 5], [3, 2, 1, 0, -1]])
assert norm[0][0] == 0.0 and norm[1][0] == 5.0 and norm[0][1] == 2.5
try:
    rd.fit_polynomial_rmse([1.0, 2.0], 1)
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#,
    );
}

#[test]
fn forest_round_trip() {
    run_python(
        r#"
rows = [[float(i % 2) + 0.01 * i, float(i % 5)] for i in range(60)]
labels = ["odd" if i % 2 else "even" for i in range(60)]
f = rd.Forest.train(rows, labels, n_trees=20, seed=4, feature_keys=["parity", "mod5"])
assert f.classes == ["even", "odd"] and f.n_trees == 20
assert f.oob_error(rows, labels) <= 0.05
label, fractions = f.predict([1.0, 3.0])
assert label == "odd" and abs(sum(fractions) - 1.0) < 1e-12
g = rd.Forest.from_json(f.to_json())
assert g.predict_many(rows) == f.predict_many(rows)
imp = f.importance(rows, labels, permutations=2, seed=1)
assert max(imp, key=imp.get) == "parity", imp
"#,
    );
}

#[test]
fn records_from_a_synthetic_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap().replace('\\', "/");
    run_python(&format!(
        r#"
n = rd.synth_cohort("{path}", 9, counts=[2, 2, 2, 4], n_volunteers=4, n_runners=2)
assert n == 10
recs = rd.load_records("{path}")
assert len(recs) == 10
r = recs[-1]
assert r.label == "running" and r.volunteer_id in ("v01", "v02")
assert len(r.values("acc_y")) == len(r.timestamps("acc_y")) >= 60
raw = rd.ActivityRecord.read("{path}", "rec0001")
assert raw.align("first").record_id == "rec0001"
assert len(raw.gps()) > 0
assert r.kinematics()["gps_mean_velocity"] > 2.0
try:
    r.values("acc_w")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
try:
    rd.load_records("{path}/missing")
    raise AssertionError("expected an error")
except (IOError, ValueError):
    pass
"#
    ));
}
