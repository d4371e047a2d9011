"""Smoke test for the runnerdna_py extension.

Build first:

    cargo build -p runnerdna-py --features extension-module

then run `python3 python/smoke.py` from the repository root. The script copies
the built shared library into a temporary directory under the importable name.
"""

import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_extension(tmp):
    for profile in ("release", "debug"):
        for name in ("librunnerdna_py.so", "librunnerdna_py.dylib"):
            lib = os.path.join(ROOT, "target", profile, name)
            if os.path.exists(lib):
                shutil.copy(lib, os.path.join(tmp, "runnerdna_py.so"))
                sys.path.insert(0, tmp)
                import runnerdna_py

                return runnerdna_py
    sys.exit("build the extension first: cargo build -p runnerdna-py --features extension-module")


def main():
    with tempfile.TemporaryDirectory() as tmp:
        rd = import_extension(tmp)

        t, df, p = rd.students_t((2.013, 0.521, 32), (1.995, 0.515, 55))
        assert abs(t - 0.159) <= 0.02 and df == 85 and 0.8 < p < 0.9, (t, df, p)

        v = rd.haversine_velocity((0.0, 0.0, 0.0), (0.0, 1.0, 3600.0))
        assert abs(v - 30.888) <= 0.01, v

        assert rd.kappa([[40, 10], [10, 40]]) == 0.6
        assert rd.fit_polynomial_rmse([1.0 + 2.0 * i for i in range(20)], 1) < 1e-9
        assert rd.approximate_entropy([0.0] * 50, 2, 0.1) == 0.0
        assert len(rd.feature_names()) == 540
        assert rd.parse_timestamp("20191220 18:14:37") == 1576865677

        unique = len(set(rd.bootstrap_sample(10000, 1))) / 10000
        assert abs(unique - 0.632) < 0.02, unique

        data = os.path.join(tmp, "data")
        n = rd.synth_cohort(data, 5, counts=[4, 4, 4, 8], n_volunteers=6, n_runners=3)
        assert n == 20
        records = rd.load_records(data)
        assert [r.record_id for r in records][:2] == ["rec0001", "rec0002"]
        rec = records[0]
        assert len(rec.features()) == 540
        dna = rec.dna_raw()
        assert set(dna) == {"balance", "stride", "steer", "stability", "amplitude"}
        assert all(math.isfinite(x) for x in dna.values())
        assert rec.kinematics()["gps_mean_velocity"] > 0

        rows = [list(r.dna_raw().values()) for r in records]
        labels = [r.label for r in records]
        normalized = rd.normalize_dna(rows)
        assert all(0.0 <= x <= 5.0 for row in normalized for x in row)

        forest = rd.Forest.train(normalized, labels, n_trees=25, seed=1)
        back = rd.Forest.from_json(forest.to_json())
        for row in normalized:
            assert forest.predict(row) == back.predict(row)
        assert 0.0 <= forest.oob_error(normalized, labels) <= 1.0
        imp = forest.importance(normalized, labels, permutations=2, seed=3)
        assert len(imp) == 5

        out = os.path.join(tmp, "dna.csv")
        assert rd.cli_main(["dna", "--in", data, "--out", out]) == 0
        assert rd.cli_main(["bogus"]) == 1

    print("runnerdna_py smoke test passed")


if __name__ == "__main__":
    main()
