use proptest::prelude::*;

use runnerdna::dna::{approximate_entropy, fit_polynomial_rmse, gaussian_nll, normalize_dna};
use runnerdna::eval::{accuracy, kappa, students_t, t_p_value, ConfusionMatrix, GroupSummary};
use runnerdna::features::{shannon_entropy, summary_features, zero_crossing_rate, Stat};
use runnerdna::forest::{train_forest, Dataset, ForestParams};
use runnerdna::ingest::{
    align_axis_series, align_series, parse_activity_csv, write_activity_csv, AlignPolicy,
};
use runnerdna::{
    Activity, ActivityRecord, Channel, RawDna, RecordMeta, SensorAxisSeries, Sex, VolunteerProfile,
};

fn meta() -> RecordMeta {
    RecordMeta {
        record_id: "p".into(),
        label: Activity::Walking,
        volunteer: VolunteerProfile {
            volunteer_id: "v07".into(),
            sex: Sex::Female,
            height: 160.0,
            weight: 55.0,
        },
    }
}

/// Non-decreasing timestamps with duplicates and steps of at most 3 s.
fn timestamps(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..=3, 30..max_len).prop_map(|steps| {
        let mut t = 1_576_865_677;
        steps
            .into_iter()
            .map(|s| {
                t += s;
                t
            })
            .collect()
    })
}

fn record_from(times: &[i64], seed_values: &[f64]) -> ActivityRecord {
    let series = Channel::all().enumerate().map(|(k, c)| SensorAxisSeries {
        channel: c,
        timestamps: times.to_vec(),
        values: times
            .iter()
            .enumerate()
            .map(|(i, _)| seed_values[(i + k) % seed_values.len()] * (k + 1) as f64)
            .collect(),
    });
    ActivityRecord::new(meta(), series, None).unwrap()
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 30..120)
}

fn non_degenerate() -> impl Strategy<Value = Vec<f64>> {
    series().prop_filter("needs spread", |v| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).abs()).fold(0.0, f64::max) > 1e-3
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignment_is_idempotent(times in timestamps(80), vals in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let c = Channel::all().next().unwrap();
        let s = SensorAxisSeries::new(c, times.clone(), times.iter().enumerate().map(|(i, _)| vals[i % vals.len()]).collect()).unwrap();
        for policy in [AlignPolicy::MeanPerSecond, AlignPolicy::FirstPerSecond] {
            let once = align_axis_series(&s, policy);
            prop_assert!(once.timestamps.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(align_axis_series(&once, policy), once.clone());
        }
        let rec = record_from(&times, &vals);
        if let Ok(once) = align_series(&rec, AlignPolicy::MeanPerSecond) {
            prop_assert_eq!(align_series(&once, AlignPolicy::MeanPerSecond).unwrap(), once);
        }
    }

    #[test]
    fn sensor_csv_round_trips(times in timestamps(50), vals in prop::collection::vec(-1e4f64..1e4, 1..10)) {
        let rec = record_from(&times, &vals);
        let text = write_activity_csv(&rec).unwrap();
        let back = parse_activity_csv(&text, meta()).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(write_activity_csv(&back).unwrap(), text);
    }

    #[test]
    fn zcr_and_entropy_ranges(x in series()) {
        let z = zero_crossing_rate(&x).unwrap();
        prop_assert!((0.0..=1.0).contains(&z));
        let h = shannon_entropy(&x, 10).unwrap();
        prop_assert!(h >= 0.0 && h <= 10f64.ln() + 1e-12);
    }

    #[test]
    fn power_of_two_scaling_scales_statistics(x in non_degenerate(), e in -4i32..5) {
        let c = 2f64.powi(e);
        let y: Vec<f64> = x.iter().map(|v| v * c).collect();
        let (fx, fy) = (summary_features(&x).unwrap(), summary_features(&y).unwrap());
        for s in [Stat::Mean, Stat::StdDev, Stat::Min, Stat::Max, Stat::Range, Stat::Median, Stat::Iqr, Stat::Rms, Stat::MeanAbsDiff] {
            prop_assert_eq!(fy.get(s), fx.get(s) * c, "{:?}", s);
        }
        for s in [Stat::Skewness, Stat::Kurtosis, Stat::ZeroCrossingRate, Stat::Entropy, Stat::Acf1, Stat::DominantPeriod, Stat::FracBeyondOneSd] {
            let (a, b) = (fx.get(s), fy.get(s));
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{:?}: {} vs {}", s, a, b);
        }
    }

    #[test]
    fn higher_degree_never_fits_worse(x in series()) {
        let r: Vec<f64> = (1..=3).map(|d| fit_polynomial_rmse(&x, d).unwrap()).collect();
        prop_assert!(r[1] <= r[0] * (1.0 + 1e-12) + 1e-12);
        prop_assert!(r[2] <= r[1] * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn apen_is_shift_and_scale_invariant(x in non_degenerate(), shift in -1e3f64..1e3, e in -3i32..4) {
        let c = 2f64.powi(e);
        let r = 0.2 * summary_features(&x).unwrap().get(Stat::StdDev);
        prop_assume!(r > 0.0);
        let base = approximate_entropy(&x, 2, r).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert_eq!(approximate_entropy(&scaled, 2, r * c).unwrap(), base);
        // shifting perturbs differences by rounding, so compare loosely
        let shifted: Vec<f64> = x.iter().map(|v| v + shift.round()).collect();
        let s = approximate_entropy(&shifted, 2, r).unwrap();
        prop_assert!((s - base).abs() < 0.05, "{} vs {}", s, base);
    }

    #[test]
    fn nll_shift_invariant_and_scales_by_log(x in non_degenerate(), shift in -50.0f64..50.0, c in 0.1f64..10.0) {
        let n = x.len() as f64;
        let base = gaussian_nll(&x).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        prop_assert!((gaussian_nll(&shifted).unwrap() - base).abs() <= 1e-7 * base.abs().max(1.0));
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let expected = base + n * c.ln();
        prop_assert!((gaussian_nll(&scaled).unwrap() - expected).abs() <= 1e-7 * expected.abs().max(1.0));
    }

    #[test]
    fn normalization_preserves_rank(raw in prop::collection::vec(prop::array::uniform5(-10.0f64..10.0), 2..40)) {
        let cohort: Vec<(String, RawDna)> = raw.iter().enumerate().map(|(i, v)| (i.to_string(), RawDna::from_array(*v))).collect();
        let out = normalize_dna(&cohort).unwrap();
        for k in 0..5 {
            for i in 0..raw.len() {
                prop_assert!((0.0..=5.0).contains(&out[i].normalized[k]));
                for j in 0..raw.len() {
                    if raw[i][k] < raw[j][k] {
                        prop_assert!(out[i].normalized[k] <= out[j].normalized[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn t_is_antisymmetric_and_p_decreases_in_abs_t(
        m1 in -5.0f64..5.0, m2 in -5.0f64..5.0, s1 in 0.1f64..3.0, s2 in 0.1f64..3.0,
        n1 in 2usize..200, n2 in 2usize..200,
    ) {
        let (a, b) = (GroupSummary::from_mean_sd(m1, s1, n1), GroupSummary::from_mean_sd(m2, s2, n2));
        let ab = students_t(a, b).unwrap();
        let ba = students_t(b, a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
        let df = ab.df as f64;
        prop_assert!(t_p_value(ab.t.abs() + 0.5, df) <= t_p_value(ab.t.abs(), df));
    }

    #[test]
    fn kappa_and_accuracy_ignore_class_relabeling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let classes: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let cm = ConfusionMatrix::from_indices(classes.clone(), &t, &p).unwrap();
        let t2: Vec<usize> = t.iter().map(|&i| perm[i]).collect();
        let p2: Vec<usize> = p.iter().map(|&i| perm[i]).collect();
        let cm2 = ConfusionMatrix::from_indices(classes, &t2, &p2).unwrap();
        prop_assert_eq!(accuracy(&cm).unwrap(), accuracy(&cm2).unwrap());
        prop_assert_eq!(kappa(&cm).unwrap(), kappa(&cm2).unwrap());
    }
}

fn toy_data(rows: &[Vec<f64>], labels: &[u8]) -> Dataset {
    let labels: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
    let keys = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
    Dataset::new(keys, rows.to_vec(), &labels, None).unwrap()
}

fn forest_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    (10usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), n),
            prop::collection::vec(0u8..3, n),
        )
    })
    .prop_filter("two classes", |(_, l)| l.iter().any(|&x| x != l[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forest_is_deterministic_and_votes_sum_to_one((rows, labels) in forest_case(), seed in any::<u64>()) {
        let data = toy_data(&rows, &labels);
        let params = ForestParams { n_trees: 15, seed, ..ForestParams::default() };
        let a = train_forest(&data, &params).unwrap();
        let b = train_forest(&data, &params).unwrap();
        prop_assert_eq!(&a, &b);
        for r in &rows {
            let p = a.predict(r).unwrap();
            prop_assert!((p.vote_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert_eq!(p.vote_fractions[p.class], p.vote_fractions.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn forest_ignores_monotone_rescaling((rows, labels) in forest_case(), seed in any::<u64>()) {
        // x -> 4x + 1 keeps every split boundary between the same rows
        let data = toy_data(&rows, &labels);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| 4.0 * v + 1.0).collect()).collect();
        let data2 = toy_data(&scaled, &labels);
        let params = ForestParams { n_trees: 15, seed, ..ForestParams::default() };
        let (a, b) = (train_forest(&data, &params).unwrap(), train_forest(&data2, &params).unwrap());
        for (r, s) in rows.iter().zip(&scaled) {
            prop_assert_eq!(a.predict(r).unwrap().class, b.predict(s).unwrap().class);
        }
    }
}
