//! Library results checked against independent brute-force or numerical
//! oracles.

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use runnerdna::dna::{approximate_entropy, fit_polynomial_rmse, gaussian_nll};
use runnerdna::eval::{ln_gamma, regularized_incomplete_beta, students_t, t_p_value, GroupSummary};
use runnerdna::features::{shannon_entropy, summary_features, zero_crossing_rate, Stat};
use runnerdna::gps::{haversine_distance, track_kinematics, EARTH_RADIUS_M};
use runnerdna::ingest::{align_axis_series, parse_activity_csv, AlignPolicy};
use runnerdna::{Activity, Axis, Channel, GpsPoint, RecordMeta, Sensor, Sex, VolunteerProfile};

fn brute_apen(x: &[f64], m: usize, r: f64) -> f64 {
    let phi = |m: usize| -> f64 {
        let k = x.len() - m + 1;
        (0..k)
            .map(|i| {
                let c = (0..k)
                    .filter(|&j| (0..m).all(|o| (x[i + o] - x[j + o]).abs() <= r))
                    .count();
                (c as f64 / k as f64).ln()
            })
            .sum::<f64>()
            / k as f64
    };
    (phi(m) - phi(m + 1)).max(0.0)
}

#[test]
fn apen_matches_brute_force_for_several_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 1..=3 {
        for _ in 0..5 {
            let x: Vec<f64> = (0..150).map(|i| (i as f64 * 0.3).sin() + rng.random::<f64>()).collect();
            for r in [0.05, 0.2, 0.6] {
                assert_abs_diff_eq!(approximate_entropy(&x, m, r).unwrap(), brute_apen(&x, m, r), epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn apen_of_quantized_series_with_exact_ties() {
    let x: Vec<f64> = (0..120).map(|i| ((i * 7) % 5) as f64).collect();
    assert_abs_diff_eq!(approximate_entropy(&x, 2, 1.0).unwrap(), brute_apen(&x, 2, 1.0), epsilon = 1e-12);
}

fn t_density(t: f64, df: f64) -> f64 {
    let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
    c * (1.0 + t * t / df).powf(-(df + 1.0) / 2.0)
}

/// Two-sided tail by composite Simpson on [0, |t|].
fn simpson_p(t: f64, df: f64) -> f64 {
    let n = 20_000;
    let h = t.abs() / n as f64;
    let mut s = t_density(0.0, df) + t_density(t.abs(), df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, df);
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn p_values_match_numerical_integration() {
    for df in [1.0, 3.0, 10.0, 85.0, 182.0] {
        for t in [0.1, 0.159, 1.091, 2.0, 3.5] {
            assert_abs_diff_eq!(t_p_value(t, df), simpson_p(t, df), epsilon = 1e-7);
            assert_abs_diff_eq!(t_p_value(-t, df), t_p_value(t, df), epsilon = 0.0);
        }
    }
}

#[test]
fn incomplete_beta_symmetry_and_known_values() {
    for (x, a, b) in [(0.3, 2.0, 5.0), (0.9, 0.5, 0.5), (0.01, 10.0, 1.5)] {
        let lhs = regularized_incomplete_beta(x, a, b);
        let rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }
    // I_x(1, 1) = x and I_x(a, 1) = x^a
    assert_abs_diff_eq!(regularized_incomplete_beta(0.37, 1.0, 1.0), 0.37, epsilon = 1e-13);
    assert_abs_diff_eq!(regularized_incomplete_beta(0.6, 3.0, 1.0), 0.216, epsilon = 1e-13);
}

#[test]
fn t_statistic_against_hand_pooled_formula() {
    let a = [2.1, 2.9, 3.3, 1.7, 2.5];
    let b = [3.4, 4.1, 2.8, 3.9];
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let sp2 = (ss(&a) + ss(&b)) / 7.0;
    let t = (mean(&a) - mean(&b)) / (sp2 * (1.0 / 5.0 + 1.0 / 4.0)).sqrt();
    let r = students_t(GroupSummary::from_samples(&a), GroupSummary::from_samples(&b)).unwrap();
    assert_abs_diff_eq!(r.t, t, epsilon = 1e-12);
    assert_eq!(r.df, 7);
}

#[test]
fn entropy_of_uniform_sample_approaches_log_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let h = shannon_entropy(&x, 10).unwrap();
    assert!((h - 10f64.ln()).abs() <= 0.05, "{h}");
}

#[test]
fn entropy_of_two_point_mass_is_ln2() {
    let x: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
    assert_abs_diff_eq!(shannon_entropy(&x, 10).unwrap(), 2f64.ln(), epsilon = 1e-12);
}

#[test]
fn gaussian_nll_follows_closed_form() {
    let n = 20_000;
    let sigma = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(4.0, sigma).unwrap();
    let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let expected = n as f64 * (0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + f64::ln(sigma));
    let got = gaussian_nll(&x).unwrap();
    assert!((got - expected).abs() <= 0.01 * expected, "{got} vs {expected}");
}

#[test]
fn linear_fit_leaves_alternating_residual() {
    // on an even-length grid, the alternating ±0.5 sequence is nearly
    // orthogonal to a line, so the RMSE of line + residual is just under 0.5
    let y: Vec<f64> = (0..100)
        .map(|i| 3.0 + 0.02 * i as f64 + if i % 2 == 0 { 0.5 } else { -0.5 })
        .collect();
    let rmse = fit_polynomial_rmse(&y, 1).unwrap();
    assert!(rmse <= 0.5 + 1e-12 && rmse > 0.49, "{rmse}");
}

fn table2_meta() -> RecordMeta {
    RecordMeta {
        record_id: "t2".into(),
        label: Activity::Running,
        volunteer: VolunteerProfile {
            volunteer_id: "v01".into(),
            sex: Sex::Male,
            height: 178.0,
            weight: 70.0,
        },
    }
}

#[test]
fn table2_rows_parse_and_collapse_to_the_mean() {
    let mut header = vec!["time".to_string()];
    header.extend(Channel::all().map(Channel::column_name));
    let rows = [
        ("20191220 18:14:37", -0.7258301, -0.2037209),
        ("20191220 18:14:37", -3.4959106, 9.5317275),
        ("20191220 18:14:38", 33.5924381, 9.6923434),
        ("20191220 18:14:37", -11.309281, 9.6512161),
    ];
    let mut text = header.join(",") + "\n";
    for (time, acc_x, grav_y) in rows {
        let mut cells = vec![time.to_string()];
        for c in Channel::all() {
            cells.push(match (c.sensor, c.axis) {
                (Sensor::Accelerometer, Axis::X) => acc_x.to_string(),
                (Sensor::Gravity, Axis::Y) => grav_y.to_string(),
                _ => "0".to_string(),
            });
        }
        text += &(cells.join(",") + "\n");
    }
    let rec = parse_activity_csv(&text, table2_meta()).unwrap();
    let acc_x = rec.values(Sensor::Accelerometer, Axis::X);
    assert!(acc_x.contains(&-0.7258301) && acc_x.contains(&33.5924381));

    let aligned = align_axis_series(rec.series(Channel::new(Sensor::Accelerometer, Axis::X)), AlignPolicy::MeanPerSecond);
    assert_eq!(aligned.timestamps.len(), 2);
    let hand = (-0.7258301 + -3.4959106 + -11.309281) / 3.0;
    assert_abs_diff_eq!(aligned.values[0], hand, epsilon = 1e-12);
    assert_eq!(aligned.values[1], 33.5924381);
}

#[test]
fn haversine_against_spherical_law_of_cosines() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let a = GpsPoint::new(rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0), 0.0);
        let b = GpsPoint::new(
            a.lat + rng.random_range(-10.0..10.0),
            a.lon + rng.random_range(-10.0..10.0),
            1.0,
        );
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let cos = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        let law = EARTH_RADIUS_M * cos.acos();
        let d = haversine_distance(&a, &b);
        assert!((d - law).abs() <= 1e-6 * law.max(1.0) + 1e-3, "{d} {law}");
    }
}

#[test]
fn kinematics_of_constant_speed_meridian_track() {
    // 0.0001° of latitude per second
    let track: Vec<GpsPoint> = (0..60).map(|i| GpsPoint::new(10.0 + 1e-4 * i as f64, 20.0, i as f64)).collect();
    let v = EARTH_RADIUS_M * 1e-4f64.to_radians();
    let (_, k) = track_kinematics(&track).unwrap();
    assert_abs_diff_eq!(k.mean_velocity, v, epsilon = 1e-6);
    assert_abs_diff_eq!(k.max_velocity, v, epsilon = 1e-6);
    assert!(k.velocity_sd < 1e-6);
    assert!(k.max_abs_acceleration < 1e-6);
}

#[test]
fn summary_statistics_against_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..3.0)).collect();
    let f = summary_features(&x).unwrap();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    assert_abs_diff_eq!(f.get(Stat::Mean), mean, epsilon = 1e-12);
    assert_abs_diff_eq!(f.get(Stat::Variance), var, epsilon = 1e-12);
    assert_abs_diff_eq!(f.get(Stat::Skewness), m3 / var.powf(1.5), epsilon = 1e-10);
    assert_abs_diff_eq!(f.get(Stat::Kurtosis), m4 / (var * var) - 3.0, epsilon = 1e-10);
    assert_abs_diff_eq!(
        f.get(Stat::Rms),
        (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        epsilon = 1e-12
    );
    let acf1 = (0..63).map(|i| (x[i] - mean) * (x[i + 1] - mean)).sum::<f64>() / (n * var);
    assert_abs_diff_eq!(f.get(Stat::Acf1), acf1, epsilon = 1e-12);
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0)
        .count();
    assert_abs_diff_eq!(zero_crossing_rate(&x).unwrap(), crossings as f64 / 63.0, epsilon = 0.0);
}
