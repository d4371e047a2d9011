//! The five motion-style indicators and their cohort normalization.
//!
//! | indicator  | series                     | statistic                       |
//! |------------|----------------------------|---------------------------------|
//! | balance    | orientation z              | RMSE of a linear fit            |
//! | stride     | orientation x              | approximate entropy             |
//! | steer      | linear acceleration x      | RMSE of a cubic fit             |
//! | stability  | linear acceleration z      | Gaussian NLL per sample         |
//! | amplitude  | accelerometer y (default)  | Gaussian NLL per sample         |
//!
//! Raw values are min-max mapped onto [0, 5] across a cohort.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ActivityRecord, Axis, Sensor};
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum DnaError {
    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("approximate-entropy threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("embedding dimension must be at least 1")]
    ZeroWindow,
    #[error("polynomial degree {0} not supported")]
    UnsupportedDegree(usize),
    #[error("least-squares system is singular")]
    SingularFit,
    #[error("zero-variance series{}", .0.map(|s| format!(" for indicator `{s}`")).unwrap_or_default())]
    DegenerateSeries(Option<&'static str>),
    #[error("empty cohort")]
    EmptyCohort,
    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),
}

pub type Result<T, E = DnaError> = std::result::Result<T, E>;

/// Least-squares polynomial fit on the sample index, returning the RMSE of
/// the residuals.
///
/// The abscissa is rescaled to [-1, 1] and the system is solved by
/// Householder QR, which keeps cubic fits well conditioned on long series.
pub fn fit_polynomial_rmse(values: &[f64], degree: usize) -> Result<f64> {
    if degree == 0 || degree > 3 {
        return Err(DnaError::UnsupportedDegree(degree));
    }
    let n = values.len();
    if n < degree + 2 {
        return Err(DnaError::TooShort {
            len: n,
            min: degree + 2,
        });
    }
    let cols = degree + 1;
    let scale = 2.0 / (n - 1) as f64;
    // column-major Vandermonde matrix
    let mut a = vec![0.0; n * cols];
    for i in 0..n {
        let t = i as f64 * scale - 1.0;
        let mut p = 1.0;
        for c in 0..cols {
            a[c * n + i] = p;
            p *= t;
        }
    }
    let mut b = values.to_vec();

    for k in 0..cols {
        let col = &a[k * n..(k + 1) * n];
        let norm = col[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(DnaError::SingularFit);
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in k..cols {
            let col = &mut a[c * n + k..(c + 1) * n];
            let dot: f64 = v.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            col.iter_mut().zip(&v).for_each(|(y, x)| *y -= f * x);
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
        let f = 2.0 * dot / vnorm2;
        b[k..].iter_mut().zip(&v).for_each(|(y, x)| *y -= f * x);
    }
    // After reflection the residual vector lives in b[cols..].
    let sse: f64 = b[cols..].iter().map(|r| r * r).sum();
    Ok((sse / n as f64).sqrt())
}

/// Approximate entropy `phi(m) - phi(m + 1)` with Chebyshev distance and
/// self-matches included, clamped at zero.
pub fn approximate_entropy(values: &[f64], m: usize, r: f64) -> Result<f64> {
    if m == 0 {
        return Err(DnaError::ZeroWindow);
    }
    let n = values.len();
    if n < m + 2 {
        return Err(DnaError::TooShort {
            len: n,
            min: m + 2,
        });
    }
    if !(r > 0.0) {
        return Err(DnaError::NonPositiveThreshold(r));
    }
    let k = n - m + 1;
    // counts[i]: templates of length m within r of template i;
    // longer[i]: same for length m + 1 (only i < k - 1).
    let mut counts = vec![1usize; k];
    let mut longer = vec![1usize; k - 1];
    for i in 0..k {
        for j in (i + 1)..k {
            if (0..m).all(|o| (values[i + o] - values[j + o]).abs() <= r) {
                counts[i] += 1;
                counts[j] += 1;
                if j < k - 1 && (values[i + m] - values[j + m]).abs() <= r {
                    longer[i] += 1;
                    longer[j] += 1;
                }
            }
        }
    }
    let phi = |c: &[usize]| {
        let len = c.len() as f64;
        c.iter().map(|&x| (x as f64 / len).ln()).sum::<f64>() / len
    };
    Ok((phi(&counts) - phi(&longer)).max(0.0))
}

/// Total Gaussian negative log-likelihood of the series under its own mean
/// and population standard deviation.
pub fn gaussian_nll(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(DnaError::TooShort { len: n, min: 2 });
    }
    if stats::is_degenerate(values) {
        return Err(DnaError::DegenerateSeries(None));
    }
    let mu = stats::mean(values);
    let var = stats::population_variance(values);
    let sigma = var.sqrt();
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(values
        .iter()
        .map(|x| half_ln_2pi + sigma.ln() + (x - mu) * (x - mu) / (2.0 * var))
        .sum())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeSource {
    #[default]
    Accelerometer,
    LinearAcceleration,
}

impl FromStr for AmplitudeSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "accelerometer" => Ok(AmplitudeSource::Accelerometer),
            "linear_acceleration" => Ok(AmplitudeSource::LinearAcceleration),
            _ => Err(format!("unknown amplitude source `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DnaParams {
    /// Approximate-entropy embedding dimension.
    pub m: usize,
    /// Threshold as a multiple of the stride series' standard deviation.
    pub r_factor: f64,
    pub amplitude_source: AmplitudeSource,
}

impl Default for DnaParams {
    fn default() -> Self {
        DnaParams {
            m: 2,
            r_factor: 0.2,
            amplitude_source: AmplitudeSource::Accelerometer,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    Balance,
    Stride,
    Steer,
    Stability,
    Amplitude,
}

impl Indicator {
    pub const ALL: [Indicator; 5] = [
        Indicator::Balance,
        Indicator::Stride,
        Indicator::Steer,
        Indicator::Stability,
        Indicator::Amplitude,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Balance => "balance",
            Indicator::Stride => "stride",
            Indicator::Steer => "steer",
            Indicator::Stability => "stability",
            Indicator::Amplitude => "amplitude",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Indicator {
    type Err = DnaError;

    fn from_str(s: &str) -> Result<Self> {
        Indicator::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| DnaError::UnknownIndicator(s.to_string()))
    }
}

/// Raw indicator statistics for one record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDna {
    pub balance_rmse: f64,
    pub stride_apen: f64,
    pub steer_rmse: f64,
    pub stability_nll: f64,
    pub amplitude_nll: f64,
}

impl RawDna {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.balance_rmse,
            self.stride_apen,
            self.steer_rmse,
            self.stability_nll,
            self.amplitude_nll,
        ]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        RawDna {
            balance_rmse: v[0],
            stride_apen: v[1],
            steer_rmse: v[2],
            stability_nll: v[3],
            amplitude_nll: v[4],
        }
    }

    pub fn get(&self, indicator: Indicator) -> f64 {
        self.to_array()[indicator.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunnerDna {
    pub record_id: String,
    pub raw: RawDna,
    /// Cohort-normalized values in [0, 5], indexed by [`Indicator`].
    pub normalized: [f64; 5],
}

fn per_sample_nll(values: &[f64], indicator: &'static str) -> Result<f64> {
    gaussian_nll(values)
        .map(|total| total / values.len() as f64)
        .map_err(|e| match e {
            DnaError::DegenerateSeries(_) => DnaError::DegenerateSeries(Some(indicator)),
            other => other,
        })
}

/// Computes the five raw indicators from a record's designated series.
pub fn compute_dna_raw(record: &ActivityRecord, params: &DnaParams) -> Result<RawDna> {
    if !(params.r_factor > 0.0) {
        return Err(DnaError::NonPositiveThreshold(params.r_factor));
    }
    let balance = record.values(Sensor::Orientation, Axis::Z);
    let stride = record.values(Sensor::Orientation, Axis::X);
    let steer = record.values(Sensor::LinearAcceleration, Axis::X);
    let stability = record.values(Sensor::LinearAcceleration, Axis::Z);
    let amplitude = match params.amplitude_source {
        AmplitudeSource::Accelerometer => record.values(Sensor::Accelerometer, Axis::Y),
        AmplitudeSource::LinearAcceleration => record.values(Sensor::LinearAcceleration, Axis::Y),
    };

    // ApEn of a constant series is 0 for every r; the scaled threshold would be 0.
    let stride_apen = if stats::is_degenerate(stride) {
        0.0
    } else {
        let r = params.r_factor * stats::population_variance(stride).sqrt();
        approximate_entropy(stride, params.m, r)?
    };
    Ok(RawDna {
        balance_rmse: fit_polynomial_rmse(balance, 1)?,
        stride_apen,
        steer_rmse: fit_polynomial_rmse(steer, 3)?,
        stability_nll: per_sample_nll(stability, "stability")?,
        amplitude_nll: per_sample_nll(amplitude, "amplitude")?,
    })
}

/// Per-indicator cohort minimum and maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnaBounds {
    pub lo: [f64; 5],
    pub hi: [f64; 5],
}

impl DnaBounds {
    pub fn fit<'a>(raws: impl IntoIterator<Item = &'a RawDna>) -> Result<Self> {
        let mut lo = [f64::INFINITY; 5];
        let mut hi = [f64::NEG_INFINITY; 5];
        let mut any = false;
        for raw in raws {
            any = true;
            for (k, v) in raw.to_array().into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        if !any {
            return Err(DnaError::EmptyCohort);
        }
        Ok(DnaBounds { lo, hi })
    }

    /// Maps onto [0, 5]; values outside the fitted range are clamped and an
    /// indicator with no spread maps to 2.5.
    pub fn apply(&self, raw: &RawDna) -> [f64; 5] {
        let values = raw.to_array();
        std::array::from_fn(|k| {
            if self.hi[k] == self.lo[k] {
                2.5
            } else {
                (5.0 * (values[k] - self.lo[k]) / (self.hi[k] - self.lo[k])).clamp(0.0, 5.0)
            }
        })
    }
}

/// Min-max maps each indicator onto [0, 5] across the cohort.
pub fn normalize_dna(cohort: &[(String, RawDna)]) -> Result<Vec<RunnerDna>> {
    let bounds = DnaBounds::fit(cohort.iter().map(|(_, r)| r))?;
    Ok(cohort
        .iter()
        .map(|(id, raw)| RunnerDna {
            record_id: id.clone(),
            raw: *raw,
            normalized: bounds.apply(raw),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_polynomials_fit_with_zero_rmse() {
        let line: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 + 1.0).collect();
        assert_abs_diff_eq!(fit_polynomial_rmse(&line, 1).unwrap(), 0.0, epsilon = 1e-9);
        let cubic: Vec<f64> = (0..10).map(|i| (i as f64).powi(3)).collect();
        assert_abs_diff_eq!(fit_polynomial_rmse(&cubic, 3).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn alternating_five_points_linear_fit() {
        // slope 0, intercept 0.4, residuals -0.4, 0.6, -0.4, 0.6, -0.4
        let rmse = fit_polynomial_rmse(&[0.0, 1.0, 0.0, 1.0, 0.0], 1).unwrap();
        assert_abs_diff_eq!(rmse, 0.24f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn polynomial_fit_errors() {
        assert_eq!(
            fit_polynomial_rmse(&[1.0, 2.0], 1),
            Err(DnaError::TooShort { len: 2, min: 3 })
        );
        assert_eq!(
            fit_polynomial_rmse(&[1.0; 8], 4),
            Err(DnaError::UnsupportedDegree(4))
        );
    }

    #[test]
    fn apen_of_constant_is_zero() {
        assert_eq!(approximate_entropy(&[3.0; 40], 2, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn apen_of_alternating_series_is_small() {
        let v: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        assert!(approximate_entropy(&v, 2, 0.1).unwrap() < 0.05);
    }

    #[test]
    fn apen_errors() {
        assert_eq!(
            approximate_entropy(&[1.0, 2.0, 3.0], 2, 0.1),
            Err(DnaError::TooShort { len: 3, min: 4 })
        );
        assert_eq!(
            approximate_entropy(&[1.0; 10], 2, 0.0),
            Err(DnaError::NonPositiveThreshold(0.0))
        );
    }

    #[test]
    fn nll_two_points() {
        assert_abs_diff_eq!(
            gaussian_nll(&[0.0, 2.0]).unwrap(),
            (2.0 * std::f64::consts::PI).ln() + 1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            gaussian_nll(&[4.0; 5]),
            Err(DnaError::DegenerateSeries(None))
        );
    }

    #[test]
    fn normalization_endpoints() {
        let raw = |b| RawDna::from_array([b, 1.0, 1.0, 1.0, 1.0]);
        let cohort = vec![
            ("a".to_string(), raw(1.0)),
            ("b".to_string(), raw(3.0)),
            ("c".to_string(), raw(5.0)),
        ];
        let out = normalize_dna(&cohort).unwrap();
        let balance: Vec<f64> = out.iter().map(|d| d.normalized[0]).collect();
        assert_eq!(balance, vec![0.0, 2.5, 5.0]);
        assert!(out.iter().all(|d| d.normalized[1] == 2.5));

        let single = normalize_dna(&cohort[..1]).unwrap();
        assert_eq!(single[0].normalized, [2.5; 5]);
        assert_eq!(normalize_dna(&[]), Err(DnaError::EmptyCohort));
    }

    #[test]
    fn indicator_names_round_trip() {
        for ind in Indicator::ALL {
            assert_eq!(ind.as_str().parse::<Indicator>().unwrap(), ind);
        }
        assert!("tempo".parse::<Indicator>().is_err());
    }
}
