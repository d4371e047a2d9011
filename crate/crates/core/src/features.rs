//! Per-axis statistical features (18 series × 30 statistics = 540 values per
//! record) and permutation importance for feature selection.

use std::fmt;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dna::fit_polynomial_rmse;
use crate::forest::{oob_tally, Dataset, Forest, ForestError};
use crate::ingest::{Activity, ActivityRecord, Channel, MIN_ALIGNED_SAMPLES};
use crate::{rng, stats};

pub const ENTROPY_BINS: usize = 10;
pub const FEATURES_PER_SERIES: usize = 30;
pub const FEATURE_VECTOR_LEN: usize = 18 * FEATURES_PER_SERIES;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("at least 2 histogram bins are required")]
    TooFewBins,
    #[error("feature keys do not match the model")]
    KeyMismatch,
    #[error("k = {k} exceeds the {available} ranked features")]
    KTooLarge { k: usize, available: usize },
    #[error("permutations must be >= 1")]
    NoPermutations,
    #[error(transparent)]
    Forest(#[from] ForestError),
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// The per-series statistics, in vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stat {
    Mean,
    Variance,
    StdDev,
    Min,
    Max,
    Range,
    Median,
    Q1,
    Q3,
    Iqr,
    Skewness,
    Kurtosis,
    Rms,
    MeanAbsDeviation,
    Energy,
    Entropy,
    ZeroCrossingRate,
    DiffMeanCrossingRate,
    Acf1,
    Acf2,
    Acf3,
    Acf4,
    Acf5,
    LocalMaxRate,
    MeanAbsDiff,
    MaxAbsDiff,
    TrendSlope,
    TrendRmse,
    DominantPeriod,
    FracBeyondOneSd,
}

impl Stat {
    pub const ALL: [Stat; FEATURES_PER_SERIES] = [
        Stat::Mean,
        Stat::Variance,
        Stat::StdDev,
        Stat::Min,
        Stat::Max,
        Stat::Range,
        Stat::Median,
        Stat::Q1,
        Stat::Q3,
        Stat::Iqr,
        Stat::Skewness,
        Stat::Kurtosis,
        Stat::Rms,
        Stat::MeanAbsDeviation,
        Stat::Energy,
        Stat::Entropy,
        Stat::ZeroCrossingRate,
        Stat::DiffMeanCrossingRate,
        Stat::Acf1,
        Stat::Acf2,
        Stat::Acf3,
        Stat::Acf4,
        Stat::Acf5,
        Stat::LocalMaxRate,
        Stat::MeanAbsDiff,
        Stat::MaxAbsDiff,
        Stat::TrendSlope,
        Stat::TrendRmse,
        Stat::DominantPeriod,
        Stat::FracBeyondOneSd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Variance => "variance",
            Stat::StdDev => "std",
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Range => "range",
            Stat::Median => "median",
            Stat::Q1 => "q1",
            Stat::Q3 => "q3",
            Stat::Iqr => "iqr",
            Stat::Skewness => "skewness",
            Stat::Kurtosis => "kurtosis",
            Stat::Rms => "rms",
            Stat::MeanAbsDeviation => "mad",
            Stat::Energy => "energy",
            Stat::Entropy => "entropy",
            Stat::ZeroCrossingRate => "zcr",
            Stat::DiffMeanCrossingRate => "diff_mcr",
            Stat::Acf1 => "acf1",
            Stat::Acf2 => "acf2",
            Stat::Acf3 => "acf3",
            Stat::Acf4 => "acf4",
            Stat::Acf5 => "acf5",
            Stat::LocalMaxRate => "local_max_rate",
            Stat::MeanAbsDiff => "mean_abs_diff",
            Stat::MaxAbsDiff => "max_abs_diff",
            Stat::TrendSlope => "trend_slope",
            Stat::TrendRmse => "trend_rmse",
            Stat::DominantPeriod => "dominant_period",
            Stat::FracBeyondOneSd => "frac_beyond_1sd",
        }
    }
}

/// (sensor, axis, statistic). Orders canonically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub channel: Channel,
    pub stat: Stat,
}

impl FeatureKey {
    /// All 540 keys in canonical order.
    pub fn all() -> impl Iterator<Item = FeatureKey> {
        Channel::all().flat_map(|channel| {
            Stat::ALL
                .into_iter()
                .map(move |stat| FeatureKey { channel, stat })
        })
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.channel, self.stat.name())
    }
}

pub fn feature_names() -> Vec<String> {
    FeatureKey::all().map(|k| k.to_string()).collect()
}

/// Fraction of adjacent pairs whose mean-centred values have strictly
/// opposite signs. Exact zeros never cross.
pub fn zero_crossing_rate(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(FeatureError::TooShort {
            len: values.len(),
            min: 2,
        });
    }
    let mu = stats::mean(values);
    let crossings = values
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0] - mu, w[1] - mu);
            (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
        })
        .count();
    Ok(crossings as f64 / (values.len() - 1) as f64)
}

/// Histogram entropy in nats over `bins` equal-width bins spanning
/// [min, max]; the maximum falls in the last bin.
pub fn shannon_entropy(values: &[f64], bins: usize) -> Result<f64> {
    if values.len() < 2 {
        return Err(FeatureError::TooShort {
            len: values.len(),
            min: 2,
        });
    }
    if bins < 2 {
        return Err(FeatureError::TooFewBins);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v - lo) / (hi - lo) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = values.len() as f64;
    Ok(counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum())
}

/// The 30 statistics of one series, indexed by [`Stat`].
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryFeatures(pub [f64; FEATURES_PER_SERIES]);

impl SummaryFeatures {
    pub fn get(&self, stat: Stat) -> f64 {
        self.0[stat as usize]
    }
}

fn autocorrelation(centered: &[f64], denom: f64, lag: usize) -> f64 {
    if denom == 0.0 {
        return 0.0;
    }
    centered
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / denom
}

pub fn summary_features(values: &[f64]) -> Result<SummaryFeatures> {
    let n = values.len();
    if n < MIN_ALIGNED_SAMPLES {
        return Err(FeatureError::TooShort {
            len: n,
            min: MIN_ALIGNED_SAMPLES,
        });
    }
    let nf = n as f64;
    let degenerate = stats::is_degenerate(values);
    let mean = stats::mean(values);
    let centered: Vec<f64> = if degenerate {
        vec![0.0; n]
    } else {
        values.iter().map(|v| v - mean).collect()
    };
    let m2 = centered.iter().map(|c| c * c).sum::<f64>() / nf;
    let sd = m2.sqrt();
    let (skew, kurt) = if degenerate {
        (0.0, 0.0)
    } else {
        let m3 = centered.iter().map(|c| c.powi(3)).sum::<f64>() / nf;
        let m4 = centered.iter().map(|c| c.powi(4)).sum::<f64>() / nf;
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };

    let sorted = stats::sorted(values);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let q1 = stats::quantile_sorted(&sorted, 0.25);
    let q3 = stats::quantile_sorted(&sorted, 0.75);

    let energy = values.iter().map(|v| v * v).sum::<f64>() / nf;
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let abs_diffs = diffs.iter().map(|d| d.abs());

    let acf_denom = centered.iter().map(|c| c * c).sum::<f64>();
    let acf: Vec<f64> = (1..=10)
        .map(|lag| autocorrelation(&centered, acf_denom, lag))
        .collect();
    let mut dominant = 1;
    for lag in 2..=10 {
        if acf[lag - 1] > acf[dominant - 1] {
            dominant = lag;
        }
    }

    let local_max = values
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2])
        .count();
    let beyond = if degenerate {
        0
    } else {
        centered.iter().filter(|c| c.abs() > sd).count()
    };

    // slope in value units per sample from the least-squares line
    let index_mean = (nf - 1.0) / 2.0;
    let sxx: f64 = (0..n).map(|i| (i as f64 - index_mean).powi(2)).sum();
    let slope = (0..n)
        .map(|i| (i as f64 - index_mean) * centered[i])
        .sum::<f64>()
        / sxx;
    let trend_rmse = fit_polynomial_rmse(values, 1).unwrap_or(0.0);

    let mut out = [0.0; FEATURES_PER_SERIES];
    let mut set = |s: Stat, v: f64| out[s as usize] = v;
    set(Stat::Mean, mean);
    set(Stat::Variance, m2);
    set(Stat::StdDev, sd);
    set(Stat::Min, min);
    set(Stat::Max, max);
    set(Stat::Range, max - min);
    set(Stat::Median, stats::quantile_sorted(&sorted, 0.5));
    set(Stat::Q1, q1);
    set(Stat::Q3, q3);
    set(Stat::Iqr, q3 - q1);
    set(Stat::Skewness, skew);
    set(Stat::Kurtosis, kurt);
    set(Stat::Rms, energy.sqrt());
    set(
        Stat::MeanAbsDeviation,
        centered.iter().map(|c| c.abs()).sum::<f64>() / nf,
    );
    set(Stat::Energy, energy);
    set(Stat::Entropy, shannon_entropy(values, ENTROPY_BINS)?);
    set(Stat::ZeroCrossingRate, zero_crossing_rate(values)?);
    set(Stat::DiffMeanCrossingRate, zero_crossing_rate(&diffs)?);
    for (k, s) in [Stat::Acf1, Stat::Acf2, Stat::Acf3, Stat::Acf4, Stat::Acf5]
        .into_iter()
        .enumerate()
    {
        set(s, acf[k]);
    }
    set(Stat::LocalMaxRate, local_max as f64 / nf);
    set(Stat::MeanAbsDiff, abs_diffs.clone().sum::<f64>() / (nf - 1.0));
    set(Stat::MaxAbsDiff, abs_diffs.fold(0.0, f64::max));
    set(Stat::TrendSlope, if degenerate { 0.0 } else { slope });
    set(Stat::TrendRmse, if degenerate { 0.0 } else { trend_rmse });
    set(Stat::DominantPeriod, dominant as f64);
    set(Stat::FracBeyondOneSd, beyond as f64 / nf);
    Ok(SummaryFeatures(out))
}

/// 540 statistics for one record, in [`FeatureKey::all`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub record_id: String,
    pub label: Activity,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, key: FeatureKey) -> f64 {
        let ch = Channel::all().position(|c| c == key.channel).expect("channel");
        self.values[ch * FEATURES_PER_SERIES + key.stat as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureKey, f64)> + '_ {
        FeatureKey::all().zip(self.values.iter().copied())
    }
}

pub fn extract_feature_vector(record: &ActivityRecord) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(FEATURE_VECTOR_LEN);
    for series in record.iter_series() {
        values.extend_from_slice(&summary_features(&series.values)?.0);
    }
    Ok(FeatureVector {
        record_id: record.record_id.clone(),
        label: record.label,
        values,
    })
}

/// Mean decrease in OOB accuracy per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    /// Feature keys in canonical (model) order.
    pub keys: Vec<String>,
    pub scores: Vec<f64>,
    pub baseline_accuracy: f64,
    pub permutations: usize,
    pub seed: u64,
}

/// Source of the random reorderings used by [`mean_decrease_accuracy_with`].
pub trait Permuter {
    fn permute(&mut self, items: &mut [usize]);
}

pub struct SeededPermuter(ChaCha8Rng);

impl SeededPermuter {
    pub fn new(seed: u64) -> Self {
        SeededPermuter(rng::seeded(seed))
    }
}

impl Permuter for SeededPermuter {
    fn permute(&mut self, items: &mut [usize]) {
        items.shuffle(&mut self.0);
    }
}

pub fn mean_decrease_accuracy(
    forest: &Forest,
    data: &Dataset,
    permutations: usize,
    seed: u64,
) -> Result<ImportanceRanking> {
    mean_decrease_accuracy_with(forest, data, permutations, seed, SeededPermuter::new)
}

/// Permutation importance: for each feature, each tree's OOB rows see that
/// feature's values shuffled among themselves; the score is the baseline OOB
/// accuracy minus the mean permuted OOB accuracy. Feature `f` uses the
/// permuter built from `seed ^ f`.
pub fn mean_decrease_accuracy_with<P, F>(
    forest: &Forest,
    data: &Dataset,
    permutations: usize,
    seed: u64,
    make_permuter: F,
) -> Result<ImportanceRanking>
where
    P: Permuter,
    F: Fn(u64) -> P + Sync,
{
    if permutations == 0 {
        return Err(FeatureError::NoPermutations);
    }
    if data.feature_keys != forest.feature_keys {
        return Err(FeatureError::KeyMismatch);
    }
    let votes = forest.oob_votes(data)?;
    let (correct, counted) = oob_tally(&votes, &data.targets);
    if counted == 0 {
        return Err(ForestError::NoOobRows.into());
    }
    let baseline = correct as f64 / counted as f64;
    let oob_rows: Vec<Vec<usize>> = forest
        .trees
        .iter()
        .map(|t| {
            t.oob_mask(data.len())
                .into_iter()
                .enumerate()
                .filter_map(|(i, oob)| oob.then_some(i))
                .collect()
        })
        .collect();

    let scores = (0..data.n_features())
        .into_par_iter()
        .map(|f| {
            let mut permuter = make_permuter(seed ^ f as u64);
            let mut total = 0.0;
            let mut row = vec![0.0; data.n_features()];
            for _ in 0..permutations {
                let mut votes = vec![vec![0u32; forest.classes.len()]; data.len()];
                for (tree, rows) in forest.trees.iter().zip(&oob_rows) {
                    let mut order: Vec<usize> = rows.clone();
                    permuter.permute(&mut order);
                    for (&i, &src) in rows.iter().zip(&order) {
                        row.copy_from_slice(&data.rows[i]);
                        row[f] = data.rows[src][f];
                        votes[i][tree.predict(&row)] += 1;
                    }
                }
                let (c, n) = oob_tally(&votes, &data.targets);
                total += c as f64 / n as f64;
            }
            baseline - total / permutations as f64
        })
        .collect();

    Ok(ImportanceRanking {
        keys: forest.feature_keys.clone(),
        scores,
        baseline_accuracy: baseline,
        permutations,
        seed,
    })
}

/// The `k` highest-scoring keys; ties keep canonical order.
pub fn select_top_features(ranking: &ImportanceRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.keys.len() {
        return Err(FeatureError::KTooLarge {
            k,
            available: ranking.keys.len(),
        });
    }
    let mut order: Vec<usize> = (0..ranking.keys.len()).collect();
    order.sort_by(|&a, &b| ranking.scores[b].total_cmp(&ranking.scores[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| ranking.keys[i].clone())
        .collect())
}
