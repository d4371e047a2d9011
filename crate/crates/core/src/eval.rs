//! Confusion matrices, accuracy, Cohen's kappa and pooled-variance t-tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("truth has {truth} labels, predictions have {preds}")]
    LengthMismatch { truth: usize, preds: usize },
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("each group needs at least 2 samples")]
    TooFewSamples,
    #[error("pooled variance is zero")]
    DegeneratePooledVariance,
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// `counts[i][j]` = items of true class `j` predicted as class `i`
/// (columns are the actual labels).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_indices(classes: Vec<String>, truth: &[usize], preds: &[usize]) -> Result<Self> {
        if truth.len() != preds.len() {
            return Err(EvalError::LengthMismatch {
                truth: truth.len(),
                preds: preds.len(),
            });
        }
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in truth.iter().zip(preds) {
            if t >= k || p >= k {
                return Err(EvalError::UnknownLabel(t.max(p).to_string()));
            }
            counts[p][t] += 1;
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn truth_totals(&self) -> Vec<u64> {
        (0..self.classes.len())
            .map(|j| self.counts.iter().map(|row| row[j]).sum())
            .collect()
    }

    pub fn predicted_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Each column divided by its truth total; columns with no truth stay 0.
    pub fn column_normalized(&self) -> Vec<Vec<f64>> {
        let totals = self.truth_totals();
        self.counts
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&totals)
                    .map(|(&c, &t)| if t == 0 { 0.0 } else { c as f64 / t as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion_matrix<S: AsRef<str>>(
    truth: &[S],
    preds: &[S],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if truth.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            preds: preds.len(),
        });
    }
    let index = |label: &S| {
        classes
            .iter()
            .position(|c| c == label.as_ref())
            .ok_or_else(|| EvalError::UnknownLabel(label.as_ref().to_string()))
    };
    let t = truth.iter().map(index).collect::<Result<Vec<_>>>()?;
    let p = preds.iter().map(index).collect::<Result<Vec<_>>>()?;
    ConfusionMatrix::from_indices(classes.to_vec(), &t, &p)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let trace: u64 = (0..cm.classes.len()).map(|i| cm.counts[i][i]).sum();
    Ok(trace as f64 / n as f64)
}

/// Cohen's kappa; 0 when chance agreement is already 1.
///
/// Evaluated as `(n·trace − Σ rᵢcᵢ) / (n² − Σ rᵢcᵢ)` in integers, so the
/// result is the correctly rounded quotient.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.total() as u128;
    if n == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let trace: u128 = (0..cm.classes.len()).map(|i| cm.counts[i][i] as u128).sum();
    let chance: u128 = cm
        .predicted_totals()
        .iter()
        .zip(cm.truth_totals())
        .map(|(&r, c)| r as u128 * c as u128)
        .sum();
    let denom = n * n - chance;
    if denom == 0 {
        return Ok(0.0);
    }
    let num = (n * trace) as i128 - chance as i128;
    Ok(num as f64 / denom as f64)
}

/// Mean, variance (n − 1 denominator) and size of one group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl GroupSummary {
    pub fn new(mean: f64, variance: f64, n: usize) -> Self {
        GroupSummary { mean, variance, n }
    }

    pub fn from_mean_sd(mean: f64, sd: f64, n: usize) -> Self {
        GroupSummary::new(mean, sd * sd, n)
    }

    pub fn from_samples(values: &[f64]) -> Self {
        if values.len() < 2 {
            return GroupSummary::new(values.first().copied().unwrap_or(f64::NAN), 0.0, values.len());
        }
        GroupSummary::new(
            crate::stats::mean(values),
            crate::stats::sample_variance(values),
            values.len(),
        )
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p: f64,
    pub group1: GroupSummary,
    pub group2: GroupSummary,
}

impl TTestResult {
    /// Strongest significance tier met: 0.01, 0.05 or 0.10.
    pub fn significance(&self) -> Option<f64> {
        [0.01, 0.05, 0.10].into_iter().find(|&a| self.p < a)
    }
}

/// Independent two-sample Student's t-test with pooled variance.
pub fn students_t(g1: GroupSummary, g2: GroupSummary) -> Result<TTestResult> {
    if g1.n < 2 || g2.n < 2 {
        return Err(EvalError::TooFewSamples);
    }
    let df = g1.n + g2.n - 2;
    let pooled =
        ((g1.n - 1) as f64 * g1.variance + (g2.n - 1) as f64 * g2.variance) / df as f64;
    if !(pooled > 0.0) {
        return Err(EvalError::DegeneratePooledVariance);
    }
    let se = (pooled * (1.0 / g1.n as f64 + 1.0 / g2.n as f64)).sqrt();
    let t = (g1.mean - g2.mean) / se;
    Ok(TTestResult {
        t,
        df,
        p: t_p_value(t, df as f64),
        group1: g1,
        group2: g2,
    })
}

/// Two-sided p-value `2·(1 − F(|t|; df))` of Student's t distribution.
pub fn t_p_value(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    // P(|T| > |t|) = I_{df/(df+t²)}(df/2, 1/2)
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let max_iter = 10_000 + (a.max(b).sqrt() * 20.0) as usize;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
