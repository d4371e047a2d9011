//! Small descriptive-statistics helpers shared by the feature and indicator code.

/// Arithmetic mean, accumulated relative to the first value so constant
/// series return that constant exactly.
pub fn mean(values: &[f64]) -> f64 {
    let Some(&origin) = values.first() else {
        return f64::NAN;
    };
    origin + values.iter().map(|v| v - origin).sum::<f64>() / values.len() as f64
}

/// Population variance (divides by n).
pub fn population_variance(values: &[f64]) -> f64 {
    let mu = mean(values);
    values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64
}

/// Sample variance (divides by n − 1).
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    population_variance(values) * n / (n - 1.0)
}

/// True when the spread is indistinguishable from rounding noise.
pub fn is_degenerate(values: &[f64]) -> bool {
    let mu = mean(values);
    let sd = population_variance(values).sqrt();
    sd <= 1e-12 * mu.abs().max(1.0)
}

/// Linear-interpolation quantile (R type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted(values), 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_five() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(mean(&v), 3.0);
        assert_eq!(population_variance(&v), 2.0);
        assert_eq!(sample_variance(&v), 2.5);
        assert_eq!(median(&v), 3.0);
        assert_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert_eq!(quantile_sorted(&v, 0.75), 4.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn constant_mean_is_exact() {
        let v = [0.1; 37];
        assert_eq!(mean(&v), 0.1);
        assert_eq!(population_variance(&v), 0.0);
        assert!(is_degenerate(&v));
        assert!(!is_degenerate(&[0.1, 0.2]));
    }
}
