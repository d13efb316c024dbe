//! Small descriptive-statistics helpers shared across modules.

pub(crate) fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub(crate) fn pop_sd(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Zero-mean, unit-variance copy of `x`.
///
/// A series whose spread is at or below `1e-12 * scale` is treated as
/// constant and maps to all zeros; `scale` is the magnitude the values are
/// expressed in, so rounding residue of a constant input never gets blown up
/// to unit variance.
pub(crate) fn standardize(x: &[f64], scale: f64) -> Vec<f64> {
    let m = mean(x);
    let sd = pop_sd(x);
    if sd == 0.0 || sd <= 1e-12 * scale.abs() {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - m) / sd).collect()
}

pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
