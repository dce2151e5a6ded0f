//! Numerical checks of the estimator theory behind the agents.
//!
//! - [`coeffs`]: the polynomial expansion of `K` fractional Q sub-updates
//! - [`estimators`]: running transition-probability estimators with and
//!   without imputed draws
//! - [`variance`]: variance of averaged running means against the plain mean
//! - [`bandit`]: observed-only, `?`-pooled and imputation-based reward means
//!   in a contextual bandit

pub mod bandit;
pub mod coeffs;
pub mod estimators;
pub mod variance;

/// Mean and standard error of the mean.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance.
pub(crate) fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
