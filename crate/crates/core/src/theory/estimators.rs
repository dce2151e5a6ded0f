//! Running estimators of a single transition probability under missingness.
//!
//! One `(s, a)` pair is followed for `T` visits. Each visit produces a
//! Bernoulli(`p`) outcome that is hidden with probability `p_m`. Hidden
//! outcomes are replaced by `K` imputed draws whose success probability
//! depends on the estimator variant. The estimate after visit `t` uses all
//! completed visits up to `t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorVariant {
    /// Imputes from the true probability.
    Oracle,
    /// Observed outcomes only; no imputation.
    ObservedOnly,
    /// Imputes from the current observed-only estimate.
    EstimateBased,
    /// Imputes from its own current estimate.
    Recursive,
}

impl EstimatorVariant {
    pub const ALL: [EstimatorVariant; 4] = [
        EstimatorVariant::Oracle,
        EstimatorVariant::ObservedOnly,
        EstimatorVariant::EstimateBased,
        EstimatorVariant::Recursive,
    ];
}

/// Imputation probability used before any estimate exists.
pub const UNDEFINED_FALLBACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub p: f64,
    pub p_missing: f64,
    pub k: usize,
    pub horizon: usize,
    /// Weight each imputed draw by `1/K`. Turning this off weights every
    /// draw as a full observation.
    pub fractional: bool,
}

/// Estimate after each visit; `NaN` while the denominator is zero.
pub fn transition_estimator_chain<R: Rng + ?Sized>(
    spec: &ChainSpec,
    variant: EstimatorVariant,
    rng: &mut R,
) -> Vec<f64> {
    assert!(spec.k >= 1);
    let weight = if spec.fractional {
        1.0 / spec.k as f64
    } else {
        1.0
    };
    let mut obs_hits = 0.0;
    let mut obs_n = 0.0;
    let mut imp_hits = 0.0;
    let mut mis_n = 0.0;
    let mut current = f64::NAN;
    let mut out = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let outcome = rng.random::<f64>() < spec.p;
        let missing = rng.random::<f64>() < spec.p_missing;
        if missing {
            let observed_only = if obs_n > 0.0 {
                obs_hits / obs_n
            } else {
                f64::NAN
            };
            let q = match variant {
                EstimatorVariant::Oracle => spec.p,
                EstimatorVariant::EstimateBased => observed_only,
                EstimatorVariant::Recursive => current,
                EstimatorVariant::ObservedOnly => f64::NAN,
            };
            let q = if q.is_nan() { UNDEFINED_FALLBACK } else { q };
            mis_n += 1.0;
            if variant != EstimatorVariant::ObservedOnly {
                for _ in 0..spec.k {
                    if rng.random::<f64>() < q {
                        imp_hits += weight;
                    }
                }
            }
        } else {
            obs_n += 1.0;
            obs_hits += outcome as u8 as f64;
        }
        current = match variant {
            EstimatorVariant::ObservedOnly => {
                if obs_n > 0.0 {
                    obs_hits / obs_n
                } else {
                    f64::NAN
                }
            }
            _ => (obs_hits + imp_hits) / (obs_n + mis_n),
        };
        out.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::indexed_stream;
    use crate::theory::mean_se;

    fn spec(p: f64, p_missing: f64, k: usize, horizon: usize) -> ChainSpec {
        ChainSpec {
            p,
            p_missing,
            k,
            horizon,
            fractional: true,
        }
    }

    #[test]
    fn no_missingness_gives_running_mean() {
        let s = spec(0.3, 0.0, 5, 500);
        let runs: Vec<Vec<f64>> = EstimatorVariant::ALL
            .iter()
            .map(|v| transition_estimator_chain(&s, *v, &mut indexed_stream(21, 0)))
            .collect();
        for r in &runs[1..] {
            assert_eq!(r, &runs[0]);
        }
    }

    #[test]
    fn observed_only_is_consistent() {
        let s = spec(0.3, 0.4, 5, 100_000);
        let path = transition_estimator_chain(
            &s,
            EstimatorVariant::ObservedOnly,
            &mut indexed_stream(22, 0),
        );
        let n_obs = 100_000.0 * 0.6;
        let se = (0.3f64 * 0.7 / n_obs).sqrt();
        assert!((path.last().unwrap() - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn fractional_weight_normalizes() {
        let (p, pm, k) = (0.3, 0.5, 5);
        let mut frac = Vec::new();
        let mut unit = Vec::new();
        for r in 0..200 {
            let mut s = spec(p, pm, k, 2000);
            frac.push(
                *transition_estimator_chain(
                    &s,
                    EstimatorVariant::Oracle,
                    &mut indexed_stream(23, r),
                )
                .last()
                .unwrap(),
            );
            s.fractional = false;
            unit.push(
                *transition_estimator_chain(
                    &s,
                    EstimatorVariant::Oracle,
                    &mut indexed_stream(23, r),
                )
                .last()
                .unwrap(),
            );
        }
        let (fm, fse) = mean_se(&frac);
        let (um, use_) = mean_se(&unit);
        assert!((fm - p).abs() < 3.0 * fse);
        let inflated = p * (1.0 - pm) + k as f64 * p * pm;
        assert!((um - inflated).abs() < 3.0 * use_, "{um} vs {inflated}");
    }

    #[test]
    fn undefined_until_first_observation() {
        let s = spec(0.3, 1.0, 3, 10);
        let path = transition_estimator_chain(
            &s,
            EstimatorVariant::ObservedOnly,
            &mut indexed_stream(24, 0),
        );
        assert!(path.iter().all(|v| v.is_nan()));
        let path =
            transition_estimator_chain(&s, EstimatorVariant::Recursive, &mut indexed_stream(24, 0));
        assert!(path.iter().all(|v| v.is_finite()));
    }
}
