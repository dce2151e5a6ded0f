//! Reward-mean estimators in a contextual bandit with a missing context.
//!
//! Each round draws a state from `state_probs`, an action uniformly, a
//! normal reward with mean `reward_means[s][a]` and standard deviation
//! `reward_stds[s][a]`, and hides the state with probability `p_missing`.
//! Three estimators are tracked per cell:
//!
//! - `obs[s][a]`: mean over rounds where `s` was observed
//! - `question[a]`: mean over rounds where the state was hidden
//! - `imp[s][a]`: observed rounds plus hidden rounds credited `1/K` per
//!   imputed draw equal to `s`, with draws i.i.d. from `imputation_probs`
//!
//! [`run_bandit_replications`] repeats the game and compares the empirical
//! moments with the closed-form expressions, estimating the count-ratio
//! expectations those expressions contain from the same replications.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::indexed_stream;
use crate::theory::{mean_se, sample_var};

#[derive(Debug, Clone, PartialEq)]
pub struct BanditSpec {
    pub state_probs: Vec<f64>,
    /// Indexed `[state][action]`.
    pub reward_means: Vec<Vec<f64>>,
    pub reward_stds: Vec<Vec<f64>>,
    pub p_missing: f64,
    pub imputation_probs: Vec<f64>,
    pub k: usize,
    pub horizon: usize,
}

impl BanditSpec {
    pub fn n_states(&self) -> usize {
        self.state_probs.len()
    }

    pub fn n_actions(&self) -> usize {
        self.reward_means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let simplex = |name: &str, v: &[f64]| {
            if v.is_empty()
                || v.iter().any(|p| !(0.0..=1.0).contains(p))
                || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                Err(Error::config(name, "must be a probability vector"))
            } else {
                Ok(())
            }
        };
        simplex("bandit.state_probs", &self.state_probs)?;
        simplex("bandit.imputation_probs", &self.imputation_probs)?;
        if self.imputation_probs.len() != self.n_states() {
            return Err(Error::config(
                "bandit.imputation_probs",
                "length must match state_probs",
            ));
        }
        let shape_ok = |m: &Vec<Vec<f64>>| {
            m.len() == self.n_states()
                && m.iter()
                    .all(|row| row.len() == self.n_actions() && !row.is_empty())
        };
        if !shape_ok(&self.reward_means) || !shape_ok(&self.reward_stds) {
            return Err(Error::config(
                "bandit.reward_means",
                "must be states x actions",
            ));
        }
        if self
            .reward_stds
            .iter()
            .flatten()
            .any(|s| *s < 0.0 || !s.is_finite())
        {
            return Err(Error::config(
                "bandit.reward_stds",
                "must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.p_missing) {
            return Err(Error::config("bandit.p_missing", "must be a probability"));
        }
        if self.k == 0 || self.horizon == 0 {
            return Err(Error::config("bandit.k", "k and horizon must be positive"));
        }
        Ok(())
    }

    /// `mu_a = sum_s p_s mu[s][a]`.
    pub fn pooled_mean(&self, a: usize) -> f64 {
        self.state_probs
            .iter()
            .zip(&self.reward_means)
            .map(|(p, row)| p * row[a])
            .sum()
    }

    /// `Var(R(a))` across states: within-state plus between-state variance.
    pub fn pooled_var(&self, a: usize) -> f64 {
        let mu = self.pooled_mean(a);
        self.state_probs
            .iter()
            .enumerate()
            .map(|(s, p)| p * (self.reward_stds[s][a].powi(2) + self.reward_means[s][a].powi(2)))
            .sum::<f64>()
            - mu * mu
    }
}

/// Action-selection rules over the three estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectRule {
    /// Observed-only means at the observed or imputed state.
    Substitute,
    /// Observed-only means, with the pooled `?` mean when the state is
    /// hidden.
    QuestionMean,
    /// Imputation-based means at the observed or imputed state.
    ImputationMean,
}

/// Running sums for one play of the bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditEstimators {
    n_actions: usize,
    obs_sum: Vec<f64>,
    obs_n: Vec<f64>,
    q_sum: Vec<f64>,
    q_n: Vec<f64>,
    imp_sum: Vec<f64>,
    imp_hat: Vec<f64>,
    /// `sum_j (share of imputations equal to s)^2` over hidden rounds.
    imp_sq: Vec<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

impl BanditEstimators {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        let cells = n_states * n_actions;
        BanditEstimators {
            n_actions,
            obs_sum: vec![0.0; cells],
            obs_n: vec![0.0; cells],
            q_sum: vec![0.0; n_actions],
            q_n: vec![0.0; n_actions],
            imp_sum: vec![0.0; cells],
            imp_hat: vec![0.0; cells],
            imp_sq: vec![0.0; cells],
        }
    }

    /// Records one round. `imputations` is ignored when the state was
    /// observed.
    pub fn record(
        &mut self,
        state: Option<usize>,
        action: usize,
        reward: f64,
        imputations: &[usize],
    ) {
        match state {
            Some(s) => {
                let c = s * self.n_actions + action;
                self.obs_sum[c] += reward;
                self.obs_n[c] += 1.0;
            }
            None => {
                self.q_sum[action] += reward;
                self.q_n[action] += 1.0;
                let w = 1.0 / imputations.len() as f64;
                let n_states = self.obs_n.len() / self.n_actions;
                let mut share = vec![0.0; n_states];
                for &s in imputations {
                    share[s] += w;
                }
                for (s, sh) in share.into_iter().enumerate().filter(|(_, sh)| *sh > 0.0) {
                    let c = s * self.n_actions + action;
                    self.imp_sum[c] += sh * reward;
                    self.imp_hat[c] += sh;
                    self.imp_sq[c] += sh * sh;
                }
            }
        }
    }

    pub fn mu_obs(&self, s: usize, a: usize) -> Option<f64> {
        let c = s * self.n_actions + a;
        ratio(self.obs_sum[c], self.obs_n[c])
    }

    pub fn mu_question(&self, a: usize) -> Option<f64> {
        ratio(self.q_sum[a], self.q_n[a])
    }

    pub fn mu_imp(&self, s: usize, a: usize) -> Option<f64> {
        let c = s * self.n_actions + a;
        ratio(
            self.obs_sum[c] + self.imp_sum[c],
            self.obs_n[c] + self.imp_hat[c],
        )
    }

    /// Greedy action under `rule`. `observed` is the state if seen,
    /// `imputed` the stand-in used otherwise. Undefined means lose to any
    /// defined one; ties go to the lowest action.
    pub fn select(&self, rule: SelectRule, observed: Option<usize>, imputed: usize) -> usize {
        let s = observed.unwrap_or(imputed);
        let score = |a: usize| -> f64 {
            let v = match rule {
                SelectRule::Substitute => self.mu_obs(s, a),
                SelectRule::QuestionMean => match observed {
                    Some(s) => self.mu_obs(s, a),
                    None => self.mu_question(a),
                },
                SelectRule::ImputationMean => self.mu_imp(s, a),
            };
            v.unwrap_or(f64::NEG_INFINITY)
        };
        let mut best = 0;
        for a in 1..self.n_actions {
            if score(a) > score(best) {
                best = a;
            }
        }
        best
    }
}

/// Plays the bandit for `spec.horizon` rounds with uniform actions.
pub fn play_bandit<R: Rng + ?Sized>(spec: &BanditSpec, rng: &mut R) -> BanditEstimators {
    let states = WeightedIndex::new(&spec.state_probs).expect("validated state_probs");
    let imputer = WeightedIndex::new(&spec.imputation_probs).expect("validated imputation_probs");
    let mut est = BanditEstimators::new(spec.n_states(), spec.n_actions());
    let mut draws = vec![0usize; spec.k];
    for _ in 0..spec.horizon {
        let s = states.sample(rng);
        let a = rng.random_range(0..spec.n_actions());
        let noise =
            Normal::new(spec.reward_means[s][a], spec.reward_stds[s][a]).expect("finite std");
        let reward = noise.sample(rng);
        if rng.random::<f64>() < spec.p_missing {
            for d in draws.iter_mut() {
                *d = imputer.sample(rng);
            }
            est.record(None, a, reward, &draws);
        } else {
            est.record(Some(s), a, reward, &[]);
        }
    }
    est
}

/// Empirical and closed-form moments of one estimator for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub empirical_mean: f64,
    pub closed_form_mean: f64,
    /// Standard error of the paired difference `estimate - closed form`.
    pub mean_diff_se: f64,
    pub empirical_var: f64,
    pub closed_form_var: f64,
    /// Replications where the estimator was defined.
    pub used: usize,
    pub dropped: usize,
}

impl MomentCheck {
    pub fn mean_z(&self) -> f64 {
        (self.empirical_mean - self.closed_form_mean) / self.mean_diff_se
    }

    pub fn var_rel_error(&self) -> f64 {
        (self.empirical_var - self.closed_form_var).abs() / self.closed_form_var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub replications: usize,
    /// `[state][action]`: unbiasedness and `sigma^2 E[1/n_o]`.
    pub obs: Vec<Vec<MomentCheck>>,
    /// `[action]`: mean `mu_a` and `sigma_a^2 E[1/n_m]`.
    pub question: Vec<MomentCheck>,
    /// `[state][action]`: bias form and three-term variance.
    pub imp: Vec<Vec<MomentCheck>>,
}

#[derive(Debug, Clone, Copy)]
struct CellDraw {
    obs: Option<f64>,
    imp: Option<f64>,
    n_obs: f64,
    n_hat: f64,
    sum_sq: f64,
}

fn finish(values: &[f64], targets: &[f64], closed_var: f64, dropped: usize) -> MomentCheck {
    let diffs: Vec<f64> = values.iter().zip(targets).map(|(v, t)| v - t).collect();
    let (empirical_mean, _) = mean_se(values);
    let (mean_target, _) = mean_se(targets);
    let (_, mean_diff_se) = mean_se(&diffs);
    MomentCheck {
        empirical_mean,
        closed_form_mean: mean_target,
        mean_diff_se,
        empirical_var: sample_var(values),
        closed_form_var: closed_var,
        used: values.len(),
        dropped,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Runs `replications` independent plays; replication `r` uses stream `r`
/// under `seed`.
pub fn run_bandit_replications(
    spec: &BanditSpec,
    replications: usize,
    seed: u64,
) -> Result<EstimatorReport> {
    spec.validate()?;
    if replications < 2 {
        return Err(Error::config(
            "bandit.replications",
            "need at least two replications",
        ));
    }
    let plays: Vec<BanditEstimators> = (0..replications as u64)
        .into_par_iter()
        .map(|r| play_bandit(spec, &mut indexed_stream(seed, r)))
        .collect();
    let (ns, na) = (spec.n_states(), spec.n_actions());

    let mut obs = Vec::with_capacity(ns);
    let mut imp = Vec::with_capacity(ns);
    for s in 0..ns {
        let mut obs_row = Vec::with_capacity(na);
        let mut imp_row = Vec::with_capacity(na);
        for a in 0..na {
            let c = s * na + a;
            let mu_sa = spec.reward_means[s][a];
            let var_sa = spec.reward_stds[s][a].powi(2);
            let (mu_a, var_a) = (spec.pooled_mean(a), spec.pooled_var(a));
            let draws: Vec<CellDraw> = plays
                .iter()
                .map(|p| CellDraw {
                    obs: p.mu_obs(s, a),
                    imp: p.mu_imp(s, a),
                    n_obs: p.obs_n[c],
                    n_hat: p.imp_hat[c],
                    sum_sq: p.imp_sq[c],
                })
                .collect();

            let seen: Vec<&CellDraw> = draws.iter().filter(|d| d.obs.is_some()).collect();
            let values: Vec<f64> = seen.iter().map(|d| d.obs.unwrap()).collect();
            let inv_n = mean(seen.iter().map(|d| 1.0 / d.n_obs));
            obs_row.push(finish(
                &values,
                &vec![mu_sa; values.len()],
                var_sa * inv_n,
                replications - values.len(),
            ));

            let defined: Vec<&CellDraw> = draws.iter().filter(|d| d.imp.is_some()).collect();
            let values: Vec<f64> = defined.iter().map(|d| d.imp.unwrap()).collect();
            let share_imp: Vec<f64> = defined
                .iter()
                .map(|d| d.n_hat / (d.n_obs + d.n_hat))
                .collect();
            let targets: Vec<f64> = share_imp
                .iter()
                .map(|w| mu_sa + (mu_a - mu_sa) * w)
                .collect();
            let e_obs_term = mean(
                defined
                    .iter()
                    .map(|d| d.n_obs / (d.n_obs + d.n_hat).powi(2)),
            );
            let e_imp_term = mean(
                defined
                    .iter()
                    .map(|d| d.sum_sq / (d.n_obs + d.n_hat).powi(2)),
            );
            let share_obs: Vec<f64> = share_imp.iter().map(|w| 1.0 - w).collect();
            let var_share = if share_obs.len() > 1 {
                sample_var(&share_obs)
            } else {
                0.0
            };
            let closed_var =
                var_sa * e_obs_term + var_a * e_imp_term + (mu_sa - mu_a).powi(2) * var_share;
            imp_row.push(finish(
                &values,
                &targets,
                closed_var,
                replications - values.len(),
            ));
        }
        obs.push(obs_row);
        imp.push(imp_row);
    }

    let question = (0..na)
        .map(|a| {
            let defined: Vec<(f64, f64)> = plays
                .iter()
                .filter_map(|p| p.mu_question(a).map(|m| (m, p.q_n[a])))
                .collect();
            let values: Vec<f64> = defined.iter().map(|(m, _)| *m).collect();
            let inv_n = mean(defined.iter().map(|(_, n)| 1.0 / n));
            let mu_a = spec.pooled_mean(a);
            finish(
                &values,
                &vec![mu_a; values.len()],
                spec.pooled_var(a) * inv_n,
                replications - values.len(),
            )
        })
        .collect();

    Ok(EstimatorReport {
        replications,
        obs,
        question,
        imp,
    })
}
