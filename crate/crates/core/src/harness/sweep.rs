//! Parallel execution of many `(config, seed)` trials.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::trial::{run_trial, TrialResult};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub message: String,
}

/// Hyperparameter setting with the highest mean final reward for a method.
#[derive(Debug, Clone, PartialEq)]
pub struct BestChoice {
    pub method: String,
    pub config_hash: String,
    pub config_index: usize,
    pub mean_reward: f64,
    pub se_reward: f64,
    pub mean_river_steps: f64,
    pub mean_path_length: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    /// Completed trials in `(config, seed)` order.
    pub results: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub best: Vec<BestChoice>,
}

/// Runs every seed of every config on a pool of `workers` threads. Failed
/// trials are recorded and the rest continue. Results come back in input
/// order regardless of the worker count.
pub fn run_sweep(grid: &[RunConfig], workers: usize) -> Result<SweepOutcome> {
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seed_list().into_iter().map(move |s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    let outcomes: Vec<(usize, u64, Result<TrialResult>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| (i, seed, run_trial(&grid[i], seed)))
            .collect()
    });

    let mut out = SweepOutcome::default();
    let mut index_of = Vec::new();
    for (i, seed, r) in outcomes {
        match r {
            Ok(res) => {
                out.results.push(res);
                index_of.push(i);
            }
            Err(e) => out.failures.push(TrialFailure {
                label: grid[i].display_label(),
                config_hash: grid[i].hash(),
                seed,
                message: e.to_string(),
            }),
        }
    }
    out.best = best_per_method(&out.results, &index_of);
    Ok(out)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Groups results by method and picks, per method, the config with the
/// highest mean final reward across seeds. `NaN` means rank last; ties keep
/// the earlier config.
pub fn best_per_method(results: &[TrialResult], config_index: &[usize]) -> Vec<BestChoice> {
    let mut groups: BTreeMap<(String, usize), Vec<&TrialResult>> = BTreeMap::new();
    for (r, i) in results.iter().zip(config_index) {
        groups.entry((r.method.clone(), *i)).or_default().push(r);
    }
    let mut best: BTreeMap<String, BestChoice> = BTreeMap::new();
    for ((method, idx), rs) in groups {
        let rewards: Vec<f64> = rs.iter().map(|r| r.summary.mean_reward).collect();
        let (mean_reward, se_reward) = mean_and_se(&rewards);
        let river: Vec<f64> = rs.iter().map(|r| r.summary.mean_river_steps).collect();
        let path: Vec<f64> = rs.iter().map(|r| r.summary.mean_path_length).collect();
        let cand = BestChoice {
            method: method.clone(),
            config_hash: rs[0].config_hash.clone(),
            config_index: idx,
            mean_reward,
            se_reward,
            mean_river_steps: mean_and_se(&river).0,
            mean_path_length: mean_and_se(&path).0,
            seeds: rs.len(),
        };
        let score = |c: &BestChoice| {
            if c.mean_reward.is_nan() {
                f64::NEG_INFINITY
            } else {
                c.mean_reward
            }
        };
        match best.get(&method) {
            Some(cur) if score(cur) >= score(&cand) => {}
            _ => {
                best.insert(method, cand);
            }
        }
    }
    best.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentConfig, AgentVariant};
    use crate::missingness::MissingnessSpec;

    fn cfg(variant: AgentVariant, alpha: f64) -> RunConfig {
        let mut c = RunConfig::new(AgentConfig::new(variant));
        c.horizon = 1500;
        c.trials = 2;
        c.agent.alpha = alpha;
        c.agent.k = 3;
        c.missingness = MissingnessSpec::mcar(0.3);
        c
    }

    #[test]
    fn single_config_matches_run_trial() {
        let c = cfg(AgentVariant::MiSynthetic, 0.1);
        let out = run_sweep(std::slice::from_ref(&c), 1).unwrap();
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0], run_trial(&c, 0).unwrap());
        assert_eq!(out.best.len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let grid = vec![
            cfg(AgentVariant::MiSynthetic, 0.1),
            cfg(AgentVariant::SiSynthetic, 1.0),
            cfg(AgentVariant::RandomAction, 0.1),
        ];
        let a = run_sweep(&grid, 1).unwrap();
        let b = run_sweep(&grid, 4).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn failures_are_recorded_and_sweep_continues() {
        let mut bad = cfg(AgentVariant::QLearning, 0.1);
        bad.trials = 1;
        let grid = vec![bad, cfg(AgentVariant::RandomAction, 0.1)];
        let out = run_sweep(&grid, 2).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.results.len(), 2);
    }

    #[test]
    fn best_is_argmax_per_method() {
        let grid = vec![
            cfg(AgentVariant::SiSynthetic, 0.1),
            cfg(AgentVariant::SiSynthetic, 1.0),
        ];
        let out = run_sweep(&grid, 2).unwrap();
        assert_eq!(out.best.len(), 1);
        let means: Vec<f64> = (0..2)
            .map(|i| {
                let rs: Vec<f64> = out.results[2 * i..2 * i + 2]
                    .iter()
                    .map(|r| r.summary.mean_reward)
                    .collect();
                rs.iter().sum::<f64>() / 2.0
            })
            .collect();
        let want = if means[1] > means[0] { 1 } else { 0 };
        assert_eq!(out.best[0].config_index, want);
    }
}
