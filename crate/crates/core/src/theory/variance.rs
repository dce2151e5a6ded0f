//! Variance of an averaged sequence of running means.
//!
//! For i.i.d. Bernoulli(`p`) draws, `p_hat_t` is the mean of the first `t`
//! draws and `p_tilde_t = p_obs * p_hat_t + (1 - p_obs) * (1/t) sum_{j<=t}
//! p_hat_j`. Both are unbiased; the curve reports `Var(p_tilde_t) /
//! Var(p_hat_t)` at each horizon of a grid, estimated from shared
//! replications. The averaging runs over `j = 1..=t`, so both estimators
//! coincide at `t = 1`.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::indexed_stream;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub t: usize,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub points: Vec<RatioPoint>,
    /// Standard error of `ratio[i+1] - ratio[i]`, from paired replications.
    pub diff_se: Vec<f64>,
    pub replications: usize,
}

impl RatioCurve {
    /// Whether each ratio exceeds the previous one by more than `z`
    /// standard errors of the difference.
    pub fn increasing_beyond(&self, z: f64) -> bool {
        self.points
            .windows(2)
            .zip(&self.diff_se)
            .all(|(w, se)| w[1].ratio - w[0].ratio > z * se)
    }
}

/// `(p_hat_t, p_tilde_t)` at every horizon in `grid` for one replication.
fn one_path<R: Rng + ?Sized>(p: f64, p_obs: f64, grid: &[usize], rng: &mut R) -> Vec<(f64, f64)> {
    let t_max = *grid.iter().max().unwrap_or(&0);
    let mut out = Vec::with_capacity(grid.len());
    let mut hits = 0.0;
    let mut sum_means = 0.0;
    let mut next = 0;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|i| grid[*i]);
    let mut slots = vec![(0.0, 0.0); grid.len()];
    for t in 1..=t_max {
        hits += (rng.random::<f64>() < p) as u8 as f64;
        let mean = hits / t as f64;
        sum_means += mean;
        while next < order.len() && grid[order[next]] == t {
            let tilde = p_obs * mean + (1.0 - p_obs) * sum_means / t as f64;
            slots[order[next]] = (mean, tilde);
            next += 1;
        }
    }
    out.extend(slots);
    out
}

fn influence(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
    let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
    let ratio = vy / vx;
    let psi = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (((y - my).powi(2) - vy) - ratio * ((x - mx).powi(2) - vx)) / vx)
        .collect();
    (ratio, psi)
}

fn se_of(psi: &[f64]) -> f64 {
    let n = psi.len() as f64;
    let m = psi.iter().sum::<f64>() / n;
    (psi.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// Monte Carlo ratio curve. Replication `r` uses stream `r` under `seed`.
pub fn variance_ratio_curve(
    p: f64,
    p_obs: f64,
    grid: &[usize],
    replications: usize,
    seed: u64,
) -> RatioCurve {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    assert!(p_obs > 0.0 && p_obs <= 1.0, "p_obs must lie in (0, 1]");
    assert!(grid.iter().all(|t| *t >= 1));
    let paths: Vec<Vec<(f64, f64)>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| one_path(p, p_obs, grid, &mut indexed_stream(seed, r)))
        .collect();
    let mut psis = Vec::with_capacity(grid.len());
    let mut points = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let hat: Vec<f64> = paths.iter().map(|p| p[i].0).collect();
        let tilde: Vec<f64> = paths.iter().map(|p| p[i].1).collect();
        let (ratio, psi) = influence(&hat, &tilde);
        let se = if ratio.is_nan() {
            f64::NAN
        } else {
            se_of(&psi)
        };
        points.push(RatioPoint { t, ratio, se });
        psis.push(psi);
    }
    let diff_se = psis
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
            se_of(&d)
        })
        .collect();
    RatioCurve {
        points,
        diff_se,
        replications,
    }
}

/// Exact ratio: `(1/t) sum_i (p_obs + (1 - p_obs) (H_t - H_{i-1}))^2`.
pub fn exact_variance_ratio(p_obs: f64, t: usize) -> f64 {
    let h: Vec<f64> = std::iter::once(0.0)
        .chain((1..=t).scan(0.0, |acc, j| {
            *acc += 1.0 / j as f64;
            Some(*acc)
        }))
        .collect();
    (1..=t)
        .map(|i| (p_obs + (1.0 - p_obs) * (h[t] - h[i - 1])).powi(2))
        .sum::<f64>()
        / t as f64
}
