//! Per-episode metrics and their cumulative means.
//!
//! An episode contributes its total reward, the number of steps that ended
//! in water, and its length in steps (terminal step included). Cumulative
//! means are taken over completed episodes only, so they are `NaN` before
//! the first episode ends. Capped episodes count as completed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub t: u64,
    pub episodes_completed: u64,
    pub cum_mean_reward: f64,
    pub cum_mean_river_steps: f64,
    pub cum_mean_path_length: f64,
}

/// Final cumulative means of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: u64,
    pub mean_reward: f64,
    pub mean_river_steps: f64,
    pub mean_path_length: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsTracker {
    sample_every: u64,
    ep_reward: f64,
    ep_river: u64,
    ep_len: u64,
    episodes: u64,
    sum_reward: f64,
    sum_river: f64,
    sum_len: f64,
    rows: Vec<MetricRow>,
}

impl MetricsTracker {
    pub fn new(sample_every: u64) -> Self {
        assert!(sample_every >= 1);
        MetricsTracker {
            sample_every,
            ..Default::default()
        }
    }

    pub fn record_step(&mut self, reward: f64, in_water: bool) {
        self.ep_reward += reward;
        self.ep_river += in_water as u64;
        self.ep_len += 1;
    }

    pub fn end_episode(&mut self) {
        self.episodes += 1;
        self.sum_reward += self.ep_reward;
        self.sum_river += self.ep_river as f64;
        self.sum_len += self.ep_len as f64;
        self.ep_reward = 0.0;
        self.ep_river = 0;
        self.ep_len = 0;
    }

    fn cum(&self, sum: f64) -> f64 {
        if self.episodes == 0 {
            f64::NAN
        } else {
            sum / self.episodes as f64
        }
    }

    pub fn current(&self, t: u64) -> MetricRow {
        MetricRow {
            t,
            episodes_completed: self.episodes,
            cum_mean_reward: self.cum(self.sum_reward),
            cum_mean_river_steps: self.cum(self.sum_river),
            cum_mean_path_length: self.cum(self.sum_len),
        }
    }

    /// Records a row if `t` falls on the sampling grid or is the last step.
    pub fn sample(&mut self, t: u64, last: bool) {
        if t.is_multiple_of(self.sample_every) || last {
            let row = self.current(t);
            self.rows.push(row);
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            episodes: self.episodes,
            mean_reward: self.cum(self.sum_reward),
            mean_river_steps: self.cum(self.sum_river),
            mean_path_length: self.cum(self.sum_len),
        }
    }

    pub fn into_rows(self) -> Vec<MetricRow> {
        self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_three_episodes() {
        let mut m = MetricsTracker::new(1);
        // episode 1: dry step, wet step, terminal
        m.record_step(-1.0, false);
        m.record_step(-11.0, true);
        m.record_step(99.0, false);
        m.end_episode();
        // episode 2: straight to terminal
        m.record_step(99.0, false);
        m.end_episode();
        // episode 3: capped after four steps, two wet
        for wet in [true, false, true, false] {
            m.record_step(if wet { -11.0 } else { -1.0 }, wet);
        }
        m.end_episode();
        let s = m.summary();
        assert_eq!(s.episodes, 3);
        assert_eq!(s.mean_reward, (87.0 + 99.0 - 24.0) / 3.0);
        assert_eq!(s.mean_river_steps, 1.0);
        assert_eq!(s.mean_path_length, 8.0 / 3.0);
    }

    #[test]
    fn nan_before_first_episode_and_sampling_grid() {
        let mut m = MetricsTracker::new(3);
        for t in 1..=7 {
            m.record_step(-1.0, false);
            if t == 4 {
                m.end_episode();
            }
            m.sample(t, t == 7);
        }
        let rows = m.into_rows();
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![3, 6, 7]);
        assert!(rows[0].cum_mean_reward.is_nan());
        assert_eq!(rows[1].cum_mean_reward, -4.0);
        assert_eq!(rows[2].episodes_completed, 1);
    }
}
