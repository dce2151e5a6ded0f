//! One seeded trial: environment, masking and agent on separate streams.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::agents::{Agent, StepKind};
use crate::error::Result;
use crate::gridworld::{GridLayout, GridWorld, StepOutcome};
use crate::harness::config::RunConfig;
use crate::harness::metrics::{MetricRow, MetricsTracker, Summary};
use crate::missingness::{apply_mask, sample_mask, ObservedState};
use crate::rng::{trial_stream, StreamKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub label: String,
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub steps: u64,
    pub rows: Vec<MetricRow>,
    pub summary: Summary,
    /// Memory fallbacks of the last-observed baselines.
    pub fallbacks: u64,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl PartialEq for TrialResult {
    /// Ignores wall-clock time.
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.method == other.method
            && self.config_hash == other.config_hash
            && self.seed == other.seed
            && self.steps == other.steps
            && self.summary.episodes == other.summary.episodes
            && same_bits(&self.rows, &other.rows)
            && self.fallbacks == other.fallbacks
    }
}

fn same_bits(a: &[MetricRow], b: &[MetricRow]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.t == y.t
                && x.episodes_completed == y.episodes_completed
                && x.cum_mean_reward.to_bits() == y.cum_mean_reward.to_bits()
                && x.cum_mean_river_steps.to_bits() == y.cum_mean_river_steps.to_bits()
                && x.cum_mean_path_length.to_bits() == y.cum_mean_path_length.to_bits()
        })
}

/// What an observer sees after each environment step.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub t: u64,
    /// Action index that produced this step.
    pub action: usize,
    pub outcome: &'a StepOutcome,
    pub observation: &'a ObservedState,
    pub agent: &'a Agent,
}

/// Runs the trial for `seed`.
pub fn run_trial(config: &RunConfig, seed: u64) -> Result<TrialResult> {
    run_trial_with(config, seed, |_| ControlFlow::Continue(()))
}

/// Runs the trial, calling `observer` after every step; `Break` ends the
/// trial early.
pub fn run_trial_with<F>(config: &RunConfig, seed: u64, mut observer: F) -> Result<TrialResult>
where
    F: FnMut(&StepEvent<'_>) -> ControlFlow<()>,
{
    config.validate()?;
    let clock = Instant::now();
    let layout = GridLayout::new(config.env.layout.clone())?;
    let mut env = GridWorld::new(layout.clone(), config.env.params)?;
    let actions = env.action_set();
    let mut agent = Agent::new(config.agent, &layout, actions)?;
    let mut env_rng = trial_stream(seed, StreamKind::Environment);
    let mut mask_rng = trial_stream(seed, StreamKind::Missingness);
    let mut agent_rng = trial_stream(seed, StreamKind::Agent);
    let mut metrics = MetricsTracker::new(config.sample_every);

    // start states are always fully observed
    let start = env.reset();
    let mut action = agent.begin_episode(&ObservedState::full(start), &mut agent_rng)?;
    let mut steps = 0;
    for t in 1..=config.horizon {
        let outcome = env.step(actions.get(action), &mut env_rng);
        steps = t;
        // terminal arrivals are unmasked so episodes close on a known state
        let obs = if outcome.terminal {
            ObservedState::full(outcome.next_state)
        } else {
            let mask = sample_mask(
                &config.missingness,
                &outcome.next_state,
                &layout,
                &mut mask_rng,
            );
            apply_mask(&outcome.next_state, mask)
        };
        metrics.record_step(outcome.reward, outcome.in_water);
        let kind = if outcome.terminal {
            StepKind::Terminal
        } else if outcome.truncated {
            StepKind::Truncated
        } else {
            StepKind::Continue
        };
        let next = agent.step(&obs, outcome.reward, kind, &mut agent_rng)?;
        let flow = observer(&StepEvent {
            t,
            action,
            outcome: &outcome,
            observation: &obs,
            agent: &agent,
        });
        if kind == StepKind::Continue {
            action = next.expect("continuing step yields an action");
        } else {
            metrics.end_episode();
            let start = env.reset();
            action = agent.begin_episode(&ObservedState::full(start), &mut agent_rng)?;
        }
        let stop = flow.is_break();
        metrics.sample(t, t == config.horizon || stop);
        if stop {
            break;
        }
    }

    Ok(TrialResult {
        label: config.display_label(),
        method: config.method(),
        config_hash: config.hash(),
        seed,
        steps,
        summary: metrics.summary(),
        rows: metrics.into_rows(),
        fallbacks: agent.fallbacks(),
        wall_clock: clock.elapsed(),
    })
}
