//! Agents acting on partially observed states.
//!
//! The imputation agents keep `K` pathway states. Each step they complete the
//! new observation once per pathway from the learned transition counts, vote
//! on an action with the pre-update Q-table, apply `K` fractional Q updates,
//! update the counts, and optionally shuffle the pathways. Single imputation
//! is the `K = 1` case.
//!
//! The baselines are: acting at random while the state is incomplete,
//! substituting the last fully observed state (V1) or the last seen value per
//! dimension (V2), and treating "missing" as an extra value of each
//! dimension. [`AgentVariant::QLearning`] is plain complete-data Q-learning
//! and refuses partial observations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{check_probability, ActionSet, Color, FullState, GridLayout};
use crate::missingness::ObservedState;
use crate::tabular::{
    greedy_action, q_update_fractional, q_update_standard, sample_completion,
    t_update_conservative, t_update_synthetic, uniform_completion, QTable, StateSpace, TDParams,
    TransitionCounts,
};

/// How imputation agents feed the transition counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TUpdate {
    /// `1/K` per pathway tuple.
    Synthetic,
    /// Fully observed tuples only.
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentVariant {
    MiSynthetic,
    MiConservative,
    SiSynthetic,
    SiConservative,
    RandomAction,
    LastObservedV1,
    LastObservedV2,
    MissingAsState,
    QLearning,
}

impl AgentVariant {
    pub const ALL: [AgentVariant; 9] = [
        AgentVariant::MiSynthetic,
        AgentVariant::MiConservative,
        AgentVariant::SiSynthetic,
        AgentVariant::SiConservative,
        AgentVariant::RandomAction,
        AgentVariant::LastObservedV1,
        AgentVariant::LastObservedV2,
        AgentVariant::MissingAsState,
        AgentVariant::QLearning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentVariant::MiSynthetic => "mi_synthetic",
            AgentVariant::MiConservative => "mi_conservative",
            AgentVariant::SiSynthetic => "si_synthetic",
            AgentVariant::SiConservative => "si_conservative",
            AgentVariant::RandomAction => "random_action",
            AgentVariant::LastObservedV1 => "last_observed_v1",
            AgentVariant::LastObservedV2 => "last_observed_v2",
            AgentVariant::MissingAsState => "missing_as_state",
            AgentVariant::QLearning => "q_learning",
        }
    }

    pub fn parse(name: &str) -> Option<AgentVariant> {
        AgentVariant::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Count-update rule for the imputation variants.
    pub fn t_update(self) -> Option<TUpdate> {
        match self {
            AgentVariant::MiSynthetic | AgentVariant::SiSynthetic => Some(TUpdate::Synthetic),
            AgentVariant::MiConservative | AgentVariant::SiConservative => {
                Some(TUpdate::Conservative)
            }
            _ => None,
        }
    }

    pub fn is_single_imputation(self) -> bool {
        matches!(
            self,
            AgentVariant::SiSynthetic | AgentVariant::SiConservative
        )
    }
}

fn default_alpha() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    1.0
}
fn default_k() -> usize {
    10
}
fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub variant: AgentVariant,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Pathway count for the multiple-imputation variants; single
    /// imputation always uses one.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub p_shuffle: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::new(AgentVariant::MiSynthetic)
    }
}

impl AgentConfig {
    pub fn new(variant: AgentVariant) -> Self {
        AgentConfig {
            variant,
            alpha: default_alpha(),
            gamma: default_gamma(),
            k: default_k(),
            epsilon: default_epsilon(),
            p_shuffle: 0.0,
        }
    }

    /// Number of pathways the agent actually keeps.
    pub fn pathways(&self) -> usize {
        match self.variant {
            AgentVariant::MiSynthetic | AgentVariant::MiConservative => self.k,
            _ => 1,
        }
    }

    pub fn td_params(&self) -> TDParams {
        TDParams::new(self.alpha, self.gamma, self.pathways())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("agent.k", "need at least one pathway"));
        }
        self.td_params().validate()?;
        check_probability("agent.epsilon", self.epsilon)?;
        check_probability("agent.p_shuffle", self.p_shuffle)?;
        Ok(())
    }
}

/// The `K` imputed states of the current step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathwayEnsemble {
    states: Vec<FullState>,
}

impl PathwayEnsemble {
    /// `k` copies of `state`.
    pub fn synced(k: usize, state: FullState) -> Self {
        assert!(k >= 1);
        PathwayEnsemble {
            states: vec![state; k],
        }
    }

    pub fn from_states(states: Vec<FullState>) -> Self {
        assert!(!states.is_empty());
        PathwayEnsemble { states }
    }

    pub fn k(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FullState] {
        &self.states
    }

    pub fn is_synced(&self) -> bool {
        self.states.windows(2).all(|w| w[0] == w[1])
    }
}

/// Completes `obs` once per pathway, conditioning each draw on that
/// pathway's previous state. A fully observed `obs` syncs every pathway
/// without consuming randomness.
pub fn impute_pathways<R: Rng + ?Sized>(
    ensemble: &PathwayEnsemble,
    obs: &ObservedState,
    counts: &TransitionCounts,
    prev_action: usize,
    space: &StateSpace,
    rng: &mut R,
) -> PathwayEnsemble {
    if let Some(full) = obs.as_full() {
        return PathwayEnsemble::synced(ensemble.k(), full);
    }
    let states = ensemble
        .states
        .iter()
        .map(|s| sample_completion(counts, space.index(s), prev_action, obs, space, rng))
        .collect();
    PathwayEnsemble { states }
}

/// Greedy action per pathway, then a uniform pick among the votes; with
/// probability `epsilon` a uniform action instead. The exploration coin is
/// always drawn; a vote index only when the votes disagree.
pub fn vote_action<R: Rng + ?Sized>(
    q: &QTable,
    ensemble: &PathwayEnsemble,
    space: &StateSpace,
    epsilon: f64,
    actions: ActionSet,
    rng: &mut R,
) -> usize {
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..actions.len());
    }
    let votes: Vec<usize> = ensemble
        .states
        .iter()
        .map(|s| greedy_action(q, space.index(s)))
        .collect();
    if votes.iter().all(|v| *v == votes[0]) {
        return votes[0];
    }
    votes[rng.random_range(0..votes.len())]
}

/// With probability `p_shuffle`, permutes the pathways uniformly at random.
pub fn mix_pathways<R: Rng + ?Sized>(ensemble: &mut PathwayEnsemble, p_shuffle: f64, rng: &mut R) {
    if ensemble.k() > 1 && p_shuffle > 0.0 && rng.random::<f64>() < p_shuffle {
        ensemble.states.shuffle(rng);
    }
}

/// Index of `obs` in the `?`-augmented space.
pub fn augment_state(obs: &ObservedState, space: &StateSpace) -> usize {
    space.augmented_index(obs)
}

fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q.n_actions())
    } else {
        greedy_action(q, s)
    }
}

/// How the step that produced an observation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// The episode goes on; the agent must pick the next action.
    Continue,
    /// Terminal state reached; the bootstrap term is dropped.
    Terminal,
    /// Episode cut by the step cap; the bootstrap term is kept.
    Truncated,
}

#[derive(Debug, Clone, Default)]
struct LastSeen {
    full: Option<FullState>,
    x: Option<usize>,
    y: Option<usize>,
    color: Option<Color>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    td: TDParams,
    actions: ActionSet,
    space: StateSpace,
    augmented: StateSpace,
    q: QTable,
    counts: TransitionCounts,
    ensemble: PathwayEnsemble,
    pairs: Vec<(usize, usize)>,
    prev_full: bool,
    prev_obs: ObservedState,
    prev_index: usize,
    prev_action: usize,
    memory: LastSeen,
    substituted: Option<FullState>,
    fallbacks: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, layout: &GridLayout, actions: ActionSet) -> Result<Self> {
        config.validate()?;
        let space = StateSpace::full(layout.width(), layout.height());
        let augmented = StateSpace::augmented(layout.width(), layout.height());
        let q_states = if config.variant == AgentVariant::MissingAsState {
            augmented.len()
        } else {
            space.len()
        };
        let count_states = if config.variant.t_update().is_some() {
            space.len()
        } else {
            0
        };
        let start = layout.full_state(false, layout.start().0, layout.start().1);
        Ok(Agent {
            config,
            td: config.td_params(),
            actions,
            space,
            augmented,
            q: QTable::new(q_states, actions.len()),
            counts: TransitionCounts::new(count_states, actions.len()),
            ensemble: PathwayEnsemble::synced(config.pathways(), start),
            pairs: Vec::with_capacity(config.pathways()),
            prev_full: true,
            prev_obs: ObservedState::full(start),
            prev_index: 0,
            prev_action: 0,
            memory: LastSeen::default(),
            substituted: None,
            fallbacks: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    /// Transition counts; empty for variants that keep none.
    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }

    pub fn ensemble(&self) -> &PathwayEnsemble {
        &self.ensemble
    }

    pub fn prev_action(&self) -> usize {
        self.prev_action
    }

    /// State the last-observed baselines acted on at the latest step.
    pub fn substituted(&self) -> Option<FullState> {
        self.substituted
    }

    /// Times a last-observed baseline had no memory for a missing component
    /// and drew it uniformly instead.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    /// Receives the first observation of an episode and returns the first
    /// action index.
    pub fn begin_episode<R: Rng + ?Sized>(
        &mut self,
        obs: &ObservedState,
        rng: &mut R,
    ) -> Result<usize> {
        let eps = self.config.epsilon;
        let action = match self.config.variant {
            v if v.t_update().is_some() => {
                self.ensemble = match obs.as_full() {
                    Some(full) => PathwayEnsemble::synced(self.config.pathways(), full),
                    None => PathwayEnsemble::from_states(
                        (0..self.config.pathways())
                            .map(|_| uniform_completion(obs, &self.space, rng))
                            .collect(),
                    ),
                };
                self.prev_full = obs.is_fully_observed();
                vote_action(&self.q, &self.ensemble, &self.space, eps, self.actions, rng)
            }
            AgentVariant::RandomAction => {
                self.prev_obs = *obs;
                match obs.as_full() {
                    Some(full) => epsilon_greedy(&self.q, self.space.index(&full), eps, rng),
                    None => rng.random_range(0..self.actions.len()),
                }
            }
            _ => {
                let s = self.single_state_index(obs, rng)?;
                self.prev_index = s;
                epsilon_greedy(&self.q, s, eps, rng)
            }
        };
        self.prev_action = action;
        Ok(action)
    }

    /// Consumes the observation and reward that followed the previous
    /// action. Returns the next action while the episode continues.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        obs: &ObservedState,
        reward: f64,
        kind: StepKind,
        rng: &mut R,
    ) -> Result<Option<usize>> {
        let terminal = kind == StepKind::Terminal;
        let go_on = kind == StepKind::Continue;
        let eps = self.config.epsilon;
        let a = self.prev_action;
        let action = match self.config.variant {
            v if v.t_update().is_some() => {
                let next = impute_pathways(&self.ensemble, obs, &self.counts, a, &self.space, rng);
                let action =
                    go_on.then(|| vote_action(&self.q, &next, &self.space, eps, self.actions, rng));
                self.pairs.clear();
                self.pairs.extend(
                    self.ensemble
                        .states
                        .iter()
                        .zip(&next.states)
                        .map(|(s, n)| (self.space.index(s), self.space.index(n))),
                );
                q_update_fractional(&mut self.q, &self.pairs, a, reward, terminal, &self.td);
                let now_full = obs.is_fully_observed();
                match v.t_update() {
                    Some(TUpdate::Synthetic) => {
                        t_update_synthetic(&mut self.counts, &self.pairs, a, self.td.k)
                    }
                    _ => {
                        let (s, n) = self.pairs[0];
                        t_update_conservative(
                            &mut self.counts,
                            s,
                            a,
                            n,
                            self.prev_full && now_full,
                        );
                    }
                }
                self.ensemble = next;
                self.prev_full = now_full;
                if go_on {
                    mix_pathways(&mut self.ensemble, self.config.p_shuffle, rng);
                }
                action
            }
            AgentVariant::RandomAction => {
                let current = obs.as_full().map(|f| self.space.index(&f));
                let action = go_on.then(|| match current {
                    Some(s) => epsilon_greedy(&self.q, s, eps, rng),
                    None => rng.random_range(0..self.actions.len()),
                });
                if let (Some(prev), Some(s_next)) = (self.prev_obs.as_full(), current) {
                    let s = self.space.index(&prev);
                    q_update_standard(&mut self.q, s, a, reward, s_next, terminal, &self.td);
                }
                self.prev_obs = *obs;
                action
            }
            _ => {
                let s_next = self.single_state_index(obs, rng)?;
                let action = go_on.then(|| epsilon_greedy(&self.q, s_next, eps, rng));
                q_update_standard(
                    &mut self.q,
                    self.prev_index,
                    a,
                    reward,
                    s_next,
                    terminal,
                    &self.td,
                );
                self.prev_index = s_next;
                action
            }
        };
        if let Some(a) = action {
            self.prev_action = a;
        }
        Ok(action)
    }

    /// Table index for the variants that act on one state per step.
    fn single_state_index<R: Rng + ?Sized>(
        &mut self,
        obs: &ObservedState,
        rng: &mut R,
    ) -> Result<usize> {
        match self.config.variant {
            AgentVariant::QLearning => {
                obs.as_full()
                    .map(|f| self.space.index(&f))
                    .ok_or(Error::Unobservable {
                        variant: AgentVariant::QLearning.name(),
                    })
            }
            AgentVariant::MissingAsState => Ok(augment_state(obs, &self.augmented)),
            AgentVariant::LastObservedV1 => {
                if let Some(full) = obs.as_full() {
                    self.memory.full = Some(full);
                }
                let s = match self.memory.full {
                    Some(full) => full,
                    None => {
                        self.fallbacks += 1;
                        uniform_completion(obs, &self.space, rng)
                    }
                };
                self.substituted = Some(s);
                Ok(self.space.index(&s))
            }
            AgentVariant::LastObservedV2 => {
                let m = &mut self.memory;
                m.x = obs.x.or(m.x);
                m.y = obs.y.or(m.y);
                m.color = obs.color.or(m.color);
                let filled = ObservedState {
                    x: m.x,
                    y: m.y,
                    color: m.color,
                };
                if !filled.is_fully_observed() {
                    self.fallbacks += 1;
                }
                let s = uniform_completion(&filled, &self.space, rng);
                self.substituted = Some(s);
                Ok(self.space.index(&s))
            }
            v => unreachable!("{} does not act on a single state", v.name()),
        }
    }
}
