//! Tabular online Q-learning when parts of the state go missing.
//!
//! The crate bundles a stochastic 8×8 grid world with flooding, wind and
//! color danger signals, three missingness mechanisms (MCAR, color-dependent,
//! fog), a family of agents built around an ensemble of imputation pathways,
//! numerical oracles for the supporting estimator theory, and a seeded
//! experiment harness that writes CSV metrics and SVG charts.
//!
//! Module map:
//!
//! - [`gridworld`]: environment dynamics and layout
//! - [`missingness`]: mask sampling and observed views
//! - [`tabular`]: Q-table, transition counts and their update rules
//! - [`agents`]: imputation ensembles, baselines, missing-as-state
//! - [`theory`]: Monte Carlo and closed-form checks of the estimator theory
//! - [`harness`]: trial runner, sweeps, CSV/SVG output
//! - [`verify`]: the pass/fail check table behind `mirl verify`

pub mod agents;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod missingness;
pub mod rng;
pub mod tabular;
pub mod theory;
pub mod verify;

pub use agents::{Agent, AgentConfig, AgentVariant, PathwayEnsemble, TUpdate};
pub use error::{Error, Result};
pub use gridworld::{
    Action, ActionSet, Color, EnvParams, FullState, GridLayout, GridWorld, StepOutcome,
};
pub use harness::{run_sweep, run_trial, RunConfig, TrialResult};
pub use missingness::{Mask, MissingnessSpec, ObservedState};
pub use tabular::{QTable, StateSpace, TDParams, TransitionCounts};
