//! Run and grid configuration files (TOML).
//!
//! A run file:
//!
//! ```toml
//! schema_version = 1
//! label = "mi10"          # optional; derived from the agent otherwise
//! horizon = 50000
//! trials = 5
//! base_seed = 0           # seeds base_seed..base_seed+trials
//! # seeds = [3, 7]        # or an explicit list
//! sample_every = 100
//!
//! [env]
//! wind_prob = 0.1
//! flood_prob = 0.1
//! episode_cap = 2000
//! sip = false
//! # [env.layout] width, height, base_water, flood_extra_water, start,
//! # terminal, fog_region
//!
//! [missingness]
//! mechanism = "mcar"
//! theta = [0.4, 0.4, 0.4]
//!
//! [agent]
//! variant = "mi_synthetic"
//! alpha = 0.1
//! gamma = 1.0
//! k = 10
//! epsilon = 0.05
//! p_shuffle = 0.0
//! ```
//!
//! A grid file holds the same keys under `[base]` plus a `[grid]` table of
//! lists; the runs are the Cartesian product.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{AgentConfig, AgentVariant};
use crate::error::{Error, Result};
use crate::gridworld::{EnvParams, GridLayout, LayoutSpec};
use crate::missingness::MissingnessSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(flatten)]
    pub params: EnvParams,
    #[serde(default)]
    pub layout: LayoutSpec,
}

fn default_horizon() -> u64 {
    50_000
}
fn default_trials() -> usize {
    5
}
fn default_sample_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Metric rows are emitted every this many steps; 1 gives full
    /// resolution.
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub missingness: MissingnessSpec,
    pub agent: AgentConfig,
}

impl RunConfig {
    pub fn new(agent: AgentConfig) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            label: None,
            horizon: default_horizon(),
            trials: default_trials(),
            base_seed: 0,
            seeds: None,
            sample_every: default_sample_every(),
            output_dir: None,
            env: EnvConfig::default(),
            missingness: MissingnessSpec::default(),
            agent,
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(seeds) = &self.seeds {
            if seeds.is_empty() {
                return Err(Error::config("seeds", "list is empty"));
            }
        }
        if self.sample_every == 0 {
            return Err(Error::config("sample_every", "must be at least 1"));
        }
        self.env.params.validate()?;
        GridLayout::new(self.env.layout.clone())?;
        self.missingness.validate()?;
        self.agent.validate()?;
        Ok(())
    }

    /// Explicit seeds, or `trials` consecutive seeds from `base_seed`.
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.trials as u64)
                .map(|i| self.base_seed + i)
                .collect(),
        }
    }

    /// Method name used to group runs: the variant, plus `K` for the
    /// multiple-imputation variants.
    pub fn method(&self) -> String {
        match self.agent.variant {
            AgentVariant::MiSynthetic | AgentVariant::MiConservative => {
                format!("{}_k{}", self.agent.variant.name(), self.agent.k)
            }
            v => v.name().to_string(),
        }
    }

    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method())
    }

    /// SHA-256 over the canonical JSON of everything that affects the
    /// simulation. Output location, label and seed selection are excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = None;
        canon.label = None;
        canon.seeds = None;
        canon.base_seed = 0;
        canon.trials = 1;
        let json = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Lists of values to sweep. Empty lists leave the base value in place.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GridAxes {
    pub variant: Vec<AgentVariant>,
    pub epsilon: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub k: Vec<usize>,
    pub sip: Vec<bool>,
    pub p_shuffle: Vec<f64>,
    /// Uniform MCAR rate applied to all three dimensions.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub schema_version: u32,
    pub base: RunConfig,
    #[serde(default)]
    pub grid: GridAxes,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl GridSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let spec: GridSpec = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::config("schema_version", "unsupported grid schema"));
        }
        spec.base.validate()?;
        Ok(spec)
    }

    /// Cartesian product of the axes. `K` only varies the
    /// multiple-imputation variants; combinations that collapse to the same
    /// configuration are emitted once.
    pub fn expand(&self) -> Result<Vec<RunConfig>> {
        let b = &self.base;
        let g = &self.grid;
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for &variant in &axis(&g.variant, b.agent.variant) {
            for &epsilon in &axis(&g.epsilon, b.agent.epsilon) {
                for &alpha in &axis(&g.alpha, b.agent.alpha) {
                    for &gamma in &axis(&g.gamma, b.agent.gamma) {
                        for &k in &axis(&g.k, b.agent.k) {
                            for &sip in &axis(&g.sip, b.env.params.sip) {
                                for &p_shuffle in &axis(&g.p_shuffle, b.agent.p_shuffle) {
                                    for theta in axis(
                                        &g.theta.iter().map(|t| Some(*t)).collect::<Vec<_>>(),
                                        None,
                                    ) {
                                        let mut cfg = b.clone();
                                        cfg.label = None;
                                        cfg.agent.variant = variant;
                                        cfg.agent.epsilon = epsilon;
                                        cfg.agent.alpha = alpha;
                                        cfg.agent.gamma = gamma;
                                        let multi = matches!(
                                            variant,
                                            AgentVariant::MiSynthetic
                                                | AgentVariant::MiConservative
                                        );
                                        cfg.agent.k = if multi { k } else { 1 };
                                        cfg.agent.p_shuffle = if multi { p_shuffle } else { 0.0 };
                                        cfg.env.params.sip = sip;
                                        if let Some(t) = theta {
                                            cfg.missingness = MissingnessSpec::mcar(t);
                                        }
                                        cfg.validate()?;
                                        if seen.insert(cfg.hash()) {
                                            out.push(cfg);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
