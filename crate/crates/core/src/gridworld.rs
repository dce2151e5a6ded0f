//! Stochastic grid world with a pond, a floodable bridge, wind and color
//! danger signals.
//!
//! Coordinates run `x` rightward and `y` upward from the bottom-left corner.
//! A step costs −1, entering water costs a further −10 and reaching the
//! terminal cell pays +100; the components add. Flooding is a single global
//! two-state Markov chain that flips with probability `flood_prob` once per
//! step, after the move, and submerges the extra flood cells (the bridge in
//! the default layout).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Orange,
    Red,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Green, Color::Orange, Color::Red];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            Color::Green => 0,
            Color::Orange => 1,
            Color::Red => 2,
        }
    }

    pub fn from_index(i: usize) -> Color {
        Color::ALL[i]
    }
}

/// Ground-truth state `(x, y, color)` as emitted by the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FullState {
    pub x: usize,
    pub y: usize,
    pub color: Color,
}

impl FullState {
    pub fn new(x: usize, y: usize, color: Color) -> Self {
        FullState { x, y, color }
    }
}

/// A move on the 3×3 grid of unit deltas. `(0, 0)` is stay-in-place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub dx: i8,
    pub dy: i8,
}

impl Action {
    pub const STAY: Action = Action { dx: 0, dy: 0 };

    pub const fn new(dx: i8, dy: i8) -> Self {
        Action { dx, dy }
    }

    pub fn is_stay(self) -> bool {
        self == Action::STAY
    }

    fn is_unit(self) -> bool {
        (-1..=1).contains(&self.dx) && (-1..=1).contains(&self.dy)
    }
}

/// Canonical action order. Greedy ties resolve to the earliest entry; the
/// stay action is last so that the 8-action set is a prefix of the 9-action
/// set.
pub const CANONICAL_ACTIONS: [Action; 9] = [
    Action::new(-1, -1),
    Action::new(0, -1),
    Action::new(1, -1),
    Action::new(-1, 0),
    Action::new(1, 0),
    Action::new(-1, 1),
    Action::new(0, 1),
    Action::new(1, 1),
    Action::STAY,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSet {
    sip: bool,
}

impl ActionSet {
    pub fn new(sip: bool) -> Self {
        ActionSet { sip }
    }

    pub fn sip(self) -> bool {
        self.sip
    }

    pub fn len(self) -> usize {
        if self.sip {
            9
        } else {
            8
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn get(self, index: usize) -> Action {
        assert!(
            index < self.len(),
            "action index {index} outside action set"
        );
        CANONICAL_ACTIONS[index]
    }

    pub fn index_of(self, action: Action) -> Option<usize> {
        self.actions().iter().position(|a| *a == action)
    }

    pub fn actions(self) -> &'static [Action] {
        &CANONICAL_ACTIONS[..self.len()]
    }
}

/// Serializable description of a layout. Cells are `[x, y]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutSpec {
    pub width: usize,
    pub height: usize,
    pub base_water: Vec<[usize; 2]>,
    pub flood_extra_water: Vec<[usize; 2]>,
    pub start: [usize; 2],
    pub terminal: [usize; 2],
    pub fog_region: Vec<[usize; 2]>,
}

impl Default for LayoutSpec {
    /// Pond over `2..=5 × 0..=4` with a bridge along row 2 that floods;
    /// start bottom-left, terminal bottom-right, fog over the upper-right 3×3.
    fn default() -> Self {
        let mut base_water = Vec::new();
        let mut bridge = Vec::new();
        for x in 2..=5 {
            for y in 0..=4 {
                if y == 2 {
                    bridge.push([x, y]);
                } else {
                    base_water.push([x, y]);
                }
            }
        }
        let mut fog_region = Vec::new();
        for x in 5..=7 {
            for y in 5..=7 {
                fog_region.push([x, y]);
            }
        }
        LayoutSpec {
            width: 8,
            height: 8,
            base_water,
            flood_extra_water: bridge,
            start: [0, 0],
            terminal: [7, 0],
            fog_region,
        }
    }
}

/// Validated layout with dense lookup tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    start: Cell,
    terminal: Cell,
    water_dry: Vec<bool>,
    water_flooded: Vec<bool>,
    fog: Vec<bool>,
    spec: LayoutSpec,
}

impl Default for GridLayout {
    fn default() -> Self {
        GridLayout::new(LayoutSpec::default()).expect("default layout is valid")
    }
}

impl GridLayout {
    pub fn new(spec: LayoutSpec) -> Result<Self> {
        let (w, h) = (spec.width, spec.height);
        if w == 0 || h == 0 {
            return Err(Error::config("env.layout.width", "grid must be non-empty"));
        }
        let check = |field: &str, c: [usize; 2]| -> Result<Cell> {
            if c[0] >= w || c[1] >= h {
                Err(Error::config(
                    field,
                    format!("cell [{}, {}] outside {w}x{h} grid", c[0], c[1]),
                ))
            } else {
                Ok((c[0], c[1]))
            }
        };
        let start = check("env.layout.start", spec.start)?;
        let terminal = check("env.layout.terminal", spec.terminal)?;
        let mut water_dry = vec![false; w * h];
        let mut water_flooded = vec![false; w * h];
        let mut fog = vec![false; w * h];
        for &c in &spec.base_water {
            let (x, y) = check("env.layout.base_water", c)?;
            water_dry[y * w + x] = true;
            water_flooded[y * w + x] = true;
        }
        for &c in &spec.flood_extra_water {
            let (x, y) = check("env.layout.flood_extra_water", c)?;
            water_flooded[y * w + x] = true;
        }
        for &c in &spec.fog_region {
            let (x, y) = check("env.layout.fog_region", c)?;
            fog[y * w + x] = true;
        }
        for (name, cell) in [("start", start), ("terminal", terminal)] {
            if water_flooded[cell.1 * w + cell.0] {
                return Err(Error::config(
                    format!("env.layout.{name}"),
                    "cell lies in a water set",
                ));
            }
        }
        if fog[terminal.1 * w + terminal.0] {
            return Err(Error::config(
                "env.layout.fog_region",
                "fog region must not contain the terminal cell",
            ));
        }
        Ok(GridLayout {
            width: w,
            height: h,
            start,
            terminal,
            water_dry,
            water_flooded,
            fog,
            spec,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn terminal(&self) -> Cell {
        self.terminal
    }

    pub fn spec(&self) -> &LayoutSpec {
        &self.spec
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    pub fn is_water(&self, flood: bool, x: usize, y: usize) -> bool {
        let i = y * self.width + x;
        if flood {
            self.water_flooded[i]
        } else {
            self.water_dry[i]
        }
    }

    pub fn in_fog(&self, x: usize, y: usize) -> bool {
        self.fog[y * self.width + x]
    }

    pub fn full_state(&self, flood: bool, x: usize, y: usize) -> FullState {
        FullState::new(x, y, color_of(self, flood, x, y))
    }
}

/// Danger color of a cell: green when the cell and its right neighbour are
/// dry, red when both are wet, orange otherwise. The right neighbour of the
/// last column counts as dry.
pub fn color_of(layout: &GridLayout, flood: bool, x: usize, y: usize) -> Color {
    assert!(
        layout.in_bounds(x, y),
        "color_of: cell ({x}, {y}) outside the grid"
    );
    let here = layout.is_water(flood, x, y);
    let right = x + 1 < layout.width && layout.is_water(flood, x + 1, y);
    match (here, right) {
        (false, false) => Color::Green,
        (true, true) => Color::Red,
        _ => Color::Orange,
    }
}

fn default_wind_prob() -> f64 {
    0.1
}

fn default_flood_prob() -> f64 {
    0.1
}

fn default_episode_cap() -> u64 {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    #[serde(default = "default_wind_prob")]
    pub wind_prob: f64,
    #[serde(default = "default_flood_prob")]
    pub flood_prob: f64,
    /// Steps after which an episode is cut short without the terminal bonus.
    #[serde(default = "default_episode_cap")]
    pub episode_cap: u64,
    /// Whether stay-in-place is part of the action set.
    #[serde(default)]
    pub sip: bool,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            wind_prob: default_wind_prob(),
            flood_prob: default_flood_prob(),
            episode_cap: default_episode_cap(),
            sip: false,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("env.wind_prob", self.wind_prob)?;
        check_probability("env.flood_prob", self.flood_prob)?;
        if self.episode_cap == 0 {
            return Err(Error::config("env.episode_cap", "must be at least 1"));
        }
        Ok(())
    }

    pub fn action_set(&self) -> ActionSet {
        ActionSet::new(self.sip)
    }
}

pub(crate) fn check_probability(field: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(field, format!("{p} is not a probability")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvState {
    pub agent: Cell,
    pub flood: bool,
    pub step_count: u64,
    pub episode_count: u64,
    pub episode_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub next_state: FullState,
    pub terminal: bool,
    /// The episode hit the step cap; the caller must reset.
    pub truncated: bool,
    pub in_water: bool,
    pub wind_triggered: bool,
}

pub const STEP_REWARD: f64 = -1.0;
pub const WATER_PENALTY: f64 = -10.0;
pub const TERMINAL_REWARD: f64 = 100.0;

/// Deltas at Chebyshev distance exactly one from `intended`, restricted to
/// the 3×3 unit grid, in canonical order.
pub fn wind_neighbours(intended: Action) -> Vec<Action> {
    CANONICAL_ACTIONS
        .iter()
        .copied()
        .filter(|a| {
            let d = (a.dx - intended.dx).abs().max((a.dy - intended.dy).abs());
            d == 1
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    layout: GridLayout,
    params: EnvParams,
    state: EnvState,
    needs_reset: bool,
    wind_table: Vec<Vec<Action>>,
}

impl GridWorld {
    pub fn new(layout: GridLayout, params: EnvParams) -> Result<Self> {
        params.validate()?;
        let wind_table = CANONICAL_ACTIONS
            .iter()
            .map(|a| wind_neighbours(*a))
            .collect();
        let state = EnvState {
            agent: layout.start(),
            flood: false,
            step_count: 0,
            episode_count: 0,
            episode_steps: 0,
        };
        Ok(GridWorld {
            layout,
            params,
            state,
            needs_reset: true,
            wind_table,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn action_set(&self) -> ActionSet {
        self.params.action_set()
    }

    pub fn current(&self) -> FullState {
        let (x, y) = self.state.agent;
        self.layout.full_state(self.state.flood, x, y)
    }

    /// Forces the flood flag. Used by fixtures.
    pub fn set_flood(&mut self, flood: bool) {
        self.state.flood = flood;
    }

    /// Moves the agent without touching any counters. Used by fixtures.
    pub fn place_agent(&mut self, x: usize, y: usize) {
        assert!(self.layout.in_bounds(x, y));
        self.state.agent = (x, y);
    }

    /// Returns the agent to the start cell and opens a new episode. The
    /// flood flag carries over.
    pub fn reset(&mut self) -> FullState {
        self.state.agent = self.layout.start();
        self.state.episode_count += 1;
        self.state.episode_steps = 0;
        self.needs_reset = false;
        self.current()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: Action, rng: &mut R) -> StepOutcome {
        assert!(
            !self.needs_reset,
            "step called on a finished episode; call reset first"
        );
        assert!(action.is_unit(), "action {action:?} is not a unit move");
        assert!(
            self.params.sip || !action.is_stay(),
            "stay-in-place is disabled for this environment"
        );

        let wind_triggered = rng.random::<f64>() < self.params.wind_prob;
        let delta = if wind_triggered {
            let slot = CANONICAL_ACTIONS
                .iter()
                .position(|a| *a == action)
                .expect("unit moves are canonical");
            let options = &self.wind_table[slot];
            options[rng.random_range(0..options.len())]
        } else {
            action
        };

        let (x, y) = self.state.agent;
        let nx = clamp_axis(x, delta.dx, self.layout.width());
        let ny = clamp_axis(y, delta.dy, self.layout.height());
        self.state.agent = (nx, ny);

        if rng.random::<f64>() < self.params.flood_prob {
            self.state.flood = !self.state.flood;
        }

        let in_water = self.layout.is_water(self.state.flood, nx, ny);
        let terminal = (nx, ny) == self.layout.terminal();
        let mut reward = STEP_REWARD;
        if in_water {
            reward += WATER_PENALTY;
        }
        if terminal {
            reward += TERMINAL_REWARD;
        }

        self.state.step_count += 1;
        self.state.episode_steps += 1;
        let truncated = !terminal && self.state.episode_steps >= self.params.episode_cap;
        self.needs_reset = terminal || truncated;

        StepOutcome {
            reward,
            next_state: self.current(),
            terminal,
            truncated,
            in_water,
            wind_triggered,
        }
    }
}

fn clamp_axis(pos: usize, delta: i8, len: usize) -> usize {
    let moved = pos as i64 + delta as i64;
    moved.clamp(0, len as i64 - 1) as usize
}
