//! Missingness mechanisms and the agent-visible observation.
//!
//! A [`Mask`] flags which of the three state dimensions `(x, y, color)` are
//! hidden at a step. Three mechanisms are supported:
//!
//! - **MCAR**: each dimension hidden independently with its own rate.
//! - **MCOLOR**: the rate depends on the true color. With
//!   `color_observable = true` only `x` and `y` can go missing (MAR); otherwise
//!   color is hidden at the same rate (NMAR).
//! - **MFOG**: one rate inside the fog region, another outside (NMAR).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gridworld::{check_probability, Color, FullState, GridLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Mask {
    pub x: bool,
    pub y: bool,
    pub color: bool,
}

impl Mask {
    pub const NONE: Mask = Mask {
        x: false,
        y: false,
        color: false,
    };
    pub const ALL: Mask = Mask {
        x: true,
        y: true,
        color: true,
    };

    pub fn new(x: bool, y: bool, color: bool) -> Self {
        Mask { x, y, color }
    }

    pub fn any(self) -> bool {
        self.x || self.y || self.color
    }

    pub fn bits(self) -> [bool; 3] {
        [self.x, self.y, self.color]
    }
}

/// Per-dimension view of a state; `None` marks a missing component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ObservedState {
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub color: Option<Color>,
}

impl ObservedState {
    pub const MISSING: ObservedState = ObservedState {
        x: None,
        y: None,
        color: None,
    };

    pub fn full(state: FullState) -> Self {
        ObservedState {
            x: Some(state.x),
            y: Some(state.y),
            color: Some(state.color),
        }
    }

    pub fn mask(&self) -> Mask {
        Mask::new(self.x.is_none(), self.y.is_none(), self.color.is_none())
    }

    pub fn is_fully_observed(&self) -> bool {
        !self.mask().any()
    }

    pub fn as_full(&self) -> Option<FullState> {
        Some(FullState::new(self.x?, self.y?, self.color?))
    }

    /// Whether `state` agrees with every observed component.
    pub fn admits(&self, state: &FullState) -> bool {
        self.x.is_none_or(|x| x == state.x)
            && self.y.is_none_or(|y| y == state.y)
            && self.color.is_none_or(|c| c == state.color)
    }

    /// Fills the missing components from `fill`, keeping observed ones.
    pub fn complete_with(&self, fill: &FullState) -> FullState {
        FullState::new(
            self.x.unwrap_or(fill.x),
            self.y.unwrap_or(fill.y),
            self.color.unwrap_or(fill.color),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "lowercase")]
pub enum MissingnessSpec {
    Mcar {
        /// Rates for `x`, `y`, `color`.
        theta: [f64; 3],
    },
    Mcolor {
        theta_green: f64,
        theta_orange: f64,
        theta_red: f64,
        #[serde(default)]
        color_observable: bool,
    },
    Mfog {
        theta_in: f64,
        theta_out: f64,
    },
}

impl Default for MissingnessSpec {
    fn default() -> Self {
        MissingnessSpec::mcar(0.0)
    }
}

impl MissingnessSpec {
    /// MCAR with the same rate on every dimension.
    pub fn mcar(theta: f64) -> Self {
        MissingnessSpec::Mcar { theta: [theta; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MissingnessSpec::Mcar { theta } => {
                for (i, t) in theta.iter().enumerate() {
                    check_probability(&format!("missingness.theta[{i}]"), *t)?;
                }
            }
            MissingnessSpec::Mcolor {
                theta_green,
                theta_orange,
                theta_red,
                ..
            } => {
                check_probability("missingness.theta_green", *theta_green)?;
                check_probability("missingness.theta_orange", *theta_orange)?;
                check_probability("missingness.theta_red", *theta_red)?;
            }
            MissingnessSpec::Mfog {
                theta_in,
                theta_out,
            } => {
                check_probability("missingness.theta_in", *theta_in)?;
                check_probability("missingness.theta_out", *theta_out)?;
            }
        }
        Ok(())
    }

    /// Marginal probability that each dimension is hidden at `state`.
    pub fn rates(&self, state: &FullState, layout: &GridLayout) -> [f64; 3] {
        match *self {
            MissingnessSpec::Mcar { theta } => theta,
            MissingnessSpec::Mcolor {
                theta_green,
                theta_orange,
                theta_red,
                color_observable,
            } => {
                let t = match state.color {
                    Color::Green => theta_green,
                    Color::Orange => theta_orange,
                    Color::Red => theta_red,
                };
                [t, t, if color_observable { 0.0 } else { t }]
            }
            MissingnessSpec::Mfog {
                theta_in,
                theta_out,
            } => {
                let t = if layout.in_fog(state.x, state.y) {
                    theta_in
                } else {
                    theta_out
                };
                [t; 3]
            }
        }
    }

    /// True when no state can ever lose a component.
    pub fn is_trivial(&self) -> bool {
        match *self {
            MissingnessSpec::Mcar { theta } => theta.iter().all(|t| *t == 0.0),
            MissingnessSpec::Mcolor {
                theta_green,
                theta_orange,
                theta_red,
                ..
            } => theta_green == 0.0 && theta_orange == 0.0 && theta_red == 0.0,
            MissingnessSpec::Mfog {
                theta_in,
                theta_out,
            } => theta_in == 0.0 && theta_out == 0.0,
        }
    }
}

/// Draws the mask for `state`. One uniform is consumed per dimension whose
/// rate is not structurally zero.
pub fn sample_mask<R: Rng + ?Sized>(
    spec: &MissingnessSpec,
    state: &FullState,
    layout: &GridLayout,
    rng: &mut R,
) -> Mask {
    let rates = spec.rates(state, layout);
    let color_fixed = matches!(
        spec,
        MissingnessSpec::Mcolor {
            color_observable: true,
            ..
        }
    );
    let x = rng.random::<f64>() < rates[0];
    let y = rng.random::<f64>() < rates[1];
    let color = !color_fixed && rng.random::<f64>() < rates[2];
    Mask { x, y, color }
}

pub fn apply_mask(state: &FullState, mask: Mask) -> ObservedState {
    ObservedState {
        x: (!mask.x).then_some(state.x),
        y: (!mask.y).then_some(state.y),
        color: (!mask.color).then_some(state.color),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::color_of;
    use crate::rng::indexed_stream;

    fn within_3se(hits: u64, n: u64, p: f64) -> bool {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        ((hits as f64 / n as f64) - p).abs() <= 3.0 * se.max(1e-12)
    }

    #[test]
    fn zero_rate_never_masks() {
        let layout = GridLayout::default();
        let s = FullState::new(3, 4, Color::Green);
        let mut rng = indexed_stream(3, 0);
        for _ in 0..1000 {
            assert_eq!(
                sample_mask(&MissingnessSpec::mcar(0.0), &s, &layout, &mut rng),
                Mask::NONE
            );
        }
    }

    #[test]
    fn mcar_any_missing_rate() {
        let layout = GridLayout::default();
        let s = FullState::new(3, 4, Color::Green);
        let spec = MissingnessSpec::mcar(0.4);
        let mut rng = indexed_stream(4, 0);
        let n = 100_000;
        let mut any = 0;
        let mut per_dim = [0u64; 3];
        for _ in 0..n {
            let m = sample_mask(&spec, &s, &layout, &mut rng);
            any += m.any() as u64;
            for (c, b) in per_dim.iter_mut().zip(m.bits()) {
                *c += b as u64;
            }
        }
        // 1 - 0.6^3
        assert!(within_3se(any, n, 0.784), "{}", any as f64 / n as f64);
        for c in per_dim {
            assert!(within_3se(c, n, 0.4));
        }
    }

    #[test]
    fn fog_outside_region_with_zero_out_rate() {
        let layout = GridLayout::default();
        let spec = MissingnessSpec::Mfog {
            theta_in: 0.5,
            theta_out: 0.0,
        };
        let mut rng = indexed_stream(5, 0);
        let outside = FullState::new(1, 1, color_of(&layout, false, 1, 1));
        let inside = FullState::new(6, 6, color_of(&layout, false, 6, 6));
        let n = 100_000;
        let mut hidden = 0;
        for _ in 0..n {
            assert_eq!(sample_mask(&spec, &outside, &layout, &mut rng), Mask::NONE);
            hidden += sample_mask(&spec, &inside, &layout, &mut rng).x as u64;
        }
        assert!(within_3se(hidden, n, 0.5));
    }

    #[test]
    fn mcolor_rates_and_observable_color() {
        let layout = GridLayout::default();
        let mar = MissingnessSpec::Mcolor {
            theta_green: 0.2,
            theta_orange: 0.4,
            theta_red: 0.6,
            color_observable: true,
        };
        let nmar = MissingnessSpec::Mcolor {
            theta_green: 0.2,
            theta_orange: 0.4,
            theta_red: 0.6,
            color_observable: false,
        };
        let red = FullState::new(3, 0, Color::Red);
        let orange = FullState::new(1, 0, Color::Orange);
        let mut rng = indexed_stream(6, 0);
        let n = 100_000;
        let (mut red_x, mut orange_y, mut nmar_color) = (0, 0, 0);
        for _ in 0..n {
            let m = sample_mask(&mar, &red, &layout, &mut rng);
            assert!(!m.color, "MAR variant must never hide color");
            red_x += m.x as u64;
            orange_y += sample_mask(&mar, &orange, &layout, &mut rng).y as u64;
            nmar_color += sample_mask(&nmar, &red, &layout, &mut rng).color as u64;
        }
        assert!(within_3se(red_x, n, 0.6));
        assert!(within_3se(orange_y, n, 0.4));
        assert!(within_3se(nmar_color, n, 0.6));
    }

    #[test]
    fn apply_mask_cases() {
        let s = FullState::new(3, 4, Color::Green);
        assert_eq!(apply_mask(&s, Mask::NONE), ObservedState::full(s));
        assert_eq!(apply_mask(&s, Mask::ALL), ObservedState::MISSING);
        let o = apply_mask(&s, Mask::new(false, true, false));
        assert_eq!(
            o,
            ObservedState {
                x: Some(3),
                y: None,
                color: Some(Color::Green)
            }
        );
        assert_eq!(o.mask(), Mask::new(false, true, false));
        assert!(o.admits(&s));
        assert!(!o.admits(&FullState::new(2, 4, Color::Green)));
    }

    #[test]
    fn validation_rejects_bad_rates() {
        assert!(MissingnessSpec::mcar(1.5).validate().is_err());
        assert!(MissingnessSpec::Mfog {
            theta_in: -0.1,
            theta_out: 0.0
        }
        .validate()
        .is_err());
        assert!(MissingnessSpec::mcar(1.0).validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn masking_preserves_observed_values(
            x in 0usize..8, y in 0usize..8, c in 0usize..3, theta in 0.0f64..1.0, seed in proptest::prelude::any::<u64>()
        ) {
            let layout = GridLayout::default();
            let s = FullState::new(x, y, Color::from_index(c));
            let mut rng = indexed_stream(seed, 0);
            let m = sample_mask(&MissingnessSpec::mcar(theta), &s, &layout, &mut rng);
            let o = apply_mask(&s, m);
            proptest::prop_assert!(o.admits(&s));
            proptest::prop_assert_eq!(o.mask(), m);
            proptest::prop_assert_eq!(o.complete_with(&s), s);
        }
    }
}
