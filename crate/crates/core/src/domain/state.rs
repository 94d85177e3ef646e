use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of the car-following state space.
///
/// `d` is the bumper-to-bumper gap to the lead vehicle in meters, `v0` the
/// follower (subject vehicle) speed and `v1` the lead speed, both in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct State {
    pub d: f64,
    pub v0: f64,
    pub v1: f64,
}

impl State {
    pub const fn new(d: f64, v0: f64, v1: f64) -> Self {
        State { d, v0, v1 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.d, self.v0, self.v1]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        State::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.v0.is_finite() && self.v1.is_finite()
    }
}

impl From<[f64; 3]> for State {
    fn from(a: [f64; 3]) -> Self {
        State::from_array(a)
    }
}

impl From<State> for [f64; 3] {
    fn from(s: State) -> Self {
        s.to_array()
    }
}

/// Axis-aligned box of admissible states: `[d_min, d_max] x [v_min, v_max]^2`
/// in the usual configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBounds {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl StateBounds {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        let b = StateBounds { lower, upper };
        b.check()?;
        Ok(b)
    }

    /// `d in [0, d_max]`, both speeds in `[0, v_max]`.
    pub fn car_following(d_max: f64, v_max: f64) -> Result<Self> {
        StateBounds::new([0.0, 0.0, 0.0], [d_max, v_max, v_max])
    }

    pub fn check(&self) -> Result<()> {
        for i in 0..3 {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidBounds(format!("dimension {i} is not finite")));
            }
            if lo >= hi {
                return Err(Error::InvalidBounds(format!(
                    "dimension {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn range(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, s: &State) -> bool {
        let a = s.to_array();
        (0..3).all(|i| a[i] >= self.lower[i] && a[i] <= self.upper[i])
    }

    pub fn clip(&self, s: &State) -> State {
        let a = s.to_array();
        State::from_array(std::array::from_fn(|i| {
            a[i].clamp(self.lower[i], self.upper[i])
        }))
    }

    pub fn d_max(&self) -> f64 {
        self.upper[0]
    }
}

/// Per-dimension neighborhood half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Delta(pub [f64; 3]);

impl Delta {
    pub fn new(half_widths: [f64; 3]) -> Result<Self> {
        let d = Delta(half_widths);
        d.check()?;
        Ok(d)
    }

    pub fn check(&self) -> Result<()> {
        if self.0.iter().all(|w| w.is_finite() && *w > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidDelta(format!(
                "every half-width must be positive and finite, got {:?}",
                self.0
            )))
        }
    }
}

impl From<[f64; 3]> for Delta {
    fn from(a: [f64; 3]) -> Self {
        Delta(a)
    }
}

impl From<Delta> for [f64; 3] {
    fn from(d: Delta) -> Self {
        d.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_reject_inverted_dimension() {
        assert!(StateBounds::new([0.0, 0.0, 0.0], [100.0, 0.0, 30.0]).is_err());
        assert!(StateBounds::new([0.0, 0.0, 0.0], [100.0, 30.0, f64::NAN]).is_err());
        assert!(StateBounds::car_following(100.0, 30.0).is_ok());
    }

    #[test]
    fn delta_must_be_positive() {
        assert!(Delta::new([10.0, 0.0, 6.0]).is_err());
        assert!(Delta::new([10.0, -1.0, 6.0]).is_err());
        assert!(Delta::new([10.0, 6.0, 6.0]).is_ok());
    }

    #[test]
    fn clip_saturates_each_dimension() {
        let b = StateBounds::car_following(100.0, 30.0).unwrap();
        let s = b.clip(&State::new(120.0, -1.0, 12.0));
        assert_eq!(s, State::new(100.0, 0.0, 12.0));
        assert!(b.contains(&s));
    }

    #[test]
    fn state_serializes_as_triple() {
        let s = State::new(1.5, 2.0, 3.25);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1.5,2.0,3.25]");
        assert_eq!(serde_json::from_str::<State>(&json).unwrap(), s);
    }
}
