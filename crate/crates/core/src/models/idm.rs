use serde::{Deserialize, Serialize};

use super::SubjectVehicleModel;
use crate::domain::State;

/// Smallest gap fed into the interaction term.
pub const MIN_GAP_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdmParams {
    /// Jam distance, m.
    pub min_gap: f64,
    /// Maximum acceleration, m/s².
    pub a_max: f64,
    /// Comfortable deceleration, m/s².
    pub b_comf: f64,
    /// Safe time headway, s.
    pub time_headway: f64,
    pub exponent: f64,
    /// Vehicle length, m. Only used when `subtract_vehicle_length` is set.
    pub vehicle_length: f64,
    /// Free-traffic speed, m/s.
    pub v_free: f64,
    /// Braking capability, m/s² (positive).
    pub b_cap: f64,
    /// Treat `d` as center-to-center distance and subtract the length.
    #[serde(default)]
    pub subtract_vehicle_length: bool,
}

impl IdmParams {
    pub fn with_brake_cap(b_cap: f64) -> Self {
        IdmParams {
            min_gap: 2.0,
            a_max: 0.73,
            b_comf: 1.67,
            time_headway: 2.0,
            exponent: 4.0,
            vehicle_length: 4.0,
            v_free: 30.0,
            b_cap,
            subtract_vehicle_length: false,
        }
    }

    /// Mild brake, 3 m/s².
    pub fn mild() -> Self {
        Self::with_brake_cap(3.0)
    }

    /// Normal brake, 5 m/s².
    pub fn normal() -> Self {
        Self::with_brake_cap(5.0)
    }

    /// Hard brake, 7 m/s².
    pub fn hard() -> Self {
        Self::with_brake_cap(7.0)
    }

    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("min_gap", self.min_gap),
            ("a_max", self.a_max),
            ("b_comf", self.b_comf),
            ("time_headway", self.time_headway),
            ("exponent", self.exponent),
            ("vehicle_length", self.vehicle_length),
            ("v_free", self.v_free),
            ("b_cap", self.b_cap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("IDM parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

impl Default for IdmParams {
    fn default() -> Self {
        Self::normal()
    }
}

/// Desired dynamic gap `s*`. Not floored at zero: a fast lead makes it
/// negative, and squaring it later yields braking.
pub fn desired_gap(p: &IdmParams, s: &State) -> f64 {
    let approach = s.v0 - s.v1;
    p.min_gap + s.v0 * p.time_headway + s.v0 * approach / (2.0 * (p.a_max * p.b_comf).sqrt())
}

pub fn idm_accel_unclamped(p: &IdmParams, s: &State) -> f64 {
    let gap = if p.subtract_vehicle_length {
        s.d - p.vehicle_length
    } else {
        s.d
    }
    .max(MIN_GAP_FLOOR);
    let ratio = desired_gap(p, s) / gap;
    p.a_max * (1.0 - (s.v0 / p.v_free).powf(p.exponent) - ratio * ratio)
}

/// Commanded acceleration, clamped to `[-b_cap, a_max]`.
pub fn idm_accel(p: &IdmParams, s: &State) -> f64 {
    idm_accel_unclamped(p, s).clamp(-p.b_cap, p.a_max)
}

#[derive(Debug, Clone)]
pub struct Idm {
    params: IdmParams,
    name: String,
}

impl Idm {
    pub fn new(params: IdmParams) -> Self {
        let name = [(3.0, "idm_m"), (5.0, "idm_n"), (7.0, "idm_h")]
            .iter()
            .find(|(b, _)| *b == params.b_cap)
            .map_or("idm", |(_, n)| n);
        Idm {
            params,
            name: name.to_owned(),
        }
    }

    pub fn params(&self) -> &IdmParams {
        &self.params
    }
}

impl SubjectVehicleModel for Idm {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self) {}

    fn accel(&mut self, s: &State, _dt: f64) -> f64 {
        idm_accel(&self.params, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_flow_equilibrium() {
        let p = IdmParams::normal();
        let a = idm_accel(&p, &State::new(1e9, 30.0, 30.0));
        assert!(a.abs() < 1e-9, "{a}");
    }

    #[test]
    fn standing_start_with_long_gap() {
        // independent scalar evaluation: 0.73 * (1 - (2/100)^2)
        let expected = 0.73 * (1.0 - 0.02_f64 * 0.02);
        let a = idm_accel(&IdmParams::normal(), &State::new(100.0, 0.0, 0.0));
        assert!((a - expected).abs() < 1e-12);
        assert!((a - 0.729708).abs() < 1e-6);
    }

    #[test]
    fn mild_brake_variant_brakes_behind_faster_lead() {
        let a = idm_accel(&IdmParams::mild(), &State::new(40.0, 12.0, 25.0));
        assert!(a < 0.0, "{a}");
        // magnitude stays well short of the cap
        assert!(a > -3.0);
    }

    #[test]
    fn variants_differ_only_by_clamp() {
        let s = State::new(8.0, 20.0, 5.0);
        let raw = idm_accel_unclamped(&IdmParams::mild(), &s);
        assert_eq!(raw, idm_accel_unclamped(&IdmParams::hard(), &s));
        assert_eq!(idm_accel(&IdmParams::mild(), &s), -3.0);
        assert_eq!(idm_accel(&IdmParams::normal(), &s), -5.0);
        assert_eq!(idm_accel(&IdmParams::hard(), &s), -7.0);
    }

    #[test]
    fn zero_gap_is_floored() {
        let a = idm_accel(&IdmParams::hard(), &State::new(0.0, 0.0, 0.0));
        assert_eq!(a, -7.0);
    }

    #[test]
    fn vehicle_length_switch() {
        let mut p = IdmParams::normal();
        let s = State::new(30.0, 10.0, 10.0);
        let plain = idm_accel_unclamped(&p, &s);
        p.subtract_vehicle_length = true;
        assert!(idm_accel_unclamped(&p, &s) < plain);
    }

    #[test]
    fn names_follow_brake_cap() {
        assert_eq!(Idm::new(IdmParams::mild()).name(), "idm_m");
        assert_eq!(Idm::new(IdmParams::normal()).name(), "idm_n");
        assert_eq!(Idm::new(IdmParams::hard()).name(), "idm_h");
        assert_eq!(Idm::new(IdmParams::with_brake_cap(4.0)).name(), "idm");
    }
}
