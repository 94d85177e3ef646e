//! Switched cruise/emergency-braking controller.
//!
//! Above the TTC threshold a discrete PI loop tracks a desired time headway,
//! capped by a proportional pull toward the free-traffic speed. At or below
//! the threshold the emergency branch ramps toward full braking. Every change
//! of the command is rate limited by the jerk bound.

use serde::{Deserialize, Serialize};

use super::SubjectVehicleModel;
use crate::domain::State;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccAebParams {
    /// Emergency branch engages when TTC is at or below this, s.
    pub ttc_threshold: f64,
    /// Proportional gain on time-headway error, m/s³.
    pub kp: f64,
    /// Integral gain on time-headway error, m/s⁴.
    pub ki: f64,
    /// Bound on the integrated headway error, s².
    pub integral_limit: f64,
    pub desired_time_headway: f64,
    /// Gain of the free-speed pull, 1/s.
    pub speed_gain: f64,
    /// Cruise acceleration cap, m/s².
    pub a_max_acc: f64,
    /// Cruise deceleration cap, m/s².
    pub b_comf_acc: f64,
    /// Emergency braking capability, m/s².
    pub b_max: f64,
    /// Bound on the command change rate, m/s³.
    pub jerk_limit: f64,
    pub v_free: f64,
    /// Speed floor in the time-headway computation, m/s.
    pub v_eps: f64,
}

impl Default for AccAebParams {
    fn default() -> Self {
        AccAebParams {
            ttc_threshold: 0.8,
            kp: 0.8,
            ki: 0.1,
            integral_limit: 10.0,
            desired_time_headway: 1.5,
            speed_gain: 0.5,
            a_max_acc: 2.0,
            b_comf_acc: 3.0,
            b_max: 10.0,
            jerk_limit: 16.0,
            v_free: 30.0,
            v_eps: 0.5,
        }
    }
}

impl AccAebParams {
    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("ttc_threshold", self.ttc_threshold),
            ("integral_limit", self.integral_limit),
            ("desired_time_headway", self.desired_time_headway),
            ("a_max_acc", self.a_max_acc),
            ("b_comf_acc", self.b_comf_acc),
            ("b_max", self.b_max),
            ("jerk_limit", self.jerk_limit),
            ("v_free", self.v_free),
            ("v_eps", self.v_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!(
                    "ACC-AEB parameter {name} must be positive, got {v}"
                ));
            }
        }
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("speed_gain", self.speed_gain),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!(
                    "ACC-AEB parameter {name} must be non-negative, got {v}"
                ));
            }
        }
        Ok(())
    }
}

/// Time to collision, infinite when not closing.
pub fn time_to_collision(s: &State) -> f64 {
    if s.v0 > s.v1 {
        s.d / (s.v0 - s.v1)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccAebMode {
    Cruise,
    Emergency,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccAebMemory {
    pub integral: f64,
    pub prev_cmd: f64,
}

/// One controller step. Updates `memory` and returns the new command.
pub fn acc_aeb_accel(
    p: &AccAebParams,
    s: &State,
    dt: f64,
    memory: &mut AccAebMemory,
) -> (f64, AccAebMode) {
    let ttc = time_to_collision(s);
    let (target, mode) = if ttc > p.ttc_threshold {
        let err = s.d / s.v0.max(p.v_eps) - p.desired_time_headway;
        memory.integral = (memory.integral + err * dt).clamp(-p.integral_limit, p.integral_limit);
        let gap_cmd = p.kp * err + p.ki * memory.integral;
        let speed_cmd = p.speed_gain * (p.v_free - s.v0);
        (
            gap_cmd.min(speed_cmd).clamp(-p.b_comf_acc, p.a_max_acc),
            AccAebMode::Cruise,
        )
    } else {
        memory.integral = 0.0;
        (-p.b_max, AccAebMode::Emergency)
    };
    let max_step = p.jerk_limit * dt;
    let cmd = memory.prev_cmd + (target - memory.prev_cmd).clamp(-max_step, max_step);
    memory.prev_cmd = cmd;
    (cmd, mode)
}

#[derive(Debug, Clone)]
pub struct AccAeb {
    params: AccAebParams,
    memory: AccAebMemory,
    last_mode: Option<AccAebMode>,
}

impl AccAeb {
    pub fn new(params: AccAebParams) -> Self {
        AccAeb {
            params,
            memory: AccAebMemory::default(),
            last_mode: None,
        }
    }

    pub fn params(&self) -> &AccAebParams {
        &self.params
    }

    pub fn last_mode(&self) -> Option<AccAebMode> {
        self.last_mode
    }
}

impl SubjectVehicleModel for AccAeb {
    fn name(&self) -> &str {
        "acc_aeb"
    }

    fn reset(&mut self) {
        self.memory = AccAebMemory::default();
        self.last_mode = None;
    }

    fn accel(&mut self, s: &State, dt: f64) -> f64 {
        let (cmd, mode) = acc_aeb_accel(&self.params, s, dt, &mut self.memory);
        self.last_mode = Some(mode);
        cmd
    }
}
