//! Two-vehicle longitudinal scenario runs.

use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::domain::{State, StateBounds};
use crate::error::{Error, Result};
use crate::models::SubjectVehicleModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Step period in seconds.
    pub dt: f64,
    /// Maximum number of steps per run.
    pub horizon: usize,
    pub bounds: StateBounds,
    /// A run fails once the gap is at or below this value.
    #[serde(default)]
    pub collision_headway: f64,
}

impl SimConfig {
    /// 10 Hz, 300 steps, `d in [0, 100]`, speeds in `[0, 30]`.
    pub fn car_following_default() -> Self {
        SimConfig {
            dt: 0.1,
            horizon: 300,
            bounds: StateBounds::car_following(100.0, 30.0).expect("valid"),
            collision_headway: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.horizon < 2 {
            return Err(Error::Config(format!(
                "horizon must be at least 2 steps, got {}",
                self.horizon
            )));
        }
        if !self.collision_headway.is_finite() {
            return Err(Error::Config("collision_headway must be finite".into()));
        }
        self.bounds.check()
    }

    pub fn in_failure_set(&self, s: &State) -> bool {
        s.d <= self.collision_headway
    }
}

/// Behavior of the lead vehicle during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeadPolicy {
    /// Constant commanded acceleration (negative to brake) until standstill.
    ConstantDecel {
        accel: f64,
    },
    ConstantSpeed,
    /// Lead at rest for the whole run.
    Stationary,
    /// `(duration_s, accel)` segments applied in order; zero afterwards.
    PiecewiseProfile {
        segments: Vec<(f64, f64)>,
    },
}

impl LeadPolicy {
    pub fn braking(accel: f64) -> Self {
        LeadPolicy::ConstantDecel { accel }
    }

    /// Commanded lead acceleration at time `t` (seconds since the run began).
    pub fn accel(&self, s: &State, t: f64, dt: f64) -> f64 {
        match self {
            LeadPolicy::ConstantDecel { accel } => *accel,
            LeadPolicy::ConstantSpeed => 0.0,
            // bring any residual speed to zero in one step
            LeadPolicy::Stationary => -s.v1 / dt,
            LeadPolicy::PiecewiseProfile { segments } => {
                let mut start = 0.0;
                for (duration, accel) in segments {
                    if t < start + duration - 1e-12 {
                        return *accel;
                    }
                    start += duration;
                }
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Collision,
    Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// `(a_sv, a_pov)` applied from `states[i]`; one shorter than `states`.
    pub accels: Vec<(f64, f64)>,
    pub terminated_by: Termination,
    /// True if the gap hit `d_max` at least once.
    pub clipped: bool,
}

impl Trajectory {
    pub fn collided(&self) -> bool {
        self.terminated_by == Termination::Collision
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// CSV trace: `t,d,v0,v1,a_sv,a_pov`, one row per recorded state. The
    /// final row has empty acceleration fields.
    pub fn write_csv<W: Write>(&self, dt: f64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "d", "v0", "v1", "a_sv", "a_pov"])?;
        for (i, s) in self.states.iter().enumerate() {
            let t = (i as f64 * dt).to_string();
            let (a_sv, a_pov) = match self.accels.get(i) {
                Some((a, b)) => (a.to_string(), b.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                t,
                s.d.to_string(),
                s.v0.to_string(),
                s.v1.to_string(),
                a_sv,
                a_pov,
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv trace>", e))?;
        Ok(())
    }
}

fn step_inner(s: &State, a_sv: f64, a_pov: f64, cfg: &SimConfig) -> (State, bool) {
    let dt = cfg.dt;
    let v0 = (s.v0 + a_sv * dt).clamp(cfg.bounds.lower[1], cfg.bounds.upper[1]);
    let v1 = (s.v1 + a_pov * dt).clamp(cfg.bounds.lower[2], cfg.bounds.upper[2]);
    let closing = 0.5 * (s.v1 + v1) - 0.5 * (s.v0 + v0);
    let d = s.d + closing * dt;
    let d_max = cfg.bounds.d_max();
    if d > d_max {
        (State::new(d_max, v0, v1), true)
    } else {
        (State::new(d, v0, v1), false)
    }
}

/// One explicit-Euler step on the speeds with trapezoidal displacement.
///
/// Speeds saturate at the bounds and the gap is clipped at `d_max`. The gap is
/// not floored, so a non-positive result signals a collision to the caller.
pub fn step_dynamics(s: &State, a_sv: f64, a_pov: f64, cfg: &SimConfig) -> State {
    step_inner(s, a_sv, a_pov, cfg).0
}

/// Per-step additive perturbation of the subject vehicle's acceleration.
pub type Disturbance<'a> = &'a mut dyn FnMut(usize, &mut dyn RngCore) -> f64;

/// Runs one scenario from `s0` for at most `cfg.horizon` steps.
///
/// The model is reset first. The run stops at the first state with
/// `d <= collision_headway`; that state is recorded with its gap set to
/// `collision_headway`.
pub fn run_scenario(
    model: &mut dyn SubjectVehicleModel,
    policy: &LeadPolicy,
    s0: State,
    cfg: &SimConfig,
    rng: &mut dyn RngCore,
) -> Result<Trajectory> {
    run_scenario_disturbed(model, policy, s0, cfg, rng, None)
}

pub fn run_scenario_disturbed(
    model: &mut dyn SubjectVehicleModel,
    policy: &LeadPolicy,
    s0: State,
    cfg: &SimConfig,
    rng: &mut dyn RngCore,
    mut disturbance: Option<Disturbance<'_>>,
) -> Result<Trajectory> {
    if !s0.is_finite() {
        return Err(Error::Config(format!("initial state {s0:?} is not finite")));
    }
    if cfg.in_failure_set(&s0) {
        return Err(Error::InitialStateInFailureSet(s0.to_array()));
    }
    model.reset();
    let mut states = Vec::with_capacity(cfg.horizon + 1);
    let mut accels = Vec::with_capacity(cfg.horizon);
    let mut clipped = false;
    let mut s = s0;
    states.push(s);
    for step in 0..cfg.horizon {
        let t = step as f64 * cfg.dt;
        let mut a_sv = model.accel(&s, cfg.dt);
        if let Some(dist) = disturbance.as_mut() {
            a_sv += dist(step, rng);
        }
        let a_pov = policy.accel(&s, t, cfg.dt);
        let (mut next, hit_max) = step_inner(&s, a_sv, a_pov, cfg);
        clipped |= hit_max;
        accels.push((a_sv, a_pov));
        if cfg.in_failure_set(&next) {
            next.d = cfg.collision_headway;
            states.push(next);
            return Ok(Trajectory {
                states,
                accels,
                terminated_by: Termination::Collision,
                clipped,
            });
        }
        states.push(next);
        s = next;
    }
    Ok(Trajectory {
        states,
        accels,
        terminated_by: Termination::Horizon,
        clipped,
    })
}
