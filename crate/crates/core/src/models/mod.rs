//! Subject-vehicle controllers under test.

mod acc_aeb;
mod idm;
mod simple;

use serde::{Deserialize, Serialize};

pub use acc_aeb::{
    acc_aeb_accel, time_to_collision, AccAeb, AccAebMemory, AccAebMode, AccAebParams,
};
pub use idm::{desired_gap, idm_accel, idm_accel_unclamped, Idm, IdmParams, MIN_GAP_FLOOR};
pub use simple::{ConstantAccel, PerfectBrake, StochasticWrapper};

use crate::domain::State;
use crate::error::{Error, Result};

/// A black-box follower controller.
///
/// Implementations may keep memory between steps of a run; `reset` is
/// called before every run.
pub trait SubjectVehicleModel: Send {
    fn name(&self) -> &str;

    fn reset(&mut self);

    /// Commanded follower acceleration in m/s² for the observed state.
    fn accel(&mut self, s: &State, dt: f64) -> f64;
}

impl<M: SubjectVehicleModel + ?Sized> SubjectVehicleModel for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn accel(&mut self, s: &State, dt: f64) -> f64 {
        (**self).accel(s, dt)
    }
}

/// Partial IDM parameter overrides applied on top of a named variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdmOverrides {
    pub min_gap: Option<f64>,
    pub a_max: Option<f64>,
    pub b_comf: Option<f64>,
    pub time_headway: Option<f64>,
    pub exponent: Option<f64>,
    pub vehicle_length: Option<f64>,
    pub v_free: Option<f64>,
    pub b_cap: Option<f64>,
    pub subtract_vehicle_length: Option<bool>,
}

impl IdmOverrides {
    fn apply(&self, mut p: IdmParams) -> IdmParams {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(
            min_gap,
            a_max,
            b_comf,
            time_headway,
            exponent,
            vehicle_length,
            v_free,
            b_cap,
            subtract_vehicle_length
        );
        p
    }
}

/// Model selection as written in a run configuration.
///
/// Registered names: `idm_m`, `idm_n`, `idm_h`, `idm` (needs `idm.b_cap`),
/// `acc_aeb`, `perfect_brake` (needs `brake`), `constant_accel` (needs
/// `accel`) and `stochastic:<inner>` (needs `p_fail`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idm: Option<IdmOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acc_aeb: Option<AccAebParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brake: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_fail: Option<f64>,
}

impl ModelSpec {
    pub fn named(name: &str) -> Self {
        ModelSpec {
            name: name.to_owned(),
            idm: None,
            acc_aeb: None,
            brake: None,
            accel: None,
            p_fail: None,
        }
    }

    /// Instantiates the model. `seed` feeds stochastic wrappers only.
    pub fn build(&self, seed: u64) -> Result<Box<dyn SubjectVehicleModel>> {
        self.build_named(&self.name, seed)
    }

    fn build_named(&self, name: &str, seed: u64) -> Result<Box<dyn SubjectVehicleModel>> {
        if let Some(inner) = name.strip_prefix("stochastic:") {
            let p_fail = self
                .p_fail
                .ok_or_else(|| Error::Config(format!("model `{name}` needs p_fail")))?;
            if !(0.0..=1.0).contains(&p_fail) {
                return Err(Error::Config(format!(
                    "p_fail must lie in [0, 1], got {p_fail}"
                )));
            }
            let inner = self.build_named(inner, seed)?;
            // decorrelate from the sampler, which is seeded with `seed` as well
            let stream = seed ^ 0x9e37_79b9_7f4a_7c15;
            return Ok(Box::new(StochasticWrapper::new(inner, p_fail, stream)));
        }
        let overrides = self.idm.clone().unwrap_or_default();
        let idm = |base: IdmParams| -> Result<Box<dyn SubjectVehicleModel>> {
            let p = overrides.apply(base);
            p.check().map_err(Error::Config)?;
            Ok(Box::new(Idm::new(p)))
        };
        match name {
            "idm_m" => idm(IdmParams::mild()),
            "idm_n" => idm(IdmParams::normal()),
            "idm_h" => idm(IdmParams::hard()),
            "idm" => {
                if overrides.b_cap.is_none() {
                    return Err(Error::Config("model `idm` needs idm.b_cap".into()));
                }
                idm(IdmParams::normal())
            }
            "acc_aeb" => {
                let p = self.acc_aeb.clone().unwrap_or_default();
                p.check().map_err(Error::Config)?;
                Ok(Box::new(AccAeb::new(p)))
            }
            "perfect_brake" => match self.brake {
                Some(b) if b.is_finite() && b > 0.0 => Ok(Box::new(PerfectBrake::new(b))),
                _ => Err(Error::Config(
                    "model `perfect_brake` needs a positive brake".into(),
                )),
            },
            "constant_accel" => match self.accel {
                Some(a) if a.is_finite() => Ok(Box::new(ConstantAccel::new(a))),
                _ => Err(Error::Config("model `constant_accel` needs accel".into())),
            },
            other => Err(Error::UnknownModel(other.to_owned())),
        }
    }
}
