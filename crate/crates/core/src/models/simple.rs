use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SubjectVehicleModel;
use crate::domain::State;

/// Brakes at a fixed rate in every state.
#[derive(Debug, Clone)]
pub struct PerfectBrake {
    b: f64,
}

impl PerfectBrake {
    pub fn new(b: f64) -> Self {
        assert!(
            b > 0.0 && b.is_finite(),
            "braking capability must be positive"
        );
        PerfectBrake { b }
    }

    pub fn capability(&self) -> f64 {
        self.b
    }
}

impl SubjectVehicleModel for PerfectBrake {
    fn name(&self) -> &str {
        "perfect_brake"
    }

    fn reset(&mut self) {}

    fn accel(&mut self, _s: &State, _dt: f64) -> f64 {
        -self.b
    }
}

/// Commands a constant acceleration.
#[derive(Debug, Clone)]
pub struct ConstantAccel {
    a: f64,
}

impl ConstantAccel {
    pub fn new(a: f64) -> Self {
        ConstantAccel { a }
    }
}

impl SubjectVehicleModel for ConstantAccel {
    fn name(&self) -> &str {
        "constant_accel"
    }

    fn reset(&mut self) {}

    fn accel(&mut self, _s: &State, _dt: f64) -> f64 {
        self.a
    }
}

/// Brake dropout: each braking command is replaced by zero with probability
/// `p_fail`. The random stream is owned by the wrapper and survives resets.
pub struct StochasticWrapper {
    inner: Box<dyn SubjectVehicleModel>,
    p_fail: f64,
    rng: ChaCha8Rng,
    name: String,
    braking_steps: u64,
    dropouts: u64,
}

impl StochasticWrapper {
    pub fn new(inner: Box<dyn SubjectVehicleModel>, p_fail: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p_fail), "p_fail must lie in [0, 1]");
        let name = format!("stochastic:{}", inner.name());
        StochasticWrapper {
            inner,
            p_fail,
            rng: ChaCha8Rng::seed_from_u64(seed),
            name,
            braking_steps: 0,
            dropouts: 0,
        }
    }

    pub fn p_fail(&self) -> f64 {
        self.p_fail
    }

    /// `(braking steps seen, braking steps dropped)` since construction.
    pub fn dropout_counts(&self) -> (u64, u64) {
        (self.braking_steps, self.dropouts)
    }
}

impl SubjectVehicleModel for StochasticWrapper {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    fn accel(&mut self, s: &State, dt: f64) -> f64 {
        let a = self.inner.accel(s, dt);
        if a < 0.0 {
            self.braking_steps += 1;
            if self.rng.gen_bool(self.p_fail) {
                self.dropouts += 1;
                return 0.0;
            }
        }
        a
    }
}
