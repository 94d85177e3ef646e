//! Re-checks a quantified set with fresh randomness, then checks a set that
//! is known to be unsafe.

use almost_safe::domain::State;
use almost_safe::models::{Idm, IdmParams};
use almost_safe::quantifier::{quantify, validate, QuantConfig};
use almost_safe::sim::{LeadPolicy, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> almost_safe::Result<()> {
    let cfg = QuantConfig::new(
        0.01,
        0.001,
        [10.0, 6.0, 6.0],
        SimConfig::car_following_default(),
        LeadPolicy::braking(-5.0),
    );
    let mut model = Idm::new(IdmParams::hard());
    let res = quantify(&cfg, &mut model)?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let report = validate(
        &res.grid,
        &mut model,
        &cfg.policy,
        0.01,
        0.001,
        &cfg.sim,
        &mut rng,
    )?;
    println!(
        "quantified set: passed={} after {} runs",
        report.passed, report.runs_executed
    );

    // the full lattice still holds cells that cannot avoid a collision
    let full = cfg.initial_grid()?;
    let report = validate(
        &full,
        &mut model,
        &cfg.policy,
        0.01,
        0.001,
        &cfg.sim,
        &mut rng,
    )?;
    println!(
        "full lattice:   passed={} after {} runs",
        report.passed, report.runs_executed
    );
    if let Some(v) = report.first_violation {
        let State { d, v0, v1 } = v.state;
        println!(
            "  first violation in run {} step {}: {:?} at ({d:.2}, {v0:.2}, {v1:.2})",
            v.run, v.step, v.cause
        );
    }
    Ok(())
}
