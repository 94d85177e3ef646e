//! Starts the normal IDM from the set found for the hard-braking IDM instead
//! of the full lattice.

use almost_safe::analysis::volume;
use almost_safe::models::{Idm, IdmParams};
use almost_safe::quantifier::{quantify, quantify_from, QuantConfig};
use almost_safe::sim::{LeadPolicy, SimConfig};

fn main() -> almost_safe::Result<()> {
    let cfg = QuantConfig::new(
        0.01,
        0.001,
        [10.0, 6.0, 6.0],
        SimConfig::car_following_default(),
        LeadPolicy::braking(-5.0),
    );
    let hard = quantify(&cfg, &mut Idm::new(IdmParams::hard()))?;
    let cold = quantify(&cfg, &mut Idm::new(IdmParams::normal()))?;
    let warm = quantify_from(&cfg, &mut Idm::new(IdmParams::normal()), hard.grid.clone())?;

    for (label, r) in [
        ("idm_h", &hard),
        ("idm_n full", &cold),
        ("idm_n warm", &warm),
    ] {
        println!(
            "{label:<11} runs {:>5}  collisions {:>3}  cells {:>3}",
            r.stats.total_runs,
            r.stats.collision_runs,
            volume(&r.grid).cells
        );
    }
    Ok(())
}
