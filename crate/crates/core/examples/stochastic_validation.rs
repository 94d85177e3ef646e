//! Quantifies a set for an IDM with random actuator failures at ε = 0.1 and
//! estimates its escape rate with independent Monte Carlo runs.

use almost_safe::models::ModelSpec;
use almost_safe::quantifier::{quantify, QuantConfig};
use almost_safe::sim::{run_scenario, LeadPolicy, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> almost_safe::Result<()> {
    let epsilon = 0.1;
    let samples = 10_000;
    for trial in 0..5u64 {
        let cfg = QuantConfig::new(
            epsilon,
            0.001,
            [10.0, 6.0, 6.0],
            SimConfig::car_following_default(),
            LeadPolicy::braking(-5.0),
        )
        .with_seed(trial);
        let mut spec = ModelSpec::named("stochastic:idm_n");
        spec.p_fail = Some(0.02);
        let mut model = spec.build(trial)?;
        let res = quantify(&cfg, model.as_mut())?;

        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let mut escapes = 0;
        for _ in 0..samples {
            let (_, s0) = res.grid.sample_centroid(&mut rng)?;
            let t = run_scenario(model.as_mut(), &cfg.policy, s0, &cfg.sim, &mut rng)?;
            if t.collided() || t.states.iter().any(|s| !res.grid.covers(s)) {
                escapes += 1;
            }
        }
        println!(
            "trial {trial}: {} cells after {} runs, escape rate {:.4} (ε = {epsilon})",
            res.grid.active_len(),
            res.stats.total_runs,
            escapes as f64 / samples as f64
        );
    }
    Ok(())
}
