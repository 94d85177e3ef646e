//! Quantifies an almost safe set for one IDM variant and writes the dump.
//!
//! cargo run --release --example quantify_idm -- [idm_m|idm_n|idm_h] [seed]

use almost_safe::analysis::volume;
use almost_safe::models::ModelSpec;
use almost_safe::quantifier::{quantify, QuantConfig};
use almost_safe::sim::{LeadPolicy, SimConfig};

fn main() -> almost_safe::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "idm_n".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = QuantConfig::new(
        0.01,
        0.001,
        [10.0, 6.0, 6.0],
        SimConfig::car_following_default(),
        LeadPolicy::braking(-5.0),
    )
    .with_seed(seed);
    let mut model = ModelSpec::named(&name).build(seed)?;
    let res = quantify(&cfg, model.as_mut())?;

    let v = volume(&res.grid);
    println!(
        "{name} seed {seed}: {:?} after {} runs ({} collisions)",
        res.stats.exit_reason, res.stats.total_runs, res.stats.collision_runs
    );
    println!(
        "{} active cells, {} lattice cells, {:.1}% of the lattice",
        v.active,
        v.cells,
        100.0 * v.fraction
    );

    let path = std::env::temp_dir().join(format!("{name}_seed{seed}.json"));
    res.to_dump()?.save(&path)?;
    println!("dump written to {}", path.display());
    Ok(())
}
