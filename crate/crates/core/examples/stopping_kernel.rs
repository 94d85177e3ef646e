//! A subject vehicle with a fixed brake behind a stopped lead vehicle. The
//! quantified set is compared against the closed-form stopping condition
//! v0² / (2b) < d.

use almost_safe::analysis::snapped_cells;
use almost_safe::domain::StateBounds;
use almost_safe::models::PerfectBrake;
use almost_safe::quantifier::{quantify, QuantConfig};
use almost_safe::sim::{LeadPolicy, SimConfig};

fn main() -> almost_safe::Result<()> {
    let brake = 10.0;
    let mut sim = SimConfig::car_following_default();
    // the lead speed axis collapses to a single layer
    sim.bounds = StateBounds::new([0.0, 0.0, 0.0], [100.0, 30.0, 0.01])?;
    let cfg = QuantConfig::new(0.01, 0.001, [10.0, 6.0, 0.01], sim, LeadPolicy::Stationary);
    let res = quantify(&cfg, &mut PerfectBrake::new(brake))?;
    println!(
        "{:?} after {} runs\n",
        res.stats.exit_reason, res.stats.total_runs
    );

    // extra cells count for the lattice cell they fall into
    let kept = snapped_cells(&res.grid);
    let full = cfg.initial_grid()?;
    println!(
        "rows: v0 descending, columns: d ascending; # kept, . removed, * closed form disagrees"
    );
    for (j, v0) in full.axis(1).iter().enumerate().rev() {
        let mut line = format!("v0={v0:>4}  ");
        for (i, d) in full.axis(0).iter().enumerate() {
            let kept = kept.contains(&[i, j, 0]);
            let closed = v0 * v0 / (2.0 * brake) < *d;
            line.push(match (kept, closed) {
                (true, true) => '#',
                (false, false) => '.',
                _ => '*',
            });
        }
        println!("{line}");
    }
    Ok(())
}
