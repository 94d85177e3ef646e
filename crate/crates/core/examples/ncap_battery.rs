//! Runs the bundled 48-scenario rear-end battery against every built-in model.

use almost_safe::analysis::{builtin_battery, ncap_battery, pass_counts};
use almost_safe::models::ModelSpec;
use almost_safe::sim::SimConfig;

fn main() -> almost_safe::Result<()> {
    let battery = builtin_battery();
    let sim = SimConfig::car_following_default();
    println!(
        "{:<8} {:>5} {:>5} {:>5} {:>6}",
        "model", "CCRs", "CCRm", "CCRb", "total"
    );
    for name in ["idm_m", "idm_n", "idm_h", "acc_aeb"] {
        let mut model = ModelSpec::named(name).build(0)?;
        let out = ncap_battery(model.as_mut(), &battery, 1, &sim, 0)?;
        let p = pass_counts(&battery, &out);
        println!(
            "{name:<8} {:>5} {:>5} {:>5} {:>3}/{}",
            p.ccrs,
            p.ccrm,
            p.ccrb,
            p.total(),
            p.runs
        );
        for o in out.iter().filter(|o| !o.passed).take(3) {
            let s = &battery[o.scenario];
            println!(
                "    fails {} (v0 {:.2}, v1 {:.2}, headway {:.1})",
                s.id, s.v0, s.v1, s.headway
            );
        }
    }
    Ok(())
}
