//! Quantifies each IDM variant over five seeds and prints the summary table
//! and one headway slice per variant.

use almost_safe::analysis::{slice, summarize, write_summary_csv, SummaryRow};
use almost_safe::models::{Idm, IdmParams};
use almost_safe::quantifier::{quantify, QuantConfig};
use almost_safe::sim::{LeadPolicy, SimConfig};

fn main() -> almost_safe::Result<()> {
    let mut rows = Vec::new();
    for (name, params) in [
        ("idm_m", IdmParams::mild()),
        ("idm_n", IdmParams::normal()),
        ("idm_h", IdmParams::hard()),
    ] {
        let results = (0..5)
            .map(|seed| {
                let cfg = QuantConfig::new(
                    0.01,
                    0.001,
                    [10.0, 6.0, 6.0],
                    SimConfig::car_following_default(),
                    LeadPolicy::braking(-5.0),
                )
                .with_seed(seed);
                quantify(&cfg, &mut Idm::new(params.clone()))
            })
            .collect::<almost_safe::Result<Vec<_>>>()?;

        let s = slice(&results[0].grid, 30.0)?;
        println!("{name} at d = {} ({} cells)", s.d_centroid, s.count());
        s.write_csv(std::io::stdout())?;
        println!();

        rows.push(SummaryRow {
            sv: name.into(),
            s0: "full".into(),
            epsilon: 0.01,
            summary: summarize(&results)?,
        });
    }
    write_summary_csv(&rows, std::io::stdout())
}
