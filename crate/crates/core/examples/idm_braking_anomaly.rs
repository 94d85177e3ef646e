//! The IDM brakes at a state with a wide gap and a much faster lead. The
//! approach term drives the desired gap negative, and squaring it turns that
//! into a braking contribution. The three variants differ only in their
//! brake cap, so they agree here.

use almost_safe::domain::State;
use almost_safe::models::{desired_gap, idm_accel, IdmParams};

fn main() {
    let s = State::new(40.0, 12.0, 25.0);
    let p = IdmParams::mild();
    let s_star = desired_gap(&p, &s);
    println!("state d={} v0={} v1={}", s.d, s.v0, s.v1);
    println!(
        "desired gap s* = {s_star:.3} m, (s*/d)² = {:.4}",
        (s_star / s.d).powi(2)
    );
    println!(
        "free-road term (v0/v_free)^4 = {:.4}",
        (s.v0 / p.v_free).powf(p.exponent)
    );
    for (name, p) in [
        ("mild", IdmParams::mild()),
        ("normal", IdmParams::normal()),
        ("hard", IdmParams::hard()),
    ] {
        println!("{name:>6}: a = {:+.4} m/s²", idm_accel(&p, &s));
    }
}
