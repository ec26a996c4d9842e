//! Geometric phase read out from the needle orientation.
//!
//! The field direction traces a cone of polar angle theta twice: once as
//! given, once negated, so the dynamical precession phase cancels and only
//! the geometric part survives. The needle axis ends up misaligned from
//! its start by 4 pi (1 - cos theta) modulo 2 pi.
//!
//!     cargo run --release -p spinneedle --example berry_phase
//!
//! Runtime: a few minutes per cone angle.

use spinneedle::protocols::{berry_default_system, berry_protocol, SimSettings};

fn main() -> spinneedle::Result<()> {
    let system = berry_default_system(50)?;
    let settings = SimSettings {
        dt_override: Some(2.5e-4),
        seed: 5,
        ..Default::default()
    };

    println!("{:>10}  {:>10}  {:>10}  {:>9}", "cos(theta)", "predicted", "measured", "error");
    for cos_theta in [0.75f64, 0.625, 0.9] {
        let r = berry_protocol(cos_theta.acos(), 0.01, &system, &settings)?;
        println!(
            "{:>10.4}  {:>+10.4}  {:>+10.4}  {:>+9.1e}",
            cos_theta,
            r.predicted,
            r.measured,
            r.measured - r.predicted
        );
    }
    Ok(())
}
