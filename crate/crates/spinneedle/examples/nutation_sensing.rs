//! Sensing a slowly oscillating field through the nutation amplitude.
//!
//! In the nutation regime the tilt of the magnetization toward the field
//! tracks the instantaneous field strength, so an amplitude modulation
//! B_z(t) = B0 (1 + depth cos(w t)) is written directly onto the M_z
//! envelope. A Fourier peak of the envelope recovers the modulation rate
//! and the envelope excursion scales linearly with the depth.
//!
//!     cargo run --release -p spinneedle --example nutation_sensing
//!
//! Runtime: a few minutes (three runs including the calibrations).

use spinneedle::protocols::{nutation_default_system, nutation_sensing, SimSettings};

fn main() -> spinneedle::Result<()> {
    let system = nutation_default_system(50)?;
    let settings = SimSettings {
        seed: 11,
        ..Default::default()
    };

    let reading = nutation_sensing(0.5, 0.2, &system, &settings)?;
    println!(
        "depth 0.50, drive 0.20: recovered {:.4}, envelope correlation {:.4}",
        reading.drive_freq_recovered, reading.envelope_correlation
    );

    let reading = nutation_sensing(0.25, 0.2, &system, &settings)?;
    println!(
        "depth 0.25, drive 0.20: recovered {:.4}, envelope correlation {:.4}, \
         excursion vs depth-0.5 run {:.3}",
        reading.drive_freq_recovered, reading.envelope_correlation, reading.depth_ratio
    );
    Ok(())
}
