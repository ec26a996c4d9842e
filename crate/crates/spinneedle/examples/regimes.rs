//! Precession, nutation, and libration across field strengths.
//!
//! The same needle is integrated at 1 nT, 50 uT, and 5 mT. What changes
//! between the runs is the ratio between the spin angular-momentum budget
//! and the mechanical angular momentum a co-rotating lattice needs: well
//! below the critical field the spins can carry the needle (precession),
//! near it the needle tilts and wobbles (nutation), and above it the spins
//! align with the field while the magnetization swings in the plane spanned
//! by the field and the initial axis (libration).
//!
//!     cargo run --release -p spinneedle --example regimes
//!
//! Runtime: ~10 minutes for the three runs (they parallelize over cores).

use spinneedle::model::{critical_field, PhysicalParams};
use spinneedle::protocols::{regime_scan, SimSettings};

fn main() -> spinneedle::Result<()> {
    let base = PhysicalParams::cobalt(50);
    println!(
        "critical field for 50 cobalt atoms: {:.1} uT\n",
        critical_field(&base) * 1e6
    );

    let fields = [1e-9, 5e-5, 5e-3];
    let settings = SimSettings {
        t_end: Some(4.0 * std::f64::consts::PI),
        seed: 3,
        ..Default::default()
    };
    let reports = regime_scan(&fields, &base, &settings)?;

    println!("{:>12}  {:>11}  {:>8}  {:>10}  {:>12}", "field", "regime", "<M_z>", "excursion", "| |M|-1 |max");
    for r in &reports {
        println!(
            "{:>10.3e} T  {:>11}  {:+8.3}  {:>10.3}  {:>12.2e}",
            r.field_magnitude, r.regime.to_string(), r.mz_mean, r.mz_excursion, r.bloch_norm_error
        );
    }
    Ok(())
}
