//! Angular-momentum exchange between spins and lattice rotation.
//!
//! At 50 uT the spin-lattice coupling moves a sizable fraction of the spin
//! angular momentum into mechanical rotation and back, while the sum
//! J_z = S_z + L_z stays constant to integrator precision.
//!
//!     cargo run --release -p spinneedle --example einstein_de_haas
//!
//! Runtime: about a minute.

use spinneedle::dynamics::{integrate, FieldSchedule, RecordOptions};
use spinneedle::model::{build_system, sample_initial_state, PhysicalParams, REFERENCE_FIELD};

fn main() -> spinneedle::Result<()> {
    let base = build_system(&PhysicalParams::cobalt(50))?;
    let system = base.at_field_ratio(5e-5 / REFERENCE_FIELD)?;
    let state = sample_initial_state(&system, 0.0, 7)?;

    // one precession period, sampled densely enough to see the exchange
    let traj = integrate(
        &state,
        &system,
        2.0 * std::f64::consts::PI,
        1500,
        &FieldSchedule::Constant,
        &RecordOptions::default(),
    )?;

    let budget = 50.0 * system.spin_unit_hbar();
    let jz0 = traj.j_z[0];
    let mut sz_max = 0.0f64;
    let mut lz_max = 0.0f64;
    let mut jz_err = 0.0f64;
    for k in 0..traj.len() {
        sz_max = sz_max.max(traj.s_z[k].abs());
        lz_max = lz_max.max(traj.l_z[k].abs());
        jz_err = jz_err.max((traj.j_z[k] - jz0).abs());
    }

    println!("spin budget N s0/hbar : {budget:.1} hbar");
    println!("max |S_z|             : {sz_max:.3} hbar");
    println!("max |L_z|             : {lz_max:.3} hbar");
    println!("max |J_z - J_z(0)|    : {:.2e} hbar ({:.1e} of budget)", jz_err, jz_err / budget);

    println!("\n   tau        S_z         L_z         J_z");
    for k in (0..traj.len()).step_by(traj.len() / 12) {
        println!(
            "{:8.3}  {:+10.4}  {:+10.4}  {:+.3e}",
            traj.times[k], traj.s_z[k], traj.l_z[k], traj.j_z[k]
        );
    }
    Ok(())
}
