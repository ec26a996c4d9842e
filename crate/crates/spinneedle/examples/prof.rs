// micro-benchmark of stepper pieces
use spinneedle::dynamics::Stepper;
use spinneedle::model::{build_system, sample_initial_state, PhysicalParams};
use std::time::Instant;

fn main() {
    let sys = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let st = sample_initial_state(&sys, 1e-7, 1).unwrap();
    let dtau = sys.default_dtau();

    // full step
    let mut stepper = Stepper::new(&sys);
    let mut state = st.clone();
    let t0 = Instant::now();
    for _ in 0..300_000 {
        stepper.step_signed(&mut state, dtau, &sys.b_hat).unwrap();
    }
    println!("full step: {:.2} us", t0.elapsed().as_secs_f64() / 3e5 * 1e6);

    // force only
    let t0 = Instant::now();
    let mut out = vec![nalgebra::Vector3::<f64>::zeros(); 50];
    for _ in 0..300_000 {
        let f = spinneedle::dynamics::lattice_force(&state, &sys).unwrap();
        out[0] += f[0];
    }
    println!("force(alloc): {:.2} us  {:?}", t0.elapsed().as_secs_f64() / 3e5 * 1e6, out[0].x);
}
