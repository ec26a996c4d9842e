// Temporary berry diagnosis probe (deleted before release).
use nalgebra::Vector3;
use spinneedle::dynamics::{integrate, FieldSchedule, RecordOptions};
use spinneedle::model::{build_system, sample_initial_state, PhysicalParams};

fn axis_of(az: f64, po: f64) -> Vector3<f64> {
    Vector3::new(po.sin() * az.cos(), po.sin() * az.sin(), po.cos())
}
fn plane_angle(a: &Vector3<f64>, b: &Vector3<f64>, axis: &Vector3<f64>) -> f64 {
    let ap = (a - axis * axis.dot(a)).normalize();
    let bp = (b - axis * axis.dot(b)).normalize();
    ap.cross(&bp).dot(axis).atan2(ap.dot(&bp))
}
fn main() {
    let (n, eps_c, cos_t, rate, dt) = (8usize, 1000.0f64, 0.625f64, 0.01f64, 2.0e-5f64);
    let sys = build_system(&PhysicalParams::cobalt(n)).unwrap().with_couplings(100.0, eps_c);
    let theta = cos_t.acos();
    let cycle = 2.0 * std::f64::consts::PI / rate;
    let dtau = cycle / (cycle / dt).ceil();
    let mut st = sample_initial_state(&sys, 0.0, 0).unwrap()
        .rotated(&nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), theta));
    let b0 = Vector3::new(theta.sin(), 0.0, theta.cos());
    for (r, p) in st.positions.iter().zip(st.momenta.iter_mut()) {
        *p += (-b0).cross(r);
    }
    let sched = FieldSchedule::RotatingCone { polar: theta, rate, t_flip: cycle };
    // dense sampling
    let traj = integrate(&st, &sys, 2.0 * cycle, 800, &sched,
        &RecordOptions { dtau: Some(dtau), ..Default::default() }).unwrap();
    let a0 = axis_of(traj.needle_azimuth[0], traj.needle_polar[0]);
    let n_s = traj.len();
    // near the end the field is back at b0; plot angle about b0 vs time
    println!("# endpoint tail: t, angle_about_b0, polar_vs_plane");
    for k in (n_s - 60)..n_s {
        let a1 = axis_of(traj.needle_azimuth[k], traj.needle_polar[k]);
        let ang = plane_angle(&a0, &a1, &b0);
        // component of axis along b0 = deviation from the precession plane
        let oop = a1.dot(&b0);
        println!("{:10.4} {:+9.5} {:+9.5}", traj.times[k], ang, oop);
    }
}
