// Temporary protocol probe (deleted before release).
use nalgebra::Vector3;
use spinneedle::dynamics::{integrate, FieldSchedule, RecordOptions};
use spinneedle::model::{build_system, sample_initial_state, PhysicalParams};
use spinneedle::protocols::*;

fn axis_of(az: f64, po: f64) -> Vector3<f64> {
    Vector3::new(po.sin() * az.cos(), po.sin() * az.sin(), po.cos())
}

fn plane_angle(a: &Vector3<f64>, b: &Vector3<f64>, axis: &Vector3<f64>) -> f64 {
    let ap = (a - axis * axis.dot(a)).normalize();
    let bp = (b - axis * axis.dot(b)).normalize();
    ap.cross(&bp).dot(axis).atan2(ap.dot(&bp))
}

fn berry_raw(n: usize, eps_j: f64, eps_c: f64, cos_t: f64, rate: f64, dt: f64) {
    let sys = build_system(&PhysicalParams::cobalt(n)).unwrap().with_couplings(eps_j, eps_c);
    let theta = cos_t.acos();
    let cycle = 2.0 * std::f64::consts::PI / rate;
    let steps_per_cycle = (cycle / dt).ceil();
    let dtau = cycle / steps_per_cycle;
    let st0 = sample_initial_state(&sys, 0.0, 0).unwrap();
    let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), theta);
    let st = st0.rotated(&rot);
    let sched = FieldSchedule::RotatingCone { polar: theta, rate, t_flip: cycle };
    let t0 = std::time::Instant::now();
    let traj = integrate(&st, &sys, 2.0 * cycle, 4000, &sched,
        &RecordOptions { dtau: Some(dtau), ..Default::default() }).unwrap();
    let a0 = axis_of(traj.needle_azimuth[0], traj.needle_polar[0]);
    let a1 = axis_of(*traj.needle_azimuth.last().unwrap(), *traj.needle_polar.last().unwrap());
    let b0 = Vector3::new(theta.sin(), 0.0, theta.cos());
    let pred = spinneedle::observables::wrap_angle(4.0 * std::f64::consts::PI * (1.0 - cos_t));
    println!(
        "N={n} eps_c={eps_c} cos={cos_t} rate={rate}: pred {:+.4} | about z {:+.4}, about b0 {:+.4}, about -b0 {:+.4}  ({:.0}s)",
        pred,
        plane_angle(&a0, &a1, &Vector3::z()),
        plane_angle(&a0, &a1, &b0),
        plane_angle(&a0, &a1, &(-b0)),
        t0.elapsed().as_secs_f64()
    );
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "a".into());
    match mode.as_str() {
        "a" => {
            berry_raw(12, 100.0, 500.0, 0.75, 0.01, 1e-4);
            berry_raw(12, 100.0, 500.0, 0.625, 0.01, 1e-4);
            berry_raw(12, 100.0, 500.0, 0.9, 0.01, 1e-4);
        }
        "b" => {
            berry_raw(12, 100.0, 500.0, 0.625, 0.005, 1e-4);
            berry_raw(12, 100.0, 2000.0, 0.625, 0.01, 2.5e-5);
        }
        "nutate" => {
            let sys = nutation_default_system(50).unwrap();
            println!("nutate sys: eps_j {} eps_c {} lambda {:.1} dtau {:.2e}", sys.eps_j, sys.eps_c, sys.lambda_spin, sys.default_dtau());
            let settings = SimSettings::default();
            let t0 = std::time::Instant::now();
            match nutation_sensing(0.5, 0.2, &sys, &settings) {
                Ok(r) => println!(
                    "depth 0.5 drive 0.2: recovered {:.4} corr {:.4} ratio {:.3} ({:.0} s)",
                    r.drive_freq_recovered, r.envelope_correlation, r.depth_ratio, t0.elapsed().as_secs_f64()
                ),
                Err(e) => println!("FAILED: {e}"),
            }
        }
        "nutate2" => {
            let sys = nutation_default_system(50).unwrap();
            let settings = SimSettings::default();
            let t0 = std::time::Instant::now();
            match nutation_sensing(0.25, 0.1, &sys, &settings) {
                Ok(r) => println!(
                    "depth 0.25 drive 0.1: recovered {:.4} corr {:.4} ratio {:.3} ({:.0} s)",
                    r.drive_freq_recovered, r.envelope_correlation, r.depth_ratio, t0.elapsed().as_secs_f64()
                ),
                Err(e) => println!("FAILED: {e}"),
            }
        }
        _ => eprintln!("unknown"),
    }
}
