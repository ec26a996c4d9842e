// Temporary physics probe (deleted before release).
use nalgebra::Vector3;
use spinneedle::dynamics::{integrate, FieldSchedule, RecordOptions};
use spinneedle::model::{build_system, sample_initial_state, PhysicalParams};
use spinneedle::noise::{fit_powerlaw_exponent, linear_fit};
use spinneedle::observables::unwrap_angles;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("speed");

    match mode {
        "speed" => speed(),
        "precess" => run_field(1e-9, 2.0, 1e-7),
        "mid" => run_field(5e-5, 2.0, 1e-7),
        "high" => run_field(5e-3, 2.0, 1e-7),
        "highlong" => run_field(5e-3, 4.0, 1e-7),
        "noise" => dump_noise(4.0, 1e-7),
        "noise0" => dump_noise(4.0, 0.0),
        "psd" => dump_psd(2.0, 1e-7),
        "residual" => dump_residual(4.0, 1e-7),
        "residual2" => dump_residual(4.0, 2e-6),
        _ => eprintln!("unknown mode"),
    }
}

fn speed() {
    let sys = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let st = sample_initial_state(&sys, 1e-7, 1).unwrap();
    let dtau = sys.default_dtau();
    println!("dtau = {dtau:e}");
    let n_steps = 1_000_000u64;
    let t0 = Instant::now();
    let mut stepper = spinneedle::dynamics::Stepper::new(&sys);
    let mut state = st.clone();
    for _ in 0..n_steps {
        stepper.step_signed(&mut state, dtau, &sys.b_hat).unwrap();
    }
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "{} steps in {:.2} s -> {:.2} us/step; 2-period run would take {:.0} s",
        n_steps,
        dt,
        1e6 * dt / n_steps as f64,
        dt / n_steps as f64 * (4.0 * std::f64::consts::PI / dtau)
    );
    let max_norm_err = state
        .spins
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);
    println!("max |s|-1 after 1e6 steps: {max_norm_err:e}");
    let e = spinneedle::dynamics::hamiltonian_energy(&state, &sys);
    println!("energy total {:.6e} (parts z {:.3e} x {:.3e} pd {:.3e} k {:.3e} h {:.3e})",
        e.total, e.zeeman, e.exchange, e.pseudo_dipolar, e.kinetic, e.harmonic);
    let max_p = state.momenta.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    println!("max momentum: {max_p:.3e}");
}

fn run_field(b_tesla: f64, periods: f64, temp: f64) {
    let base = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let sys = base.at_field_ratio(b_tesla / 1e-9).unwrap();
    println!(
        "B = {b_tesla:e} T: lambda = {:.3e}, eps_j = {:.1e}, eps_c = {:.1e}, dtau = {:.3e}",
        sys.lambda_spin, sys.eps_j, sys.eps_c, sys.default_dtau()
    );
    let st = sample_initial_state(&sys, temp, 1).unwrap();
    let t_end = periods * 2.0 * std::f64::consts::PI;
    let opts = RecordOptions {
        spin_azimuths: true,
        ..Default::default()
    };
    let t0 = Instant::now();
    let traj = integrate(&st, &sys, t_end, 2000, &FieldSchedule::Constant, &opts).unwrap();
    println!("integrated {} samples in {:.1} s", traj.len(), t0.elapsed().as_secs_f64());

    let budget = 25.0; // N * s0/hbar
    let jz0 = traj.j_z[0];
    let jz_drift = traj
        .j_z
        .iter()
        .map(|j| (j - jz0).abs())
        .fold(0.0f64, f64::max)
        / budget;
    let sz_max = traj.s_z.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let lz_max = traj.l_z.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    println!("Jz drift (rel budget): {jz_drift:.3e}; max|Sz| = {sz_max:.4} hbar, max|Lz| = {lz_max:.4} hbar (budget 25)");

    let e0 = traj.energy_total[0];
    let e_drift = traj
        .energy_total
        .iter()
        .map(|e| (e - e0).abs())
        .fold(0.0f64, f64::max);
    println!("energy drift: {e_drift:.3e} (E0 = {e0:.4e})");

    let m_norm_err = traj
        .mag
        .iter()
        .map(|m| (m.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);
    println!("max ||M|-1| = {m_norm_err:.3e}");

    let mz: Vec<f64> = traj.mag.iter().map(|m| m.z).collect();
    let half = mz.len() / 2;
    let mz_mean: f64 = mz[half..].iter().sum::<f64>() / (mz.len() - half) as f64;
    let mz_min = mz[half..].iter().cloned().fold(f64::INFINITY, f64::min);
    let mz_max = mz[half..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("trailing-half Mz: mean {mz_mean:.4}, excursion {:.4}", mz_max - mz_min);
    let mz_mean_full: f64 = mz.iter().sum::<f64>() / mz.len() as f64;
    println!("full-run Mz mean {mz_mean_full:.4}");

    match unwrap_angles(&traj.needle_azimuth) {
        Ok(az) => {
            let (slope, _, se) = linear_fit(&traj.times, &az);
            println!("needle azimuth slope = {slope:.6} +- {se:.2e}");
        }
        Err(e) => println!("azimuth unwrap failed: {e}"),
    }

    if let Some(sa) = &traj.spin_azimuths {
        // per-spin unwrap over time, then cross-spin std
        let n_spins = sa[0].len();
        let mut per_spin: Vec<Vec<f64>> = Vec::with_capacity(n_spins);
        let mut ok = true;
        for i in 0..n_spins {
            let series: Vec<f64> = sa.iter().map(|row| row[i]).collect();
            match unwrap_angles(&series) {
                Ok(u) => per_spin.push(u),
                Err(e) => {
                    println!("spin {i} unwrap failed: {e}");
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let dp = spinneedle::noise::delta_phi(&per_spin).unwrap();
            let max1 = dp[1..dp.len() / 2].iter().cloned().fold(0.0f64, f64::max);
            let max2 = dp[dp.len() / 2..].iter().cloned().fold(0.0f64, f64::max);
            println!("delta_phi: first-half max {max1:.3e}, second-half max {max2:.3e}");
            let fit = fit_powerlaw_exponent(
                &traj.times[1..],
                &dp[1..],
                (0.5 * traj.t_end, traj.t_end),
            );
            match fit {
                Ok(f) => println!("late delta_phi slope = {:.3} +- {:.3}", f.slope, f.std_error),
                Err(e) => println!("delta_phi fit failed: {e}"),
            }
        }
    }
    let _unused: Vector3<f64> = Vector3::zeros();
}

// appended: dump delta_phi curve + azimuth residual PSD at 1 nT
#[allow(dead_code)]
fn dump_noise(periods: f64, temp: f64) {
    let base = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let sys = base;
    let st = sample_initial_state(&sys, temp, 1).unwrap();
    let t_end = periods * 2.0 * std::f64::consts::PI;
    let opts = RecordOptions { spin_azimuths: true, ..Default::default() };
    let traj = integrate(&st, &sys, t_end, 2000, &FieldSchedule::Constant, &opts).unwrap();
    let dp = spinneedle::protocols::spin_spread_curve(&traj).unwrap();
    // print a decimated curve
    for k in (0..dp.len()).step_by(dp.len() / 60) {
        println!("t={:9.4}  dphi={:.6e}", traj.times[k], dp[k]);
    }
    // late-window fits with different windows
    for frac in [0.3, 0.5, 0.7] {
        let lo = frac * traj.t_end;
        match fit_powerlaw_exponent(&traj.times[1..], &dp[1..], (lo, traj.t_end)) {
            Ok(f) => println!("fit window [{lo:.1}, {:.1}]: slope {:+.3} +- {:.3}", traj.t_end, f.slope, f.std_error),
            Err(e) => println!("fit window [{lo:.1}, ..]: {e}"),
        }
    }
    // azimuth residual PSD slope
    let residual = spinneedle::protocols::detrended_azimuth(&traj).unwrap();
    let dt = traj.times[1] - traj.times[0];
    let spec = spinneedle::noise::psd_welch_default(&residual, dt).unwrap();
    for decade_lo in [2, 4, 8, 16, 32] {
        let f_lo = spec.freqs[decade_lo];
        match fit_powerlaw_exponent(&spec.freqs[1..], &spec.psd[1..], (f_lo, 10.0 * f_lo)) {
            Ok(f) => println!("psd fit [{:.3}, {:.3}]: slope {:+.3} +- {:.3}", f_lo, 10.0*f_lo, f.slope, f.std_error),
            Err(e) => println!("psd fit: {e}"),
        }
    }
}

// appended: dump azimuth residual PSD to /tmp/psd.csv
#[allow(dead_code)]
fn dump_psd(periods: f64, temp: f64) {
    let sys = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let st = sample_initial_state(&sys, temp, 1).unwrap();
    let t_end = periods * 2.0 * std::f64::consts::PI;
    let traj = integrate(&st, &sys, t_end, 1000, &FieldSchedule::Constant, &RecordOptions::default()).unwrap();
    let residual = spinneedle::protocols::detrended_azimuth(&traj).unwrap();
    let dt = traj.times[1] - traj.times[0];
    let spec = spinneedle::noise::psd_welch_default(&residual, dt).unwrap();
    let mut out = String::from("freq,psd\n");
    for (f, p) in spec.freqs.iter().zip(spec.psd.iter()) {
        out.push_str(&format!("{f},{p}\n"));
    }
    std::fs::write("/tmp/psd.csv", out).unwrap();
    println!("wrote /tmp/psd.csv ({} bins, nyquist {:.1})", spec.freqs.len(), spec.freqs.last().unwrap());
}

// appended: dump azimuth residual time series at 4 periods
#[allow(dead_code)]
fn dump_residual(periods: f64, temp: f64) {
    let sys = build_system(&PhysicalParams::cobalt(50)).unwrap();
    let st = sample_initial_state(&sys, temp, 1).unwrap();
    let t_end = periods * 2.0 * std::f64::consts::PI;
    let opts = RecordOptions { spin_azimuths: true, ..Default::default() };
    let traj = integrate(&st, &sys, t_end, 1000, &FieldSchedule::Constant, &opts).unwrap();
    let residual = spinneedle::protocols::detrended_azimuth(&traj).unwrap();
    let dp = spinneedle::protocols::spin_spread_curve(&traj).unwrap();
    let mut out = String::from("t,residual,delta_phi\n");
    for k in 0..traj.len() {
        out.push_str(&format!("{},{},{}\n", traj.times[k], residual[k], dp[k]));
    }
    std::fs::write("/tmp/residual.csv", out).unwrap();
    println!("wrote /tmp/residual.csv ({} samples, dt={:.4e})", traj.len(), traj.times[1]-traj.times[0]);
}
