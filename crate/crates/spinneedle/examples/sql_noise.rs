//! Noise floors: independent spins diffuse, the needle saturates.
//!
//! An ensemble of independent noisy spins spreads as sqrt(t) with a 1/f^2
//! azimuth spectrum, which pins frequency estimation to the standard
//! quantum limit. The needle's internally generated spread instead stays
//! bounded and its azimuth noise is spectrally flat, so the usable
//! integration time is not cut off by dephasing; the white-noise
//! Cramer-Rao bound then falls as t^(-3/2) instead of t^(-1/2).
//!
//!     cargo run --release -p spinneedle --example sql_noise
//!
//! Runtime: the needle trajectory dominates, a few minutes.

use spinneedle::model::{build_system, PhysicalParams};
use spinneedle::noise::{
    crlb_delta_omega, fit_powerlaw_exponent, psd_welch_default,
    simulate_independent_spins, sql_delta_omega,
};
use spinneedle::protocols::{
    detrended_azimuth, precession_experiment, SimSettings,
};

fn main() -> spinneedle::Result<()> {
    // --- independent-spin baseline ---------------------------------------
    let n_seeds = 40;
    let (t_end, dt) = (2000.0, 0.1);
    let mut mean_sq: Vec<f64> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut psd_acc: Vec<f64> = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    for seed in 0..n_seeds {
        let ens = simulate_independent_spins(50, 0.5, t_end, dt, seed)?;
        if mean_sq.is_empty() {
            mean_sq = vec![0.0; ens.delta_phi.len()];
            times = ens.times.clone();
        }
        for (a, d) in mean_sq.iter_mut().zip(ens.delta_phi.iter()) {
            *a += d * d / n_seeds as f64;
        }
        let spec = psd_welch_default(&ens.phis[0], dt)?;
        if psd_acc.is_empty() {
            psd_acc = vec![0.0; spec.psd.len()];
            freqs = spec.freqs.clone();
        }
        for (a, p) in psd_acc.iter_mut().zip(spec.psd.iter()) {
            *a += p / n_seeds as f64;
        }
    }
    let rms: Vec<f64> = mean_sq.iter().map(|v| v.sqrt()).collect();
    let spread = fit_powerlaw_exponent(&times[1..], &rms[1..], (1.0, t_end))?;
    let f_lo = freqs[4];
    let psd = fit_powerlaw_exponent(&freqs[1..], &psd_acc[1..], (f_lo, 10.0 * f_lo))?;
    println!("independent spins: spread grows as t^{:.3}, azimuth PSD ~ f^{:.2}", spread.slope, psd.slope);

    // --- needle -----------------------------------------------------------
    let system = build_system(&PhysicalParams::cobalt(50))?;
    let settings = SimSettings {
        lattice_temp: 1e-7,
        seed: 1,
        ..Default::default()
    };
    let summary = precession_experiment(&system, &settings)?;
    let n = summary.delta_phi.len();
    let late = fit_powerlaw_exponent(
        &summary.delta_phi_times[1..],
        &summary.delta_phi[1..],
        (0.3 * summary.trajectory.t_end, summary.trajectory.t_end),
    )?;
    let residual = detrended_azimuth(&summary.trajectory)?;
    let dt_n = summary.trajectory.times[1] - summary.trajectory.times[0];
    let spec = psd_welch_default(&residual, dt_n)?;
    let f_lo = spec.freqs[4];
    let needle_psd =
        fit_powerlaw_exponent(&spec.freqs[1..], &spec.psd[1..], (f_lo, 10.0 * f_lo))?;
    println!(
        "needle: spread saturates at {:.1e} rad (late slope t^{:+.3}), azimuth PSD ~ f^{:+.2}",
        summary.delta_phi[n / 2..].iter().cloned().fold(0.0, f64::max),
        late.slope,
        needle_psd.slope
    );

    // --- what the spectra imply for frequency estimation -------------------
    println!("\nfrequency-uncertainty bounds at t = 1, 10, 100 (arb. units):");
    for t in [1.0, 10.0, 100.0] {
        println!(
            "  t = {t:>5}: diffusing spins >= {:.3e},  white-noise floor >= {:.3e}",
            sql_delta_omega(50.0, 1.0, t),
            crlb_delta_omega(1.0, 1.0, t)
        );
    }
    Ok(())
}
