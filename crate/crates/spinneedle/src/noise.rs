//! Stochastic reference model, spread statistics, spectra, and bounds.
//!
//! A collection of independent spins with per-spin white field noise is the
//! baseline a rigid needle is compared against: its precession-angle spread
//! grows diffusively and its azimuth spectrum falls as `1/omega^2`, which is
//! what pins frequency estimation to the standard quantum limit.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_MEMBER_BASE};

/// How the white noise couples to each independent spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NoiseModel {
    /// Noise along the field axis only: a pure azimuth random walk.
    #[default]
    Azimuthal,
    /// Isotropic noise, applied as a random small rotation each step.
    Isotropic,
}

/// Unwrapped per-spin azimuths of an ensemble, plus their spread over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAngles {
    pub times: Vec<f64>,
    /// `phis[spin][time_index]`, unwrapped (rad).
    pub phis: Vec<Vec<f64>>,
    /// Cross-spin population standard deviation at each time (rad).
    pub delta_phi: Vec<f64>,
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Ascending frequencies in cycles per unit time, starting at DC.
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub n_segments: usize,
    pub window: String,
    pub dt: f64,
}

/// A fitted power-law exponent and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerlawFit {
    pub slope: f64,
    pub std_error: f64,
    pub n_points: usize,
}

/// Independent spins precessing at unit rate, each kicked by its own white
/// noise; per step the azimuth picks up a Wiener increment of variance
/// `noise_strength^2 * dt`. Deterministic per `(rng_seed, spin index)`.
pub fn simulate_independent_spins(
    n_spins: usize,
    noise_strength: f64,
    t_end: f64,
    dt: f64,
    rng_seed: u64,
) -> Result<EnsembleAngles> {
    simulate_independent_spins_with(
        n_spins,
        noise_strength,
        t_end,
        dt,
        rng_seed,
        NoiseModel::Azimuthal,
    )
}

pub fn simulate_independent_spins_with(
    n_spins: usize,
    noise_strength: f64,
    t_end: f64,
    dt: f64,
    rng_seed: u64,
    model: NoiseModel,
) -> Result<EnsembleAngles> {
    if n_spins == 0 {
        return Err(Error::InvalidArgument("need at least one spin".into()));
    }
    if !(dt > 0.0) || !(t_end > 0.0) || dt >= t_end {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt < t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    if noise_strength < 0.0 {
        return Err(Error::InvalidArgument(
            "noise_strength must be >= 0".into(),
        ));
    }
    let n_steps = (t_end / dt).round() as usize;
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let sqrt_dt = dt.sqrt();

    let phis: Vec<Vec<f64>> = (0..n_spins)
        .map(|spin| {
            let mut rng = stream_rng(rng_seed, STREAM_MEMBER_BASE + spin as u64);
            match model {
                NoiseModel::Azimuthal => {
                    let mut phi = 0.0;
                    let mut row = Vec::with_capacity(n_steps + 1);
                    row.push(phi);
                    for _ in 0..n_steps {
                        let xi: f64 = rng.sample(StandardNormal);
                        phi += -dt + noise_strength * sqrt_dt * xi;
                        row.push(phi);
                    }
                    row
                }
                NoiseModel::Isotropic => {
                    let mut s = Vector3::<f64>::x();
                    let mut row = Vec::with_capacity(n_steps + 1);
                    let mut phi = 0.0f64;
                    row.push(phi);
                    for _ in 0..n_steps {
                        s = rotate_about_z(&s, -dt);
                        let kick = Vector3::new(
                            rng.sample::<f64, _>(StandardNormal),
                            rng.sample::<f64, _>(StandardNormal),
                            rng.sample::<f64, _>(StandardNormal),
                        ) * (noise_strength * sqrt_dt);
                        s = rotate_by_vector(&s, &kick);
                        // unwrap incrementally against the previous sample
                        let raw = s.y.atan2(s.x);
                        phi += crate::observables::wrap_angle(
                            raw - crate::observables::wrap_angle(phi),
                        );
                        row.push(phi);
                    }
                    row
                }
            }
        })
        .collect();

    let delta = delta_phi(&phis)?;
    Ok(EnsembleAngles {
        times,
        phis,
        delta_phi: delta,
    })
}

fn rotate_about_z(v: &Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

fn rotate_by_vector(v: &Vector3<f64>, rot: &Vector3<f64>) -> Vector3<f64> {
    let angle = rot.norm();
    if angle == 0.0 {
        return *v;
    }
    let axis = rot / angle;
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Cross-spin standard deviation at each time, population convention
/// (divide by the number of spins).
pub fn delta_phi(phis: &[Vec<f64>]) -> Result<Vec<f64>> {
    if phis.len() < 2 {
        return Err(Error::InvalidArgument(
            "delta_phi needs at least two spins".into(),
        ));
    }
    let n_t = phis[0].len();
    if phis.iter().any(|row| row.len() != n_t) {
        return Err(Error::InvalidArgument(
            "all spins must have the same number of samples".into(),
        ));
    }
    let n = phis.len() as f64;
    let mut out = Vec::with_capacity(n_t);
    for t in 0..n_t {
        let mean: f64 = phis.iter().map(|row| row[t]).sum::<f64>() / n;
        let var: f64 = phis
            .iter()
            .map(|row| {
                let d = row[t] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        out.push(var.sqrt());
    }
    Ok(out)
}

/// Welch's averaged periodogram: Hann window, per-segment mean removal,
/// window-power normalization, one-sided with the DC bin reported.
pub fn psd_welch(
    signal: &[f64],
    dt: f64,
    segment_length: usize,
    overlap_fraction: f64,
) -> Result<SpectrumEstimate> {
    if segment_length == 0 || segment_length > signal.len() {
        return Err(Error::SegmentTooLong {
            segment: segment_length,
            signal: signal.len(),
        });
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidArgument(format!(
            "overlap_fraction must be in [0, 1), got {overlap_fraction}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be > 0".into()));
    }

    let m = segment_length;
    let hop = ((m as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    // periodic Hann window
    let window: Vec<f64> = (0..m)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / m as f64).cos()))
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);

    let n_bins = m / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut n_segments = 0usize;
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];

    let mut start = 0usize;
    while start + m <= signal.len() {
        let seg = &signal[start..start + m];
        let mean = seg.iter().sum::<f64>() / m as f64;
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(window.iter())) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let two_sided = k != 0 && !(m % 2 == 0 && k == m / 2);
            let scale = if two_sided { 2.0 } else { 1.0 };
            *a += scale * buf[k].norm_sqr() * dt / window_power;
        }
        n_segments += 1;
        start += hop;
    }

    for a in acc.iter_mut() {
        *a /= n_segments as f64;
    }
    let freqs: Vec<f64> = (0..n_bins).map(|k| k as f64 / (m as f64 * dt)).collect();
    Ok(SpectrumEstimate {
        freqs,
        psd: acc,
        n_segments,
        window: "hann".to_string(),
        dt,
    })
}

/// Welch estimate with the house defaults: 8 segments at 50% overlap.
pub fn psd_welch_default(signal: &[f64], dt: f64) -> Result<SpectrumEstimate> {
    let seg = (signal.len() as f64 / 4.5).floor() as usize;
    psd_welch(signal, dt, seg.max(8).min(signal.len()), 0.5)
}

impl SpectrumEstimate {
    /// Integral of the PSD over frequency (should match the signal variance
    /// for stationary inputs).
    pub fn total_power(&self) -> f64 {
        if self.freqs.len() < 2 {
            return 0.0;
        }
        let df = self.freqs[1] - self.freqs[0];
        self.psd.iter().sum::<f64>() * df
    }
}

/// Least-squares slope of `log y` against `log x` over `x` in
/// `[window.0, window.1]`.
pub fn fit_powerlaw_exponent(
    x: &[f64],
    y: &[f64],
    fit_window: (f64, f64),
) -> Result<PowerlawFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(
            "x and y must have equal length".into(),
        ));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        if xi >= fit_window.0 && xi <= fit_window.1 {
            if xi <= 0.0 || yi <= 0.0 {
                return Err(Error::NonPositiveFitData);
            }
            lx.push(xi.ln());
            ly.push(yi.ln());
        }
    }
    let n = lx.len();
    if n < 8 {
        return Err(Error::FitWindowTooSmall { need: 8, found: n });
    }
    let (slope, _intercept, se) = linear_fit(&lx, &ly);
    Ok(PowerlawFit {
        slope,
        std_error: se,
        n_points: n,
    })
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, stderr(b))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        let r = yi - (intercept + slope * xi);
        ss_res += r * r;
    }
    let se = if x.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

/// Cramer-Rao lower bound for the frequency of a tone in white noise:
/// `sqrt(12 / (snr * f_bw * t^3))`.
pub fn crlb_delta_omega(snr: f64, f_bw: f64, t: f64) -> f64 {
    (12.0 / (snr * f_bw * t * t * t)).sqrt()
}

/// Standard quantum limit for N independent spins with coherence time t2:
/// `1 / sqrt(n * t2 * t)`.
pub fn sql_delta_omega(n: f64, t2: f64, t: f64) -> f64 {
    1.0 / (n * t2 * t).sqrt()
}
