//! The packaged experiments: dynamical-regime scan, precession summary,
//! geometric-phase readout, and nutation-based field sensing.

use nalgebra::{Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::{integrate, FieldSchedule, RecordOptions, Trajectory};
use crate::error::{Error, Result};
use crate::model::{
    build_system, critical_field, sample_initial_state, DimensionlessSystem,
    PhysicalParams, SystemState,
};
use crate::noise::{delta_phi, linear_fit, psd_welch_default};
use crate::observables::{unwrap_angles, wrap_angle};

/// Knobs shared by all protocol runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    /// Integrator step override; the system default otherwise.
    pub dt_override: Option<f64>,
    /// Run length override (dimensionless time).
    pub t_end: Option<f64>,
    /// Recording stride override (steps per sample).
    pub record_every: Option<usize>,
    /// Boltzmann temperature for the initial lattice.
    pub lattice_temp: f64,
    pub seed: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            dt_override: None,
            t_end: None,
            record_every: None,
            lattice_temp: 0.0,
            seed: 0,
        }
    }
}

impl SimSettings {
    fn resolve_dtau(&self, system: &DimensionlessSystem) -> f64 {
        self.dt_override.unwrap_or_else(|| system.default_dtau())
    }

    /// Stride that yields roughly `target` samples.
    fn resolve_record_every(&self, t_end: f64, dtau: f64, target: usize) -> usize {
        self.record_every.unwrap_or_else(|| {
            let n_steps = (t_end / dtau).round() as usize;
            (n_steps / target).max(1)
        })
    }
}

/// Standard initial configuration: straight chain with spins along the
/// chain axis; `tilt_about_y` rotates the whole state so the axis can be
/// set perpendicular to a tilted field.
fn standard_state(
    system: &DimensionlessSystem,
    settings: &SimSettings,
    tilt_about_y: f64,
) -> Result<SystemState> {
    let st = sample_initial_state(system, settings.lattice_temp, settings.seed)?;
    if tilt_about_y == 0.0 {
        return Ok(st);
    }
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), tilt_about_y);
    Ok(st.rotated(&rot))
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

/// Collective motion class of the needle at a given field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Precession,
    Nutation,
    Libration,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Precession => write!(f, "precession"),
            Regime::Nutation => write!(f, "nutation"),
            Regime::Libration => write!(f, "libration"),
        }
    }
}

/// Precession requires both the mean and the excursion of `M_z` to stay
/// below this.
pub const REGIME_PRECESSION_LIMIT: f64 = 0.2;
/// Libration requires the mean of `M_z` to exceed this.
pub const REGIME_LIBRATION_MIN: f64 = 0.8;

/// Threshold classification used by [`regime_scan`]; re-derivable from the
/// stored report fields.
pub fn classify_regime(mz_mean: f64, mz_excursion: f64) -> Regime {
    if mz_excursion < REGIME_PRECESSION_LIMIT
        && mz_mean.abs() < REGIME_PRECESSION_LIMIT
    {
        Regime::Precession
    } else if mz_mean > REGIME_LIBRATION_MIN {
        Regime::Libration
    } else {
        Regime::Nutation
    }
}

/// Classification of one field point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Field magnitude (T).
    pub field_magnitude: f64,
    pub regime: Regime,
    /// Time-mean of `M_z` over the analysis window.
    pub mz_mean: f64,
    /// Peak-to-peak excursion of `M_z` over the analysis window.
    pub mz_excursion: f64,
    /// `max | |M| - 1 |` over the whole run.
    pub bloch_norm_error: f64,
}

/// Integrate the needle at each field magnitude and classify its motion.
///
/// Every run starts from the standard state (spins along the chain,
/// perpendicular to the field) and keeps the dimensionless couplings at the
/// values of the base system; the field enters through the time scale and
/// the spin-to-lattice angular-momentum ratio. Statistics are taken over
/// the trailing two precession periods so the approach to the attractor
/// does not pollute the classification.
pub fn regime_scan(
    field_list: &[f64],
    base: &PhysicalParams,
    settings: &SimSettings,
) -> Result<Vec<RegimeReport>> {
    base.validate()?;
    let base_sys = build_system(base)?;
    let b_ref = base.b_field.norm();
    field_list
        .par_iter()
        .map(|&field| regime_single(field, b_ref, &base_sys, settings))
        .collect()
}

fn regime_single(
    field: f64,
    b_ref: f64,
    base_sys: &DimensionlessSystem,
    settings: &SimSettings,
) -> Result<RegimeReport> {
    if !(field > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "field magnitudes must be positive, got {field}"
        )));
    }
    let attach = |e: Error| Error::InvalidArgument(format!(
        "regime run at {field:e} T failed: {e}"
    ));
    let sys = base_sys.at_field_ratio(field / b_ref)?;
    let state = standard_state(&sys, settings, 0.0)?;
    let t_end = settings.t_end.unwrap_or(6.0 * PI);
    let dtau = settings.resolve_dtau(&sys);
    let record_every = settings.resolve_record_every(t_end, dtau, 4096);
    let traj = integrate(
        &state,
        &sys,
        t_end,
        record_every,
        &FieldSchedule::Constant,
        &RecordOptions {
            dtau: Some(dtau),
            ..Default::default()
        },
    )
    .map_err(attach)?;

    let window_start = traj.t_end - (4.0 * PI).min(traj.t_end);
    let mut mz_min = f64::INFINITY;
    let mut mz_max = f64::NEG_INFINITY;
    let mut mz_sum = 0.0;
    let mut count = 0usize;
    let mut bloch = 0.0f64;
    for (t, m) in traj.times.iter().zip(traj.mag.iter()) {
        bloch = bloch.max((m.norm() - 1.0).abs());
        if *t >= window_start {
            mz_min = mz_min.min(m.z);
            mz_max = mz_max.max(m.z);
            mz_sum += m.z;
            count += 1;
        }
    }
    let mz_mean = mz_sum / count as f64;
    let mz_excursion = mz_max - mz_min;
    Ok(RegimeReport {
        field_magnitude: field,
        regime: classify_regime(mz_mean, mz_excursion),
        mz_mean,
        mz_excursion,
        bloch_norm_error: bloch,
    })
}

// ---------------------------------------------------------------------------
// Precession experiment
// ---------------------------------------------------------------------------

/// Headline observables of a weak-field precession run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecessionSummary {
    /// |slope| of the unwrapped needle azimuth per unit dimensionless time
    /// (1.0 means exactly the Larmor frequency).
    pub fitted_rate: f64,
    /// The same in physical units (Hz).
    pub fitted_frequency_hz: f64,
    /// `max |J_z(t) - J_z(0)|` over the run, relative to `N s0/hbar`.
    pub j_z_drift: f64,
    /// `max | |M| - 1 |` over the run.
    pub bloch_norm_error: f64,
    /// Sample times of the spread curve.
    pub delta_phi_times: Vec<f64>,
    /// Cross-spin spread of unwrapped azimuths at each sample (rad).
    pub delta_phi: Vec<f64>,
    /// The underlying trajectory (azimuth series, energies, ...).
    pub trajectory: Trajectory,
}

/// Weak-field guard for [`precession_experiment`]: `|B| < B_c / 100`.
pub fn check_weak_field(system: &DimensionlessSystem) -> Result<()> {
    let params = system.redimensionalize();
    let limit = critical_field(&params) / 100.0;
    let field = system.field_tesla();
    if field >= limit {
        return Err(Error::NotWeakField { field, limit });
    }
    Ok(())
}

/// One-call reproduction of the weak-field pipeline: integrate, fit the
/// needle azimuth slope, and report conservation and coherence figures.
pub fn precession_experiment(
    system: &DimensionlessSystem,
    settings: &SimSettings,
) -> Result<PrecessionSummary> {
    check_weak_field(system)?;
    let state = standard_state(system, settings, 0.0)?;
    let t_end = settings.t_end.unwrap_or(4.0 * PI);
    let dtau = settings.resolve_dtau(system);
    let record_every = settings.resolve_record_every(t_end, dtau, 16384);
    let traj = integrate(
        &state,
        system,
        t_end,
        record_every,
        &FieldSchedule::Constant,
        &RecordOptions {
            dtau: Some(dtau),
            spin_azimuths: true,
            ..Default::default()
        },
    )?;

    let azimuth = traj.unwrapped_azimuth()?;
    let (slope, _, _) = linear_fit(&traj.times, &azimuth);
    let fitted_rate = slope.abs();
    let fitted_frequency_hz = fitted_rate * system.scales.omega_l / (2.0 * PI);

    let budget = system.n_atoms as f64 * system.spin_unit_hbar();
    let jz0 = traj.j_z[0];
    let j_z_drift = traj
        .j_z
        .iter()
        .map(|j| (j - jz0).abs())
        .fold(0.0f64, f64::max)
        / budget;
    let bloch_norm_error = traj
        .mag
        .iter()
        .map(|m| (m.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);

    let spread = spin_spread_curve(&traj)?;
    Ok(PrecessionSummary {
        fitted_rate,
        fitted_frequency_hz,
        j_z_drift,
        bloch_norm_error,
        delta_phi_times: traj.times.clone(),
        delta_phi: spread,
        trajectory: traj,
    })
}

/// Unwrap each spin's azimuth over time, then take the cross-spin spread at
/// each sample; unwrapping first keeps 2 pi wraps out of the statistics.
pub fn spin_spread_curve(traj: &Trajectory) -> Result<Vec<f64>> {
    let samples = traj.spin_azimuths.as_ref().ok_or_else(|| {
        Error::InvalidArgument(
            "trajectory was recorded without per-spin azimuths".into(),
        )
    })?;
    let n_spins = samples[0].len();
    let mut per_spin = Vec::with_capacity(n_spins);
    for i in 0..n_spins {
        let series: Vec<f64> = samples.iter().map(|row| row[i]).collect();
        per_spin.push(unwrap_angles(&series)?);
    }
    delta_phi(&per_spin)
}

/// Residual of the unwrapped needle azimuth after removing its
/// least-squares linear trend; the noise signal whose spectrum is compared
/// against the independent-spin baseline.
pub fn detrended_azimuth(traj: &Trajectory) -> Result<Vec<f64>> {
    let azimuth = traj.unwrapped_azimuth()?;
    let (slope, intercept, _) = linear_fit(&traj.times, &azimuth);
    Ok(traj
        .times
        .iter()
        .zip(azimuth.iter())
        .map(|(t, a)| a - (intercept + slope * t))
        .collect())
}

// ---------------------------------------------------------------------------
// Geometric phase
// ---------------------------------------------------------------------------

/// Result of the two-cycle rotating-field protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerryResult {
    /// Cone polar angle (rad).
    pub theta: f64,
    /// `4 pi (1 - cos theta)` reduced to (-pi, pi].
    pub predicted: f64,
    /// Needle-axis misalignment between start and end, measured in the
    /// plane perpendicular to the cone axis, same reduction.
    pub measured: f64,
    /// Rotation rate over the Larmor rate.
    pub adiabaticity: f64,
}

/// Couplings for geometric-phase runs. The protocol spans hundreds of
/// precession periods, so the couplings are softened relative to the
/// defaults; they only need to keep the spins mutually locked and the
/// needle attached to the macrospin, and their values do not move the
/// geometric answer.
pub const BERRY_EPS_J: f64 = 100.0;
pub const BERRY_EPS_C: f64 = 3000.0;

/// Chain length for geometric-phase runs. The needle follows the macrospin
/// at the rigid-body rate `sqrt(2 N eps_c / I) ~ sqrt(24 eps_c) / N`
/// (Larmor units); a short needle keeps that rate well above 1 at couplings
/// the run length can afford, and the geometric angle itself is
/// length-independent.
pub const BERRY_N_ATOMS: usize = 8;

/// Cobalt system tuned for geometric-phase runs.
pub fn berry_default_system(n_atoms: usize) -> Result<DimensionlessSystem> {
    Ok(build_system(&PhysicalParams::cobalt(n_atoms))?
        .with_couplings(BERRY_EPS_J, BERRY_EPS_C))
}

/// Two-cycle geometric-phase protocol: the unit field rotates once about z
/// on a cone of polar angle `theta`, is negated, and rotates once more.
/// Dynamical phases cancel between the cycles; the needle-axis misalignment
/// that remains is the geometric angle `4 pi (1 - cos theta)` (mod 2 pi).
///
/// `omega_rot` is the rotation rate in Larmor units and must not exceed
/// 1/20 for the adiabatic picture to hold.
pub fn berry_protocol(
    theta: f64,
    omega_rot: f64,
    system: &DimensionlessSystem,
    settings: &SimSettings,
) -> Result<BerryResult> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, pi], got {theta}"
        )));
    }
    if !(omega_rot > 0.0) || omega_rot > 1.0 / 20.0 {
        return Err(Error::AdiabaticityViolated {
            rate: omega_rot,
            limit: 1.0 / 20.0,
        });
    }

    let cycle = 2.0 * PI / omega_rot;
    let t_total = 2.0 * cycle;
    // snap the step so both cycles contain a whole number of steps
    let dtau_raw = settings.resolve_dtau(system);
    let steps_per_cycle = (cycle / dtau_raw).ceil().max(1.0);
    let dtau = cycle / steps_per_cycle;
    let record_every = settings.resolve_record_every(t_total, dtau, 4096);

    let state = standard_state(system, settings, theta)?;
    let schedule = FieldSchedule::RotatingCone {
        polar: theta,
        rate: omega_rot,
        t_flip: cycle,
    };
    let traj = integrate(
        &state,
        system,
        t_total,
        record_every,
        &schedule,
        &RecordOptions {
            dtau: Some(dtau),
            ..Default::default()
        },
    )?;

    // both axes lie in the plane perpendicular to the initial field
    // direction; the rigid misalignment between the configurations is the
    // rotation about that direction
    let field0 = Vector3::new(theta.sin(), 0.0, theta.cos());
    let axis0 = axis_from_angles(traj.needle_azimuth[0], traj.needle_polar[0]);
    let axis1 = axis_from_angles(
        *traj.needle_azimuth.last().unwrap(),
        *traj.needle_polar.last().unwrap(),
    );
    let measured = plane_angle(&axis0, &axis1, &field0);
    let predicted = wrap_angle(4.0 * PI * (1.0 - theta.cos()));
    Ok(BerryResult {
        theta,
        predicted,
        measured,
        adiabaticity: omega_rot,
    })
}

fn axis_from_angles(azimuth: f64, polar: f64) -> Vector3<f64> {
    Vector3::new(
        polar.sin() * azimuth.cos(),
        polar.sin() * azimuth.sin(),
        polar.cos(),
    )
}

/// Signed angle from `a` to `b` around `axis`, measured after projecting
/// both onto the plane perpendicular to `axis`.
fn plane_angle(a: &Vector3<f64>, b: &Vector3<f64>, axis: &Vector3<f64>) -> f64 {
    let ap = (a - axis * axis.dot(a)).normalize();
    let bp = (b - axis * axis.dot(b)).normalize();
    ap.cross(&bp).dot(axis).atan2(ap.dot(&bp))
}

// ---------------------------------------------------------------------------
// Nutation sensing
// ---------------------------------------------------------------------------

/// Outcome of the amplitude-modulated-field sensing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutationReading {
    /// Angular modulation rate actually applied (Larmor units).
    pub drive_freq_true: f64,
    /// Angular rate of the dominant envelope Fourier peak.
    pub drive_freq_recovered: f64,
    /// Pearson correlation between the detrended envelope and the drive
    /// waveform; 0 when the drive depth is zero.
    pub envelope_correlation: f64,
    /// Envelope excursion relative to a depth-0.5 calibration run.
    pub depth_ratio: f64,
}

/// Envelope peak must exceed this multiple of the median spectral floor to
/// count as detected.
pub const NUTATION_DETECTION_FACTOR: f64 = 5.0;

/// Couplings for nutation-sensing runs; softened for run length like the
/// geometric-phase couplings, but strong enough that the spins stay locked
/// to the needle in the nutation regime.
pub const NUTATION_EPS_J: f64 = 1.0e3;
pub const NUTATION_EPS_C: f64 = 6.0e3;

/// Field magnitude for nutation-visible runs (T).
pub const NUTATION_FIELD: f64 = 5.0e-5;

/// Cobalt system at the nutation-visible field scale.
pub fn nutation_default_system(n_atoms: usize) -> Result<DimensionlessSystem> {
    let base = build_system(&PhysicalParams::cobalt(n_atoms))?;
    Ok(base
        .at_field_ratio(NUTATION_FIELD / crate::model::REFERENCE_FIELD)?
        .with_couplings(NUTATION_EPS_J, NUTATION_EPS_C))
}

/// Sense an amplitude-modulated field through the nutation envelope of
/// `M_z`. Runs an unmodulated calibration to measure the nutation period,
/// extracts the envelope by a centered RMS window of one nutation period,
/// and reads the drive frequency off the envelope spectrum. `drive_freq`
/// is angular, in Larmor units.
pub fn nutation_sensing(
    depth: f64,
    drive_freq: f64,
    system: &DimensionlessSystem,
    settings: &SimSettings,
) -> Result<NutationReading> {
    if !(0.0..1.0).contains(&depth) {
        return Err(Error::InvalidArgument(format!(
            "depth must lie in [0, 1), got {depth}"
        )));
    }
    if !(drive_freq > 0.0 && drive_freq < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "drive_freq must lie in (0, 1), got {drive_freq}"
        )));
    }

    let drive_period = 2.0 * PI / drive_freq;
    let t_end = settings.t_end.unwrap_or(6.0 * drive_period);
    let dtau = settings.resolve_dtau(system);
    let record_every = settings.resolve_record_every(t_end, dtau, 8192);

    // unmodulated calibration: nutation period for the RMS window
    let (mz_cal0, dt_cal0) = run_mz(
        system,
        settings,
        0.0,
        drive_freq,
        drive_period,
        dtau,
        record_every,
    )?;
    let nutation_freq = dominant_frequency(&mz_cal0, dt_cal0)?;
    let window = ((1.0 / nutation_freq) / dt_cal0).round().max(1.0) as usize;

    let (mz, dt_sample) = run_mz(
        system,
        settings,
        depth,
        drive_freq,
        t_end,
        dtau,
        record_every,
    )?;
    let envelope = detrend(&moving_rms(&mz, window));
    let times: Vec<f64> = (0..envelope.len()).map(|k| k as f64 * dt_sample).collect();

    if depth == 0.0 {
        return Ok(NutationReading {
            drive_freq_true: drive_freq,
            drive_freq_recovered: 0.0,
            envelope_correlation: 0.0,
            depth_ratio: 0.0,
        });
    }

    let (peak_freq, peak_power, median_floor) = envelope_peak(&envelope, dt_sample)?;
    if peak_power < NUTATION_DETECTION_FACTOR * median_floor {
        return Err(Error::EnvelopeNotDetectable {
            peak: peak_power,
            threshold: NUTATION_DETECTION_FACTOR * median_floor,
        });
    }
    let drive_freq_recovered = 2.0 * PI * peak_freq;

    let drive: Vec<f64> = times.iter().map(|t| (drive_freq * t).cos()).collect();
    let envelope_correlation = pearson(&envelope, &drive);

    // depth-0.5 run calibrates the amplitude scale
    let std_main = std_dev(&envelope);
    let std_cal = if (depth - 0.5).abs() < 1e-12 {
        std_main
    } else {
        let (mz_cal, _) = run_mz(
            system,
            settings,
            0.5,
            drive_freq,
            t_end,
            dtau,
            record_every,
        )?;
        std_dev(&detrend(&moving_rms(&mz_cal, window)))
    };
    let depth_ratio = if std_cal > 0.0 { std_main / std_cal } else { 0.0 };

    Ok(NutationReading {
        drive_freq_true: drive_freq,
        drive_freq_recovered,
        envelope_correlation,
        depth_ratio,
    })
}

fn run_mz(
    system: &DimensionlessSystem,
    settings: &SimSettings,
    depth: f64,
    drive_freq: f64,
    t_end: f64,
    dtau: f64,
    record_every: usize,
) -> Result<(Vec<f64>, f64)> {
    let state = standard_state(system, settings, 0.0)?;
    let schedule = if depth == 0.0 {
        FieldSchedule::Constant
    } else {
        FieldSchedule::AmplitudeModulated {
            depth,
            rate: drive_freq,
        }
    };
    let traj = integrate(
        &state,
        system,
        t_end,
        record_every,
        &schedule,
        &RecordOptions {
            dtau: Some(dtau),
            ..Default::default()
        },
    )?;
    let dt_sample = traj.times[1] - traj.times[0];
    Ok((traj.mag.iter().map(|m| m.z).collect(), dt_sample))
}

/// Frequency (cycles per unit time) of the dominant non-DC spectral peak.
fn dominant_frequency(signal: &[f64], dt: f64) -> Result<f64> {
    let spec = psd_welch_default(signal, dt)?;
    let mut best = (0usize, 0.0f64);
    for (k, p) in spec.psd.iter().enumerate().skip(1) {
        if *p > best.1 {
            best = (k, *p);
        }
    }
    if best.1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "signal has no spectral content".into(),
        ));
    }
    Ok(spec.freqs[best.0])
}

/// Full-length rectangular periodogram peak: (frequency, power, median
/// floor). Maximum frequency resolution matters here, so no segmenting.
fn envelope_peak(envelope: &[f64], dt: f64) -> Result<(f64, f64, f64)> {
    let spec = crate::noise::psd_welch(envelope, dt, envelope.len(), 0.0)?;
    let mut best = (1usize, 0.0f64);
    for (k, p) in spec.psd.iter().enumerate().skip(1) {
        if *p > best.1 {
            best = (k, *p);
        }
    }
    let mut floor: Vec<f64> = spec.psd[1..].to_vec();
    floor.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = floor[floor.len() / 2];
    Ok((spec.freqs[best.0], best.1, median))
}

/// Centered moving RMS with a window of `window` samples (clamped at the
/// edges).
pub fn moving_rms(signal: &[f64], window: usize) -> Vec<f64> {
    let n = signal.len();
    let half = window.max(1) / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let ms: f64 =
            signal[lo..hi].iter().map(|x| x * x).sum::<f64>() / (hi - lo) as f64;
        out.push(ms.sqrt());
    }
    out
}

fn detrend(signal: &[f64]) -> Vec<f64> {
    let x: Vec<f64> = (0..signal.len()).map(|k| k as f64).collect();
    let (slope, intercept, _) = linear_fit(&x, signal);
    signal
        .iter()
        .zip(x.iter())
        .map(|(y, xi)| y - (intercept + slope * xi))
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn std_dev(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    let m = a.iter().sum::<f64>() / n;
    (a.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}
