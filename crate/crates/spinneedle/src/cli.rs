//! Experiment front door: TOML configs in, CSV/JSON artifacts out.
//!
//! A run is fully determined by `(config, seed, code version)`: every
//! stochastic quantity comes from counter-based streams keyed by the seed,
//! sweeps reduce in fixed member order regardless of scheduling, and floats
//! are written in round-trip precision. Timestamps exist only in the
//! manifest, never in payload files.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{build_system, DimensionlessSystem, PhysicalParams};
use crate::noise::{
    crlb_delta_omega, fit_powerlaw_exponent, psd_welch_default,
    simulate_independent_spins, sql_delta_omega, SpectrumEstimate,
};
use crate::protocols::{
    berry_protocol, detrended_azimuth, nutation_sensing, precession_experiment,
    regime_scan, SimSettings, BERRY_EPS_C, BERRY_EPS_J, NUTATION_EPS_C,
    NUTATION_EPS_J, NUTATION_FIELD,
};

// ---------------------------------------------------------------------------
// Config types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Precess,
    Regimes,
    Noise,
    Berry,
    Nutate,
    Sweep,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Precess => "precess",
            Experiment::Regimes => "regimes",
            Experiment::Noise => "noise",
            Experiment::Berry => "berry",
            Experiment::Nutate => "nutate",
            Experiment::Sweep => "sweep",
        }
    }
}

/// Fully resolved experiment description; serializing and re-parsing it
/// reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: String,
    pub physical: PhysicalParams,
    pub sim: ResolvedSim,
    pub protocol: ProtocolConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedSim {
    /// Integrator step override; the guarded default when absent.
    pub dt_override: Option<f64>,
    /// Run length (dimensionless time).
    pub t_end: f64,
    /// Steps per recorded sample.
    pub record_every: usize,
    /// Phonon-to-Larmor ratio the lattice stiffness was derived from.
    pub omega_ph: f64,
    /// Boltzmann temperature of the initial lattice (energy units).
    pub lattice_temp: f64,
}

/// Experiment-specific parameters, all concrete after resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolConfig {
    Precess(PrecessProtocol),
    Regimes(RegimesProtocol),
    Noise(NoiseProtocol),
    Berry(BerryProtocol),
    Nutate(NutateProtocol),
    Sweep(SweepProtocol),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecessProtocol {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimesProtocol {
    /// Field magnitudes to scan (T).
    pub fields: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProtocol {
    pub n_spins: usize,
    pub noise_strength: f64,
    pub ensemble_t_end: f64,
    pub ensemble_dt: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerryProtocol {
    pub cos_thetas: Vec<f64>,
    /// Rotation rate in Larmor units.
    pub omega_rot: f64,
    pub eps_j: f64,
    pub eps_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NutateProtocol {
    pub depth: f64,
    /// Angular modulation rate in Larmor units.
    pub drive_freq: f64,
    pub eps_j: f64,
    pub eps_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepProtocol {
    /// Inner experiment run once per seed (anything but `sweep`).
    pub experiment: Experiment,
    pub n_seeds: usize,
}

// ---------------------------------------------------------------------------
// Raw config and resolution
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    seed: Option<u64>,
    output_dir: Option<String>,
    #[serde(default)]
    physical: RawPhysical,
    #[serde(default)]
    sim: RawSim,
    protocol: Option<toml::Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    material: Option<String>,
    n_atoms: Option<usize>,
    b_field: Option<[f64; 3]>,
    gamma: Option<f64>,
    exchange_j: Option<f64>,
    pseudo_dipolar_c: Option<f64>,
    lattice_v: Option<f64>,
    atom_mass: Option<f64>,
    lattice_const_r0: Option<f64>,
    spin_s0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt_override: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
    omega_ph: Option<f64>,
    lattice_temp: Option<f64>,
}

fn config_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Config(e.to_string())
}

/// Parse and resolve a TOML experiment config. Unknown keys, type
/// mismatches, and invalid enum values are rejected with their location;
/// omitted optional fields take the documented defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    // fast path: a fully resolved config re-parses exactly
    if let Ok(cfg) = toml::from_str::<ExperimentConfig>(text) {
        return Ok(cfg);
    }
    let raw: RawConfig = toml::from_str(text).map_err(config_err)?;
    resolve_config(raw)
}

fn resolve_config(raw: RawConfig) -> Result<ExperimentConfig> {
    let experiment = raw
        .experiment
        .ok_or_else(|| Error::Config("missing required key `experiment`".into()))?;
    let seed = raw.seed.unwrap_or(0);
    let output_dir = raw
        .output_dir
        .unwrap_or_else(|| format!("runs/{}", experiment.name()));

    let protocol = resolve_protocol(experiment, raw.protocol)?;

    // material preset, then explicit overrides
    let material = raw.physical.material.as_deref().unwrap_or("cobalt");
    let mut physical = match material {
        "cobalt" => PhysicalParams::cobalt(raw.physical.n_atoms.unwrap_or(50)),
        other => {
            return Err(Error::Config(format!(
                "unknown material preset `{other}` (available: cobalt)"
            )))
        }
    };
    if let Some(n) = raw.physical.n_atoms {
        physical.n_atoms = n;
    }
    if let Some(b) = raw.physical.b_field {
        physical.b_field = nalgebra::Vector3::new(b[0], b[1], b[2]);
    }
    if let Some(v) = raw.physical.gamma {
        physical.gamma = v;
    }
    if let Some(v) = raw.physical.exchange_j {
        physical.exchange_j = v;
    }
    if let Some(v) = raw.physical.pseudo_dipolar_c {
        physical.pseudo_dipolar_c = v;
    }
    if let Some(v) = raw.physical.atom_mass {
        physical.atom_mass = v;
    }
    if let Some(v) = raw.physical.lattice_const_r0 {
        physical.lattice_const_r0 = v;
    }
    if let Some(v) = raw.physical.spin_s0 {
        physical.spin_s0 = v;
    }

    // lattice stiffness: explicit value, or derived from omega_ph
    let omega_ph = match (raw.physical.lattice_v, raw.sim.omega_ph) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "physical.lattice_v and sim.omega_ph both set; give one".into(),
            ))
        }
        (Some(v), None) => {
            physical.lattice_v = v;
            let omega_l = physical.larmor_frequency();
            if omega_l <= 0.0 {
                return Err(Error::Config(
                    "explicit lattice_v with zero field needs sim.omega_ph".into(),
                ));
            }
            (2.0 * v / physical.atom_mass).sqrt() / omega_l
        }
        (None, maybe) => {
            let ratio = maybe.unwrap_or(crate::model::DEFAULT_OMEGA_PH);
            let omega_l = physical.larmor_frequency();
            physical.lattice_v =
                0.5 * physical.atom_mass * (ratio * omega_l).powi(2);
            ratio
        }
    };
    physical.validate()?;

    // protocol-specific run-length defaults
    let t_end = raw.sim.t_end.unwrap_or(match &protocol {
        ProtocolConfig::Precess(_) => 4.0 * PI,
        ProtocolConfig::Regimes(_) => 6.0 * PI,
        ProtocolConfig::Noise(_) => 4.0 * PI,
        ProtocolConfig::Berry(p) => 2.0 * (2.0 * PI / p.omega_rot),
        ProtocolConfig::Nutate(p) => 6.0 * (2.0 * PI / p.drive_freq),
        ProtocolConfig::Sweep(_) => 4.0 * PI,
    });
    let record_every = raw.sim.record_every.unwrap_or_else(|| {
        let sys = build_system(&physical);
        let dtau = raw
            .sim
            .dt_override
            .or(sys.as_ref().ok().map(|s| s.default_dtau()))
            .unwrap_or(1e-4);
        (((t_end / dtau).round() as usize) / 8192).max(1)
    });

    Ok(ExperimentConfig {
        experiment,
        seed,
        output_dir,
        physical,
        sim: ResolvedSim {
            dt_override: raw.sim.dt_override,
            t_end,
            record_every,
            omega_ph,
            lattice_temp: raw.sim.lattice_temp.unwrap_or(0.0),
        },
        protocol,
    })
}

fn resolve_protocol(
    experiment: Experiment,
    table: Option<toml::Value>,
) -> Result<ProtocolConfig> {
    let value = table.unwrap_or(toml::Value::Table(Default::default()));
    macro_rules! parse_into {
        ($ty:ty) => {
            value.clone().try_into::<$ty>().map_err(config_err)?
        };
    }

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawRegimes {
        fields: Option<Vec<f64>>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawNoise {
        n_spins: Option<usize>,
        noise_strength: Option<f64>,
        ensemble_t_end: Option<f64>,
        ensemble_dt: Option<f64>,
        n_seeds: Option<usize>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawBerry {
        cos_thetas: Option<Vec<f64>>,
        omega_rot: Option<f64>,
        eps_j: Option<f64>,
        eps_c: Option<f64>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawNutate {
        depth: Option<f64>,
        drive_freq: Option<f64>,
        eps_j: Option<f64>,
        eps_c: Option<f64>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawSweep {
        experiment: Option<Experiment>,
        n_seeds: Option<usize>,
    }

    Ok(match experiment {
        Experiment::Precess => {
            parse_into!(PrecessProtocol);
            ProtocolConfig::Precess(PrecessProtocol {})
        }
        Experiment::Regimes => {
            let raw = parse_into!(RawRegimes);
            ProtocolConfig::Regimes(RegimesProtocol {
                fields: raw.fields.unwrap_or_else(|| vec![1e-9, 5e-5, 5e-3]),
            })
        }
        Experiment::Noise => {
            let raw = parse_into!(RawNoise);
            ProtocolConfig::Noise(NoiseProtocol {
                n_spins: raw.n_spins.unwrap_or(50),
                noise_strength: raw.noise_strength.unwrap_or(0.5),
                ensemble_t_end: raw.ensemble_t_end.unwrap_or(2000.0),
                ensemble_dt: raw.ensemble_dt.unwrap_or(0.1),
                n_seeds: raw.n_seeds.unwrap_or(100),
            })
        }
        Experiment::Berry => {
            let raw = parse_into!(RawBerry);
            ProtocolConfig::Berry(BerryProtocol {
                cos_thetas: raw.cos_thetas.unwrap_or_else(|| vec![0.75]),
                omega_rot: raw.omega_rot.unwrap_or(0.01),
                eps_j: raw.eps_j.unwrap_or(BERRY_EPS_J),
                eps_c: raw.eps_c.unwrap_or(BERRY_EPS_C),
            })
        }
        Experiment::Nutate => {
            let raw = parse_into!(RawNutate);
            ProtocolConfig::Nutate(NutateProtocol {
                depth: raw.depth.unwrap_or(0.5),
                drive_freq: raw.drive_freq.unwrap_or(0.2),
                eps_j: raw.eps_j.unwrap_or(NUTATION_EPS_J),
                eps_c: raw.eps_c.unwrap_or(NUTATION_EPS_C),
            })
        }
        Experiment::Sweep => {
            let raw = parse_into!(RawSweep);
            let inner = raw.experiment.unwrap_or(Experiment::Precess);
            if inner == Experiment::Sweep {
                return Err(Error::Config("sweep cannot nest sweep".into()));
            }
            ProtocolConfig::Sweep(SweepProtocol {
                experiment: inner,
                n_seeds: raw.n_seeds.unwrap_or(8),
            })
        }
    })
}

/// Serialize a resolved config back to TOML.
pub fn config_to_toml(config: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(config).map_err(config_err)
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub role: String,
    /// Versioned row/column schema identifier.
    pub schema: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_echo: ExperimentConfig,
    pub code_version: String,
    /// Seconds of wall time; the only non-deterministic output of a run.
    pub wall_time: f64,
    pub files: Vec<FileEntry>,
    pub error: Option<ErrorRecord>,
}

pub const SCHEMA_TRAJECTORY: &str =
    "trajectory.v1:tau,Mx,My,Mz,Sz,Lz,Jz,needle_azimuth,needle_polar,energy_total,energy_err";
pub const SCHEMA_DELTA_PHI: &str = "delta_phi.v1:tau,delta_phi";
pub const SCHEMA_PSD: &str = "psd.v1:freq,psd";
pub const SCHEMA_REGIMES: &str =
    "regimes.v1:field_tesla,regime,mz_mean,mz_excursion,bloch_norm_error";
pub const SCHEMA_BERRY: &str =
    "berry.v1:theta,cos_theta,predicted,measured,adiabaticity";

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, role: &str, schema: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.files.push(FileEntry {
            name: name.to_string(),
            role: role.to_string(),
            schema: schema.to_string(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        role: &str,
        schema: &str,
        value: &T,
    ) -> Result<()> {
        let body = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.write(name, role, schema, &(body + "\n"))
    }
}

/// Render a trajectory as the standard CSV table.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 120);
    out.push_str(
        "tau,Mx,My,Mz,Sz,Lz,Jz,needle_azimuth,needle_polar,energy_total,energy_err\n",
    );
    let e0 = traj.energy_total.first().copied().unwrap_or(0.0);
    for k in 0..traj.len() {
        let m = traj.mag[k];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            traj.times[k],
            m.x,
            m.y,
            m.z,
            traj.s_z[k],
            traj.l_z[k],
            traj.j_z[k],
            traj.needle_azimuth[k],
            traj.needle_polar[k],
            traj.energy_total[k],
            traj.energy_total[k] - e0,
        );
    }
    out
}

/// Write a trajectory CSV to `path` (headers and full round-trip floats).
pub fn emit_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument(
            "refusing to emit an empty trajectory".into(),
        ));
    }
    std::fs::write(path, trajectory_csv(traj)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn two_column_csv(header: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = String::with_capacity(xs.len() * 40);
    out.push_str(header);
    out.push('\n');
    for (x, y) in xs.iter().zip(ys.iter()) {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

fn settings_from(config: &ExperimentConfig) -> SimSettings {
    SimSettings {
        dt_override: config.sim.dt_override,
        t_end: Some(config.sim.t_end),
        record_every: Some(config.sim.record_every),
        lattice_temp: config.sim.lattice_temp,
        seed: config.seed,
    }
}

fn base_system(config: &ExperimentConfig) -> Result<DimensionlessSystem> {
    build_system(&config.physical)
}

/// Serializable slice of a precession summary (the trajectory goes to CSV).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecessReport {
    pub fitted_rate: f64,
    pub fitted_frequency_hz: f64,
    pub j_z_drift: f64,
    pub bloch_norm_error: f64,
    pub delta_phi_late_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseReport {
    pub delta_phi_slope: f64,
    pub delta_phi_slope_stderr: f64,
    pub psd_slope: f64,
    pub psd_slope_stderr: f64,
    /// Bound examples evaluated at (snr, bandwidth, time) = (1, 1, 1) and
    /// (n, t2, t) = (n_spins, 1, ensemble_t_end).
    pub crlb_example: f64,
    pub sql_example: f64,
}

fn execute(config: &ExperimentConfig, emitter: &mut Emitter, quiet: bool) -> Result<()> {
    match &config.protocol {
        ProtocolConfig::Precess(_) => {
            let sys = base_system(config)?;
            let settings = settings_from(config);
            let summary = precession_experiment(&sys, &settings)?;
            let late = &summary.delta_phi[summary.delta_phi.len() / 2..];
            let report = PrecessReport {
                fitted_rate: summary.fitted_rate,
                fitted_frequency_hz: summary.fitted_frequency_hz,
                j_z_drift: summary.j_z_drift,
                bloch_norm_error: summary.bloch_norm_error,
                delta_phi_late_max: late.iter().cloned().fold(0.0, f64::max),
            };
            if !quiet {
                println!(
                    "precess: rate {:.6} ({:.3} Hz), Jz drift {:.2e}, |M| err {:.2e}",
                    report.fitted_rate,
                    report.fitted_frequency_hz,
                    report.j_z_drift,
                    report.bloch_norm_error
                );
            }
            emitter.write(
                "trajectory.csv",
                "trajectory",
                SCHEMA_TRAJECTORY,
                &trajectory_csv(&summary.trajectory),
            )?;
            emitter.write(
                "delta_phi.csv",
                "spread",
                SCHEMA_DELTA_PHI,
                &two_column_csv(
                    "tau,delta_phi",
                    &summary.delta_phi_times,
                    &summary.delta_phi,
                ),
            )?;
            let residual = detrended_azimuth(&summary.trajectory)?;
            let dt = summary.trajectory.times[1] - summary.trajectory.times[0];
            if let Ok(spec) = psd_welch_default(&residual, dt) {
                emitter.write(
                    "azimuth_psd.csv",
                    "spectrum",
                    SCHEMA_PSD,
                    &two_column_csv("freq,psd", &spec.freqs, &spec.psd),
                )?;
            }
            emitter.write_json("summary.json", "report", "precess.v1", &report)?;
        }
        ProtocolConfig::Regimes(p) => {
            let settings = settings_from(config);
            let reports = regime_scan(&p.fields, &config.physical, &settings)?;
            if !quiet {
                for r in &reports {
                    println!(
                        "regimes: {:>9.3e} T -> {} (mz mean {:+.3}, excursion {:.3})",
                        r.field_magnitude, r.regime, r.mz_mean, r.mz_excursion
                    );
                }
            }
            let mut csv = String::from(
                "field_tesla,regime,mz_mean,mz_excursion,bloch_norm_error\n",
            );
            for r in &reports {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.field_magnitude,
                    r.regime,
                    r.mz_mean,
                    r.mz_excursion,
                    r.bloch_norm_error
                );
            }
            emitter.write("regimes.csv", "report", SCHEMA_REGIMES, &csv)?;
            emitter.write_json("regimes.json", "report", "regimes.v1", &reports)?;
        }
        ProtocolConfig::Noise(p) => {
            let report = run_noise(p, config.seed, emitter)?;
            if !quiet {
                println!(
                    "noise: delta_phi slope {:.3} +- {:.3}, psd slope {:.3} +- {:.3}",
                    report.delta_phi_slope,
                    report.delta_phi_slope_stderr,
                    report.psd_slope,
                    report.psd_slope_stderr
                );
            }
        }
        ProtocolConfig::Berry(p) => {
            let sys = base_system(config)?.with_couplings(p.eps_j, p.eps_c);
            let settings = SimSettings {
                t_end: None,
                ..settings_from(config)
            };
            let mut results = Vec::new();
            for &c in &p.cos_thetas {
                if !(-1.0..=1.0).contains(&c) {
                    return Err(Error::InvalidArgument(format!(
                        "cos_thetas entries must lie in [-1, 1], got {c}"
                    )));
                }
                let r = berry_protocol(c.acos(), p.omega_rot, &sys, &settings)?;
                if !quiet {
                    println!(
                        "berry: cos(theta) = {c:.4}: predicted {:+.4}, measured {:+.4}",
                        r.predicted, r.measured
                    );
                }
                results.push(r);
            }
            let mut csv =
                String::from("theta,cos_theta,predicted,measured,adiabaticity\n");
            for r in &results {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.theta,
                    r.theta.cos(),
                    r.predicted,
                    r.measured,
                    r.adiabaticity
                );
            }
            emitter.write("berry.csv", "report", SCHEMA_BERRY, &csv)?;
            emitter.write_json("berry.json", "report", "berry.v1", &results)?;
        }
        ProtocolConfig::Nutate(p) => {
            let base = base_system(config)?;
            let ratio = NUTATION_FIELD / config.physical.b_field.norm();
            let sys = base.at_field_ratio(ratio)?.with_couplings(p.eps_j, p.eps_c);
            let settings = settings_from(config);
            let reading = nutation_sensing(p.depth, p.drive_freq, &sys, &settings)?;
            if !quiet {
                println!(
                    "nutate: drive {:.3} recovered {:.3}, correlation {:.4}, depth ratio {:.3}",
                    reading.drive_freq_true,
                    reading.drive_freq_recovered,
                    reading.envelope_correlation,
                    reading.depth_ratio
                );
            }
            emitter.write_json("nutation.json", "report", "nutation.v1", &reading)?;
        }
        ProtocolConfig::Sweep(p) => {
            run_sweep(config, p, emitter, quiet)?;
        }
    }
    Ok(())
}

fn run_noise(p: &NoiseProtocol, seed: u64, emitter: &mut Emitter) -> Result<NoiseReport> {
    // ensemble members get independent counter-based seeds
    let ensembles: Vec<_> = (0..p.n_seeds)
        .into_par_iter()
        .map(|k| {
            simulate_independent_spins(
                p.n_spins,
                p.noise_strength,
                p.ensemble_t_end,
                p.ensemble_dt,
                seed.wrapping_add(k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let n_t = ensembles[0].times.len();
    let times = ensembles[0].times.clone();
    let mut mean_sq = vec![0.0f64; n_t];
    for ens in &ensembles {
        for (acc, d) in mean_sq.iter_mut().zip(ens.delta_phi.iter()) {
            *acc += d * d;
        }
    }
    let delta_rms: Vec<f64> = mean_sq
        .iter()
        .map(|s| (s / p.n_seeds as f64).sqrt())
        .collect();

    // spread growth exponent over the central decades
    let fit_lo = 10.0 * p.ensemble_dt;
    let fit_hi = p.ensemble_t_end;
    let dp_fit = fit_powerlaw_exponent(&times[1..], &delta_rms[1..], (fit_lo, fit_hi))?;

    // averaged azimuth spectrum of the first spin of each member
    let mut psd_acc: Option<SpectrumEstimate> = None;
    for ens in &ensembles {
        let spec = psd_welch_default(&ens.phis[0], p.ensemble_dt)?;
        match &mut psd_acc {
            None => psd_acc = Some(spec),
            Some(acc) => {
                for (a, b) in acc.psd.iter_mut().zip(spec.psd.iter()) {
                    *a += b;
                }
            }
        }
    }
    let mut spec = psd_acc.unwrap();
    for v in spec.psd.iter_mut() {
        *v /= p.n_seeds as f64;
    }
    let f_lo = spec.freqs[4];
    let psd_fit = fit_powerlaw_exponent(&spec.freqs[1..], &spec.psd[1..], (f_lo, 10.0 * f_lo))?;

    emitter.write(
        "delta_phi.csv",
        "spread",
        SCHEMA_DELTA_PHI,
        &two_column_csv("tau,delta_phi", &times, &delta_rms),
    )?;
    emitter.write(
        "psd.csv",
        "spectrum",
        SCHEMA_PSD,
        &two_column_csv("freq,psd", &spec.freqs, &spec.psd),
    )?;
    let report = NoiseReport {
        delta_phi_slope: dp_fit.slope,
        delta_phi_slope_stderr: dp_fit.std_error,
        psd_slope: psd_fit.slope,
        psd_slope_stderr: psd_fit.std_error,
        crlb_example: crlb_delta_omega(1.0, 1.0, 1.0),
        sql_example: sql_delta_omega(p.n_spins as f64, 1.0, p.ensemble_t_end),
    };
    emitter.write_json("noise_summary.json", "report", "noise.v1", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMember {
    pub member: usize,
    pub seed: u64,
    pub output_dir: String,
    pub ok: bool,
}

fn run_sweep(
    config: &ExperimentConfig,
    p: &SweepProtocol,
    emitter: &mut Emitter,
    quiet: bool,
) -> Result<()> {
    let members: Vec<(usize, ExperimentConfig)> = (0..p.n_seeds)
        .map(|k| {
            let mut inner = config.clone();
            inner.experiment = p.experiment;
            inner.seed = config.seed.wrapping_add(k as u64);
            inner.output_dir = format!("{}/member_{k:03}", config.output_dir);
            inner.protocol = default_protocol_for(p.experiment);
            (k, inner)
        })
        .collect();

    let results: Vec<(usize, u64, String, bool)> = members
        .par_iter()
        .map(|(k, inner)| {
            let ok = run_quiet(inner, quiet).is_ok();
            (*k, inner.seed, inner.output_dir.clone(), ok)
        })
        .collect();

    let records: Vec<SweepMember> = results
        .into_iter()
        .map(|(member, seed, output_dir, ok)| SweepMember {
            member,
            seed,
            output_dir,
            ok,
        })
        .collect();
    if records.iter().any(|r| !r.ok) {
        emitter.write_json("aggregate.json", "aggregate", "sweep.v1", &records)?;
        return Err(Error::InvalidArgument(
            "one or more sweep members failed; see member manifests".into(),
        ));
    }
    emitter.write_json("aggregate.json", "aggregate", "sweep.v1", &records)?;
    Ok(())
}

fn default_protocol_for(experiment: Experiment) -> ProtocolConfig {
    match experiment {
        Experiment::Precess => ProtocolConfig::Precess(PrecessProtocol {}),
        Experiment::Regimes => ProtocolConfig::Regimes(RegimesProtocol {
            fields: vec![1e-9, 5e-5, 5e-3],
        }),
        Experiment::Noise => ProtocolConfig::Noise(NoiseProtocol {
            n_spins: 50,
            noise_strength: 0.5,
            ensemble_t_end: 2000.0,
            ensemble_dt: 0.1,
            n_seeds: 100,
        }),
        Experiment::Berry => ProtocolConfig::Berry(BerryProtocol {
            cos_thetas: vec![0.75],
            omega_rot: 0.01,
            eps_j: BERRY_EPS_J,
            eps_c: BERRY_EPS_C,
        }),
        Experiment::Nutate => ProtocolConfig::Nutate(NutateProtocol {
            depth: 0.5,
            drive_freq: 0.2,
            eps_j: NUTATION_EPS_J,
            eps_c: NUTATION_EPS_C,
        }),
        Experiment::Sweep => unreachable!("sweep cannot nest sweep"),
    }
}

fn run_quiet(config: &ExperimentConfig, quiet: bool) -> Result<RunManifest> {
    run_with_options(config, quiet)
}

/// Execute the experiment described by `config`, writing all artifacts and
/// a manifest into `config.output_dir`. A manifest with an error record is
/// written even when the run fails.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    run_with_options(config, false)
}

pub fn run_with_options(config: &ExperimentConfig, quiet: bool) -> Result<RunManifest> {
    let start = Instant::now();
    let dir = PathBuf::from(&config.output_dir);
    let mut emitter = Emitter::new(&dir)?;
    let outcome = execute(config, &mut emitter, quiet);

    let manifest = RunManifest {
        config_echo: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time: start.elapsed().as_secs_f64(),
        files: emitter.files.clone(),
        error: outcome.as_ref().err().map(|e| ErrorRecord {
            kind: format!("{e:?}").split(['{', '(']).next().unwrap_or("Error").trim().to_string(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }),
    };
    let body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, body + "\n").map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;

    outcome.map(|()| manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_config_resolves_paper_defaults() {
        let cfg = parse_config(
            "experiment = \"precess\"\nseed = 1\n[physical]\nmaterial = \"cobalt\"\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Precess);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.physical.n_atoms, 50);
        assert_relative_eq!(cfg.physical.b_field.z, 1e-9, max_relative = 1e-12);
        let sys = build_system(&cfg.physical).unwrap();
        assert_relative_eq!(sys.eps_j, 1.0e4, max_relative = 1e-12);
        assert_relative_eq!(sys.eps_c, 1.2e5, max_relative = 1e-12);
        assert_relative_eq!(sys.omega_ph, 100.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.sim.omega_ph, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_name() {
        let err = parse_config("experiment = \"precess\"\nn_atmos = 50\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_atmos"), "message was: {msg}");

        let err = parse_config(
            "experiment = \"precess\"\n[physical]\nn_atmos = 50\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_atmos"));
    }

    #[test]
    fn invalid_enum_is_rejected() {
        let err = parse_config("experiment = \"flying\"\n").unwrap_err();
        assert!(err.to_string().contains("flying") || err.to_string().contains("variant"));
    }

    #[test]
    fn config_round_trips_exactly() {
        let cfg = parse_config(
            "experiment = \"berry\"\nseed = 9\n[protocol]\ncos_thetas = [0.75, 0.9]\n",
        )
        .unwrap();
        let text = config_to_toml(&cfg).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn both_stiffness_inputs_rejected() {
        let err = parse_config(
            "experiment = \"precess\"\n[physical]\nlattice_v = 1e-17\n[sim]\nomega_ph = 100.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("omega_ph"));
    }

    #[test]
    fn sweep_cannot_nest() {
        let err = parse_config(
            "experiment = \"sweep\"\n[protocol]\nexperiment = \"sweep\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("nest"));
    }

    #[test]
    fn trajectory_csv_round_trips() {
        use crate::dynamics::{integrate, FieldSchedule, RecordOptions};
        use crate::model::{sample_initial_state, PhysicalParams};
        let sys = build_system(&PhysicalParams::cobalt(6)).unwrap();
        let sys = sys.with_couplings(2.0, 1.5);
        let st = sample_initial_state(&sys, 1e-7, 3).unwrap();
        let traj = integrate(
            &st,
            &sys,
            0.3,
            7,
            &FieldSchedule::Constant,
            &RecordOptions {
                dtau: Some(1e-3),
                ..Default::default()
            },
        )
        .unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "tau,Mx,My,Mz,Sz,Lz,Jz,needle_azimuth,needle_polar,energy_total,energy_err"
        );
        for (k, line) in lines.enumerate() {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(cols.len(), 11);
            assert_eq!(cols[0], traj.times[k]);
            assert_eq!(cols[1], traj.mag[k].x);
            assert_eq!(cols[4], traj.s_z[k]);
            assert_eq!(cols[9], traj.energy_total[k]);
        }
    }

    #[test]
    fn single_sample_trajectory_emits_one_row() {
        use crate::dynamics::{integrate, FieldSchedule, RecordOptions};
        use crate::model::{sample_initial_state, PhysicalParams};
        let sys = build_system(&PhysicalParams::cobalt(4))
            .unwrap()
            .with_couplings(1.0, 1.0);
        let st = sample_initial_state(&sys, 0.0, 0).unwrap();
        let traj = integrate(
            &st,
            &sys,
            1e-3,
            100,
            &FieldSchedule::Constant,
            &RecordOptions {
                dtau: Some(1e-3),
                ..Default::default()
            },
        )
        .unwrap();
        // one step, recorded only at tau = 0
        let csv = trajectory_csv(&traj);
        assert_eq!(csv.lines().count(), 1 + traj.len());
    }

    #[test]
    fn material_must_exist() {
        let err = parse_config(
            "experiment = \"precess\"\n[physical]\nmaterial = \"unobtainium\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("unobtainium"));
    }
}
