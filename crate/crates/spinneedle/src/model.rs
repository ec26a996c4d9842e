//! Physical parameters, nondimensionalization, and initial states.
//!
//! The working units are fixed by the Larmor frequency `omega_l = gamma*|B|`:
//! time in `1/omega_l`, lengths in the lattice constant `r0`, spins as unit
//! vectors (magnitude `s0`), momenta in `m*omega_l*r0`, and energies in
//! `s0*omega_l`. In those units the couplings collapse to four dimensionless
//! numbers:
//!
//! * `eps_j`    - exchange energy per bond over the Zeeman energy per spin,
//! * `eps_c`    - spin-lattice coupling, `C / (m * omega_l^2 * r0^2)`,
//! * `lambda_spin` - `hbar / (m * omega_l * r0^2)`, the ratio of the spin
//!   angular-momentum quantum to the mechanical angular-momentum scale; this
//!   is the knob that separates precession, nutation, and libration,
//! * `omega_ph` - single-bond phonon frequency over the Larmor frequency.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_INIT};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054571817e-34;

/// Electron gyromagnetic ratio (rad s^-1 T^-1).
pub const GAMMA_ELECTRON: f64 = 1.76e11;

/// Mass of one cobalt atom, 58.933 u (kg).
pub const COBALT_ATOM_MASS: f64 = 9.786e-26;

/// Cobalt lattice constant (m).
pub const COBALT_LATTICE_CONST: f64 = 250.71e-12;

/// Default dimensionless exchange coupling at the reference field.
pub const DEFAULT_EPS_J: f64 = 1.0e4;

/// Default dimensionless spin-lattice coupling at the reference field.
pub const DEFAULT_EPS_C: f64 = 1.2e5;

/// Default phonon-to-Larmor frequency ratio (softened lattice).
pub const DEFAULT_OMEGA_PH: f64 = 100.0;

/// Reference field at which the material presets pin the dimensionless
/// couplings above (T).
pub const REFERENCE_FIELD: f64 = 1.0e-9;

/// SI description of the needle, the applied field, and the couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Gyromagnetic ratio (rad s^-1 T^-1).
    pub gamma: f64,
    /// Applied magnetic field (T).
    pub b_field: Vector3<f64>,
    /// Exchange energy per bond of aligned unit spins (J).
    pub exchange_j: f64,
    /// Pseudo-dipolar spin-lattice coupling energy scale (J); the
    /// dimensionless coupling is `pseudo_dipolar_c / (m omega_l^2 r0^2)`.
    pub pseudo_dipolar_c: f64,
    /// Harmonic bond stiffness V in `V*(r - r0)^2` (J m^-2).
    pub lattice_v: f64,
    /// Mass per atom (kg).
    pub atom_mass: f64,
    /// Equilibrium bond length (m).
    pub lattice_const_r0: f64,
    /// Number of atoms in the chain.
    pub n_atoms: usize,
    /// Spin angular momentum per atom (J s).
    pub spin_s0: f64,
}

impl PhysicalParams {
    /// Cobalt preset: `n` atoms, field 1 nT along z, spin-1/2 atoms, and
    /// couplings tuned so that at the reference field
    /// `eps_j = 1e4`, `eps_c = 1.2e5`, `omega_ph = 100`.
    pub fn cobalt(n_atoms: usize) -> Self {
        let omega_ref = GAMMA_ELECTRON * REFERENCE_FIELD;
        let s0 = HBAR / 2.0;
        let m = COBALT_ATOM_MASS;
        let r0 = COBALT_LATTICE_CONST;
        PhysicalParams {
            gamma: GAMMA_ELECTRON,
            b_field: Vector3::new(0.0, 0.0, REFERENCE_FIELD),
            exchange_j: DEFAULT_EPS_J * s0 * omega_ref,
            pseudo_dipolar_c: DEFAULT_EPS_C * m * omega_ref * omega_ref * r0 * r0,
            lattice_v: 0.5 * m * (DEFAULT_OMEGA_PH * omega_ref).powi(2),
            atom_mass: m,
            lattice_const_r0: r0,
            n_atoms,
            spin_s0: s0,
        }
    }

    /// Same preset at a different field magnitude (direction z), with the
    /// couplings left untouched.
    pub fn cobalt_at_field(n_atoms: usize, b_tesla: f64) -> Self {
        let mut p = Self::cobalt(n_atoms);
        p.b_field = Vector3::new(0.0, 0.0, b_tesla);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let complain = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.gamma > 0.0) {
            return complain("gamma must be > 0");
        }
        if !(self.atom_mass > 0.0) {
            return complain("atom_mass must be > 0");
        }
        if !(self.lattice_const_r0 > 0.0) {
            return complain("lattice_const_r0 must be > 0");
        }
        if self.n_atoms < 2 {
            return complain("n_atoms must be at least 2");
        }
        if !(self.spin_s0 > 0.0) {
            return complain("spin_s0 must be > 0");
        }
        if !(self.lattice_v > 0.0) {
            return complain("lattice_v must be > 0");
        }
        if !(self.exchange_j >= 0.0) {
            return complain("exchange_j must be >= 0 (ferromagnetic)");
        }
        if !self.b_field.iter().all(|c| c.is_finite())
            || !self.pseudo_dipolar_c.is_finite()
        {
            return complain("fields must be finite");
        }
        Ok(())
    }

    /// `omega_l = gamma * |B|` (rad/s).
    pub fn larmor_frequency(&self) -> f64 {
        self.gamma * self.b_field.norm()
    }
}

/// Scale factors mapping dimensionless quantities back to SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Larmor (reference) angular frequency (rad/s); the time unit is its
    /// inverse.
    pub omega_l: f64,
    /// Length unit: equilibrium bond length (m).
    pub r0: f64,
    /// Spin magnitude (J s).
    pub s0: f64,
    /// Energy unit `s0 * omega_l` (J).
    pub energy: f64,
    /// Gyromagnetic ratio (rad s^-1 T^-1), kept for field back-conversion.
    pub gamma: f64,
}

/// The rescaled system actually handed to the integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessSystem {
    /// Exchange-to-Zeeman energy ratio.
    pub eps_j: f64,
    /// Spin-lattice coupling `C / (m omega_l^2 r0^2)`.
    pub eps_c: f64,
    /// `hbar / (m omega_l r0^2)`.
    pub lambda_spin: f64,
    /// Phonon-to-Larmor frequency ratio.
    pub omega_ph: f64,
    /// Unit field direction (zero vector for field-free builds).
    pub b_hat: Vector3<f64>,
    pub n_atoms: usize,
    pub scales: Scales,
    /// Atom mass (kg), kept for back-conversion.
    pub atom_mass: f64,
}

impl DimensionlessSystem {
    /// Spin magnitude in units of hbar (1/2 for spin-1/2 presets).
    pub fn spin_unit_hbar(&self) -> f64 {
        self.scales.s0 / HBAR
    }

    /// Ratio between the spin and lattice symplectic scales,
    /// `s0 / (m omega_l r0^2) = lambda_spin * s0 / hbar`. Momentum kicks are
    /// this factor times the energy gradient.
    pub fn lattice_response(&self) -> f64 {
        self.lambda_spin * self.spin_unit_hbar()
    }

    /// Pseudo-dipolar energy per bond (dimensionless Hamiltonian
    /// coefficient): `-pd_pair * (s_i . u)(u . s_j)` per unordered bond.
    pub fn pd_pair(&self) -> f64 {
        2.0 * self.eps_c / self.lattice_response()
    }

    /// Kinetic-energy coefficient: `h_kin = kinetic_coeff * sum |p|^2`.
    pub fn kinetic_coeff(&self) -> f64 {
        0.5 / self.lattice_response()
    }

    /// Harmonic bond-energy coefficient:
    /// `h_harm = harmonic_coeff * sum (|r_ij| - 1)^2`.
    pub fn harmonic_coeff(&self) -> f64 {
        0.5 * self.omega_ph * self.omega_ph / self.lattice_response()
    }

    /// Largest rate the stability guard must respect.
    pub fn fastest_rate(&self) -> (f64, &'static str) {
        let candidates = [
            (1.0, "Larmor precession"),
            (self.eps_j, "exchange coupling"),
            (2.0 * self.eps_c, "spin-lattice coupling"),
            (self.omega_ph, "lattice phonon"),
        ];
        let mut best = candidates[0];
        for c in candidates {
            if c.0 > best.0 {
                best = c;
            }
        }
        best
    }

    /// Default integrator step: 60+ steps per cycle of the fastest coupling.
    pub fn default_dtau(&self) -> f64 {
        0.1 / self.fastest_rate().0
    }

    /// The same system at field magnitude `ratio` times the reference field,
    /// with the dimensionless couplings held fixed. The physically exact
    /// field dependence (the angular-momentum ratio `lambda_spin` and the
    /// time scale) is rescaled; `eps_j`, `eps_c`, and `omega_ph` stay at
    /// their tuned values, which is how the coupling constants are meant to
    /// be read across field scans.
    pub fn at_field_ratio(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "field ratio must be > 0, got {ratio}"
            )));
        }
        let mut sys = self.clone();
        sys.lambda_spin /= ratio;
        sys.scales.omega_l *= ratio;
        sys.scales.energy = sys.scales.s0 * sys.scales.omega_l;
        Ok(sys)
    }

    /// Copy with different dimensionless couplings (used by protocols that
    /// soften the couplings to keep long runs tractable).
    pub fn with_couplings(&self, eps_j: f64, eps_c: f64) -> Self {
        let mut sys = self.clone();
        sys.eps_j = eps_j;
        sys.eps_c = eps_c;
        sys
    }

    /// Field magnitude in tesla implied by the scales.
    pub fn field_tesla(&self) -> f64 {
        self.scales.omega_l / self.scales.gamma
    }

    /// Invert the nondimensionalization.
    pub fn redimensionalize(&self) -> PhysicalParams {
        let s = &self.scales;
        let m = self.atom_mass;
        let r0 = s.r0;
        let b_mag = self.field_tesla();
        let b_dir = if self.b_hat.norm() > 0.0 {
            self.b_hat
        } else {
            Vector3::zeros()
        };
        PhysicalParams {
            gamma: s.gamma,
            b_field: b_dir * b_mag,
            exchange_j: self.eps_j * s.energy,
            pseudo_dipolar_c: self.eps_c * m * s.omega_l * s.omega_l * r0 * r0,
            lattice_v: 0.5 * m * (self.omega_ph * s.omega_l).powi(2),
            atom_mass: m,
            lattice_const_r0: r0,
            n_atoms: self.n_atoms,
            spin_s0: s.s0,
        }
    }
}

/// Nondimensionalize `params` using the Larmor frequency as the clock.
///
/// Errors with [`Error::ZeroField`] when `|B| = 0`; use
/// [`build_system_with_reference`] to pick the clock explicitly in that case.
pub fn build_system(params: &PhysicalParams) -> Result<DimensionlessSystem> {
    params.validate()?;
    let b_norm = params.b_field.norm();
    if b_norm == 0.0 {
        return Err(Error::ZeroField);
    }
    build_with_clock(params, params.gamma * b_norm, params.b_field / b_norm)
}

/// Nondimensionalize with an explicit reference frequency (rad/s), for
/// field-free runs. The Zeeman term is scaled by `gamma |B| / omega_ref`,
/// which is zero here.
pub fn build_system_with_reference(
    params: &PhysicalParams,
    omega_ref: f64,
) -> Result<DimensionlessSystem> {
    params.validate()?;
    if !(omega_ref > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference frequency must be > 0, got {omega_ref}"
        )));
    }
    let b_norm = params.b_field.norm();
    let b_hat = if b_norm > 0.0 {
        params.b_field * (params.gamma / omega_ref)
    } else {
        Vector3::zeros()
    };
    build_with_clock(params, omega_ref, b_hat)
}

fn build_with_clock(
    params: &PhysicalParams,
    omega_l: f64,
    b_hat: Vector3<f64>,
) -> Result<DimensionlessSystem> {
    let m = params.atom_mass;
    let r0 = params.lattice_const_r0;
    let s0 = params.spin_s0;
    let eps_j = params.exchange_j / (s0 * omega_l);
    let eps_c = params.pseudo_dipolar_c / (m * omega_l * omega_l * r0 * r0);
    let lambda_spin = HBAR / (m * omega_l * r0 * r0);
    let omega_ph = (2.0 * params.lattice_v / m).sqrt() / omega_l;
    Ok(DimensionlessSystem {
        eps_j,
        eps_c,
        lambda_spin,
        omega_ph,
        b_hat,
        n_atoms: params.n_atoms,
        scales: Scales {
            omega_l,
            r0,
            s0,
            energy: s0 * omega_l,
            gamma: params.gamma,
        },
        atom_mass: m,
    })
}

/// Critical field `6 hbar / (gamma m r0^2 N^2)` separating spin-dominated
/// from inertia-dominated needle motion (T).
pub fn critical_field(params: &PhysicalParams) -> f64 {
    let n = params.n_atoms as f64;
    6.0 * HBAR
        / (params.gamma * params.atom_mass * params.lattice_const_r0.powi(2) * n * n)
}

/// Needle moment of inertia about a transverse axis through its center,
/// `(1/12) m r0^2 N^3` (kg m^2).
pub fn moment_of_inertia(params: &PhysicalParams) -> f64 {
    let n = params.n_atoms as f64;
    params.atom_mass * params.lattice_const_r0.powi(2) * n.powi(3) / 12.0
}

/// Spins, positions, and momenta at one instant, all dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// Unit spin directions.
    pub spins: Vec<Vector3<f64>>,
    /// Positions in units of `r0`.
    pub positions: Vec<Vector3<f64>>,
    /// Momenta in units of `m omega_l r0`.
    pub momenta: Vec<Vector3<f64>>,
    /// Time in units of `1/omega_l`.
    pub time: f64,
}

impl SystemState {
    pub fn n_atoms(&self) -> usize {
        self.spins.len()
    }

    /// Check the state invariants: unit spins to 1e-12, finite positions,
    /// strictly positive neighbor distances.
    pub fn validate(&self) -> Result<()> {
        if self.spins.len() != self.positions.len()
            || self.spins.len() != self.momenta.len()
        {
            return Err(Error::InvalidArgument(
                "spins, positions, momenta must have equal length".into(),
            ));
        }
        for (i, s) in self.spins.iter().enumerate() {
            if (s.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "spin {i} has norm {:e}",
                    s.norm()
                )));
            }
        }
        for (i, r) in self.positions.iter().enumerate() {
            if !r.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!("position {i} not finite")));
            }
        }
        for i in 0..self.positions.len().saturating_sub(1) {
            if (self.positions[i + 1] - self.positions[i]).norm() == 0.0 {
                return Err(Error::CoincidentNeighbors { i, j: i + 1 });
            }
        }
        Ok(())
    }

    pub fn center_of_mass(&self) -> Vector3<f64> {
        self.positions.iter().sum::<Vector3<f64>>() / self.positions.len() as f64
    }

    /// Rotate spins, positions, and momenta by the same rotation matrix.
    pub fn rotated(&self, rot: &nalgebra::Rotation3<f64>) -> SystemState {
        SystemState {
            spins: self.spins.iter().map(|s| rot * s).collect(),
            positions: self.positions.iter().map(|r| rot * r).collect(),
            momenta: self.momenta.iter().map(|p| rot * p).collect(),
            time: self.time,
        }
    }
}

/// Straight chain along `+x` centered on the origin, spins along `+x`,
/// lattice displacements and momenta Boltzmann-sampled at `lattice_temp`
/// (dimensionless, in units of the energy scale). Center-of-mass position
/// and total momentum are projected to zero.
///
/// Only the bond stretches are thermalized on the position side: for an open
/// chain the harmonic energy is an independent sum over stretches, and
/// transverse displacements carry no harmonic restoring force at linear
/// order. Momenta are thermalized in all three components.
pub fn sample_initial_state(
    system: &DimensionlessSystem,
    lattice_temp: f64,
    rng_seed: u64,
) -> Result<SystemState> {
    if lattice_temp < 0.0 {
        return Err(Error::NegativeTemperature(lattice_temp));
    }
    let n = system.n_atoms;
    let spins = vec![Vector3::new(1.0, 0.0, 0.0); n];
    let mut positions = Vec::with_capacity(n);
    let mut momenta = vec![Vector3::zeros(); n];

    if lattice_temp == 0.0 {
        let offset = (n as f64 - 1.0) / 2.0;
        for i in 0..n {
            positions.push(Vector3::new(i as f64 - offset, 0.0, 0.0));
        }
        return Ok(SystemState {
            spins,
            positions,
            momenta,
            time: 0.0,
        });
    }

    let mut rng = stream_rng(rng_seed, STREAM_INIT);
    // Boltzmann weight exp(-h/T) with h = harmonic_coeff * stretch^2 per bond.
    let sigma_stretch = (lattice_temp / (2.0 * system.harmonic_coeff())).sqrt();
    // Kinetic energy kinetic_coeff * p^2 per component.
    let sigma_p = (lattice_temp * system.lattice_response()).sqrt();

    positions.push(Vector3::zeros());
    for i in 1..n {
        let stretch: f64 = rng.sample::<f64, _>(StandardNormal) * sigma_stretch;
        let prev = positions[i - 1];
        positions.push(prev + Vector3::new(1.0 + stretch, 0.0, 0.0));
    }
    for p in momenta.iter_mut() {
        *p = Vector3::new(
            rng.sample::<f64, _>(StandardNormal) * sigma_p,
            rng.sample::<f64, _>(StandardNormal) * sigma_p,
            rng.sample::<f64, _>(StandardNormal) * sigma_p,
        );
    }

    let com = positions.iter().sum::<Vector3<f64>>() / n as f64;
    for r in positions.iter_mut() {
        *r -= com;
    }
    let p_mean = momenta.iter().sum::<Vector3<f64>>() / n as f64;
    for p in momenta.iter_mut() {
        *p -= p_mean;
    }

    Ok(SystemState {
        spins,
        positions,
        momenta,
        time: 0.0,
    })
}
