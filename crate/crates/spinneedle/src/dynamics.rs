//! Energies, torques, forces, and the splitting integrator.
//!
//! The dimensionless Hamiltonian is
//!
//! ```text
//! h = - sum_i s_i . b
//!     - eps_j  sum_i s_i . s_{i+1}
//!     - pd     sum_i (s_i . u_i)(u_i . s_{i+1})      u_i = unit bond vector
//!     + (1/2L) sum_i |p_i|^2
//!     + (w^2/2L) sum_i (|r_{i+1} - r_i| - 1)^2
//! ```
//!
//! with `pd = 2 eps_c / L`, `w = omega_ph`, and `L` the spin-to-lattice
//! symplectic ratio ([`DimensionlessSystem::lattice_response`]). Spins evolve
//! as `ds/dtau = s x (-dh/ds)`; the lattice evolves canonically with the
//! kick scaled by `L`, which keeps `J_z = S_z + L_z` exactly conserved by
//! the continuous equations whenever `h` is invariant under a common
//! rotation of spins and lattice about the field axis.
//!
//! One step is the palindrome: half-kick, half-drift, spin rotations
//! (forward bond sweep, full Zeeman rotation, reversed bond sweep, all by
//! exact Rodrigues rotations), half-drift, half-kick. Exact rotations keep
//! `|s| = 1` to round-off; the palindrome makes the map time-reversible and
//! second-order accurate.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DimensionlessSystem, SystemState};
use crate::observables;

/// Time-dependent applied field, evaluated once per step at the midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldSchedule {
    /// The system's static field; identical to passing no schedule.
    Constant,
    /// `b(tau) = b_hat * (1 + depth * cos(rate * tau))`.
    AmplitudeModulated { depth: f64, rate: f64 },
    /// Unit field at polar angle `polar` from +z, rotating about z at
    /// `rate`; the direction is negated from `t_flip` on (second cycle of a
    /// geometric-phase protocol).
    RotatingCone { polar: f64, rate: f64, t_flip: f64 },
}

impl FieldSchedule {
    /// Field vector at time `tau`, in units of the reference field.
    pub fn eval(&self, tau: f64, b_static: &Vector3<f64>) -> Vector3<f64> {
        match self {
            FieldSchedule::Constant => *b_static,
            FieldSchedule::AmplitudeModulated { depth, rate } => {
                *b_static * (1.0 + depth * (rate * tau).cos())
            }
            FieldSchedule::RotatingCone { polar, rate, t_flip } => {
                let (sign, t) = if tau < *t_flip {
                    (1.0, tau)
                } else {
                    (-1.0, tau - t_flip)
                };
                let phi = rate * t;
                Vector3::new(
                    polar.sin() * phi.cos(),
                    polar.sin() * phi.sin(),
                    polar.cos(),
                ) * sign
            }
        }
    }
}

/// Instantaneous rates of change of the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    /// `ds_i/dtau`, always perpendicular to `s_i`.
    pub spin_rates: Vec<Vector3<f64>>,
    /// `dr_i/dtau = p_i`.
    pub position_rates: Vec<Vector3<f64>>,
    /// `-dh/dr_i` (dimensionless force). The canonical momentum rate is
    /// `lattice_response()` times this.
    pub momentum_rates: Vec<Vector3<f64>>,
}

/// The five Hamiltonian terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub zeeman: f64,
    pub exchange: f64,
    pub pseudo_dipolar: f64,
    pub kinetic: f64,
    pub harmonic: f64,
    pub total: f64,
}

fn bond(state: &SystemState, i: usize) -> Result<(Vector3<f64>, f64)> {
    let d = state.positions[i + 1] - state.positions[i];
    let len = d.norm();
    if len < 1e-300 {
        return Err(Error::CoincidentNeighbors { i, j: i + 1 });
    }
    Ok((d / len, len))
}

/// Evaluate the Hamiltonian with the system's static field.
pub fn hamiltonian_energy(
    state: &SystemState,
    system: &DimensionlessSystem,
) -> EnergyBreakdown {
    hamiltonian_energy_with_field(state, system, &system.b_hat)
}

/// Evaluate the Hamiltonian with an explicit field vector (used under field
/// schedules).
pub fn hamiltonian_energy_with_field(
    state: &SystemState,
    system: &DimensionlessSystem,
    b: &Vector3<f64>,
) -> EnergyBreakdown {
    let n = state.n_atoms();
    let pd = system.pd_pair();
    let mut zeeman = 0.0;
    let mut exchange = 0.0;
    let mut pd_e = 0.0;
    let mut kinetic = 0.0;
    let mut harmonic = 0.0;
    for s in &state.spins {
        zeeman -= s.dot(b);
    }
    for p in &state.momenta {
        kinetic += p.norm_squared();
    }
    kinetic *= system.kinetic_coeff();
    for i in 0..n - 1 {
        let d = state.positions[i + 1] - state.positions[i];
        let len = d.norm();
        exchange -= system.eps_j * state.spins[i].dot(&state.spins[i + 1]);
        if len > 0.0 {
            let u = d / len;
            pd_e -= pd * state.spins[i].dot(&u) * u.dot(&state.spins[i + 1]);
        }
        let stretch = len - 1.0;
        harmonic += system.harmonic_coeff() * stretch * stretch;
    }
    EnergyBreakdown {
        zeeman,
        exchange,
        pseudo_dipolar: pd_e,
        kinetic,
        harmonic,
        total: zeeman + exchange + pd_e + kinetic + harmonic,
    }
}

/// `ds_i/dtau = s_i x [ b + eps_j (s_{i-1} + s_{i+1}) + pd sum_nn u (u.s_j) ]`
/// with the system's static field. Chain ends see their single neighbor.
pub fn spin_torque(
    state: &SystemState,
    system: &DimensionlessSystem,
) -> Result<Vec<Vector3<f64>>> {
    spin_torque_with_field(state, system, &system.b_hat)
}

pub fn spin_torque_with_field(
    state: &SystemState,
    system: &DimensionlessSystem,
    b: &Vector3<f64>,
) -> Result<Vec<Vector3<f64>>> {
    let n = state.n_atoms();
    let pd = system.pd_pair();
    let mut eff: Vec<Vector3<f64>> = vec![*b; n];
    for i in 0..n - 1 {
        let (u, _) = bond(state, i)?;
        eff[i] += system.eps_j * state.spins[i + 1] + pd * u * u.dot(&state.spins[i + 1]);
        eff[i + 1] += system.eps_j * state.spins[i] + pd * u * u.dot(&state.spins[i]);
    }
    Ok(state
        .spins
        .iter()
        .zip(eff.iter())
        .map(|(s, f)| s.cross(f))
        .collect())
}

/// `-dh/dr_i`: harmonic bond restoring forces plus the pseudo-dipolar
/// gradient with its transverse projector. Sums to zero over the chain.
pub fn lattice_force(
    state: &SystemState,
    system: &DimensionlessSystem,
) -> Result<Vec<Vector3<f64>>> {
    let mut out = vec![Vector3::zeros(); state.n_atoms()];
    accumulate_force(state, system, 1.0, &mut out)?;
    Ok(out)
}

/// Shared force kernel; `scale` multiplies the gradient (1 for the
/// observable force, `lattice_response()` for integrator kicks).
fn accumulate_force(
    state: &SystemState,
    system: &DimensionlessSystem,
    scale: f64,
    out: &mut [Vector3<f64>],
) -> Result<()> {
    let n = state.n_atoms();
    let pd = scale * system.pd_pair();
    let harm = scale * 2.0 * system.harmonic_coeff();
    for f in out.iter_mut() {
        *f = Vector3::zeros();
    }
    for i in 0..n - 1 {
        let (u, len) = bond(state, i)?;
        let si = &state.spins[i];
        let sj = &state.spins[i + 1];
        let ui = u.dot(si);
        let uj = u.dot(sj);
        // transverse projector applied to each spin
        let pi = si - u * ui;
        let pj = sj - u * uj;
        let f = (pi * uj + pj * ui) * (pd / len) - u * (harm * (len - 1.0));
        out[i + 1] += f;
        out[i] -= f;
    }
    Ok(())
}

/// All rates at once with the system's static field.
pub fn derivatives(
    state: &SystemState,
    system: &DimensionlessSystem,
) -> Result<Derivatives> {
    Ok(Derivatives {
        spin_rates: spin_torque(state, system)?,
        position_rates: state.momenta.clone(),
        momentum_rates: lattice_force(state, system)?,
    })
}

/// `d J_z / dtau` implied by `derivs`, in units of hbar. Zero to round-off
/// whenever the Hamiltonian is invariant under common z-rotations.
pub fn d_jz_dtau(
    state: &SystemState,
    system: &DimensionlessSystem,
    derivs: &Derivatives,
) -> f64 {
    let spin_part: f64 = derivs.spin_rates.iter().map(|r| r.z).sum::<f64>()
        * system.spin_unit_hbar();
    let resp = system.lattice_response();
    let mut lat = 0.0;
    for i in 0..state.n_atoms() {
        lat += derivs.position_rates[i].cross(&state.momenta[i]).z;
        lat += resp * state.positions[i].cross(&derivs.momentum_rates[i]).z;
    }
    spin_part + lat / system.lambda_spin
}

/// sin and cos with a cheap series for the small angles the integrator
/// actually produces.
#[inline]
fn sin_cos(x: f64) -> (f64, f64) {
    if x.abs() < 0.05 {
        let x2 = x * x;
        let s = x * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)));
        let c = 1.0 - x2 / 2.0 * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0));
        (s, c)
    } else {
        x.sin_cos()
    }
}

/// Rodrigues rotation with precomputed sin/cos.
#[inline(always)]
fn rotate_sc(v: Vector3<f64>, axis: &Vector3<f64>, s: f64, c: f64) -> Vector3<f64> {
    v * c + axis.cross(&v) * s + axis * (axis.dot(&v) * (1.0 - c))
}

/// Reusable integrator with scratch buffers and a force cache.
pub struct Stepper {
    system: DimensionlessSystem,
    force: Vec<Vector3<f64>>,
    force_valid: bool,
    bond_u: Vec<Vector3<f64>>,
}

impl Stepper {
    pub fn new(system: &DimensionlessSystem) -> Self {
        let n = system.n_atoms;
        Stepper {
            system: system.clone(),
            force: vec![Vector3::zeros(); n],
            force_valid: false,
            bond_u: vec![Vector3::zeros(); n.saturating_sub(1)],
        }
    }

    pub fn system(&self) -> &DimensionlessSystem {
        &self.system
    }

    /// Validate `dtau` against the stability guard
    /// `|dtau| * max(1, eps_j, 2 eps_c, omega_ph) <= 0.5`.
    pub fn check_dtau(&self, dtau: f64) -> Result<()> {
        let (rate, name) = self.system.fastest_rate();
        if dtau.abs() * rate > 0.5 {
            return Err(Error::StabilityGuard {
                dtau,
                rate,
                fastest: name,
            });
        }
        Ok(())
    }

    /// Invalidate the cached force (call after mutating the state outside
    /// the stepper).
    pub fn invalidate(&mut self) {
        self.force_valid = false;
    }

    fn refresh_bonds(&mut self, state: &SystemState) -> Result<()> {
        for i in 0..state.n_atoms() - 1 {
            let (u, _) = bond(state, i)?;
            self.bond_u[i] = u;
        }
        Ok(())
    }

    fn kick_force(&mut self, state: &SystemState) -> Result<()> {
        let scale = self.system.lattice_response();
        accumulate_force(state, &self.system, scale, &mut self.force)?;
        self.force_valid = true;
        Ok(())
    }

    /// Exchange pair rotation: both spins turn about their (conserved) sum,
    /// so the partner comes from the invariant `s_i + s_j` for free.
    #[inline(always)]
    fn rotate_exchange(&self, spins: &mut [Vector3<f64>], i: usize, dt: f64) {
        let t = spins[i] + spins[i + 1];
        let norm = t.norm();
        if norm < 1e-300 {
            return;
        }
        let axis = t / norm;
        let (s, c) = sin_cos(-self.system.eps_j * norm * dt);
        spins[i] = rotate_sc(spins[i], &axis, s, c);
        spins[i + 1] = t - spins[i];
    }

    /// Pseudo-dipolar pair rotation about the bond axis; each spin's
    /// projection on the bond is invariant, so both rotation angles are
    /// exact constants of this sub-flow.
    #[inline(always)]
    fn rotate_pd(&self, spins: &mut [Vector3<f64>], i: usize, pd_dt: f64) {
        let u = self.bond_u[i];
        let (si, ci) = sin_cos(pd_dt * u.dot(&spins[i + 1]));
        let (sj, cj) = sin_cos(pd_dt * u.dot(&spins[i]));
        spins[i] = rotate_sc(spins[i], &u, si, ci);
        spins[i + 1] = rotate_sc(spins[i + 1], &u, sj, cj);
    }

    /// Half-sweep over one bond parity class. Bonds of equal parity share no
    /// atoms, so their pair rotations commute and pipeline freely.
    #[inline(always)]
    fn sweep_parity(
        &self,
        spins: &mut [Vector3<f64>],
        parity: usize,
        half: f64,
        exchange_first: bool,
    ) {
        let n_bonds = spins.len() - 1;
        let pd_dt = -self.system.pd_pair() * half;
        let mut i = parity;
        while i < n_bonds {
            if exchange_first {
                self.rotate_exchange(spins, i, half);
                self.rotate_pd(spins, i, pd_dt);
            } else {
                self.rotate_pd(spins, i, pd_dt);
                self.rotate_exchange(spins, i, half);
            }
            i += 2;
        }
    }

    fn spin_stage(
        &mut self,
        state: &mut SystemState,
        dtau: f64,
        b: &Vector3<f64>,
    ) -> Result<()> {
        self.refresh_bonds(state)?;
        let half = 0.5 * dtau;
        let spins = &mut state.spins;
        self.sweep_parity(spins, 0, half, true);
        self.sweep_parity(spins, 1, half, true);
        let b_norm = b.norm();
        if b_norm > 0.0 {
            let axis = b / b_norm;
            let (s, c) = sin_cos(-b_norm * dtau);
            for v in spins.iter_mut() {
                *v = rotate_sc(*v, &axis, s, c);
            }
        }
        self.sweep_parity(spins, 1, half, false);
        self.sweep_parity(spins, 0, half, false);
        // one Newton iteration; |s| is already 1 up to round-off
        for s in spins.iter_mut() {
            *s *= 0.5 * (3.0 - s.norm_squared());
        }
        Ok(())
    }

    /// One palindromic step with signed `dtau`; negative `dtau` is the exact
    /// inverse of the corresponding positive step.
    pub fn step_signed(
        &mut self,
        state: &mut SystemState,
        dtau: f64,
        b: &Vector3<f64>,
    ) -> Result<()> {
        let half = 0.5 * dtau;
        if !self.force_valid {
            self.kick_force(state)?;
        }
        for (p, f) in state.momenta.iter_mut().zip(self.force.iter()) {
            *p += f * half;
        }
        for (r, p) in state.positions.iter_mut().zip(state.momenta.iter()) {
            *r += p * half;
        }
        self.spin_stage(state, dtau, b)?;
        for (r, p) in state.positions.iter_mut().zip(state.momenta.iter()) {
            *r += p * half;
        }
        self.kick_force(state)?;
        for (p, f) in state.momenta.iter_mut().zip(self.force.iter()) {
            *p += f * half;
        }
        state.time += dtau;
        Ok(())
    }
}

/// Advance `state` by one step of `dtau` with the system's static field.
pub fn step(
    state: &SystemState,
    system: &DimensionlessSystem,
    dtau: f64,
) -> Result<SystemState> {
    if dtau <= 0.0 {
        return Err(Error::NonPositiveTimestep(dtau));
    }
    let mut stepper = Stepper::new(system);
    stepper.check_dtau(dtau)?;
    let mut next = state.clone();
    stepper.step_signed(&mut next, dtau, &system.b_hat)?;
    Ok(next)
}

/// Exact inverse of [`step`]: running `step_back` after `step` with the same
/// `dtau` returns the initial state up to round-off.
pub fn step_back(
    state: &SystemState,
    system: &DimensionlessSystem,
    dtau: f64,
) -> Result<SystemState> {
    if dtau <= 0.0 {
        return Err(Error::NonPositiveTimestep(dtau));
    }
    let mut stepper = Stepper::new(system);
    stepper.check_dtau(dtau)?;
    let mut next = state.clone();
    stepper.step_signed(&mut next, -dtau, &system.b_hat)?;
    Ok(next)
}

/// What [`integrate`] records at each sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordOptions {
    /// Override the default time step.
    pub dtau: Option<f64>,
    /// Keep per-spin azimuth angles at every sample.
    pub spin_azimuths: bool,
    /// Keep full state snapshots at every sample (memory heavy).
    pub snapshots: bool,
}

/// Time-ordered record of a run at a fixed sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dtau: f64,
    pub record_every: usize,
    /// Actual integrated span, `n_steps * dtau`.
    pub t_end: f64,
    pub times: Vec<f64>,
    pub mag: Vec<Vector3<f64>>,
    pub s_z: Vec<f64>,
    pub l_z: Vec<f64>,
    pub j_z: Vec<f64>,
    /// Needle-axis azimuth, wrapped to (-pi, pi], sign-continuous.
    pub needle_azimuth: Vec<f64>,
    pub needle_polar: Vec<f64>,
    pub energy_total: Vec<f64>,
    pub spin_azimuths: Option<Vec<Vec<f64>>>,
    pub snapshots: Option<Vec<SystemState>>,
    pub final_state: SystemState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Unwrapped needle azimuth series.
    pub fn unwrapped_azimuth(&self) -> Result<Vec<f64>> {
        observables::unwrap_angles(&self.needle_azimuth)
    }
}

/// Integrate for `t_end` (dimensionless), recording every `record_every`
/// steps; the field is re-evaluated from `schedule` at each step midpoint.
pub fn integrate(
    initial: &SystemState,
    system: &DimensionlessSystem,
    t_end: f64,
    record_every: usize,
    schedule: &FieldSchedule,
    options: &RecordOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be > 0, got {t_end}"
        )));
    }
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    initial.validate()?;

    let dtau = options.dtau.unwrap_or_else(|| system.default_dtau());
    if dtau <= 0.0 {
        return Err(Error::NonPositiveTimestep(dtau));
    }
    let mut stepper = Stepper::new(system);
    stepper.check_dtau(dtau)?;

    let n_steps = ((t_end / dtau).round() as u64).max(1);
    let n_samples = (n_steps / record_every as u64) as usize + 1;

    let mut traj = Trajectory {
        dtau,
        record_every,
        t_end: n_steps as f64 * dtau,
        times: Vec::with_capacity(n_samples),
        mag: Vec::with_capacity(n_samples),
        s_z: Vec::with_capacity(n_samples),
        l_z: Vec::with_capacity(n_samples),
        j_z: Vec::with_capacity(n_samples),
        needle_azimuth: Vec::with_capacity(n_samples),
        needle_polar: Vec::with_capacity(n_samples),
        energy_total: Vec::with_capacity(n_samples),
        spin_azimuths: options.spin_azimuths.then(Vec::new),
        snapshots: options.snapshots.then(Vec::new),
        final_state: initial.clone(),
    };

    let mut state = initial.clone();
    let mut prev_axis: Option<Vector3<f64>> = None;
    record_sample(&state, system, schedule, &mut traj, &mut prev_axis)?;

    for k in 0..n_steps {
        let mid = (k as f64 + 0.5) * dtau;
        let b = schedule.eval(mid, &system.b_hat);
        stepper
            .step_signed(&mut state, dtau, &b)
            .map_err(|e| Error::StepFailed {
                tau: k as f64 * dtau,
                source: Box::new(e),
            })?;
        if (k + 1) % record_every as u64 == 0 {
            // keep recorded times exact multiples of dtau
            state.time = (k + 1) as f64 * dtau;
            record_sample(&state, system, schedule, &mut traj, &mut prev_axis)?;
        }
    }
    state.time = n_steps as f64 * dtau;
    traj.final_state = state;
    Ok(traj)
}

fn record_sample(
    state: &SystemState,
    system: &DimensionlessSystem,
    schedule: &FieldSchedule,
    traj: &mut Trajectory,
    prev_axis: &mut Option<Vector3<f64>>,
) -> Result<()> {
    let b = schedule.eval(state.time, &system.b_hat);
    let energy = hamiltonian_energy_with_field(state, system, &b);
    let momenta = observables::angular_momenta(state, system);
    let frame = match prev_axis {
        Some(prev) => observables::needle_frame_continuous(state, prev)?,
        None => observables::needle_frame(state)?,
    };
    *prev_axis = Some(frame.axis);

    traj.times.push(state.time);
    traj.mag.push(observables::magnetization(state));
    traj.s_z.push(momenta.s_z);
    traj.l_z.push(momenta.l_z);
    traj.j_z.push(momenta.j_z);
    traj.needle_azimuth.push(frame.azimuth);
    traj.needle_polar.push(frame.polar);
    traj.energy_total.push(energy.total);
    if let Some(az) = traj.spin_azimuths.as_mut() {
        az.push(observables::per_spin_azimuths(state)?);
    }
    if let Some(snaps) = traj.snapshots.as_mut() {
        snaps.push(state.clone());
    }
    Ok(())
}
