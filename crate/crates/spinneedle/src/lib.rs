//! Microscopic spin-lattice dynamics of a rigid magnetic needle.
//!
//! A one-dimensional chain of classical spins sits on a harmonic lattice and
//! couples to it through a pseudo-dipolar interaction. Integrating the
//! coupled equations of motion reproduces, from atomic ingredients, the
//! collective behavior that makes a levitated ferromagnetic needle a
//! magnetometer: rigid Larmor precession, spin-to-rotation angular-momentum
//! transfer, a precession-angle noise floor that saturates instead of
//! diffusing, geometric-phase readout under a slowly rotating field, and
//! nutation-based sensing of an amplitude-modulated field.
//!
//! The library is organized by task:
//!
//! * [`model`] - physical parameters, nondimensionalization, initial states;
//! * [`dynamics`] - energies, torques, forces, and the splitting integrator;
//! * [`observables`] - magnetization, angular momenta, needle orientation;
//! * [`noise`] - the independent-spin reference model, spectra, bounds;
//! * [`protocols`] - the packaged experiments (regime scan, Berry phase,
//!   nutation sensing, precession summary);
//! * [`cli`] - config parsing, run orchestration, CSV/JSON serialization.
//!
//! Each major capability has a runnable demo under `examples/`; the thin
//! `needle` binary drives the same experiments from TOML configs.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod noise;
pub mod observables;
pub mod protocols;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    build_system, build_system_with_reference, critical_field, moment_of_inertia,
    sample_initial_state, DimensionlessSystem, PhysicalParams, Scales, SystemState,
};
