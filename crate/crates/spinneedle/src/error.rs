//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

/// Everything that can go wrong between a config file and a finished run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error(
        "magnetic field is zero; build the system with an explicit reference \
         frequency (build_system_with_reference) for field-free runs"
    )]
    ZeroField,

    #[error("lattice temperature must be non-negative, got {0}")]
    NegativeTemperature(f64),

    #[error("atoms {i} and {j} coincide (zero bond length)")]
    CoincidentNeighbors { i: usize, j: usize },

    #[error(
        "time step {dtau:e} violates the stability guard: \
         dtau * {rate:e} > 0.5 where the fastest rate is {fastest}"
    )]
    StabilityGuard {
        dtau: f64,
        rate: f64,
        fastest: &'static str,
    },

    #[error("time step must be positive, got {0}")]
    NonPositiveTimestep(f64),

    #[error("integration failed at tau = {tau}: {source}")]
    StepFailed {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("gyration tensor is degenerate (all atoms coincident)")]
    DegenerateGeometry,

    #[error("spin {spin} is parallel to +/-z; its azimuth is undefined")]
    UndefinedAzimuth { spin: usize },

    #[error(
        "angle jump of {jump} rad at sample {index} is ambiguous; \
         record with a finer record_every"
    )]
    AmbiguousUnwrap { index: usize, jump: f64 },

    #[error("segment length {segment} exceeds signal length {signal}")]
    SegmentTooLong { segment: usize, signal: usize },

    #[error("power-law fit window contains {found} usable points, need at least {need}")]
    FitWindowTooSmall { need: usize, found: usize },

    #[error("power-law fit window contains non-positive data")]
    NonPositiveFitData,

    #[error(
        "modulation envelope is below the detection threshold \
         (peak {peak:e} < {threshold:e}); increase depth or run length"
    )]
    EnvelopeNotDetectable { peak: f64, threshold: f64 },

    #[error(
        "rotation rate {rate:e} violates the adiabaticity guard (limit {limit:e})"
    )]
    AdiabaticityViolated { rate: f64, limit: f64 },

    #[error("weak-field precondition violated: |B| = {field:e} T exceeds {limit:e} T")]
    NotWeakField { field: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Exit code for the command-line front end:
    /// 0 success, 2 config error, 3 numerical failure, 4 i/o failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::InvalidArgument(_)
            | Error::ZeroField
            | Error::NegativeTemperature(_)
            | Error::NonPositiveTimestep(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
