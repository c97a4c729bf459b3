//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor products are capped so a typo cannot allocate 2^60 amplitudes.
    #[error("photon capacity exceeded: {requested} photons > cap of {cap}")]
    CapacityExceeded { requested: usize, cap: usize },

    #[error("photon count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("photon index {index} out of range for a {num_photons}-photon state")]
    PhotonIndexOutOfRange { index: usize, num_photons: usize },

    #[error("duplicate photon index {0} in polarizer settings")]
    DuplicatePhotonIndex(usize),

    #[error("arity mismatch: model expects {expected} polarizers, settings cover {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("models agree at every grid point: no discriminating setting")]
    NoDiscriminatingSetting,

    #[error("k unidentifiable: every recorded setting has cos^2(theta_c - theta_a - theta_b) ~ 0")]
    KUnidentifiable,
}
