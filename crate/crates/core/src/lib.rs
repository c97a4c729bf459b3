//! Simulation and statistics for polarization-entangled photon counting
//! experiments.
//!
//! Two physical models of ideal polarizers acting on entangled photons are
//! implemented side by side:
//!
//! * a projective-collapse (Copenhagen) engine over explicit state vectors,
//!   whose triple-coincidence rate for the (|HHV⟩+|VVH⟩)/√2 source has the
//!   closed form ½(cos θ_a cos θ_b sin θ_c + sin θ_a sin θ_b cos θ_c)²;
//! * a time-symmetric law whose triphoton rate is k·cos²(θ_c − θ_a − θ_b).
//!
//! The two agree on every two-photon configuration and disagree sharply on
//! the triphoton one, so the crate also provides seeded Monte Carlo
//! counting runs, an angle-space optimizer for the most discriminating
//! setting, a sample-size bound, and a bootstrap likelihood-ratio test that
//! decides which law simulated counts support.

pub mod discrimination;
pub mod error;
pub mod measurement;
pub mod models;
pub mod montecarlo;
pub mod state;

pub use error::{Error, Result};
