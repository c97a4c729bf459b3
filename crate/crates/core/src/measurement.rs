//! Ideal polarizers as projective measurements with collapse.
//!
//! A polarizer on photon `i` at orientation θ projects that photon onto
//! |θ⟩ = cos θ|H⟩ + sin θ|V⟩. The photon passes with the Born-rule
//! probability ⟨ψ|P|ψ⟩ and the state collapses to the renormalized
//! projection; otherwise it is absorbed and the coincidence is over. The
//! absorbed branch is still exposed for testing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{Amplitude, Angle, PureState};

/// Branch probabilities below this floor are treated as impossible and get
/// no post-measurement state, so numerical noise is never renormalized.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// One polarizer: which photon it sits on and its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizerSetting {
    pub photon_index: usize,
    pub angle: Angle,
}

/// An ordered tuple of polarizer orientations, position `i` belonging to
/// photon `i` (θ_a, θ_b, θ_c, ...).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AngleSettings {
    angles: Vec<Angle>,
}

impl AngleSettings {
    pub fn new(angles: Vec<Angle>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidArgument(
                "settings need at least one angle".to_string(),
            ));
        }
        Ok(AngleSettings { angles })
    }

    pub fn pair(theta_a: Angle, theta_b: Angle) -> Self {
        AngleSettings {
            angles: vec![theta_a, theta_b],
        }
    }

    pub fn triple(theta_a: Angle, theta_b: Angle, theta_c: Angle) -> Self {
        AngleSettings {
            angles: vec![theta_a, theta_b, theta_c],
        }
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn arity(&self) -> usize {
        self.angles.len()
    }

    /// Expand into per-photon polarizer settings (photon i gets angle i).
    pub fn to_polarizer_settings(&self) -> Vec<PolarizerSetting> {
        self.angles
            .iter()
            .enumerate()
            .map(|(photon_index, &angle)| PolarizerSetting {
                photon_index,
                angle,
            })
            .collect()
    }
}

/// Result of pushing a state through one polarizer.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    /// Born-rule probability that the photon passes.
    pub pass_probability: f64,
    /// Probability that the photon is absorbed, computed independently from
    /// the orthogonal projection (so completeness is a real check).
    pub absorb_probability: f64,
    /// Renormalized post-pass state; absent below [`PROBABILITY_FLOOR`].
    pub post_pass_state: Option<PureState>,
    /// Renormalized post-absorb state; absent below [`PROBABILITY_FLOOR`].
    pub post_absorb_state: Option<PureState>,
}

/// Apply one ideal polarizer, returning both collapse branches.
pub fn apply_polarizer(state: &PureState, setting: &PolarizerSetting) -> Result<MeasurementOutcome> {
    let mask = state.photon_mask(setting.photon_index)?;
    let (c, s) = (setting.angle.radians().cos(), setting.angle.radians().sin());

    let dim = state.amplitudes().len();
    let mut pass = vec![Amplitude::new(0.0, 0.0); dim];
    let mut absorb = vec![Amplitude::new(0.0, 0.0); dim];
    for base in 0..dim {
        if base & mask != 0 {
            continue;
        }
        let a0 = state.amplitudes()[base];
        let a1 = state.amplitudes()[base | mask];
        // Overlap of the photon's 2-dim slice with |θ⟩.
        let t = a0 * c + a1 * s;
        pass[base] = t * c;
        pass[base | mask] = t * s;
        absorb[base] = a0 - t * c;
        absorb[base | mask] = a1 - t * s;
    }

    let p_pass = pass.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let p_absorb = absorb.iter().map(|a| a.norm_sqr()).sum::<f64>();

    let normalize = |mut amps: Vec<Amplitude>, p: f64| -> Option<PureState> {
        if p < PROBABILITY_FLOOR {
            return None;
        }
        let inv = 1.0 / p.sqrt();
        for a in &mut amps {
            *a *= inv;
        }
        Some(PureState::from_normalized(state.num_photons(), amps))
    };

    Ok(MeasurementOutcome {
        pass_probability: p_pass,
        absorb_probability: p_absorb,
        post_pass_state: normalize(pass, p_pass),
        post_absorb_state: normalize(absorb, p_absorb),
    })
}

fn check_settings(state: &PureState, settings: &[PolarizerSetting]) -> Result<()> {
    let mut seen = 0usize;
    for setting in settings {
        let mask = state.photon_mask(setting.photon_index)?;
        if seen & mask != 0 {
            return Err(Error::DuplicatePhotonIndex(setting.photon_index));
        }
        seen |= mask;
    }
    Ok(())
}

/// Probability that every listed photon passes its polarizer.
///
/// Computed as the squared norm of the state after projecting each listed
/// photon, which equals the product of sequential pass probabilities since
/// projectors on distinct photons commute. Photons without a listed
/// polarizer are left unmeasured.
pub fn joint_pass_probability(state: &PureState, settings: &[PolarizerSetting]) -> Result<f64> {
    check_settings(state, settings)?;
    let mut amps = state.amplitudes().to_vec();
    for setting in settings {
        let mask = state.photon_mask(setting.photon_index)?;
        let (c, s) = (setting.angle.radians().cos(), setting.angle.radians().sin());
        for base in 0..amps.len() {
            if base & mask != 0 {
                continue;
            }
            let t = amps[base] * c + amps[base | mask] * s;
            amps[base] = t * c;
            amps[base | mask] = t * s;
        }
    }
    let p = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

/// Fold [`apply_polarizer`] over the pass branch in the given temporal
/// order, multiplying pass probabilities.
///
/// In the collapse model the result does not depend on the order (the
/// projectors commute), so which polarizer the photons reach first is
/// irrelevant; the explicit order exists so that claim can be tested.
pub fn sequential_chain(state: &PureState, ordered_settings: &[PolarizerSetting]) -> Result<f64> {
    check_settings(state, ordered_settings)?;
    let mut current = state.clone();
    let mut product = 1.0;
    for setting in ordered_settings {
        let outcome = apply_polarizer(&current, setting)?;
        product *= outcome.pass_probability;
        match outcome.post_pass_state {
            Some(next) => current = next,
            // The chain is already dead to within the probability floor.
            None => return Ok(product.clamp(0.0, 1.0)),
        }
    }
    Ok(product.clamp(0.0, 1.0))
}
