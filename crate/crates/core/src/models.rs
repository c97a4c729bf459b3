//! The two competing counting-rate laws as interchangeable predictors.
//!
//! The Copenhagen model runs the projective-collapse engine on an explicit
//! source state. The time-symmetric model is a closed form in the polarizer
//! angles alone: for the triphoton experiment k·cos²(θ_c − θ_a − θ_b) with
//! a single free parameter k, and for the two-photon experiment it is
//! defined to coincide with the Born-rule law — the two theories agree
//! there, which is what the `verify` machinery checks.

use crate::error::{Error, Result};
use crate::measurement::{joint_pass_probability, PolarizerSetting};
use crate::state::{Angle, PureState};

/// Relative counting rate: coincidences per emitted multi-photon event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    pub relative_rate: f64,
}

impl RatePrediction {
    pub fn new(relative_rate: f64) -> Self {
        debug_assert!(
            (-1e-12..=1.0 + 1e-12).contains(&relative_rate),
            "relative rate {relative_rate} outside [0,1]"
        );
        RatePrediction { relative_rate }
    }
}

/// Default coupling for the time-symmetric triphoton law, chosen so both
/// models share the same peak relative rate of 1/2.
pub const DEFAULT_K: f64 = 0.5;

fn validate_k(k: f64) -> Result<()> {
    if !(k.is_finite() && 0.0 < k && k <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "k out of range (0,1]: {k}"
        )));
    }
    Ok(())
}

/// One of the two theories, packaged as a value.
#[derive(Debug, Clone, PartialEq)]
pub enum RateModel {
    /// Projective collapse on an explicit source state.
    Copenhagen { source_state: PureState },
    /// Triphoton closed form k·cos²(θ_c − θ_a − θ_b).
    TimeSymmetricTriphoton { k: f64 },
    /// Two-photon configuration, defined to agree with the Born-rule law.
    TimeSymmetricBell,
}

impl RateModel {
    pub fn copenhagen(source_state: PureState) -> Self {
        RateModel::Copenhagen { source_state }
    }

    pub fn time_symmetric_triphoton(k: f64) -> Result<Self> {
        validate_k(k)?;
        Ok(RateModel::TimeSymmetricTriphoton { k })
    }

    pub fn time_symmetric_bell() -> Self {
        RateModel::TimeSymmetricBell
    }

    /// Short identifier used in reports and CLI output.
    pub fn tag(&self) -> &'static str {
        match self {
            RateModel::Copenhagen { .. } => "copenhagen",
            RateModel::TimeSymmetricTriphoton { .. } => "time_symmetric_triphoton",
            RateModel::TimeSymmetricBell => "time_symmetric_bell",
        }
    }

    /// Number of polarizers the model's experiment uses.
    pub fn arity(&self) -> usize {
        match self {
            RateModel::Copenhagen { source_state } => source_state.num_photons(),
            RateModel::TimeSymmetricTriphoton { .. } => 3,
            RateModel::TimeSymmetricBell => 2,
        }
    }
}

/// Copenhagen prediction: Born-rule joint pass probability on the source.
pub fn copenhagen_rate(state: &PureState, settings: &[PolarizerSetting]) -> Result<RatePrediction> {
    Ok(RatePrediction::new(joint_pass_probability(state, settings)?))
}

/// Closed-form collapse-model triple-coincidence rate for the
/// (|HHV⟩ + |VVH⟩)/√2 source:
/// ½(cos θ_a cos θ_b sin θ_c + sin θ_a sin θ_b cos θ_c)².
///
/// Kept separate from [`copenhagen_rate`] so the projection engine can be
/// checked against it; the two must agree to 1e-12.
pub fn copenhagen_triphoton_closed_form(
    theta_a: Angle,
    theta_b: Angle,
    theta_c: Angle,
) -> RatePrediction {
    let (a, b, c) = (theta_a.radians(), theta_b.radians(), theta_c.radians());
    let amplitude = a.cos() * b.cos() * c.sin() + a.sin() * b.sin() * c.cos();
    RatePrediction::new(0.5 * amplitude * amplitude)
}

/// Time-symmetric triple-coincidence rate k·cos²(θ_c − θ_a − θ_b).
pub fn time_symmetric_triphoton_rate(
    theta_a: Angle,
    theta_b: Angle,
    theta_c: Angle,
    k: f64,
) -> Result<RatePrediction> {
    validate_k(k)?;
    let delta = theta_c.radians() - theta_a.radians() - theta_b.radians();
    Ok(RatePrediction::new(k * delta.cos() * delta.cos()))
}

/// Two-photon coincidence law ½cos²(θ_a − θ_b).
///
/// Both theories predict this value on the two-photon configuration; the
/// Copenhagen route reproduces it through the measurement engine.
pub fn bell_coincidence_rate(theta_a: Angle, theta_b: Angle) -> RatePrediction {
    let d = theta_a.radians() - theta_b.radians();
    RatePrediction::new(0.5 * d.cos() * d.cos())
}

/// Reorders `settings` into per-photon angles 0..arity, rejecting gaps,
/// duplicates and out-of-range indices.
fn angles_by_photon(settings: &[PolarizerSetting], arity: usize) -> Result<Vec<Angle>> {
    if settings.len() != arity {
        return Err(Error::ArityMismatch {
            expected: arity,
            actual: settings.len(),
        });
    }
    let mut slots: Vec<Option<Angle>> = vec![None; arity];
    for s in settings {
        if s.photon_index >= arity {
            return Err(Error::PhotonIndexOutOfRange {
                index: s.photon_index,
                num_photons: arity,
            });
        }
        if slots[s.photon_index].is_some() {
            return Err(Error::DuplicatePhotonIndex(s.photon_index));
        }
        slots[s.photon_index] = Some(s.angle);
    }
    Ok(slots.into_iter().map(|a| a.expect("all slots filled")).collect())
}

/// Uniform dispatch over the two theories.
///
/// Copenhagen accepts any settings valid for its source state (including
/// partial measurement); the time-symmetric variants require polarizers on
/// exactly the photons of their experiment.
pub fn predict_rate(model: &RateModel, settings: &[PolarizerSetting]) -> Result<RatePrediction> {
    match model {
        RateModel::Copenhagen { source_state } => copenhagen_rate(source_state, settings),
        RateModel::TimeSymmetricTriphoton { k } => {
            let angles = angles_by_photon(settings, 3)?;
            time_symmetric_triphoton_rate(angles[0], angles[1], angles[2], *k)
        }
        RateModel::TimeSymmetricBell => {
            let angles = angles_by_photon(settings, 2)?;
            Ok(bell_coincidence_rate(angles[0], angles[1]))
        }
    }
}

/// How many operations of duration `tau_op` fit into the coherence time
/// `tau_coherence`: floor(τ_coherence / τ_op).
///
/// The division is snapped to the nearest integer when it lands within a
/// relative 1e-9 of one, so exact ratios like 1e-7/1e-9 report 100 rather
/// than 99 through float rounding.
pub fn decoherence_step_budget(tau_op: f64, tau_coherence: f64) -> Result<u64> {
    if !(tau_op.is_finite() && tau_op > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau_op must be a positive finite duration, got {tau_op}"
        )));
    }
    if !(tau_coherence.is_finite() && tau_coherence >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau_coherence must be a non-negative finite duration, got {tau_coherence}"
        )));
    }
    let ratio = tau_coherence / tau_op;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.floor()
    };
    Ok(steps as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_state, ghz_state};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn ang(r: f64) -> Angle {
        Angle::new(r).unwrap()
    }

    fn triple_settings(a: f64, b: f64, c: f64) -> Vec<PolarizerSetting> {
        crate::measurement::AngleSettings::triple(ang(a), ang(b), ang(c)).to_polarizer_settings()
    }

    fn pair_settings(a: f64, b: f64) -> Vec<PolarizerSetting> {
        crate::measurement::AngleSettings::pair(ang(a), ang(b)).to_polarizer_settings()
    }

    #[test]
    fn closed_form_spot_values() {
        let r = copenhagen_triphoton_closed_form(ang(0.0), ang(0.0), ang(FRAC_PI_2));
        assert!((r.relative_rate - 0.5).abs() < 1e-12);
        let r = copenhagen_triphoton_closed_form(ang(0.0), ang(0.0), ang(0.0));
        assert!(r.relative_rate.abs() < 1e-15);
        let r = copenhagen_triphoton_closed_form(ang(FRAC_PI_4), ang(FRAC_PI_4), ang(FRAC_PI_4));
        assert!((r.relative_rate - 0.25).abs() < 1e-12);
    }

    #[test]
    fn copenhagen_engine_matches_examples() {
        let g = ghz_state();
        let r = copenhagen_rate(&g, &triple_settings(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4)).unwrap();
        assert!((r.relative_rate - 0.25).abs() < 1e-12);
        let r = copenhagen_rate(&g, &triple_settings(0.0, 0.0, 0.0)).unwrap();
        assert!(r.relative_rate.abs() < 1e-15);
        let r = copenhagen_rate(&bell_state(), &pair_settings(0.0, FRAC_PI_4)).unwrap();
        assert!((r.relative_rate - 0.25).abs() < 1e-12);
    }

    #[test]
    fn time_symmetric_spot_values() {
        let r = time_symmetric_triphoton_rate(ang(0.0), ang(0.0), ang(0.0), 0.5).unwrap();
        assert_eq!(r.relative_rate, 0.5);
        // θ_c = θ_a + θ_b gives the full rate k for any k.
        for k in [0.25, 0.5, 1.0] {
            let r = time_symmetric_triphoton_rate(ang(0.4), ang(0.9), ang(1.3), k).unwrap();
            assert!((r.relative_rate - k).abs() < 1e-12);
        }
        let r = time_symmetric_triphoton_rate(ang(0.0), ang(0.0), ang(FRAC_PI_2), 0.7).unwrap();
        assert!(r.relative_rate < 1e-30);
    }

    #[test]
    fn time_symmetric_rejects_bad_k() {
        for k in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(time_symmetric_triphoton_rate(ang(0.0), ang(0.0), ang(0.0), k).is_err());
            assert!(RateModel::time_symmetric_triphoton(k).is_err());
        }
    }

    #[test]
    fn bell_law_spot_values() {
        for theta in [0.0, 0.7, 2.1] {
            let r = bell_coincidence_rate(ang(theta), ang(theta));
            assert!((r.relative_rate - 0.5).abs() < 1e-12);
        }
        assert!(bell_coincidence_rate(ang(0.0), ang(FRAC_PI_2)).relative_rate < 1e-30);
        let r = bell_coincidence_rate(ang(0.0), ang(FRAC_PI_4));
        assert!((r.relative_rate - 0.25).abs() < 1e-12);
    }

    #[test]
    fn predict_rate_dispatch() {
        let cop = RateModel::copenhagen(ghz_state());
        let r = predict_rate(&cop, &triple_settings(0.0, 0.0, FRAC_PI_2)).unwrap();
        assert!((r.relative_rate - 0.5).abs() < 1e-12);

        let ts = RateModel::time_symmetric_triphoton(0.5).unwrap();
        let r = predict_rate(&ts, &triple_settings(0.0, 0.0, FRAC_PI_2)).unwrap();
        assert!(r.relative_rate < 1e-30);

        let tsb = RateModel::time_symmetric_bell();
        let r = predict_rate(&tsb, &pair_settings(0.0, 0.0)).unwrap();
        assert!((r.relative_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn predict_rate_arity_mismatch() {
        let ts = RateModel::time_symmetric_triphoton(0.5).unwrap();
        let err = predict_rate(&ts, &pair_settings(0.0, 0.0)).unwrap_err();
        assert_eq!(
            err,
            Error::ArityMismatch {
                expected: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn step_budget_examples() {
        assert_eq!(decoherence_step_budget(1e-9, 1e-7).unwrap(), 100);
        assert_eq!(decoherence_step_budget(1.0, 1.0).unwrap(), 1);
        assert_eq!(decoherence_step_budget(3.0, 10.0).unwrap(), 3);
        assert_eq!(decoherence_step_budget(1.0, 0.0).unwrap(), 0);
        assert!(decoherence_step_budget(0.0, 1.0).is_err());
        assert!(decoherence_step_budget(-1.0, 1.0).is_err());
        assert!(decoherence_step_budget(1.0, f64::INFINITY).is_err());
    }
}
