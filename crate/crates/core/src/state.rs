//! Multi-photon polarization states as dense complex amplitude vectors.
//!
//! A state over `n` photons is a vector of `2^n` amplitudes. Basis index
//! bits are read with photon 0 (photon "a") as the most significant bit;
//! bit value 0 is horizontal polarization |H⟩ and bit value 1 is vertical
//! polarization |V⟩. Several counting-rate tests depend on this ordering,
//! so it is part of the public contract.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A dimensionless probability amplitude.
pub type Amplitude = Complex64;

/// Hard cap on photon count for tensor products (2^20 amplitudes ≈ 16 MB).
pub const MAX_PHOTONS: usize = 20;

/// Constructors accept amplitude vectors whose squared norm is within this
/// tolerance of 1 and renormalize them exactly.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A linear polarizer orientation in radians.
///
/// The raw value is kept as given (so |θ+π⟩ = -|θ⟩ holds at the amplitude
/// level); [`Angle::canonical`] maps to the physically distinct range
/// [0, π), since a linear polarizer at θ and θ+π are the same device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Angle {
    radians: f64,
}

impl Angle {
    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "angle must be finite, got {radians}"
            )));
        }
        Ok(Angle { radians })
    }

    pub fn radians(self) -> f64 {
        self.radians
    }

    /// The representative orientation in [0, π).
    pub fn canonical(self) -> Angle {
        let mut r = self.radians.rem_euclid(std::f64::consts::PI);
        // rem_euclid of a tiny negative value can round up to π itself.
        if r >= std::f64::consts::PI {
            r = 0.0;
        }
        Angle { radians: r }
    }
}

/// A normalized pure polarization state of `num_photons` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_photons: usize,
    amplitudes: Vec<Amplitude>,
}

impl PureState {
    /// Build a state from explicit amplitudes.
    ///
    /// The vector length must be a power of two (2^n for n ≥ 1 photons),
    /// every amplitude must be finite, and the squared norm must already be
    /// within [`NORM_TOLERANCE`] of 1; the stored amplitudes are then scaled
    /// to unit norm.
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length must be 2^n with n >= 1, got {len}"
            )));
        }
        let num_photons = len.trailing_zeros() as usize;
        if num_photons > MAX_PHOTONS {
            return Err(Error::CapacityExceeded {
                requested: num_photons,
                cap: MAX_PHOTONS,
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "amplitudes must be finite".to_string(),
            ));
        }
        let norm = vector_norm(&amplitudes);
        if (norm * norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "amplitudes must normalize to 1 within {NORM_TOLERANCE:e}, squared norm is {}",
                norm * norm
            )));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(PureState {
            num_photons,
            amplitudes,
        })
    }

    /// Internal constructor for amplitude vectors already known to be
    /// unit-norm (products and renormalized projections).
    pub(crate) fn from_normalized(num_photons: usize, amplitudes: Vec<Amplitude>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_photons);
        debug_assert!((vector_norm(&amplitudes) - 1.0).abs() < 1e-9);
        PureState {
            num_photons,
            amplitudes,
        }
    }

    pub fn num_photons(&self) -> usize {
        self.num_photons
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        vector_norm(&self.amplitudes)
    }

    /// Bit mask selecting the basis-index bit of the given photon
    /// (photon 0 is the most significant bit).
    pub fn photon_mask(&self, photon_index: usize) -> Result<usize> {
        if photon_index >= self.num_photons {
            return Err(Error::PhotonIndexOutOfRange {
                index: photon_index,
                num_photons: self.num_photons,
            });
        }
        Ok(1 << (self.num_photons - 1 - photon_index))
    }
}

/// Euclidean norm of a raw amplitude vector.
pub fn vector_norm(amplitudes: &[Amplitude]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Single-photon linear polarization ket |θ⟩ = cos θ|H⟩ + sin θ|V⟩.
pub fn linear_ket(theta: Angle) -> PureState {
    let r = theta.radians();
    PureState::from_normalized(1, vec![
        Amplitude::new(r.cos(), 0.0),
        Amplitude::new(r.sin(), 0.0),
    ])
}

/// Kronecker product of two states; photon indices of `right` are appended
/// after those of `left`.
pub fn tensor(left: &PureState, right: &PureState) -> Result<PureState> {
    let n = left.num_photons + right.num_photons;
    if n > MAX_PHOTONS {
        return Err(Error::CapacityExceeded {
            requested: n,
            cap: MAX_PHOTONS,
        });
    }
    let mut amplitudes = Vec::with_capacity(1 << n);
    for a in &left.amplitudes {
        for b in &right.amplitudes {
            amplitudes.push(a * b);
        }
    }
    Ok(PureState::from_normalized(n, amplitudes))
}

/// ⟨bra|ket⟩, conjugate-linear in the bra.
pub fn inner_product(bra: &PureState, ket: &PureState) -> Result<Amplitude> {
    if bra.num_photons != ket.num_photons {
        return Err(Error::DimensionMismatch {
            left: bra.num_photons,
            right: ket.num_photons,
        });
    }
    Ok(bra
        .amplitudes
        .iter()
        .zip(&ket.amplitudes)
        .map(|(b, k)| b.conj() * k)
        .sum())
}

/// The two-photon source state (|HH⟩ + |VV⟩)/√2 of the classic
/// polarization-correlation experiments.
pub fn bell_state() -> PureState {
    let h = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Amplitude::new(0.0, 0.0);
    PureState::from_normalized(2, vec![h, z, z, h])
}

/// The three-photon source state (|HHV⟩ + |VVH⟩)/√2.
///
/// Nonzero amplitudes sit at basis indices 1 (= 0b001, |H⟩_a|H⟩_b|V⟩_c) and
/// 6 (= 0b110, |V⟩_a|V⟩_b|H⟩_c).
pub fn ghz_state() -> PureState {
    let h = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Amplitude::new(0.0, 0.0);
    PureState::from_normalized(3, vec![z, h, z, z, z, z, h, z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn re(x: f64) -> Amplitude {
        Amplitude::new(x, 0.0)
    }

    #[test]
    fn linear_ket_basis_states() {
        let h = linear_ket(Angle::new(0.0).unwrap());
        assert_eq!(h.amplitudes(), &[re(1.0), re(0.0)]);

        let v = linear_ket(Angle::new(FRAC_PI_2).unwrap());
        assert!((v.amplitudes()[0].re).abs() < 1e-15);
        assert!((v.amplitudes()[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_ket_diagonal() {
        let d = linear_ket(Angle::new(FRAC_PI_4).unwrap());
        assert!((d.amplitudes()[0].re - 0.7071067811865476).abs() < 1e-15);
        assert!((d.amplitudes()[1].re - 0.7071067811865476).abs() < 1e-15);
        let self_overlap = inner_product(&d, &d).unwrap();
        assert!((self_overlap.re - 1.0).abs() < 1e-12);
        assert!(self_overlap.im.abs() < 1e-15);
    }

    #[test]
    fn linear_ket_rejects_non_finite() {
        assert!(Angle::new(f64::NAN).is_err());
        assert!(Angle::new(f64::INFINITY).is_err());
    }

    #[test]
    fn tensor_basis_products() {
        let h = linear_ket(Angle::new(0.0).unwrap());
        let v = PureState::new(vec![re(0.0), re(1.0)]).unwrap();

        let hh = tensor(&h, &h).unwrap();
        assert_eq!(hh.amplitudes(), &[re(1.0), re(0.0), re(0.0), re(0.0)]);

        let hv = tensor(&h, &v).unwrap();
        assert_eq!(hv.amplitudes(), &[re(0.0), re(1.0), re(0.0), re(0.0)]);
    }

    #[test]
    fn tensor_kronecker_layout() {
        let s = PureState::new(vec![re(0.6), re(0.8)]).unwrap();
        let h = linear_ket(Angle::new(0.0).unwrap());
        let sh = tensor(&s, &h).unwrap();
        let amps = sh.amplitudes();
        assert!((amps[0].re - 0.6).abs() < 1e-15);
        assert!(amps[1].norm() < 1e-15);
        assert!((amps[2].re - 0.8).abs() < 1e-15);
        assert!(amps[3].norm() < 1e-15);
    }

    #[test]
    fn tensor_capacity_cap() {
        let mut s = bell_state();
        // 2 photons doubling up to 16, then 16 + 16 = 32 > 20.
        for _ in 0..3 {
            s = tensor(&s, &s.clone()).unwrap();
        }
        assert_eq!(s.num_photons(), 16);
        let err = tensor(&s, &s.clone()).unwrap_err();
        assert_eq!(
            err,
            Error::CapacityExceeded {
                requested: 32,
                cap: MAX_PHOTONS
            }
        );
    }

    #[test]
    fn inner_product_orthogonal_and_oblique() {
        let h = linear_ket(Angle::new(0.0).unwrap());
        let v = linear_ket(Angle::new(FRAC_PI_2).unwrap());
        let d = linear_ket(Angle::new(FRAC_PI_4).unwrap());
        assert!(inner_product(&h, &v).unwrap().norm() < 1e-15);
        assert!((inner_product(&h, &d).unwrap().re - 0.7071067811865476).abs() < 1e-15);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let h = linear_ket(Angle::new(0.0).unwrap());
        let b = bell_state();
        assert_eq!(
            inner_product(&h, &b).unwrap_err(),
            Error::DimensionMismatch { left: 1, right: 2 }
        );
    }

    #[test]
    fn source_states_are_normalized_with_two_terms() {
        for s in [bell_state(), ghz_state()] {
            assert!((s.norm() - 1.0).abs() < 1e-12);
            let nonzero = s.amplitudes().iter().filter(|a| a.norm() > 0.0).count();
            assert_eq!(nonzero, 2);
        }
        let g = ghz_state();
        assert!((g.amplitudes()[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.amplitudes()[6].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let b = bell_state();
        assert!((b.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.amplitudes()[3].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn vector_norm_examples() {
        assert_eq!(vector_norm(&[re(1.0), re(0.0)]), 1.0);
        assert_eq!(vector_norm(&[re(0.0); 4]), 0.0);
        assert!((vector_norm(&[re(0.6), re(0.8)]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn new_rejects_bad_inputs() {
        assert!(PureState::new(vec![re(1.0)]).is_err());
        assert!(PureState::new(vec![re(1.0), re(0.0), re(0.0)]).is_err());
        assert!(PureState::new(vec![re(0.9), re(0.0)]).is_err());
        assert!(PureState::new(vec![re(f64::NAN), re(0.0)]).is_err());
    }

    #[test]
    fn new_renormalizes_within_tolerance() {
        let eps = 1e-10_f64;
        let s = PureState::new(vec![re((1.0 + eps).sqrt()), re(0.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_maps_into_half_open_pi_range() {
        for &r in &[-10.0, -PI, -1e-300, 0.0, 1.0, PI, PI + 0.5, 1e9] {
            let c = Angle::new(r).unwrap().canonical().radians();
            assert!((0.0..PI).contains(&c), "canonical({r}) = {c}");
        }
        // θ and θ+π share a canonical representative.
        let a = Angle::new(0.3).unwrap().canonical().radians();
        let b = Angle::new(0.3 + PI).unwrap().canonical().radians();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn half_turn_flips_amplitudes_but_not_projector() {
        let theta = 0.739;
        let k0 = linear_ket(Angle::new(theta).unwrap());
        let k1 = linear_ket(Angle::new(theta + PI).unwrap());
        for (a0, a1) in k0.amplitudes().iter().zip(k1.amplitudes()) {
            assert!((a0 + a1).norm() < 1e-12, "amplitudes should flip sign");
        }
        // Outer products |θ⟩⟨θ| agree.
        for i in 0..2 {
            for j in 0..2 {
                let p0 = k0.amplitudes()[i] * k0.amplitudes()[j].conj();
                let p1 = k1.amplitudes()[i] * k1.amplitudes()[j].conj();
                assert!((p0 - p1).norm() < 1e-12);
            }
        }
    }
}
