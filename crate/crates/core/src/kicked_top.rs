//! One-period Floquet operator of the kicked top.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::spin::{hermitian_exp, CMatrix, CVector, Spin, SpinSystem, C64};

/// Kick strength `k` and rotation angle `p` for spin `j`.
///
/// The defaults (`k = 3`, `p = pi/2`, `j = 18`) give the standard
/// chaotic-regime top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopParameters {
    pub spin: Spin,
    pub kick_strength: f64,
    pub rotation_angle: f64,
}

impl TopParameters {
    pub const DEFAULT_KICK_STRENGTH: f64 = 3.0;
    pub const DEFAULT_ROTATION_ANGLE: f64 = FRAC_PI_2;

    pub fn new(spin: Spin, kick_strength: f64, rotation_angle: f64) -> Result<Self> {
        if !kick_strength.is_finite() || !rotation_angle.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kick strength and rotation angle must be finite, got ({kick_strength}, {rotation_angle})"
            )));
        }
        Ok(Self {
            spin,
            kick_strength,
            rotation_angle,
        })
    }

    /// Standard kick and rotation for the given spin.
    pub fn standard(spin: Spin) -> Self {
        Self {
            spin,
            kick_strength: Self::DEFAULT_KICK_STRENGTH,
            rotation_angle: Self::DEFAULT_ROTATION_ANGLE,
        }
    }

    /// `k = 0`, `p = 0`: no dynamics between measurements.
    pub fn frozen(spin: Spin) -> Self {
        Self {
            spin,
            kick_strength: 0.0,
            rotation_angle: 0.0,
        }
    }
}

impl Default for TopParameters {
    fn default() -> Self {
        Self::standard(Spin::from_twice(36).expect("j = 18 is valid"))
    }
}

/// `U = exp(-i k/(2j) J_z^2) exp(-i p J_y)`.
#[derive(Clone, Debug)]
pub struct FloquetOperator {
    matrix: CMatrix,
    params: TopParameters,
}

impl FloquetOperator {
    pub fn new(sys: &SpinSystem, params: TopParameters) -> Result<Self> {
        if sys.spin() != params.spin {
            return Err(Error::DimensionMismatch {
                expected: params.spin.dim(),
                found: sys.dim(),
            });
        }
        let rotation = rotation_factor(sys, params.rotation_angle)?;
        let kick = kick_phases(sys, params.kick_strength);
        let mut matrix = rotation;
        for (r, phase) in kick.iter().enumerate() {
            matrix.row_mut(r).iter_mut().for_each(|z| *z *= phase);
        }
        Ok(Self { matrix, params })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &TopParameters {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }
}

/// Diagonal of `exp(-i k/(2j) J_z^2)`.
pub fn kick_phases(sys: &SpinSystem, kick_strength: f64) -> CVector {
    let coeff = kick_strength / (2.0 * sys.j());
    CVector::from_iterator(sys.dim(), sys.m_values().map(|m| C64::from_polar(1.0, -coeff * m * m)))
}

/// `exp(-i p J_y)`.
pub fn rotation_factor(sys: &SpinSystem, rotation_angle: f64) -> Result<CMatrix> {
    hermitian_exp(sys.jy(), C64::new(0.0, -rotation_angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    fn build(j: f64, k: f64, p: f64) -> FloquetOperator {
        let sys = SpinSystem::with_j(j).unwrap();
        let params = TopParameters::new(sys.spin(), k, p).unwrap();
        FloquetOperator::new(&sys, params).unwrap()
    }

    fn spin_half_expected() -> CMatrix {
        let g = C64::from_polar(FRAC_1_SQRT_2, -0.75);
        CMatrix::from_row_slice(2, 2, &[g, -g, g, g])
    }

    #[test]
    fn standard_is_unitary() {
        let u = build(18.0, 3.0, FRAC_PI_2);
        assert_eq!(u.dim(), 37);
        let dev = u.matrix().adjoint() * u.matrix() - CMatrix::identity(37, 37);
        assert!(max_abs(&dev) <= 1e-10);
        assert!((u.matrix().determinant().norm() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn spin_half_closed_form() {
        let u = build(0.5, 3.0, FRAC_PI_2);
        assert!(max_abs(&(u.matrix() - spin_half_expected())) < 1e-14);
    }

    #[test]
    fn frozen_is_identity() {
        let sys = SpinSystem::with_j(2.5).unwrap();
        let u = FloquetOperator::new(&sys, TopParameters::frozen(sys.spin())).unwrap();
        assert!(max_abs(&(u.matrix() - CMatrix::identity(6, 6))) < 1e-14);
    }

    #[test]
    fn factor_order() {
        let sys = SpinSystem::with_j(4.0).unwrap();
        let params = TopParameters::new(sys.spin(), 2.2, 0.9).unwrap();
        let u = FloquetOperator::new(&sys, params).unwrap();
        let kick = CMatrix::from_diagonal(&kick_phases(&sys, 2.2));
        let product = kick * rotation_factor(&sys, 0.9).unwrap();
        assert!(max_abs(&(u.matrix() - product)) <= 1e-12);
    }

    #[test]
    fn apply_spin_half() {
        let u = build(0.5, 3.0, FRAC_PI_2);
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let w = u.apply(&v).unwrap();
        let g = C64::from_polar(FRAC_1_SQRT_2, -0.75);
        assert!((w[0] - g).norm() < 1e-14);
        assert!((w[1] - g).norm() < 1e-14);
    }

    #[test]
    fn apply_preserves_norm() {
        let u = build(6.0, 3.0, FRAC_PI_2);
        let v = CVector::from_fn(13, |k, _| C64::new((k as f64).sin(), 0.3 * k as f64));
        let w = u.apply(&v).unwrap();
        assert!((w.norm() - v.norm()).abs() <= 1e-12 * v.norm());
    }

    #[test]
    fn apply_identity_params() {
        let u = build(1.5, 0.0, 0.0);
        let v = CVector::from_fn(4, |k, _| C64::new(k as f64, -1.0));
        assert!((u.apply(&v).unwrap() - &v).norm() < 1e-14);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let u = build(1.0, 3.0, FRAC_PI_2);
        assert!(matches!(
            u.apply(&CVector::zeros(4)),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn mismatched_system_rejected() {
        let sys = SpinSystem::with_j(1.0).unwrap();
        let params = TopParameters::standard(Spin::new(2.0).unwrap());
        assert!(FloquetOperator::new(&sys, params).is_err());
    }
}
