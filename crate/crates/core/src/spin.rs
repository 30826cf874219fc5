//! Angular-momentum operators, Hermitian matrix exponentials and spin
//! coherent states.
//!
//! All matrices live in the `J_z` eigenbasis with `m` descending, so index 0
//! is `|j, j>` and index `2j` is `|j, -j>`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance used when accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on the norm of a [`PureState`].
pub const NORM_TOL: f64 = 1e-10;

/// A spin quantum number `j`, stored as the integer `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    /// Accepts any positive `j` with `2j` integral to within 1e-9.
    pub fn new(j: f64) -> Result<Self> {
        if !j.is_finite() || j <= 0.0 {
            return Err(Error::InvalidSpin(j));
        }
        let twice = (2.0 * j).round();
        if (2.0 * j - twice).abs() > 1e-9 || twice > u32::MAX as f64 {
            return Err(Error::InvalidSpin(j));
        }
        Ok(Self { twice: twice as u32 })
    }

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Self { twice })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// Magnetic quantum number at basis position `index`.
    pub fn m(self, index: usize) -> f64 {
        self.value() - index as f64
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// The spin-`j` representation: `J_x`, `J_y`, `J_z` in units of ħ.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    spin: Spin,
    jx: CMatrix,
    jy: CMatrix,
    jz: CMatrix,
}

impl SpinSystem {
    /// Builds the operators from the ladder matrix elements
    /// `<j,m+1|J+|j,m> = sqrt(j(j+1) - m(m+1))`.
    pub fn new(spin: Spin) -> Self {
        let d = spin.dim();
        let j = spin.value();
        let mut jplus = CMatrix::zeros(d, d);
        // J+ raises m, i.e. moves from index k to index k - 1
        for k in 1..d {
            let m = spin.m(k);
            jplus[(k - 1, k)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let jminus = jplus.adjoint();
        let jx = (&jplus + &jminus).scale(0.5);
        let jy = (&jplus - &jminus) * C64::new(0.0, -0.5);
        let jz = CMatrix::from_diagonal(&CVector::from_fn(d, |k, _| C64::new(spin.m(k), 0.0)));
        Self { spin, jx, jy, jz }
    }

    pub fn with_j(j: f64) -> Result<Self> {
        Spin::new(j).map(Self::new)
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn j(&self) -> f64 {
        self.spin.value()
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn jx(&self) -> &CMatrix {
        &self.jx
    }

    pub fn jy(&self) -> &CMatrix {
        &self.jy
    }

    pub fn jz(&self) -> &CMatrix {
        &self.jz
    }

    /// `m` values in basis order.
    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(|k| self.spin.m(k))
    }
}

/// A normalized state vector over `|j, m>`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// A point on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    /// Normalizes `(x, y, z)` onto the sphere.
    pub fn from_vector(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::ZeroMeanVector);
        }
        Ok(Self {
            x: x / r,
            y: y / r,
            z: z / r,
        })
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// The mean direction of the coherent state `|j, theta, phi>`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * sp,
            y: st * cp,
            z: ct,
        }
    }
}

fn max_hermitian_deviation(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut dev = 0.0f64;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((h[(r, c)] - h[(c, r)].conj()).norm());
        }
    }
    dev
}

/// `exp(scale * h)` for Hermitian `h`, through `h = V diag(λ) V†`.
pub fn hermitian_exp(h: &CMatrix, scale: C64) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let deviation = max_hermitian_deviation(h);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    if scale == C64::new(0.0, 0.0) {
        return Ok(CMatrix::identity(h.nrows(), h.ncols()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut left = eig.eigenvectors.clone();
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        let factor = (scale * lambda).exp();
        for v in left.column_mut(c).iter_mut() {
            *v *= factor;
        }
    }
    Ok(left * eig.eigenvectors.adjoint())
}

/// `|j, theta, phi> = exp(i theta (J_x cos phi - J_y sin phi)) |j, j>`.
pub fn coherent_state(sys: &SpinSystem, theta: f64, phi: f64) -> Result<PureState> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coherent-state angles must be finite, got ({theta}, {phi})"
        )));
    }
    let (sp, cp) = phi.sin_cos();
    let generator = sys.jx().scale(cp) - sys.jy().scale(sp);
    let rotation = hermitian_exp(&generator, C64::new(0.0, theta))?;
    PureState::normalized(rotation.column(0).into_owned())
}

fn expectation(op: &CMatrix, v: &CVector) -> f64 {
    v.dotc(&(op * v)).re
}

/// Direction of `(<J_x>, <J_y>, <J_z>)` for `psi`.
pub fn coherent_mean(sys: &SpinSystem, psi: &PureState) -> Result<BlochPoint> {
    mean_spin_vector(sys, psi).and_then(|[x, y, z]| BlochPoint::from_vector(x, y, z))
}

/// The unnormalized mean `(<J_x>, <J_y>, <J_z>)`.
pub fn mean_spin_vector(sys: &SpinSystem, psi: &PureState) -> Result<[f64; 3]> {
    if psi.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: psi.dim(),
        });
    }
    let v = psi.amplitudes();
    Ok([
        expectation(sys.jx(), v),
        expectation(sys.jy(), v),
        expectation(sys.jz(), v),
    ])
}

/// Inverse of [`BlochPoint::from_angles`]: coherent-state angles whose mean
/// direction is `p`. Poles map to `phi = 0`.
pub fn point_to_angles(p: &BlochPoint) -> (f64, f64) {
    let rho = p.x.hypot(p.y);
    let theta = rho.atan2(p.z);
    if rho == 0.0 {
        return (theta, 0.0);
    }
    (theta, p.x.atan2(p.y))
}

/// Great-circle angle between two sphere points, in `[0, pi]`.
pub fn angular_distance(a: &BlochPoint, b: &BlochPoint) -> f64 {
    let cross = [a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    // atan2 keeps precision for nearly parallel points, unlike acos of the dot product
    sin.atan2(a.dot(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    #[test]
    fn spin_validation() {
        assert!(Spin::new(0.0).is_err());
        assert!(Spin::new(-0.5).is_err());
        assert!(Spin::new(2.3).is_err());
        assert!(Spin::new(f64::NAN).is_err());
        assert_eq!(Spin::new(2.5).unwrap().dim(), 6);
        assert_eq!(Spin::new(18.0).unwrap().dim(), 37);
        assert_eq!(Spin::new(1.5).unwrap().to_string(), "3/2");
    }

    #[test]
    fn spin_half_jz() {
        let sys = SpinSystem::with_j(0.5).unwrap();
        assert_eq!(sys.jz()[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(sys.jz()[(1, 1)], C64::new(-0.5, 0.0));
    }

    #[test]
    fn spin_one_jx() {
        let sys = SpinSystem::with_j(1.0).unwrap();
        let jx = sys.jx();
        for k in 0..3 {
            assert_eq!(jx[(k, k)], C64::new(0.0, 0.0));
        }
        for (r, c) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert!((jx[(r, c)] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        assert_eq!(jx[(0, 2)], C64::new(0.0, 0.0));
    }

    #[test]
    fn algebra_identities() {
        for twice in 1..=12 {
            let sys = SpinSystem::new(Spin::from_twice(twice).unwrap());
            let (jx, jy, jz) = (sys.jx(), sys.jy(), sys.jz());
            let i = C64::new(0.0, 1.0);
            assert!(max_abs(&(jx * jy - jy * jx - jz * i)) <= 1e-10);
            assert!(max_abs(&(jy * jz - jz * jy - jx * i)) <= 1e-10);
            assert!(max_abs(&(jz * jx - jx * jz - jy * i)) <= 1e-10);
            let j = sys.j();
            let casimir = jx * jx + jy * jy + jz * jz - CMatrix::identity(sys.dim(), sys.dim()).scale(j * (j + 1.0));
            assert!(max_abs(&casimir) <= 1e-10);
        }
    }

    #[test]
    fn exp_of_zero_scale_is_identity() {
        let sys = SpinSystem::with_j(2.0).unwrap();
        let m = hermitian_exp(sys.jy(), C64::new(0.0, 0.0)).unwrap();
        assert!(max_abs(&(m - CMatrix::identity(5, 5))) < 1e-14);
    }

    #[test]
    fn exp_diagonal() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
        let m = hermitian_exp(&h, C64::new(0.0, PI)).unwrap();
        let expected = CMatrix::identity(2, 2).scale(-1.0);
        assert!(max_abs(&(m - expected)) < 1e-14);
    }

    #[test]
    fn exp_spin_half_jx() {
        let sys = SpinSystem::with_j(0.5).unwrap();
        let m = hermitian_exp(sys.jx(), C64::new(0.0, PI)).unwrap();
        let i = C64::new(0.0, 1.0);
        let zero = C64::new(0.0, 0.0);
        let expected = CMatrix::from_row_slice(2, 2, &[zero, i, i, zero]);
        assert!(max_abs(&(m - expected)) < 1e-14);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            hermitian_exp(&h, C64::new(0.0, 1.0)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn exp_is_unitary_for_imaginary_scale() {
        let sys = SpinSystem::with_j(18.0).unwrap();
        let h = sys.jx().scale(0.3) + sys.jy().scale(-1.1) + sys.jz() * sys.jz();
        let u = hermitian_exp(&h, C64::new(0.0, -0.7)).unwrap();
        let dev = u.adjoint() * &u - CMatrix::identity(37, 37);
        assert!(max_abs(&dev) <= 1e-10);
    }

    #[test]
    fn coherent_state_at_north_pole() {
        let sys = SpinSystem::with_j(3.0).unwrap();
        for phi in [0.0, 0.4, 2.0] {
            let psi = coherent_state(&sys, 0.0, phi).unwrap();
            let expected = PureState::basis(7, 0);
            assert!((psi.amplitudes() - expected.amplitudes()).norm() < 1e-14);
        }
    }

    #[test]
    fn coherent_state_spin_half_flip() {
        let sys = SpinSystem::with_j(0.5).unwrap();
        let psi = coherent_state(&sys, PI, 0.0).unwrap();
        // exp(i pi sigma_x / 2) |up> = i |down>
        assert!(psi.amplitudes()[0].norm() < 1e-14);
        assert!((psi.amplitudes()[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn regular_reference_state() {
        let sys = SpinSystem::with_j(18.0).unwrap();
        let psi = coherent_state(&sys, 2.25, 0.63).unwrap();
        assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
        let mean = mean_spin_vector(&sys, &psi).unwrap();
        let len = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
        assert!((len - 18.0).abs() < 1e-8);
        let p = coherent_mean(&sys, &psi).unwrap();
        assert!((p.z - 2.25f64.cos()).abs() < 1e-8);
        assert!(p.x > 0.0 && p.y > 0.0 && p.z < 0.0);
    }

    #[test]
    fn mean_of_basis_extremes() {
        let sys = SpinSystem::with_j(4.5).unwrap();
        let top = coherent_mean(&sys, &PureState::basis(10, 0)).unwrap();
        let bottom = coherent_mean(&sys, &PureState::basis(10, 9)).unwrap();
        assert_eq!((top.x, top.y, top.z), (0.0, 0.0, 1.0));
        assert_eq!((bottom.x, bottom.y, bottom.z), (0.0, 0.0, -1.0));
    }

    #[test]
    fn mean_rejects_vanishing_vector() {
        // |1,0> has zero mean spin
        let sys = SpinSystem::with_j(1.0).unwrap();
        assert!(matches!(
            coherent_mean(&sys, &PureState::basis(3, 1)),
            Err(Error::ZeroMeanVector)
        ));
    }

    #[test]
    fn poles_map_to_zero_azimuth() {
        let north = BlochPoint { x: 0.0, y: 0.0, z: 1.0 };
        let south = BlochPoint {
            x: 0.0,
            y: 0.0,
            z: -1.0,
        };
        assert_eq!(point_to_angles(&north), (0.0, 0.0));
        assert_eq!(point_to_angles(&south), (PI, 0.0));
    }

    #[test]
    fn distances() {
        let a = BlochPoint { x: 1.0, y: 0.0, z: 0.0 };
        let b = BlochPoint { x: 0.0, y: 1.0, z: 0.0 };
        let neg = BlochPoint {
            x: -1.0,
            y: 0.0,
            z: 0.0,
        };
        assert_eq!(angular_distance(&a, &a), 0.0);
        assert!((angular_distance(&a, &neg) - PI).abs() < 1e-15);
        assert!((angular_distance(&a, &b) - PI / 2.0).abs() < 1e-15);
    }
}
