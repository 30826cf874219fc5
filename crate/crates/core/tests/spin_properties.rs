use std::f64::consts::PI;

use kicktop::spin::{angular_distance, coherent_mean, hermitian_exp, point_to_angles, BlochPoint, CMatrix, C64};
use kicktop::{coherent_state, Spin, SpinSystem};
use proptest::prelude::*;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coherent_states_are_normalized(twice in 1u32..=36, theta in -7.0..7.0f64, phi in -7.0..7.0f64) {
        let sys = SpinSystem::new(Spin::from_twice(twice).unwrap());
        let psi = coherent_state(&sys, theta, phi).unwrap();
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn angles_round_trip(twice in 1u32..=36, theta in 0.05..(PI - 0.05), phi in -PI..PI) {
        let sys = SpinSystem::new(Spin::from_twice(twice).unwrap());
        let p = coherent_mean(&sys, &coherent_state(&sys, theta, phi).unwrap()).unwrap();
        let expected = BlochPoint::from_angles(theta, phi);
        prop_assert!(angular_distance(&p, &expected) <= 1e-8);
        let (t, f) = point_to_angles(&p);
        prop_assert!((0.0..=PI).contains(&t));
        let back = coherent_mean(&sys, &coherent_state(&sys, t, f).unwrap()).unwrap();
        prop_assert!((back.x - p.x).abs() <= 1e-8);
        prop_assert!((back.y - p.y).abs() <= 1e-8);
        prop_assert!((back.z - p.z).abs() <= 1e-8);
    }

    #[test]
    fn imaginary_exponentials_are_unitary(
        entries in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 36),
        t in -5.0..5.0f64,
    ) {
        let a = CMatrix::from_iterator(6, 6, entries.into_iter().map(|(re, im)| C64::new(re, im)));
        let h = (&a + a.adjoint()).scale(0.5);
        let u = hermitian_exp(&h, C64::new(0.0, t)).unwrap();
        prop_assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(6, 6))) <= 1e-10);
    }
}

#[test]
fn mean_vector_has_length_j() {
    let sys = SpinSystem::with_j(7.5).unwrap();
    let psi = coherent_state(&sys, 1.0, 0.3).unwrap();
    let [x, y, z] = kicktop::spin::mean_spin_vector(&sys, &psi).unwrap();
    assert!(((x * x + y * y + z * z).sqrt() - 7.5).abs() <= 1e-8);
}

#[test]
fn reference_fixed_point_is_in_sampled_octant() {
    let sys = SpinSystem::with_j(18.0).unwrap();
    let p = coherent_mean(&sys, &coherent_state(&sys, 2.25, 0.63).unwrap()).unwrap();
    assert!(p.x > 0.0 && p.y > 0.0 && p.z < 0.0);
    let (theta, phi) = point_to_angles(&p);
    assert!((theta - 2.25).abs() < 1e-8 && (phi - 0.63).abs() < 1e-8);
}
