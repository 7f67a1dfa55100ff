//! Property tests for the algebraic invariants of each layer.
//!
//! Strategies draw a seed and a block size; the objects themselves come from
//! the library's seeded samplers so that shrinking stays meaningful.

use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::Rng;

use siegel_fiber::cover::{
    center_elements, cocycle, cover_inverse, cover_mul, factor_unitary, lift, random_cover_element, scalar_lift,
};
use siegel_fiber::extension::{Fiber, ModelPoint};
use siegel_fiber::rng::substream;
use siegel_fiber::siegel::{cholesky_lower, grassmann_act, mobius, random_siegel_point, GrassmannPoint};
use siegel_fiber::symplectic::{
    circle_map, embed_unitary, is_symplectic, omega, random_symplectic, random_symplectic_wide, random_unitary,
    SymplecticMatrix, UnitaryMatrix,
};
use siegel_fiber::volume::{parse_rational, seifert_volume, SeifertDescriptor};
use siegel_fiber::{RMat, C64};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn embedding_is_multiplicative(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 0);
        let u = random_unitary(n, 3.0, &mut rng);
        let v = random_unitary(n, 3.0, &mut rng);
        let uv = UnitaryMatrix::new(u.as_matrix() * v.as_matrix(), 1e-9).unwrap();
        let lhs = embed_unitary(&uv);
        let rhs = &embed_unitary(&u) * &embed_unitary(&v);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9);
        let c = circle_map(&rhs).unwrap();
        prop_assert!((c - u.det() * v.det()).norm() <= 1e-9);
    }

    #[test]
    fn products_and_inverses_stay_symplectic(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 1);
        let a = random_symplectic_wide(n, &mut rng);
        let b = random_symplectic_wide(n, &mut rng);
        prop_assert!(is_symplectic((&a * &b).as_matrix(), 1e-9).unwrap());
        prop_assert!(is_symplectic(a.inverse().as_matrix(), 1e-9).unwrap());
        let id = (a.as_matrix() * a.inverse().as_matrix() - RMat::identity(2 * n, 2 * n)).amax();
        prop_assert!(id <= 1e-9);
    }

    #[test]
    fn exponential_of_algebra_element_is_symplectic(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 2);
        let s = RMat::from_fn(2 * n, 2 * n, |_, _| rng.random_range(-1.0..1.0) / (2 * n) as f64);
        let s = (&s + s.transpose()) * 0.5;
        // Ω X = S symmetric, with Ω⁻¹ = -Ω.
        let x = -(omega(n).as_matrix() * s);
        prop_assert!(is_symplectic(&x.exp(), 1e-9).unwrap());
    }

    #[test]
    fn mobius_preserves_siegel_space(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 3);
        let m = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let w = mobius(&m, &z).unwrap();
        prop_assert!((w.z() - w.z().transpose()).norm() <= 1e-8);
        prop_assert!(cholesky_lower(&w.y()).is_some());
    }

    #[test]
    fn grassmann_action_restricts_to_mobius(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 4);
        let m = random_symplectic_wide(n, &mut rng);
        let z = random_siegel_point(n, &mut rng);
        let g = grassmann_act(&m, &GrassmannPoint::from_siegel(&z)).unwrap();
        let w = mobius(&m, &z).unwrap();
        prop_assert!(g.equivalent(&GrassmannPoint::from_siegel(&w), 1e-8));
    }

    #[test]
    fn cocycle_is_normalized(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 5);
        let m = random_symplectic_wide(n, &mut rng);
        let id = SymplecticMatrix::identity(n);
        prop_assert_eq!(cocycle(&m, &id).unwrap(), 0.0);
        prop_assert_eq!(cocycle(&id, &m).unwrap(), 0.0);
    }

    #[test]
    fn cocycle_identity(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 6);
        let m1 = random_symplectic_wide(n, &mut rng);
        let m2 = random_symplectic_wide(n, &mut rng);
        let m3 = random_symplectic_wide(n, &mut rng);
        let lhs = cocycle(&m1, &m2).unwrap() + cocycle(&(&m1 * &m2), &m3).unwrap();
        let rhs = cocycle(&m2, &m3).unwrap() + cocycle(&m1, &(&m2 * &m3)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-7, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn cover_operations_keep_the_invariant(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 7);
        let a = random_cover_element(n, &mut rng).unwrap();
        let b = random_cover_element(n, &mut rng).unwrap();
        prop_assert!(cover_mul(&a, &b).unwrap().invariant_residual().unwrap() <= 1e-8);
        let inv = cover_inverse(&a).unwrap();
        prop_assert!(inv.invariant_residual().unwrap() <= 1e-8);
        prop_assert!(cover_mul(&a, &inv).unwrap().w().abs() <= 1e-7);
    }

    #[test]
    fn lift_projects_back(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 8);
        let g = random_cover_element(n, &mut rng).unwrap();
        let again = lift(g.matrix()).unwrap();
        prop_assert_eq!(again.matrix(), g.matrix());
        let turns = g.w() - again.w();
        prop_assert!((turns - turns.round()).abs() <= 1e-9);
    }

    #[test]
    fn center_is_central(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, 9);
        let g = random_cover_element(n, &mut rng).unwrap();
        for z in center_elements(n, -2.0, 2.0).unwrap() {
            let z = z.to_cover(n);
            let zg = cover_mul(&z, &g).unwrap();
            let gz = cover_mul(&g, &z).unwrap();
            prop_assert!(zg.matrix().max_abs_diff(gz.matrix()) <= 1e-12);
            prop_assert!((zg.w() - gz.w()).abs() <= 1e-9);
        }
    }

    #[test]
    fn unitary_factorization_round_trips(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 10);
        let u = random_unitary(n, 3.0, &mut rng);
        let (a, v) = factor_unitary(&u);
        prop_assert!((0.0..TAU / n as f64).contains(&a));
        prop_assert!((v.det() - C64::from(1.0)).norm() <= 1e-9);
        prop_assert!(v.rotate(a).max_abs_diff(&u) <= 1e-9);
        // The scalar part composes with the SU part's w = 0 lift.
        let h = lift(&embed_unitary(&v)).unwrap();
        let g = cover_mul(&scalar_lift(a, n), &h).unwrap();
        prop_assert!(g.matrix().max_abs_diff(&embed_unitary(&u)) <= 1e-9);
        prop_assert!(g.invariant_residual().unwrap() <= 1e-8);
    }

    #[test]
    fn fiber_translation_commutes_with_action(seed in any::<u64>(), n in 1usize..=3, s in -5.0f64..5.0) {
        let fiber = Fiber::new(n, 1).unwrap();
        let mut rng = substream(seed, 11);
        let e = fiber.make(&random_cover_element(n, &mut rng).unwrap(), rng.random_range(-2.0..2.0)).unwrap();
        let p = ModelPoint { z: random_siegel_point(n, &mut rng), t: rng.random_range(-1.0..1.0) };
        let shifted = ModelPoint { z: p.z.clone(), t: p.t + s };
        let a = fiber.act(&e, &shifted).unwrap();
        let mut b = fiber.act(&e, &p).unwrap();
        b.t += s;
        prop_assert!(a.distance(&b) <= 1e-8);
    }

    #[test]
    fn transitivity_reaches_every_point(seed in any::<u64>(), n in 1usize..=3) {
        let fiber = Fiber::new(n, 1).unwrap();
        let mut rng = substream(seed, 12);
        let p = ModelPoint { z: random_siegel_point(n, &mut rng), t: rng.random_range(-3.0..3.0) };
        let e = fiber.transitivity_element(&p).unwrap();
        prop_assert!(fiber.act(&e, &ModelPoint::basepoint(n)).unwrap().distance(&p) <= 1e-8);
    }

    #[test]
    fn fiber_subgroup_is_central(seed in any::<u64>(), n in 1usize..=3, r in -4.0f64..4.0) {
        let fiber = Fiber::new(n, 1).unwrap();
        let mut rng = substream(seed, 13);
        let f = fiber.make(&siegel_fiber::cover::CoverElement::identity(n), r).unwrap();
        let e = fiber.make(&random_cover_element(n, &mut rng).unwrap(), rng.random_range(-2.0..2.0)).unwrap();
        let d = fiber.distance(&fiber.mul(&f, &e).unwrap(), &fiber.mul(&e, &f).unwrap()).unwrap();
        prop_assert!(d <= 1e-8);
    }

    #[test]
    fn automorphy_anchor_matches_circle_map(seed in any::<u64>()) {
        let fiber = Fiber::new(2, 1).unwrap();
        let mut rng = substream(seed, 14);
        let u = random_unitary(2, 3.0, &mut rng);
        let g = lift(&embed_unitary(&u)).unwrap();
        let l = fiber.automorphy_lift(&g, &ModelPoint::basepoint(2).z).unwrap();
        let c = circle_map(g.matrix()).unwrap();
        prop_assert!((C64::from_polar(1.0, TAU * l) - c).norm() <= 1e-8);
    }

    #[test]
    fn volume_is_multiplicative(a in 1i64..200, b in 1i64..200, c in 1i64..200, k in -300i64..300, d in 1i64..300) {
        let q = |s: String| parse_rational(&s).unwrap();
        let chi = q(format!("{k}/{d}"));
        let v = |cov| seifert_volume(&SeifertDescriptor::new(cov, chi.clone(), false).unwrap()).volume;
        let c1 = q(format!("{a}/{c}"));
        let c2 = q(format!("{b}/{c}"));
        prop_assert_eq!(v(&c1 * &c2), &v(c1.clone()) * &c2);
        let doubled = seifert_volume(&SeifertDescriptor::new(c1.clone(), &chi * q("2".into()), false).unwrap()).volume;
        prop_assert_eq!(doubled, v(c1) * q("2".into()));
    }

    #[test]
    fn random_symplectic_is_well_conditioned(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = substream(seed, 15);
        prop_assert!(random_symplectic(n, &mut rng).residual() <= 1e-9);
    }
}
