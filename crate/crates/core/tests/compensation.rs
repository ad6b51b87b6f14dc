use std::f64::consts::PI;

use fracmap_core::compensation::{
    commutator_h, commutator_with_order, defect_ratio, structure_identity_residual, triangle_defect_ratio, SphereValuedMap,
};
use fracmap_core::fields::{band_limited, band_limited_with_cutoff, bump};
use fracmap_core::multiplier::derivative;
use fracmap_core::{Grid, GridFunction, MultiIndex};
use proptest::prelude::*;

#[test]
fn constants_are_annihilated() {
    let g = Grid::new(2, 32, 1.0).unwrap();
    let u = band_limited(&g, 3).unwrap();
    let h = commutator_h(&u, &GridFunction::constant(&g, 2.5)).unwrap();
    assert!(h.max_abs() < 1e-12);
}

// order 2 is -Delta / (4 pi^2): H(u, v) = -2 grad u . grad v / (4 pi^2)
#[test]
fn order_two_is_the_gradient_product() {
    let g = Grid::new(2, 64, 1.0).unwrap();
    let u = band_limited_with_cutoff(&g, 1, 6, false).unwrap();
    let v = band_limited_with_cutoff(&g, 2, 6, false).unwrap();
    let h = commutator_with_order(&u, &v, 2.0).unwrap();
    let mut dot = GridFunction::zeros(&g);
    for axis in 0..2 {
        let a = derivative(&u, MultiIndex::unit(axis)).unwrap();
        let b = derivative(&v, MultiIndex::unit(axis)).unwrap();
        dot = dot.add(&a.mul(&b).unwrap()).unwrap();
    }
    let want = dot.scale(-2.0 / (4.0 * PI * PI));
    assert!(h.sub(&want).unwrap().max_abs() < 1e-9 * want.max_abs());
}

#[test]
fn structure_identity_for_phase_maps() {
    let g = Grid::new(1, 512, 1.0).unwrap();
    let eta = bump(&g, &[0.0], 0.25).unwrap();
    for seed in 0..4 {
        let phi = band_limited_with_cutoff(&g, seed, 8, false).unwrap();
        let u = SphereValuedMap::from_phase(&phi.scale(3.0 / phi.max_abs())).unwrap();
        assert!(structure_identity_residual(&u, &eta).unwrap() < 1e-10);
    }
}

#[test]
fn off_sphere_maps_are_rejected() {
    let g = Grid::new(1, 64, 1.0).unwrap();
    let c = GridFunction::constant(&g, 0.8);
    assert!(SphereValuedMap::new(vec![c.clone(), c]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutator_is_symmetric(seed in 0u64..1000) {
        let g = Grid::new(1, 128, 1.0).unwrap();
        let u = band_limited(&g, seed).unwrap();
        let v = band_limited(&g, seed + 1).unwrap();
        let a = commutator_h(&u, &v).unwrap();
        let b = commutator_h(&v, &u).unwrap();
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * (1.0 + a.max_abs()));
    }

    #[test]
    fn defect_ratio_is_scale_invariant(
        x in prop::collection::vec(-3.0f64..3.0, 2),
        xi in prop::collection::vec(-3.0f64..3.0, 2),
        t in 0.01f64..100.0,
        p in 0.2f64..3.0,
        theta in 0.0f64..1.0,
    ) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3) && xi.iter().any(|v| v.abs() > 1e-3));
        let a = defect_ratio(&x, &xi, p, theta).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * t).collect();
        let xis: Vec<f64> = xi.iter().map(|v| v * t).collect();
        let b = defect_ratio(&xs, &xis, p, theta).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    // ||x-y|^p - |y|^p| <= |x|^p for p <= 1
    #[test]
    fn triangle_defect_is_at_most_one(
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-3.0f64..3.0, 3),
        p in 0.05f64..1.0,
    ) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        prop_assert!(triangle_defect_ratio(&x, &y, p).unwrap() <= 1.0 + 1e-12);
    }
}
