use fracmap_core::fields::band_limited;
use fracmap_core::lorentz::{
    decreasing_rearrangement, lorentz_norm, product_rearrangement_margin, profile_lorentz_norm, scaling_law_error,
    weak_bound_margin, RearrangementProfile,
};
use fracmap_core::{lp_norm, Grid, GridFunction};
use proptest::prelude::*;

// indicator of measure m: ||1||_{p,q} = (p/q)^{1/q} m^{1/p}, ||1||_{p,inf} = m^{1/p}
#[test]
fn indicator_norms() {
    let cell = 0.125;
    let p = RearrangementProfile::from_values(&[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0], cell).unwrap();
    let m: f64 = 0.5;
    for (pe, q) in [(2.0, 1.0), (3.0, 2.0), (1.5, 4.0)] {
        let got = profile_lorentz_norm(&p, pe, q).unwrap();
        let want = (pe / q).powf(1.0 / q) * m.powf(1.0 / pe);
        assert!((got - want).abs() < 1e-14, "({pe},{q}): {got} vs {want}");
        assert!(weak_bound_margin(&p, pe, q).unwrap().abs() < 1e-14);
    }
    assert!((profile_lorentz_norm(&p, 2.0, f64::INFINITY).unwrap() - m.sqrt()).abs() < 1e-15);
}

#[test]
fn scaling_law_on_gaussian() {
    let g = Grid::new(2, 128, 1.0).unwrap();
    for (p, q) in [(2.0, 1.0), (4.0, 2.0)] {
        let e = scaling_law_error(&g, |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1]) * 400.0).exp(), p, q).unwrap();
        assert!(e.abs() < 1e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rearrangement_is_equimeasurable(values in prop::collection::vec(-5.0f64..5.0, 1..64), lambda in 0.0f64..5.0) {
        let p = RearrangementProfile::from_values(&values, 0.5).unwrap();
        let direct = values.iter().filter(|v| v.abs() > lambda).count() as f64 * 0.5;
        prop_assert_eq!(p.distribution(lambda), direct);
        let b = p.values();
        prop_assert!(b.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn diagonal_is_lebesgue(seed in 0u64..500, pe in 1.1f64..6.0) {
        let g = Grid::new(1, 256, 1.0).unwrap();
        let f = band_limited(&g, seed).unwrap();
        let a = lorentz_norm(&f, pe, pe).unwrap();
        let b = lp_norm(&f, pe, None).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn product_rearrangement_bound(seed in 0u64..500, levels in 1.0f64..6.0) {
        let g = Grid::new(1, 128, 1.0).unwrap();
        let f = band_limited(&g, seed).unwrap();
        let h = band_limited(&g, seed + 1).unwrap();
        prop_assert!(product_rearrangement_margin(&f, &h).unwrap() >= 0.0);
        let q = |u: &GridFunction| u.map(|v| (levels * v).round());
        prop_assert!(product_rearrangement_margin(&q(&f), &q(&h)).unwrap() >= 0.0);
    }

    #[test]
    fn weak_norm_bound(values in prop::collection::vec(0.0f64..10.0, 1..80), pe in 1.1f64..5.0, q in 1.0f64..8.0) {
        let p = RearrangementProfile::from_values(&values, 0.1).unwrap();
        prop_assume!(p.values().iter().any(|v| *v > 0.0));
        let m = weak_bound_margin(&p, pe, q).unwrap();
        prop_assert!(m >= -1e-12 * profile_lorentz_norm(&p, pe, q).unwrap());
    }

    #[test]
    fn norms_are_homogeneous(seed in 0u64..500, c in 0.01f64..100.0) {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let f = band_limited(&g, seed).unwrap();
        let a = profile_lorentz_norm(&decreasing_rearrangement(&f.scale(c)), 2.0, 1.0).unwrap();
        let b = lorentz_norm(&f, 2.0, 1.0).unwrap();
        prop_assert!((a - c * b).abs() <= 1e-12 * c * b);
    }
}
