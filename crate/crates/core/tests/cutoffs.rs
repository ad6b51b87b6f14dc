use fracmap_core::cutoff::{build_family, BaseProfile};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partial_sums_are_one_inside(k in 1usize..12, t in 0.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU) {
        let fam = build_family(k, BaseProfile::default()).unwrap();
        let r = t * 2f64.powi(k as i32);
        let x = [r * angle.cos(), r * angle.sin()];
        prop_assert!((fam.partial_sum(k, &x).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn members_vanish_off_their_annulus(k in 1usize..10, r in 0.0f64..4096.0) {
        let fam = build_family(k, BaseProfile::default()).unwrap();
        let v = fam.value(k, &[r]).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if r >= 2f64.powi(k as i32 + 1) || r <= 2f64.powi(k as i32 - 1) {
            prop_assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn derivative_bounds_are_scale_free() {
    let fam = build_family(8, BaseProfile::default()).unwrap();
    let sups: Vec<[f64; 2]> = (1..=8).map(|k| fam.normalized_derivative_sups(k, 256).unwrap()).collect();
    for i in 0..2 {
        let (lo, hi) = sups.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s[i]), b.max(s[i])));
        assert!(hi / lo < 1.05, "order {}: {lo}..{hi}", i + 1);
    }
}
