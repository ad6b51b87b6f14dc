use std::f64::consts::PI;

use fracmap_core::fields::band_limited;
use fracmap_core::singular::{calibrate_cns, equivalence_ratio, frac_lap_quadrature, gagliardo_seminorm, SingularQuadratureScheme};
use fracmap_core::{frac_laplacian, inv_frac_laplacian, DomainMask, Grid, GridFunction, ZeroModePolicy};
use proptest::prelude::*;

fn cos_mode(g: &Grid, m: &[f64]) -> GridFunction {
    let l = g.box_length();
    GridFunction::from_fn(g, |x| (2.0 * PI * x.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() / l).cos()).unwrap()
}

#[test]
fn plane_waves_are_eigenfunctions() {
    for (dim, n, modes) in [(1usize, 64usize, vec![5.0]), (2, 32, vec![3.0, 4.0])] {
        for l in [1.0, 2.5] {
            let g = Grid::new(dim, n, l).unwrap();
            let f = cos_mode(&g, &modes);
            let xi = modes.iter().map(|m| (m / l).powi(2)).sum::<f64>().sqrt();
            for s in [0.3, 1.0, 1.7] {
                let got = frac_laplacian(&f, s).unwrap();
                let err = got.sub(&f.scale(xi.powf(s))).unwrap().max_abs();
                assert!(err < 1e-11 * xi.powf(s).max(1.0), "dim {dim} L {l} s {s}: {err}");
            }
        }
    }
}

// c_{n,s} = (2 pi)^{-s} 4^{s/2} Gamma(n/2 + s/2) / (pi^{n/2} |Gamma(-s/2)|), evaluated offline
#[test]
fn calibrated_constant_matches_closed_form() {
    let scheme = SingularQuadratureScheme::default();
    let cases = [
        (1usize, 4096usize, 0.25, 0.069_737_424_544_568_63, 1e-5),
        (1, 4096, 0.5, 0.079_577_471_545_947_67, 1e-5),
        (2, 256, 1.0, 0.025_330_295_910_584_444, 1e-2),
    ];
    for (dim, n, s, want, tol) in cases {
        let c = calibrate_cns(&Grid::new(dim, n, 1.0).unwrap(), s, &scheme).unwrap();
        assert!((c.value / want - 1.0).abs() < tol, "n={dim} s={s}: {} vs {want}", c.value);
    }
}

#[test]
fn high_order_constant_converges_under_refinement() {
    let want = 0.018_997_721_932_938_333;
    let scheme = SingularQuadratureScheme::default();
    let err = |n| (calibrate_cns(&Grid::new(1, n, 1.0).unwrap(), 1.5, &scheme).unwrap().value / want - 1.0).abs();
    let (coarse, fine) = (err(1024), err(4096));
    assert!(fine < coarse && fine < 0.02, "{coarse} -> {fine}");
}

#[test]
fn quadrature_agrees_with_spectral_on_smooth_field() {
    let g = Grid::new(1, 2048, 1.0).unwrap();
    let scheme = SingularQuadratureScheme::default();
    let c = calibrate_cns(&g, 0.5, &scheme).unwrap();
    let f = fracmap_core::fields::bump(&g, &[0.1], 0.2).unwrap();
    let a = frac_lap_quadrature(&f, 0.5, &scheme, &c).unwrap();
    let b = frac_laplacian(&f, 0.5).unwrap();
    assert!(a.sub(&b).unwrap().max_abs() < 1e-3 * b.max_abs());
}

// [x]^2_{(-r,r),s} = 2 (2r)^{3-2s} / ((2-2s)(3-2s))
#[test]
fn seminorm_of_linear_function() {
    let g = Grid::new(1, 4096, 1.0).unwrap();
    let r = 0.05;
    let v = GridFunction::from_fn(&g, |x| x[0]).unwrap();
    for s in [0.25f64, 0.5] {
        let got = gagliardo_seminorm(&v, &DomainMask::ball(&g, &[0.0], r), s).unwrap();
        let want = (2.0 * (2.0 * r).powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))).sqrt();
        assert!((got / want - 1.0).abs() < 5e-3, "s={s}: {got} vs {want}");
    }
}

#[test]
fn norm_equivalence_ratio_is_field_independent() {
    let g = Grid::new(1, 1024, 1.0).unwrap();
    let scheme = SingularQuadratureScheme::default();
    let r: Vec<f64> = (0..5).map(|k| equivalence_ratio(&band_limited(&g, k).unwrap(), 0.25, &scheme).unwrap()).collect();
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.02);
}

#[test]
fn off_power_of_two_grid_is_rejected() {
    let err = Grid::new(1, 12, 1.0).unwrap_err();
    assert!(err.to_string().contains("points_per_axis"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetric_and_semigroup(seed in 0u64..1000, a in 0.05f64..1.5, b in 0.05f64..1.5) {
        let g = Grid::new(1, 128, 1.0).unwrap();
        let f = band_limited(&g, seed).unwrap();
        let h = band_limited(&g, seed + 7919).unwrap();
        let lhs = frac_laplacian(&f, a).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&frac_laplacian(&h, a).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        let two = frac_laplacian(&frac_laplacian(&f, a).unwrap(), b).unwrap();
        let one = frac_laplacian(&f, a + b).unwrap();
        prop_assert!(two.sub(&one).unwrap().l2_norm() <= 1e-10 * one.l2_norm());
    }

    #[test]
    fn inverse_undoes_forward_on_mean_free(seed in 0u64..1000, s in 0.1f64..2.0) {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let f = band_limited(&g, seed).unwrap();
        let back = inv_frac_laplacian(&frac_laplacian(&f, s).unwrap(), s, ZeroModePolicy::Annihilate).unwrap();
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-10);
    }

    #[test]
    fn quadrature_kills_constants(c in -10.0f64..10.0, s in 0.1f64..1.9) {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let scheme = SingularQuadratureScheme::default();
        let k = calibrate_cns(&g, s, &scheme).unwrap();
        let out = frac_lap_quadrature(&GridFunction::constant(&g, c), s, &scheme, &k).unwrap();
        prop_assert!(out.max_abs() <= 1e-9 * (1.0 + c.abs()));
    }
}
