use fracmap_core::fields::{band_limited_with_cutoff, bump_profile};
use fracmap_core::growth::{
    campanato_functionals, driteration, driteration_witness, generate_driteration, generate_iteration, holder_exponent_estimate,
    homogeneous_norm_localization, iteration_reduce, iteration_witness, AnnulusSequence, Exponent,
};
use fracmap_core::{DomainMask, Grid, GridFunction};
use proptest::prelude::*;

/// Direct transcription of the one-step hypothesis, checked without slack.
fn naive_witness(a: &[f64], k_min: i64, gamma: f64, alpha: f64, lambda: f64) -> Option<i64> {
    let k_max = k_min + a.len() as i64 - 1;
    (k_min..=k_max.min(0)).find(|&n| {
        let lhs: f64 = (k_min..=n).map(|k| a[(k - k_min) as usize]).sum();
        let tail: f64 = (n + 1..=k_max).map(|k| (gamma * (n + 1 - k) as f64).exp2() * a[(k - k_min) as usize]).sum();
        let rhs = lambda * (tail + (alpha * n as f64).exp2());
        lhs > rhs * (1.0 + 1e-9)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn witness_matches_direct_check(values in prop::collection::vec(0.0f64..4.0, 4..24), lambda in 0.2f64..4.0) {
        let k_min = 2 - values.len() as i64;
        let a = AnnulusSequence::new(k_min, values.clone()).unwrap();
        let got = driteration_witness(&a, 1.0, 0.5, lambda);
        let want = naive_witness(&values, k_min, 1.0, 0.5, lambda);
        // the library's slack is 1e-12 relative; disagreements only in that window
        if got != want {
            let n = got.or(want).unwrap();
            let lhs: f64 = values[..=(n - k_min) as usize].iter().sum();
            prop_assert!(lhs > 0.0);
        }
    }

    #[test]
    fn generated_sequences_satisfy_the_lemmas(seed in 0u64..100_000) {
        let (a, lambda) = generate_driteration(seed, 32, 1.0, 0.5).unwrap();
        let r = driteration(&a, 1.0, 0.5, lambda).unwrap();
        prop_assert!(r.beta > 0.0 && r.beta <= 0.5);
        for (_, lhs, rhs) in &r.table {
            prop_assert!(lhs <= &(rhs * (1.0 + 1e-12)));
        }
        let b = generate_iteration(seed, 32, 2.0, 0.5, 0.7, 3).unwrap();
        prop_assert!(iteration_witness(&b, 2.0, 0.5, 0.7, 3).is_none());
        let r = iteration_reduce(&b, 2.0, 0.5, 0.7, 3).unwrap();
        prop_assert!(r.n_bar == -r.reduction_k.unwrap());
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(0.0f64..1e6, 1..40), k_min in -50i64..0) {
        let a = AnnulusSequence::new(k_min, values).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        prop_assert_eq!(AnnulusSequence::read_csv(buf.as_slice()).unwrap(), a);
    }
}

fn power_window(g: &Grid, alpha: f64) -> GridFunction {
    GridFunction::from_fn(g, |x| x[0].abs().powf(alpha) * bump_profile(x[0] / 0.45)).unwrap()
}

#[test]
fn square_root_singularity_is_recovered() {
    let g = Grid::new(1, 16384, 1.0).unwrap();
    let rep = holder_exponent_estimate(&power_window(&g, 0.5), &DomainMask::ball(&g, &[0.0], 1.0 / 32.0), 1.0 / 64.0).unwrap();
    for e in [rep.seminorm, rep.campanato, rep.oscillation] {
        let a = e.value().unwrap();
        assert!((0.45..=0.55).contains(&a), "{a}");
    }
}

#[test]
fn smooth_fields_are_lipschitz_at_grid_scale() {
    let g = Grid::new(1, 16384, 1.0).unwrap();
    let v = band_limited_with_cutoff(&g, 2, 8, false).unwrap();
    let rep = holder_exponent_estimate(&v, &DomainMask::ball(&g, &[0.0], 1.0 / 64.0), 1.0 / 128.0).unwrap();
    assert!(rep.oscillation.value().unwrap() >= 0.95);
}

#[test]
fn constants_are_flat() {
    let g = Grid::new(1, 2048, 1.0).unwrap();
    let rep = holder_exponent_estimate(&GridFunction::constant(&g, 3.0), &DomainMask::ball(&g, &[0.0], 0.2), 0.1).unwrap();
    assert_eq!(rep.campanato, Exponent::Flat);
    assert_eq!(rep.seminorm, Exponent::Flat);
}

#[test]
fn campanato_is_stable_under_refinement() {
    let m = |n: usize| {
        let g = Grid::new(1, n, 1.0).unwrap();
        campanato_functionals(&power_window(&g, 0.5), &DomainMask::ball(&g, &[0.0], 0.125), 2.0, 1.0 / 16.0).unwrap().m
    };
    let (a, b) = (m(4096), m(8192));
    assert!((a / b - 1.0).abs() < 0.1, "{a} vs {b}");
}

#[test]
fn homogeneous_norm_is_controlled_by_annuli() {
    let g = Grid::new(1, 4096, 1.0).unwrap();
    let v = band_limited_with_cutoff(&g, 9, 32, false).unwrap();
    let rep = homogeneous_norm_localization(&v, 0.1, &[0.0], 0.5).unwrap();
    assert!(rep.annuli.len() >= 2 && rep.ratio.is_finite() && rep.ratio > 0.0);
}
