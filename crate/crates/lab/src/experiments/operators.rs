//! Operator-level experiments: quadrature vs. spectral definitions, norm
//! equivalence, the dyadic partition of unity and cutoff norm scaling.

use std::time::Instant;

use fracmap_core::cutoff::{build_family, norm_scaling_experiment, BaseProfile};
use fracmap_core::fields::{band_limited, bump, rng, unit_vector};
use fracmap_core::singular::{calibrate_cns, equivalence_ratio, frac_lap_pointwise, frac_lap_quadrature, SingularQuadratureScheme};
use fracmap_core::{frac_laplacian, lp_norm, DomainMask, Grid};

use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::report::{Outcome, Table, Verdict};
use fracmap_core::calibration::ConstantsFile;

pub const DEFINITION_TOL: f64 = 1e-3;
pub const DEFINITION_SECONDS: f64 = 10.0;

pub fn definition_equivalence(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let start = Instant::now();
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(4096);
    let l = cfg.box_or(1.0);
    let s = cfg.s.unwrap_or(0.5);
    let grid = Grid::new(dim, n, l)?;
    let scheme = SingularQuadratureScheme::default();
    let c = calibrate_cns(&grid, s, &scheme)?;
    let origin = vec![0.0; dim];
    let radius = l / 4.0;
    let f = bump(&grid, &origin, radius)?;
    let spectral = frac_laplacian(&f, s)?;
    let quad = frac_lap_quadrature(&f, s, &scheme, &c)?;
    let interior = DomainMask::ball(&grid, &origin, radius);
    let scale = lp_norm(&spectral, f64::INFINITY, Some(&interior))?;
    let err = lp_norm(&quad.sub(&spectral)?, f64::INFINITY, Some(&interior))? / scale;

    // direct summation at a few points must agree with the FFT evaluation
    let probes: Vec<usize> = [0.0, 0.3, 0.7, 0.95]
        .iter()
        .map(|t| grid.nearest_index(&vec![t * radius; dim]))
        .collect();
    let mut pointwise = Table::new("pointwise", &["index", "fft", "direct"]);
    let mut direct_gap: f64 = 0.0;
    for &i in &probes {
        let d = frac_lap_pointwise(&f, s, i, &scheme, &c)?;
        direct_gap = direct_gap.max((d - quad.values()[i]).abs() / scale);
        pointwise.push(vec![i as f64, quad.values()[i], d])?;
    }

    let mut profile = Table::new("profile", &["x", "spectral", "quadrature"]);
    let stride = (grid.len() / 512).max(1);
    for i in (0..grid.len()).step_by(stride) {
        profile.push(vec![grid.point(i)[0], spectral.values()[i], quad.values()[i]])?;
    }

    let mut out = Outcome::default();
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("s", s);
    out.param("bump_radius", radius);
    out.param("scheme", scheme);
    out.constants.push(c);
    out.table(profile);
    out.table(pointwise);
    out.verdict(Verdict::at_most("interior_relative_linf_error", err, DEFINITION_TOL));
    out.verdict(Verdict::at_most("direct_vs_fft_gap", direct_gap, 1e-10));
    out.verdict(Verdict::at_most("runtime_seconds", start.elapsed().as_secs_f64(), DEFINITION_SECONDS).timing());
    Ok(out)
}

pub const EQUIVALENCE_SPREAD: f64 = 1.02;

pub fn norm_equivalence(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(2048);
    let l = cfg.box_or(1.0);
    let s = cfg.s.unwrap_or(0.25);
    let fields = 10;
    let grid = Grid::new(dim, n, l)?;
    let scheme = SingularQuadratureScheme::default();
    let mut table = Table::new("ratios", &["seed", "ratio"]);
    let mut ratios = Vec::new();
    for k in 0..fields {
        let seed = cfg.seed + k;
        let r = equivalence_ratio(&band_limited(&grid, seed)?, s, &scheme)?;
        ratios.push(r);
        table.push(vec![seed as f64, r])?;
    }
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = Outcome::default();
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("s", s);
    out.param("fields", fields);
    out.table(table);
    out.verdict(Verdict::at_most("max_over_min", max / min, EQUIVALENCE_SPREAD));
    Ok(out)
}

pub const PARTITION_TOL: f64 = 1e-12;

pub fn partition_of_unity(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let depth = match &cfg.scales {
        Some(s) if s.len() == 1 && s[0].fract() == 0.0 && s[0] >= 1.0 => s[0] as usize,
        Some(_) => return Err(config("scales", "partition-of-unity takes a single integer depth K")),
        None => 10,
    };
    let dims: Vec<usize> = match cfg.dim {
        Some(d) => vec![d],
        None => vec![1, 2, 3],
    };
    let family = build_family(depth, BaseProfile::default())?;
    let samples = 1usize << 14;
    let reach = 2f64.powi(depth as i32);
    let mut out = Outcome::default();
    let mut table = Table::new("partition", &["dim", "max_deviation", "support_violations", "points"]);
    let mut worst: f64 = 0.0;
    let mut violations = 0usize;
    for &dim in &dims {
        let mut r = rng(cfg.seed.wrapping_add(dim as u64));
        let mut dev: f64 = 0.0;
        let mut bad = 0usize;
        let mut points = 0usize;
        // radii covering B_{4 * 2^K}, plus every dyadic support boundary
        let mut radii: Vec<f64> = (0..=samples).map(|j| 4.0 * reach * j as f64 / samples as f64).collect();
        for k in -1..=(depth as i32 + 1) {
            let b = 2f64.powi(k);
            radii.extend([b, b * (1.0 - 1e-12), b * (1.0 + 1e-12)]);
        }
        for &rad in &radii {
            let dir = unit_vector(&mut r, dim);
            let x: Vec<f64> = dir.iter().map(|v| v * rad).collect();
            points += 1;
            if rad < reach {
                dev = dev.max((family.partial_sum(depth, &x)? - 1.0).abs());
            }
            for k in 0..=depth {
                let outer = 2f64.powi(k as i32 + 1);
                let inner = if k == 0 { 0.0 } else { 2f64.powi(k as i32 - 1) };
                let outside = rad >= outer || (k > 0 && rad <= inner);
                if outside && family.value(k, &x)? != 0.0 {
                    bad += 1;
                }
            }
        }
        table.push(vec![dim as f64, dev, bad as f64, points as f64])?;
        worst = worst.max(dev);
        violations += bad;
    }
    out.param("depth", depth);
    out.param("dims", &dims);
    out.table(table);
    out.verdict(Verdict::at_most("max_partition_deviation", worst, PARTITION_TOL));
    out.verdict(Verdict::at_most("support_violations", violations as f64, 0.0));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct ScalingCase {
    dim: usize,
    s: f64,
    p_prime: f64,
    n: usize,
    cells: f64,
    k_max: usize,
}

const SCALING_CASES: [ScalingCase; 2] = [
    ScalingCase { dim: 1, s: 0.5, p_prime: f64::INFINITY, n: 16384, cells: 16.0, k_max: 8 },
    ScalingCase { dim: 2, s: 1.0, p_prime: 2.0, n: 1024, cells: 8.0, k_max: 5 },
];

pub fn cutoff_scaling(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let cases = cfg.select(&SCALING_CASES, |c| c.dim, |c| c.s)?;
    let l = cfg.box_or(1.0);
    let mut out = Outcome::default();
    let mut table = Table::new("norms", &["dim", "s", "p_prime", "k", "norm"]);
    let mut slopes = Table::new("slopes", &["dim", "s", "p_prime", "slope", "expected"]);
    for c in cases {
        let n = cfg.grid_or(c.n);
        let grid = Grid::new(c.dim, n, l)?;
        let r = c.cells * grid.spacing();
        let mut k_max = c.k_max;
        while k_max > 1 && 2f64.powi(k_max as i32 + 1) * r > l / 2.0 {
            k_max -= 1;
        }
        let ks: Vec<usize> = (1..=k_max).collect();
        let family = build_family(k_max, BaseProfile::default())?;
        let rep = norm_scaling_experiment(&family, &grid, c.s, c.p_prime, &ks, r)?;
        let p_col = if c.p_prime.is_infinite() { -1.0 } else { c.p_prime };
        for (k, v) in rep.ks.iter().zip(&rep.norms) {
            table.push(vec![c.dim as f64, c.s, p_col, *k as f64, *v])?;
        }
        slopes.push(vec![c.dim as f64, c.s, p_col, rep.slope, rep.expected])?;
        let name = format!("slope_n{}_s{}_p{}", c.dim, c.s, if c.p_prime.is_infinite() { "inf".into() } else { c.p_prime.to_string() });
        let dev = if rep.expected == 0.0 { rep.slope.abs() } else { (rep.slope - rep.expected).abs() / rep.expected.abs() };
        out.verdict(Verdict::at_most(name, dev, 0.1));
    }
    out.param("box_length", l);
    out.param("p_prime_column", "-1 encodes infinity");
    out.table(table);
    out.table(slopes);
    Ok(out)
}
