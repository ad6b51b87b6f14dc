//! Hodge splitting, off-diagonal decay, Poincaré scaling and harmonic decay.

use fracmap_core::calibration::ConstantsFile;
use fracmap_core::fields::band_limited;
use fracmap_core::fit::loglog_slope;
use fracmap_core::hodge::{disjoint_pairing_decay, harmonic_worst_case_scan, hodge_decompose, PairingProfile, HODGE_MAX_ITER};
use fracmap_core::poincare::{poincare_constant, PoincareOptions};
use fracmap_core::{DomainMask, Grid};

use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::report::{Outcome, Table, Verdict};

pub const HODGE_RESIDUAL: f64 = 1e-10;
pub const HODGE_ORTHOGONALITY: f64 = 1e-8;
pub const HODGE_ENERGY: f64 = 5.0;

pub fn hodge(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(1024);
    let l = cfg.box_or(1.0);
    let s = cfg.s.unwrap_or(0.5);
    let radius = match cfg.scales.as_deref() {
        None => l / 8.0,
        Some([r]) => *r,
        Some(_) => return Err(config("scales", "hodge takes a single ball radius")),
    };
    let cases = 20;
    let grid = Grid::new(dim, n, l)?;
    let mask = DomainMask::ball(&grid, &vec![0.0; dim], radius);
    let mut table = Table::new("cases", &["seed", "residual", "orthogonality", "energy_factor", "iterations"]);
    let (mut res, mut orth, mut energy, mut iters) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for k in 0..cases {
        let seed = cfg.seed + k;
        let d = hodge_decompose(&band_limited(&grid, seed)?, &mask, s)?.diagnostics()?;
        table.push(vec![seed as f64, d.residual, d.orthogonality, d.energy_factor, d.iterations as f64])?;
        res = res.max(d.residual);
        orth = orth.max(d.orthogonality);
        energy = energy.max(d.energy_factor);
        iters = iters.max(d.iterations);
    }
    let mut out = Outcome::default();
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("s", s);
    out.param("radius", radius);
    out.param("cases", cases);
    out.table(table);
    out.verdict(Verdict::at_most("max_residual", res, HODGE_RESIDUAL));
    out.verdict(Verdict::at_most("max_orthogonality", orth, HODGE_ORTHOGONALITY));
    out.verdict(Verdict::at_most("max_energy_factor", energy, HODGE_ENERGY));
    out.verdict(Verdict::at_most("max_cg_iterations", iters as f64, HODGE_MAX_ITER as f64));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct PairingCase {
    dim: usize,
    s: f64,
    t: f64,
    n: usize,
}

const PAIRING_CASES: [PairingCase; 2] = [
    PairingCase { dim: 1, s: 0.25, t: 0.25, n: 16384 },
    PairingCase { dim: 2, s: 0.5, t: 0.5, n: 2048 },
];

pub const PAIRING_REL_TOL: f64 = 0.15;

pub fn disjoint_support(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let cases = cfg.select(&PAIRING_CASES, |c| c.dim, |c| c.s)?;
    let l = cfg.box_or(1.0);
    let multiples = cfg.scales_or(&[4.0, 8.0, 16.0, 32.0]);
    let mut out = Outcome::default();
    let mut table = Table::new("pairings", &["dim", "s", "t", "d", "pairing", "prefactor"]);
    let mut slopes = Table::new("slopes", &["dim", "s", "t", "slope", "expected"]);
    for c in cases {
        let grid = Grid::new(c.dim, cfg.grid_or(c.n), l)?;
        // unit scale r = 16h; both bumps have radius r/4 = 4h
        let r = 16.0 * grid.spacing();
        let profile = PairingProfile { radius: r / 4.0, seed: None };
        let distances: Vec<f64> = multiples.iter().map(|m| m * r).collect();
        let rep = disjoint_pairing_decay(&grid, profile, profile, c.s, c.t, &distances)?;
        for ((d, p), q) in rep.distances.iter().zip(&rep.pairings).zip(&rep.prefactors) {
            table.push(vec![c.dim as f64, c.s, c.t, *d, *p, *q])?;
        }
        slopes.push(vec![c.dim as f64, c.s, c.t, rep.slope, rep.expected])?;
        let dev = (rep.slope - rep.expected).abs() / rep.expected.abs();
        out.verdict(Verdict::at_most(format!("slope_n{}_s{}_t{}", c.dim, c.s, c.t), dev, PAIRING_REL_TOL));
    }
    out.param("box_length", l);
    out.param("distance_multiples", &multiples);
    out.param("unit_scale_cells", 16);
    out.param("bump_radius_cells", 4);
    out.table(table);
    out.table(slopes);
    Ok(out)
}

pub const POINCARE_REL_TOL: f64 = 0.05;

pub fn poincare_scaling(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(4096);
    let l = cfg.box_or(1.0);
    let orders: Vec<f64> = match cfg.s {
        Some(s) => vec![s],
        None => vec![0.5, 1.0],
    };
    let radii = cfg.scales_or(&[0.01, 0.02, 0.04]);
    if radii.len() < 3 {
        return Err(config("scales", "need at least three radii"));
    }
    let grid = Grid::new(dim, n, l)?;
    let origin = vec![0.0; dim];
    let opts = PoincareOptions { seed: cfg.seed, ..PoincareOptions::default() };
    let mut out = Outcome::default();
    let mut table = Table::new("constants", &["s", "r", "constant"]);
    for &s in &orders {
        let cs = radii
            .iter()
            .map(|&r| poincare_constant(&DomainMask::ball(&grid, &origin, r), s, opts))
            .collect::<fracmap_core::Result<Vec<f64>>>()?;
        for (r, c) in radii.iter().zip(&cs) {
            table.push(vec![s, *r, *c])?;
        }
        let slope = loglog_slope(&radii, &cs)?;
        out.param(&format!("slope_s{s}"), slope);
        out.verdict(Verdict::at_most(format!("exponent_s{s}"), (slope - s).abs() / s, POINCARE_REL_TOL));
    }
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("radii", &radii);
    out.table(table);
    Ok(out)
}

pub const HARMONIC_SLACK: f64 = 1.1;

pub fn harmonic_decay(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(4096);
    let l = cfg.box_or(1.0);
    let lambdas = cfg.scales_or(&[4.0, 8.0, 16.0, 32.0]);
    let (i8, i32) = match (lambdas.iter().position(|&v| v == 8.0), lambdas.iter().position(|&v| v == 32.0)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(config("scales", "the Lambda list must contain 8 and 32")),
    };
    let grid = Grid::new(dim, n, l)?;
    let r = 16.0 * grid.spacing();
    let rep = harmonic_worst_case_scan(&grid, &vec![0.0; dim], r, &lambdas)?;
    let mut table = Table::new("ratios", &["lambda", "rho"]);
    for (lam, rho) in rep.lambdas.iter().zip(&rep.ratios) {
        table.push(vec![*lam, *rho])?;
    }
    let bound = 4f64.powf(-0.25) * HARMONIC_SLACK;
    let mut out = Outcome::default();
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("r", r);
    out.param("order", dim as f64 / 2.0);
    out.table(table);
    out.verdict(Verdict::at_most("rho32_over_rho8", rep.ratios[i32] / rep.ratios[i8], bound));
    Ok(out)
}
