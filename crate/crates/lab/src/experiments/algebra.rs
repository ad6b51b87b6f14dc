//! Lorentz-space algebra and the compensation estimates.

use fracmap_core::calibration::ConstantsFile;
use fracmap_core::compensation::{structure_identity_residual, SphereValuedMap};
use fracmap_core::fields::{band_limited, band_limited_with_cutoff, bump, bump_profile};
use fracmap_core::grid::GridFunction;
use fracmap_core::lorentz::{decreasing_rearrangement, product_rearrangement_margin, scaling_law_error, weak_bound_margin};
use fracmap_core::Grid;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Outcome, Table, Verdict};
use crate::suites::{self, Suite, FRESH_OFFSET};

type Profile = Box<dyn Fn(&[f64]) -> f64>;

pub const SCALING_TOL: f64 = 0.01;
pub const STRUCTURE_TOL: f64 = 1e-10;

const LORENTZ_PAIRS: [(f64, f64); 5] = [(2.0, 1.0), (2.0, 2.0), (3.0, 1.5), (1.5, 4.0), (4.0, 8.0)];

fn suite_grid(cfg: &ExperimentConfig, suite: Suite) -> Result<Grid> {
    let (dim, n, l) = suite.default_grid();
    Ok(Grid::new(cfg.dim.unwrap_or(dim), cfg.grid_or(n), cfg.box_or(l))?)
}

/// Regress against `--constants` if given, else calibrate in-run and
/// regress on seeds the calibration never saw.
fn regression(suite: Suite, grid: &Grid, cfg: &ExperimentConfig, file: Option<&ConstantsFile>, out: &mut Outcome) -> Result<()> {
    match file {
        Some(f) => {
            out.param("constants_source", "file");
            suites::regress(suite, grid, f, cfg.seed, out)
        }
        None => {
            out.param("constants_source", "in-run calibration");
            let f = suites::calibrate(suite, grid, cfg.seed)?;
            suites::regress(suite, grid, &f, cfg.seed + FRESH_OFFSET, out)
        }
    }
}

pub fn lorentz_algebra(cfg: &ExperimentConfig, file: Option<&ConstantsFile>) -> Result<Outcome> {
    let grid = suite_grid(cfg, Suite::Lorentz)?;
    let dim = grid.dim();
    let mut out = Outcome::default();
    let fields = 20;

    // (fg)*(2t) <= f*(t) g*(t); quantized copies add ties and plateaus
    let mut product = Table::new("product_margins", &["seed", "margin", "quantized_margin"]);
    let mut worst_product = f64::INFINITY;
    for k in 0..fields {
        let seed = cfg.seed + k;
        let f = band_limited(&grid, seed)?;
        let g = band_limited(&grid, seed ^ 0x5555_5555)?;
        let m = product_rearrangement_margin(&f, &g)?;
        let q = |h: &GridFunction| h.map(|v| (4.0 * v).round());
        let mq = product_rearrangement_margin(&q(&f), &q(&g))?;
        product.push(vec![seed as f64, m, mq])?;
        worst_product = worst_product.min(m).min(mq);
    }
    out.verdict(Verdict::at_least("product_rearrangement_margin", worst_product, 0.0));
    out.table(product);

    let mut weak = Table::new("weak_margins", &["seed", "p", "q", "margin"]);
    let mut worst_weak = f64::INFINITY;
    for k in 0..fields {
        let seed = cfg.seed + k;
        let profile = decreasing_rearrangement(&band_limited(&grid, seed)?);
        for (p, q) in LORENTZ_PAIRS {
            let m = weak_bound_margin(&profile, p, q)?;
            weak.push(vec![seed as f64, p, q, m])?;
            worst_weak = worst_weak.min(m);
        }
    }
    out.verdict(Verdict::at_least("weak_bound_margin", worst_weak, 0.0));
    out.table(weak);

    let l = grid.box_length();
    let mut scaling = Table::new("scaling", &["profile", "p", "q", "relative_error"]);
    let mut worst_scaling: f64 = 0.0;
    let radius = l / 8.0;
    let sigma = l / 32.0;
    let profiles: [(&str, Profile); 2] = [
        ("bump", Box::new(move |x: &[f64]| bump_profile(x.iter().map(|v| v * v).sum::<f64>().sqrt() / radius))),
        ("gaussian", Box::new(move |x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp())),
    ];
    for (i, (_, f)) in profiles.iter().enumerate() {
        for (p, q) in LORENTZ_PAIRS {
            let e = scaling_law_error(&grid, f, p, q)?;
            scaling.push(vec![i as f64, p, q, e])?;
            worst_scaling = worst_scaling.max(e.abs());
        }
    }
    out.verdict(Verdict::at_most("scaling_law_error", worst_scaling, SCALING_TOL));
    out.table(scaling);

    regression(Suite::Lorentz, &grid, cfg, file, &mut out)?;
    out.param("dim", dim);
    out.param("points_per_axis", grid.points_per_axis());
    out.param("box_length", l);
    out.param("lorentz_pairs", LORENTZ_PAIRS);
    out.param("scaling_profiles", ["bump", "gaussian"]);
    Ok(out)
}

pub fn compensation(cfg: &ExperimentConfig, file: Option<&ConstantsFile>) -> Result<Outcome> {
    let grid = suite_grid(cfg, Suite::Compensation)?;
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let mut out = Outcome::default();
    let maps = 10;
    let eta = bump(&grid, &vec![0.0; dim], grid.box_length() / 4.0)?;
    let mut table = Table::new("structure_identity", &["seed", "relative_residual"]);
    let mut worst: f64 = 0.0;
    for k in 0..maps {
        let seed = cfg.seed + k;
        let phi = band_limited_with_cutoff(&grid, seed, (n / 64).max(1), false)?;
        let phi = phi.scale(2.0 / phi.max_abs());
        let u = SphereValuedMap::from_phase(&phi)?;
        let r = structure_identity_residual(&u, &eta)?;
        table.push(vec![seed as f64, r])?;
        worst = worst.max(r);
    }
    out.verdict(Verdict::at_most("structure_identity_residual", worst, STRUCTURE_TOL));
    out.table(table);
    regression(Suite::Compensation, &grid, cfg, file, &mut out)?;
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", grid.box_length());
    out.param("sphere_maps", maps);
    out.param("phase_cutoff", (n / 64).max(1));
    Ok(out)
}
