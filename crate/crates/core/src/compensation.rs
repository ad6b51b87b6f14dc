//! The commutator `H(u,v) = |xi|^{n/2}(uv) - u|xi|^{n/2}v - v|xi|^{n/2}u`,
//! elementary defect inequalities, Fourier-side domination and the
//! structure identity for sphere-valued maps.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fields::{rng, unit_vector};
use crate::grid::{norm, Grid, GridFunction};
use crate::lorentz::{profile_lorentz_norm, RearrangementProfile};
use crate::multiplier::frac_laplacian;
use crate::spectral::{dft_in_place, transform_forward, Spectrum};

/// Largest admissible fraction of spectral energy at `|mode| >= N/4`.
pub const ALIASING_LIMIT: f64 = 1e-8;

pub fn aliasing_guard(f: &GridFunction) -> Result<()> {
    let fraction = transform_forward(f).high_band_fraction();
    if fraction > ALIASING_LIMIT {
        return Err(Error::Aliasing { fraction });
    }
    Ok(())
}

/// `|xi|^s(uv) - u|xi|^s v - v|xi|^s u` for an arbitrary order `s`.
pub fn commutator_with_order(u: &GridFunction, v: &GridFunction, s: f64) -> Result<GridFunction> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    aliasing_guard(u)?;
    aliasing_guard(v)?;
    let uv = frac_laplacian(&u.mul(v)?, s)?;
    let lu = frac_laplacian(u, s)?;
    let lv = frac_laplacian(v, s)?;
    let out: Vec<f64> = (0..u.values().len())
        .map(|i| {
            let (a, b) = (u.values()[i], v.values()[i]);
            uv.values()[i] - a * lv.values()[i] - b * lu.values()[i]
        })
        .collect();
    GridFunction::new(u.grid(), out)
}

/// `H(u, v)` with order `n/2`.
pub fn commutator_h(u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    commutator_with_order(u, v, u.grid().dim() as f64 / 2.0)
}

/// `| |x-xi|^p - |xi|^p - |x|^p |` over the interpolated right side.
pub fn defect_ratio(x: &[f64], xi: &[f64], p: f64, theta: f64) -> Result<f64> {
    if x.len() != xi.len() {
        return Err(invalid("xi", "dimension differs from x"));
    }
    if !(p > 0.0) || !(0.0..=1.0).contains(&theta) {
        return Err(invalid("p", format!("need p > 0 and theta in [0,1], got {p}, {theta}")));
    }
    let (nx, nxi) = (norm(x), norm(xi));
    if nx == 0.0 || nxi == 0.0 {
        return Err(Error::Degenerate("x and xi must be nonzero".into()));
    }
    let diff: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
    let num = (norm(&diff).powf(p) - nxi.powf(p) - nx.powf(p)).abs();
    let den = if p <= 1.0 {
        nx.powf(p * theta) * nxi.powf(p * (1.0 - theta))
    } else {
        nx.powf(p - 1.0) * nxi + nxi.powf(p - 1.0) * nx
    };
    if den == 0.0 {
        return Err(Error::Degenerate("zero right-hand side".into()));
    }
    Ok(num / den)
}

/// `| |x-y|^p - |y|^p | / |x|^p`.
pub fn triangle_defect_ratio(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::Degenerate("x must be nonzero".into()));
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok((norm(&diff).powf(p) - norm(y).powf(p)).abs() / nx.powf(p))
}

const SCAN_CHUNK: usize = 4096;

/// Sample points for the homogeneity-reduced scans: `xi` on the unit
/// sphere, `x` with log-uniform length in `[1e-3, 1e3]`.
fn scan_sample(rng: &mut rand_chacha::ChaCha8Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let xi = unit_vector(rng, dim);
    let len = 10f64.powf(rng.random_range(-3.0..3.0));
    let x = unit_vector(rng, dim).into_iter().map(|v| v * len).collect();
    (x, xi)
}

/// Deterministic parallel max of `ratio` over `samples` seeded draws.
fn scan_max(
    dim: usize,
    samples: usize,
    seed: u64,
    ratio: impl Fn(&[f64], &[f64]) -> Result<f64> + Sync,
) -> Result<f64> {
    let chunks = samples.div_ceil(SCAN_CHUNK);
    let maxima = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(c as u64));
            let count = SCAN_CHUNK.min(samples - c * SCAN_CHUNK);
            let mut best: f64 = 0.0;
            for _ in 0..count {
                let (x, xi) = scan_sample(&mut r, dim);
                best = best.max(ratio(&x, &xi)?);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

/// Sup of [`defect_ratio`] over seeded samples with `|xi| = 1`.
pub fn defect_scan(dim: usize, p: f64, theta: f64, samples: usize, seed: u64) -> Result<f64> {
    scan_max(dim, samples, seed, |x, xi| defect_ratio(x, xi, p, theta))
}

/// Sup of [`triangle_defect_ratio`] over seeded samples with `|y| = 1`.
pub fn triangle_defect_scan(dim: usize, p: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", format!("{p} outside (0, 1)")));
    }
    scan_max(dim, samples, seed, |x, y| triangle_defect_ratio(x, y, p))
}

/// `|a| * |b|` on the frequency lattice: `sum_eta |A(xi-eta)| |B(eta)| / L^n`,
/// by cyclic convolution (no wrap for band-limited inputs).
fn lattice_convolution(grid: &Grid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_in_place(grid, &mut fa, true);
    dft_in_place(grid, &mut fb, true);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    dft_in_place(grid, &mut fa, false);
    let w = 1.0 / (grid.len() as f64 * grid.volume());
    fa.into_iter().map(|c| (c.re * w).max(0.0)).collect()
}

fn weighted_abs(spec: &Spectrum, order: f64) -> Vec<f64> {
    let grid = spec.grid();
    let dim = grid.dim();
    spec.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                if order == 0.0 {
                    c.norm()
                } else {
                    0.0
                }
            } else {
                norm(&grid.frequency(i)[..dim]).powf(order) * c.norm()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub max_ratio: f64,
    /// Lattice index attaining the maximum.
    pub argmax: usize,
    pub compared: usize,
}

/// Pointwise `|H^(xi)|` against the dominating lattice convolution.
pub fn fourier_domination_check(u: &GridFunction, v: &GridFunction) -> Result<DominationReport> {
    let grid = u.grid();
    let n = grid.dim() as f64;
    let h = transform_forward(&commutator_h(u, v)?);
    let (su, sv) = (transform_forward(u), transform_forward(v));
    let dominating: Vec<f64> = if grid.dim() <= 2 {
        lattice_convolution(grid, &weighted_abs(&su, n / 4.0), &weighted_abs(&sv, n / 4.0))
    } else {
        let a = lattice_convolution(grid, &weighted_abs(&su, (n - 2.0) / 2.0), &weighted_abs(&sv, 1.0));
        let b = lattice_convolution(grid, &weighted_abs(&su, 1.0), &weighted_abs(&sv, (n - 2.0) / 2.0));
        a.into_iter().zip(b).map(|(x, y)| x + y).collect()
    };
    let top = dominating.iter().cloned().fold(0.0, f64::max);
    let hmax = h.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if hmax == 0.0 {
        return Ok(DominationReport {
            max_ratio: 0.0,
            argmax: 0,
            compared: 0,
        });
    }
    if top <= 1e-300 {
        return Err(Error::Degenerate("dominating convolution is identically negligible".into()));
    }
    let floor = 1e-12 * top;
    let mut best = (0.0, 0usize);
    let mut compared = 0;
    for (i, d) in dominating.iter().enumerate() {
        if *d > floor {
            compared += 1;
            let r = h.coeffs()[i].norm() / d;
            if r > best.0 {
                best = (r, i);
            }
        }
    }
    Ok(DominationReport {
        max_ratio: best.0,
        argmax: best.1,
        compared,
    })
}

/// The three normalized sizes of `H(u,v)`.
#[derive(Debug, Clone, Serialize)]
pub struct HNormRatios {
    /// `||H||_2 / (|| |xi|^{n/2} u ||_2 || |xi|^{n/2} v ||_2)`.
    pub l2: f64,
    /// `||H^||_{2,1}` over the same denominator.
    pub lorentz_21: f64,
    /// `||H||_2 / (||(|xi|^{n/2} u)^||_{2,inf} || |xi|^{n/2} v ||_2)`.
    pub weak: f64,
}

fn coefficient_profile(spec: &Spectrum) -> RearrangementProfile {
    let mags: Vec<f64> = spec.coeffs().iter().map(|c| c.norm()).collect();
    RearrangementProfile::from_values(&mags, 1.0 / spec.grid().volume()).expect("finite coefficients")
}

pub fn h_norm_ratio(u: &GridFunction, v: &GridFunction) -> Result<HNormRatios> {
    let order = u.grid().dim() as f64 / 2.0;
    let h = commutator_h(u, v)?;
    let (lu, lv) = (frac_laplacian(u, order)?, frac_laplacian(v, order)?);
    let (nu, nv) = (lu.l2_norm(), lv.l2_norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("zero denominator".into()));
    }
    let hl2 = h.l2_norm();
    let h21 = profile_lorentz_norm(&coefficient_profile(&transform_forward(&h)), 2.0, 1.0)?;
    let weak_u = profile_lorentz_norm(&coefficient_profile(&transform_forward(&lu)), 2.0, f64::INFINITY)?;
    Ok(HNormRatios {
        l2: hl2 / (nu * nv),
        lorentz_21: h21 / (nu * nv),
        weak: hl2 / (weak_u * nv),
    })
}

/// Components `u^1..u^m` with `sum (u^i)^2 = 1` pointwise.
#[derive(Debug, Clone)]
pub struct SphereValuedMap {
    components: Vec<GridFunction>,
}

pub const SPHERE_TOL: f64 = 1e-12;

impl SphereValuedMap {
    pub fn new(components: Vec<GridFunction>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| invalid("components", "need at least one"))?;
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(Error::GridMismatch);
        }
        let worst = (0..first.values().len())
            .map(|i| (components.iter().map(|c| c.values()[i].powi(2)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if worst > SPHERE_TOL {
            return Err(Error::Constraint(format!("|u| deviates from 1 by {worst:e}")));
        }
        Ok(Self { components })
    }

    /// `(cos phi, sin phi)`.
    pub fn from_phase(phi: &GridFunction) -> Result<Self> {
        Self::new(vec![phi.map(f64::cos), phi.map(f64::sin)])
    }

    /// `v / |v|` for a nonvanishing vector field.
    pub fn normalized(fields: &[GridFunction]) -> Result<Self> {
        let len = fields.first().ok_or_else(|| invalid("fields", "empty"))?.values().len();
        let norms: Vec<f64> = (0..len)
            .map(|i| fields.iter().map(|f| f.values()[i].powi(2)).sum::<f64>().sqrt())
            .collect();
        if norms.contains(&0.0) {
            return Err(Error::Degenerate("vector field vanishes".into()));
        }
        let comps = fields
            .iter()
            .map(|f| {
                let vals = f.values().iter().zip(&norms).map(|(v, n)| v / n).collect();
                GridFunction::new(f.grid(), vals)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }
}

/// `|| sum w^i |xi|^{n/2} w^i + 1/2 sum H(w^i, w^i) - 1/2 |xi|^{n/2}(eta^2) ||_2`
/// with `w = eta u`, relative to `|| |xi|^{n/2}(eta^2) ||_2`.
pub fn structure_identity_residual(u: &SphereValuedMap, eta: &GridFunction) -> Result<f64> {
    let grid = eta.grid();
    let order = grid.dim() as f64 / 2.0;
    let mut total = GridFunction::zeros(grid);
    for ui in u.components() {
        let w = eta.mul(ui)?;
        let lw = frac_laplacian(&w, order)?;
        let h = commutator_h(&w, &w)?;
        total = total.add(&w.mul(&lw)?)?.add(&h.scale(0.5))?;
    }
    let reference = frac_laplacian(&eta.mul(eta)?, order)?;
    let scale = reference.l2_norm();
    let residual = total.sub(&reference.scale(0.5))?.l2_norm();
    if scale == 0.0 {
        return Ok(residual);
    }
    Ok(residual / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::band_limited_with_cutoff;
    use crate::multiplier::derivative;
    use crate::symbol::MultiIndex;
    use std::f64::consts::PI;

    #[test]
    fn constants_and_symmetry() {
        let g = Grid::new(1, 128, 1.0).unwrap();
        let u = band_limited_with_cutoff(&g, 1, 10, false).unwrap();
        let v = band_limited_with_cutoff(&g, 2, 10, false).unwrap();
        let c = GridFunction::constant(&g, 1.7);
        assert!(commutator_h(&c, &v).unwrap().max_abs() < 1e-12);
        let a = commutator_h(&u, &v).unwrap();
        let b = commutator_h(&v, &u).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn laplacian_case_is_gradient_product() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let u = band_limited_with_cutoff(&g, 3, 6, false).unwrap();
        let v = band_limited_with_cutoff(&g, 4, 6, false).unwrap();
        let h = commutator_with_order(&u, &v, 2.0).unwrap();
        let mut dot = GridFunction::zeros(&g);
        for axis in 0..2 {
            let du = derivative(&u, MultiIndex::unit(axis)).unwrap();
            let dv = derivative(&v, MultiIndex::unit(axis)).unwrap();
            dot = dot.add(&du.mul(&dv).unwrap()).unwrap();
        }
        let expect = dot.scale(-2.0 / (4.0 * PI * PI));
        assert!(h.sub(&expect).unwrap().l2_norm() <= 1e-10 * expect.l2_norm());
    }

    #[test]
    fn aliasing_guard_trips() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let rough = GridFunction::from_fn(&g, |x| (2.0 * PI * 20.0 * x[0]).cos()).unwrap();
        assert!(matches!(commutator_h(&rough, &rough), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn defect_examples() {
        let x = [0.3, -1.2];
        let neg = [-0.3, 1.2];
        assert!(defect_ratio(&x, &neg, 1.0, 0.5).unwrap() < 1e-15);
        assert!((defect_ratio(&x, &x, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let a = defect_ratio(&[0.4, 0.1], &[1.0, -0.3], 0.5, 0.5).unwrap();
        let b = defect_ratio(&[1.2, 0.3], &[3.0, -0.9], 0.5, 0.5).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!(defect_ratio(&[0.0, 0.0], &x, 1.0, 0.5).is_err());
    }

    #[test]
    fn scan_is_deterministic() {
        let a = defect_scan(1, 0.5, 0.5, 10_000, 9).unwrap();
        let b = defect_scan(1, 0.5, 0.5, 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite() && a > 0.0);
    }

    #[test]
    fn sphere_precondition() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let phi = band_limited_with_cutoff(&g, 5, 4, false).unwrap();
        let u = SphereValuedMap::from_phase(&phi).unwrap();
        let big: Vec<GridFunction> = u.components().iter().map(|c| c.scale(1.1)).collect();
        assert!(matches!(SphereValuedMap::new(big), Err(Error::Constraint(_))));
    }
}
