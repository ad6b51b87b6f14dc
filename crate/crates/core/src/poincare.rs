//! Mean-value polynomials and Poincaré-type constants.

use serde::Serialize;

use crate::cutoff::DyadicCutoffFamily;
use crate::error::{invalid, Error, Result};
use crate::grid::{DomainMask, Grid, GridFunction};
use crate::multiplier::{derivative, frac_laplacian};
use crate::singular::gagliardo_seminorm;
use crate::solvers::{conjugate_gradient, dot, vnorm, MaskSpace};
use crate::symbol::MultiIndex;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: u32 = 2;

/// `ceil(n/2) - 1`.
pub fn default_degree(dim: usize) -> u32 {
    (dim as u32).div_ceil(2) - 1
}

/// `sum c_alpha (x - center)^alpha / alpha!` with `|alpha| <= degree`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanValuePolynomial {
    pub degree: u32,
    pub dim: usize,
    pub center: [f64; 3],
    pub coefficients: Vec<(MultiIndex, f64)>,
    /// `levels[i]`: coefficients of `Q^i`, i.e. the terms of order `>= i`.
    pub levels: Vec<Vec<(MultiIndex, f64)>>,
}

fn scaled_monomial(alpha: MultiIndex, y: &[f64]) -> f64 {
    alpha.monomial(y) / alpha.factorial()
}

/// Periodic offsets of the mask points from `center`.
fn offsets(mask: &DomainMask, center: &[f64]) -> Vec<[f64; 3]> {
    let grid = mask.grid();
    let dim = grid.dim();
    mask.indices()
        .into_iter()
        .map(|i| grid.periodic_delta(&grid.point(i)[..dim], center))
        .collect()
}

/// Mean of `d^alpha` of the polynomial `terms` over the offsets.
fn derivative_mean(terms: &[(MultiIndex, f64)], alpha: MultiIndex, pts: &[[f64; 3]], dim: usize) -> f64 {
    let total: f64 = pts
        .iter()
        .map(|y| {
            terms
                .iter()
                .filter_map(|(beta, c)| beta.checked_sub(&alpha).map(|g| c * scaled_monomial(g, &y[..dim])))
                .sum::<f64>()
        })
        .sum();
    total / pts.len() as f64
}

fn mask_mean(f: &GridFunction, mask: &DomainMask) -> f64 {
    let idx = mask.indices();
    idx.iter().map(|&i| f.values()[i]).sum::<f64>() / idx.len() as f64
}

/// Centroid of a mask, computed from periodic offsets to its first point.
pub fn mask_centroid(mask: &DomainMask) -> Result<[f64; 3]> {
    let grid = mask.grid();
    let dim = grid.dim();
    let idx = mask.indices();
    let first = *idx.first().ok_or_else(|| Error::Degenerate("empty mask".into()))?;
    let anchor = grid.point(first);
    let mut acc = [0.0; 3];
    for &i in &idx {
        let d = grid.periodic_delta(&grid.point(i)[..dim], &anchor[..dim]);
        for a in 0..dim {
            acc[a] += d[a];
        }
    }
    let mut c = [0.0; 3];
    for a in 0..dim {
        c[a] = anchor[a] + acc[a] / idx.len() as f64;
    }
    Ok(c)
}

/// `P_{D,N}(v)` built top-down through the `Q^i` recursion.
pub fn meanvalue_polynomial(v: &GridFunction, mask: &DomainMask, degree: u32) -> Result<MeanValuePolynomial> {
    if degree > MAX_DEGREE {
        return Err(Error::Unsupported(format!("degree {degree} > {MAX_DEGREE}")));
    }
    if v.grid() != mask.grid() {
        return Err(Error::GridMismatch);
    }
    let center = mask_centroid(mask)?;
    let dim = v.grid().dim();
    let pts = offsets(mask, &center[..dim]);
    let all = MultiIndex::all_up_to(dim, degree);
    let mut terms: Vec<(MultiIndex, f64)> = Vec::new();
    let mut levels = vec![Vec::new(); degree as usize + 1];
    for i in (0..=degree).rev() {
        let mut fresh = Vec::new();
        for &alpha in all.iter().filter(|a| a.order() == i) {
            let dv = mask_mean(&derivative(v, alpha)?, mask);
            fresh.push((alpha, dv - derivative_mean(&terms, alpha, &pts, dim)));
        }
        terms.extend(fresh);
        levels[i as usize] = terms.clone();
    }
    Ok(MeanValuePolynomial {
        degree,
        dim,
        center,
        coefficients: terms,
        levels,
    })
}

impl MeanValuePolynomial {
    pub fn value_at(&self, grid: &Grid, x: &[f64]) -> f64 {
        let y = grid.periodic_delta(x, &self.center[..self.dim]);
        self.coefficients
            .iter()
            .map(|(a, c)| c * scaled_monomial(*a, &y[..self.dim]))
            .sum()
    }

    /// The polynomial sampled on the grid (periodic offsets from the center).
    pub fn evaluate(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |x| self.value_at(grid, x))
    }

    /// `|mean_D d^alpha (v - P)|` relative to `||nabla^{|alpha|} v||_{L^2(D)}`
    /// for every `|alpha| <= degree`.
    pub fn mean_residuals(&self, v: &GridFunction, mask: &DomainMask) -> Result<Vec<(MultiIndex, f64)>> {
        let pts = offsets(mask, &self.center[..self.dim]);
        MultiIndex::all_up_to(self.dim, self.degree)
            .into_iter()
            .map(|alpha| {
                let dv = derivative(v, alpha)?;
                let mean = mask_mean(&dv, mask) - derivative_mean(&self.coefficients, alpha, &pts, self.dim);
                let scale = gagliardo_seminorm(v, mask, f64::from(alpha.order()))?;
                Ok((alpha, if scale > 0.0 { mean.abs() / scale } else { mean.abs() }))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoincareOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

fn check_padding(mask: &DomainMask) -> Result<()> {
    let grid = mask.grid();
    if mask.count() << grid.dim() > grid.len() {
        return Err(Error::Support(format!(
            "domain occupies {} of {} points; needs padding",
            mask.count(),
            grid.len()
        )));
    }
    Ok(())
}

/// `sup ||Delta~^s f||_2 / ||Delta~^t f||_2` over `f` supported in `D`,
/// `0 <= s < t`, by power iteration on `A_t^{-1} A_s` where
/// `A_a = restrict_D |xi|^{2a} restrict_D`.
pub fn generalized_poincare_constant(mask: &DomainMask, s: f64, t: f64, opts: PoincareOptions) -> Result<f64> {
    if !(0.0 <= s && s < t && t <= 2.0) {
        return Err(invalid("s", format!("need 0 <= s < t <= 2, got s = {s}, t = {t}")));
    }
    check_padding(mask)?;
    let space = MaskSpace::new(mask)?;
    let gram = |order: f64, x: &[f64]| -> Result<Vec<f64>> {
        if order == 0.0 {
            return Ok(x.to_vec());
        }
        Ok(space.extract(&frac_laplacian(&space.embed(x)?, 2.0 * order)?))
    };
    let mut rng = crate::fields::rng(opts.seed);
    let mut v: Vec<f64> = (0..space.len())
        .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
        .collect();
    let mut last = f64::NAN;
    for _ in 0..opts.max_iter {
        let bv = gram(s, &v)?;
        let av = gram(t, &v)?;
        let rho = dot(&v, &bv) / dot(&v, &av);
        if (rho - last).abs() < opts.tol * rho {
            return Ok(rho.sqrt());
        }
        last = rho;
        let next = conjugate_gradient(|x| gram(t, x), &bv, 1e-10, 20 * space.len().max(50))?.x;
        let n = vnorm(&next);
        v = next.into_iter().map(|x| x / n).collect();
    }
    Err(Error::NoConvergence {
        solver: "Poincaré power iteration",
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

/// `C_{D,s} = sup ||f||_2 / ||Delta~^s f||_2` over `f` supported in `D`.
pub fn poincare_constant(mask: &DomainMask, s: f64, opts: PoincareOptions) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid("s", format!("{s} must be positive")));
    }
    generalized_poincare_constant(mask, 0.0, s, opts)
}

fn poly_remainder(v: &GridFunction, p: &MeanValuePolynomial) -> Result<GridFunction> {
    v.sub(&p.evaluate(v.grid())?)
}

fn check_orders(dim: usize, s: f64, t: f64) -> Result<u32> {
    let n = default_degree(dim);
    let top = f64::from(n + 1);
    if !(0.0 <= s && s < top && 0.0 <= t && t < top - s) {
        return Err(invalid("s", format!("need s in [0,{top}), t in [0,{top}-s); got {s}, {t}")));
    }
    Ok(n)
}

/// `||Delta~^s (eta_{r,x} (v - P))||_2 / (r^t [v]_{B_{4r}(x), s+t})` with
/// `P` the mean-value polynomial on `B_{4r}(x)`.
pub fn mv_poincare_ratio(
    v: &GridFunction,
    r: f64,
    x: &[f64],
    s: f64,
    t: f64,
    family: &DyadicCutoffFamily,
) -> Result<f64> {
    let grid = v.grid();
    let degree = check_orders(grid.dim(), s, t)?;
    if 4.0 * r > grid.box_length() / 2.0 {
        return Err(Error::Support(format!("B_4r with r = {r} exceeds half the box")));
    }
    let ball = DomainMask::ball(grid, x, 4.0 * r);
    let p = meanvalue_polynomial(v, &ball, degree)?;
    let eta = family.evaluate(grid, 0, r, x)?;
    let num = frac_laplacian(&eta.mul(&poly_remainder(v, &p)?)?, s)?.l2_norm();
    let den = r.powf(t) * gagliardo_seminorm(v, &ball, s + t)?;
    if den == 0.0 {
        return Err(Error::Degenerate("zero seminorm".into()));
    }
    Ok(num / den)
}

/// Annulus variant: `eta^k_{r,x}`, `P` on `B_{2^{k+1}r} \ B_{2^{k-1}r}`,
/// seminorm on `B_{2^{k+2}r} \ B_{2^{k-2}r}`, normalizer `(2^k r)^t`.
pub fn annulus_mv_poincare_ratio(
    v: &GridFunction,
    r: f64,
    x: &[f64],
    k: usize,
    s: f64,
    t: f64,
    family: &DyadicCutoffFamily,
) -> Result<f64> {
    let grid = v.grid();
    let degree = check_orders(grid.dim(), s, t)?;
    if k == 0 {
        return Err(invalid("k", "annulus index must be at least 1"));
    }
    let scale = 2f64.powi(k as i32) * r;
    if 4.0 * scale > grid.box_length() / 2.0 {
        return Err(Error::Support(format!("annulus at k = {k} exceeds half the box")));
    }
    let annulus = DomainMask::dyadic_annulus(grid, x, r, k as i32);
    let wide = DomainMask::annulus(grid, x, scale / 4.0, 4.0 * scale);
    let p = meanvalue_polynomial(v, &annulus, degree)?;
    let eta = family.evaluate(grid, k, r, x)?;
    let num = frac_laplacian(&eta.mul(&poly_remainder(v, &p)?)?, s)?.l2_norm();
    let den = scale.powf(t) * gagliardo_seminorm(v, &wide, s + t)?;
    if den == 0.0 {
        return Err(Error::Degenerate("zero seminorm".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub ks: Vec<usize>,
    /// `||eta^k (P_{B_r} - P_{A_k})||_inf / ((1+k) ||Delta~^{n/2} v||_2)`.
    pub gaps: Vec<f64>,
    /// `||eta^k (v - P_{B_2r})||_2 / ((2^k r)^{n/2} (1+k) ||Delta~^{n/2} v||_2)`.
    pub remainders: Vec<f64>,
}

pub fn polynomial_gap_scan(
    v: &GridFunction,
    r: f64,
    x: &[f64],
    k_max: usize,
    family: &DyadicCutoffFamily,
) -> Result<GapReport> {
    let grid = v.grid();
    let dim = grid.dim();
    let n = dim as f64;
    let degree = default_degree(dim);
    if 2f64.powi(k_max as i32 + 1) * r > grid.box_length() / 2.0 {
        return Err(Error::Support(format!("k_max = {k_max} exceeds half the box")));
    }
    let energy = frac_laplacian(v, n / 2.0)?.l2_norm();
    if energy == 0.0 {
        return Err(Error::Degenerate("zero homogeneous norm".into()));
    }
    let p_ball = meanvalue_polynomial(v, &DomainMask::ball(grid, x, r), degree)?.evaluate(grid)?;
    let rem = poly_remainder(v, &meanvalue_polynomial(v, &DomainMask::ball(grid, x, 2.0 * r), degree)?)?;
    let mut report = GapReport {
        ks: Vec::new(),
        gaps: Vec::new(),
        remainders: Vec::new(),
    };
    for k in 1..=k_max {
        let eta = family.evaluate(grid, k, r, x)?;
        let p_k = meanvalue_polynomial(v, &DomainMask::dyadic_annulus(grid, x, r, k as i32), degree)?
            .evaluate(grid)?;
        let weight = (1 + k) as f64 * energy;
        let gap = eta.mul(&p_ball.sub(&p_k)?)?.max_abs();
        let tail = eta.mul(&rem)?.l2_norm();
        report.ks.push(k);
        report.gaps.push(gap / weight);
        report
            .remainders
            .push(tail / ((2f64.powi(k as i32) * r).powf(n / 2.0) * weight));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::band_limited_with_cutoff;
    use crate::multiplier::windowed_monomial;

    #[test]
    fn degree_zero_is_the_mean() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let v = band_limited_with_cutoff(&g, 3, 8, false).unwrap();
        let d = DomainMask::ball(&g, &[0.1, 0.0], 0.2);
        let p = meanvalue_polynomial(&v, &d, 0).unwrap();
        let direct = mask_mean(&v, &d);
        assert!((p.coefficients[0].1 - direct).abs() < 1e-12);
    }

    #[test]
    fn reproduces_polynomials() {
        let g = Grid::new(1, 1024, 4.0).unwrap();
        let q = windowed_monomial(&g, MultiIndex::unit(0), 1.2)
            .unwrap()
            .scale(0.7)
            .add(&windowed_monomial(&g, MultiIndex::from_slice(&[2]), 1.2).unwrap().scale(-0.3))
            .unwrap()
            .add(&windowed_monomial(&g, MultiIndex::zero(), 1.2).unwrap().scale(2.0))
            .unwrap();
        let d = DomainMask::ball(&g, &[0.0], 0.8);
        let p = meanvalue_polynomial(&q, &d, 2).unwrap();
        let diff = q.sub(&p.evaluate(&g).unwrap()).unwrap().restrict(&d).unwrap();
        assert!(diff.max_abs() < 1e-8 * q.max_abs(), "{}", diff.max_abs());
        for (_, r) in p.mean_residuals(&q, &d).unwrap() {
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn levels_share_top_coefficients() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let v = band_limited_with_cutoff(&g, 4, 6, false).unwrap();
        let d = DomainMask::ball(&g, &[0.0, 0.0], 0.25);
        let p = meanvalue_polynomial(&v, &d, 2).unwrap();
        for (i, level) in p.levels.iter().enumerate() {
            for (alpha, c) in level {
                if alpha.order() as usize >= i {
                    let full = p.coefficients.iter().find(|(b, _)| b == alpha).unwrap().1;
                    assert!((full - c).abs() <= 1e-12 * (1.0 + full.abs()));
                }
            }
        }
        assert!(meanvalue_polynomial(&v, &d, 3).is_err());
    }

    #[test]
    fn poincare_monotone_in_domain() {
        let g = Grid::new(1, 512, 1.0).unwrap();
        let small = DomainMask::ball(&g, &[0.0], 0.03);
        let big = DomainMask::ball(&g, &[0.0], 0.06);
        let opts = PoincareOptions::default();
        let a = poincare_constant(&small, 0.5, opts).unwrap();
        let b = poincare_constant(&big, 0.5, opts).unwrap();
        assert!(a <= b * (1.0 + 1e-6));
    }
}
