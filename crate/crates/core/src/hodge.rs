//! Variational Hodge splitting `f = |xi|^s phi + h` with `phi` supported in
//! a mask, and the localization estimates built on it.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fields::bump;
use crate::fit::loglog_slope;
use crate::grid::{DomainMask, Grid, GridFunction};
use crate::multiplier::{apply_symbol, frac_laplacian, ZeroModePolicy};
use crate::solvers::{conjugate_gradient, power_iteration, MaskSpace};
use crate::symbol::FrequencySymbol;

pub const HODGE_TOL: f64 = 1e-10;
pub const HODGE_MAX_ITER: usize = 500;

#[derive(Debug, Clone)]
pub struct HodgeDecomposition {
    pub f: GridFunction,
    pub phi: GridFunction,
    /// `|xi|^s phi`.
    pub lap_phi: GridFunction,
    pub h: GridFunction,
    pub s: f64,
    pub mask: DomainMask,
    pub iterations: usize,
    pub relative_gradient: f64,
}

/// Minimize `|| |xi|^s phi - f ||_2` over `phi` supported in `mask`, by
/// conjugate gradients on the restricted normal equations.
pub fn hodge_decompose(f: &GridFunction, mask: &DomainMask, s: f64) -> Result<HodgeDecomposition> {
    hodge_decompose_with(f, mask, s, HODGE_TOL, HODGE_MAX_ITER)
}

pub fn hodge_decompose_with(
    f: &GridFunction,
    mask: &DomainMask,
    s: f64,
    tol: f64,
    max_iter: usize,
) -> Result<HodgeDecomposition> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("{s} must be positive")));
    }
    if f.grid() != mask.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = f.grid();
    if mask.count() << grid.dim() > grid.len() {
        return Err(Error::Support("mask leaves no padding in the box".into()));
    }
    let space = MaskSpace::new(mask)?;
    let rhs = space.extract(&frac_laplacian(f, s)?);
    let normal = |x: &[f64]| -> Result<Vec<f64>> { Ok(space.extract(&frac_laplacian(&space.embed(x)?, 2.0 * s)?)) };
    let out = conjugate_gradient(normal, &rhs, tol, max_iter)?;
    let phi = space.embed(&out.x)?.with_support(mask.clone())?;
    let lap_phi = frac_laplacian(&phi, s)?;
    let h = f.sub(&lap_phi)?;
    Ok(HodgeDecomposition {
        f: f.clone(),
        phi,
        lap_phi,
        h,
        s,
        mask: mask.clone(),
        iterations: out.iterations,
        relative_gradient: out.relative_residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HodgeDiagnostics {
    /// `||f - |xi|^s phi - h||_2 / ||f||_2`.
    pub residual: f64,
    /// `max_psi |<h, |xi|^s psi>| / (||h||_2 || |xi|^s psi ||_2)` over the
    /// point basis of the mask.
    pub orthogonality: f64,
    /// `(||h||_2 + || |xi|^s phi ||_2) / ||f||_2`.
    pub energy_factor: f64,
    pub iterations: usize,
}

impl HodgeDecomposition {
    pub fn diagnostics(&self) -> Result<HodgeDiagnostics> {
        let fnorm = self.f.l2_norm();
        let rebuilt = self.lap_phi.add(&self.h)?;
        let residual = self.f.sub(&rebuilt)?.l2_norm();
        let hnorm = self.h.l2_norm();
        // |xi|^s of a unit point mass has the same norm at every site
        let grid = self.f.grid();
        let mut delta = vec![0.0; grid.len()];
        delta[0] = 1.0;
        let basis_norm = frac_laplacian(&GridFunction::new(grid, delta)?, self.s)?.l2_norm();
        let lap_h = frac_laplacian(&self.h, self.s)?;
        let cell = grid.cell_volume();
        let worst = self
            .mask
            .indices()
            .into_iter()
            .map(|i| (lap_h.values()[i] * cell).abs())
            .fold(0.0, f64::max);
        let orthogonality = if hnorm == 0.0 { 0.0 } else { worst / (hnorm * basis_norm) };
        let scale = if fnorm == 0.0 { 1.0 } else { fnorm };
        Ok(HodgeDiagnostics {
            residual: residual / scale,
            orthogonality,
            energy_factor: if fnorm == 0.0 { 0.0 } else { (hnorm + self.lap_phi.l2_norm()) / fnorm },
            iterations: self.iterations,
        })
    }

    /// `E(phi + eps psi) - E(phi)` relative to `E(phi)`, which is
    /// nonnegative at a minimizer.
    pub fn energy_increase(&self, psi: &GridFunction, eps: f64) -> Result<f64> {
        if psi.values().iter().enumerate().any(|(i, v)| *v != 0.0 && !self.mask.contains(i)) {
            return Err(Error::Support("direction leaves the mask".into()));
        }
        let base = self.h.l2_norm().powi(2);
        let moved = self.f.sub(&frac_laplacian(&self.phi.axpby(1.0, psi, eps)?, self.s)?)?;
        let scale = if base > 0.0 { base } else { 1.0 };
        Ok((moved.l2_norm().powi(2) - base) / scale)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicDecay {
    pub lambdas: Vec<f64>,
    /// `||h_Lambda||_{L^2(B_r)} / ||h_Lambda||_2`.
    pub ratios: Vec<f64>,
    pub orthogonality: Vec<f64>,
}

impl HarmonicDecay {
    /// `rho(last) / rho(first)` against `(last/first)^{-1/4}`.
    pub fn decay_margin(&self) -> Option<f64> {
        let (a, b) = (*self.ratios.first()?, *self.ratios.last()?);
        let (la, lb) = (*self.lambdas.first()?, *self.lambdas.last()?);
        if a == 0.0 {
            return Some(0.0);
        }
        Some((b / a) / (lb / la).powf(-0.25))
    }
}

/// Orthogonality level above which a remainder is rejected.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// For each `Lambda`, split `f` on `B_{Lambda r}(x)` with order `n/2` and
/// measure how much of the remainder sits in `B_r(x)`.
pub fn harmonic_decay_check(f: &GridFunction, x: &[f64], r: f64, lambdas: &[f64]) -> Result<HarmonicDecay> {
    let grid = f.grid();
    let s = grid.dim() as f64 / 2.0;
    let inner = DomainMask::ball(grid, x, r);
    let mut report = HarmonicDecay {
        lambdas: lambdas.to_vec(),
        ratios: Vec::new(),
        orthogonality: Vec::new(),
    };
    for &lambda in lambdas {
        let dec = hodge_decompose(f, &DomainMask::ball(grid, x, lambda * r), s)?;
        let diag = dec.diagnostics()?;
        if diag.orthogonality > ORTHOGONALITY_TOL {
            return Err(Error::Constraint(format!(
                "remainder orthogonality {:e} at Lambda = {lambda}",
                diag.orthogonality
            )));
        }
        let total = dec.h.l2_norm();
        let local = dec.h.restrict(&inner)?.l2_norm();
        report.ratios.push(if total == 0.0 { 0.0 } else { local / total });
        report.orthogonality.push(diag.orthogonality);
    }
    Ok(report)
}

/// `sup_h ||h||_{L^2(B_r)} / ||h||_2` over all mean-free remainders of
/// the order-`n/2` splitting on `B_{Lambda r}(x)`: the square root of the
/// top eigenvalue of `1_{B_r} (I - Pi - P_0) 1_{B_r}`, where `Pi` projects
/// onto the local range and `P_0` onto constants.
pub fn harmonic_worst_case(grid: &Grid, x: &[f64], r: f64, lambda: f64, seed: u64) -> Result<f64> {
    let s = grid.dim() as f64 / 2.0;
    let small = MaskSpace::new(&DomainMask::ball(grid, x, r))?;
    let big = DomainMask::ball(grid, x, lambda * r);
    let apply = |g: &[f64]| -> Result<Vec<f64>> {
        let f = small.embed(g)?;
        let f = f.sub(&GridFunction::constant(grid, f.mean()))?;
        Ok(small.extract(&hodge_decompose(&f, &big, s)?.h))
    };
    let out = power_iteration(apply, small.len(), seed, 1e-10, 2000)?;
    Ok(out.eigenvalue.max(0.0).sqrt())
}

/// Worst-case ratios for each `Lambda`.
pub fn harmonic_worst_case_scan(grid: &Grid, x: &[f64], r: f64, lambdas: &[f64]) -> Result<HarmonicDecay> {
    let ratios = lambdas
        .iter()
        .map(|&l| harmonic_worst_case(grid, x, r, l, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(HarmonicDecay {
        lambdas: lambdas.to_vec(),
        orthogonality: vec![0.0; ratios.len()],
        ratios,
    })
}

/// A nonnegative bump of the given radius, or a seeded windowed field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairingProfile {
    pub radius: f64,
    pub seed: Option<u64>,
}

impl PairingProfile {
    fn sample(&self, grid: &Grid, center: &[f64]) -> Result<GridFunction> {
        let b = bump(grid, center, self.radius)?;
        match self.seed {
            None => Ok(b),
            Some(seed) => {
                let field = crate::fields::band_limited_with_cutoff(grid, seed, grid.points_per_axis() / 8, false)?;
                // keep a definite sign so the far field has a monopole
                b.mul(&field.map(|v| 1.0 + 0.5 * v.tanh()))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingDecay {
    pub distances: Vec<f64>,
    pub pairings: Vec<f64>,
    /// `pairing / (||a||_1 ||b||_1)`.
    pub prefactors: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
}

/// `|<|xi|^s a, |xi|^t b>|` for `a` in `B_gamma(0)` and `b` centered at
/// distance `gamma + d + rho` along the first axis, for each `d`.
pub fn disjoint_pairing_decay(
    grid: &Grid,
    a: PairingProfile,
    b: PairingProfile,
    s: f64,
    t: f64,
    distances: &[f64],
) -> Result<PairingDecay> {
    if distances.len() < 3 {
        return Err(invalid("distances", "need at least 3 distances"));
    }
    let n = grid.dim() as f64;
    let origin = vec![0.0; grid.dim()];
    let fa = a.sample(grid, &origin)?;
    let la = frac_laplacian(&fa, s)?;
    let mut report = PairingDecay {
        distances: distances.to_vec(),
        pairings: Vec::new(),
        prefactors: Vec::new(),
        slope: f64::NAN,
        expected: -(n + s + t),
    };
    for &d in distances {
        let reach = a.radius + d + 2.0 * b.radius;
        if reach > grid.box_length() / 3.0 {
            return Err(Error::Support(format!("distance {d} occupies more than a third of the box")));
        }
        let mut center = origin.clone();
        center[0] = a.radius + d + b.radius;
        let fb = b.sample(grid, &center)?;
        let outer = DomainMask::ball(grid, &origin, a.radius + d);
        if fb.values().iter().enumerate().any(|(i, v)| *v != 0.0 && outer.contains(i)) {
            return Err(Error::Support("supports are not disjoint".into()));
        }
        let pairing = la.inner(&frac_laplacian(&fb, t)?)?.abs();
        let l1 = |f: &GridFunction| f.values().iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume();
        report.pairings.push(pairing);
        report.prefactors.push(pairing / (l1(&fa) * l1(&fb)));
    }
    report.slope = loglog_slope(distances, &report.pairings)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct Representative {
    pub a: GridFunction,
    /// `||a||_2 / ||b||_2`.
    pub norm_ratio: f64,
}

/// The `a` on `D = B_gamma(x)` representing `phi -> <|xi|^{n/2} b, phi>`
/// (i.e. `<|xi|^{n/4} b, |xi|^{n/4} phi>`) on functions supported in `D`.
pub fn localization_representative(b: &GridFunction, x: &[f64], gamma: f64, d: f64) -> Result<Representative> {
    let grid = b.grid();
    let outer = DomainMask::ball(grid, x, gamma + d);
    if b.values().iter().enumerate().any(|(i, v)| *v != 0.0 && outer.contains(i)) {
        return Err(Error::Support(format!("b does not vanish on B_(gamma+d) with d = {d}")));
    }
    let inner = DomainMask::ball(grid, x, gamma);
    let space = MaskSpace::new(&inner)?;
    let functional = frac_laplacian(b, grid.dim() as f64 / 2.0)?;
    // the functional on the point basis e_i (with <a, e_i> = a_i h^n)
    let a = space.embed(&space.extract(&functional))?;
    let bn = b.l2_norm();
    let norm_ratio = if bn == 0.0 { 0.0 } else { a.l2_norm() / bn };
    Ok(Representative { a, norm_ratio })
}

/// `max_i |<|xi|^{n/4} b, |xi|^{n/4} e_i> - <a, e_i>|`, evaluated
/// independently for every point basis function of `B_gamma(x)`, relative
/// to `|| |xi|^{n/4} b ||_2 || |xi|^{n/4} e ||_2`.
pub fn representation_residual(b: &GridFunction, a: &GridFunction, x: &[f64], gamma: f64) -> Result<f64> {
    let grid = b.grid();
    let q = grid.dim() as f64 / 4.0;
    let lb = frac_laplacian(b, q)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in DomainMask::ball(grid, x, gamma).indices() {
        let mut e = vec![0.0; grid.len()];
        e[i] = 1.0;
        let le = frac_laplacian(&GridFunction::new(grid, e)?, q)?;
        let lhs = lb.inner(&le)?;
        let rhs = a.values()[i] * grid.cell_volume();
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(le.l2_norm());
    }
    let denom = lb.l2_norm() * scale;
    Ok(if denom == 0.0 { worst } else { worst / denom })
}

/// `||v||_{L^2(B_r)} / sup_phi <v, |xi|^{n/2} phi> / || |xi|^{n/2} phi ||_2`
/// over `phi` supported in `B_{Lambda r}(x)`. The sup is the norm of the
/// projection of `v` onto that range, i.e. the Hodge part.
pub fn local_norm_recovery(v: &GridFunction, x: &[f64], r: f64, lambda: f64) -> Result<f64> {
    let grid = v.grid();
    let ball = DomainMask::ball(grid, x, r);
    if v.values().iter().enumerate().any(|(i, val)| *val != 0.0 && !ball.contains(i)) {
        return Err(Error::Support("v is not supported in B_r(x)".into()));
    }
    if lambda * r > grid.box_length() / 2.0 {
        return Err(Error::Support(format!("Lambda r = {} exceeds half the box", lambda * r)));
    }
    let local = v.l2_norm();
    if local == 0.0 {
        return Ok(0.0);
    }
    let dec = hodge_decompose(v, &DomainMask::ball(grid, x, lambda * r), grid.dim() as f64 / 2.0)?;
    let sup = dec.lap_phi.l2_norm();
    if sup == 0.0 {
        return Err(Error::Degenerate("v is orthogonal to the local range".into()));
    }
    Ok(local / sup)
}

/// `||M1 |xi|^{s-n/2} u * M2 |xi|^{-s} v||_2 / (||u||_2 ||v||_2)` for
/// mean-free `u`, `v`.
pub fn lower_order_product_norm(
    u: &GridFunction,
    v: &GridFunction,
    s: f64,
    m1: &FrequencySymbol,
    m2: &FrequencySymbol,
) -> Result<f64> {
    let n = u.grid().dim() as f64;
    if !(s > 0.0 && s < n / 2.0) {
        return Err(invalid("s", format!("{s} outside (0, {})", n / 2.0)));
    }
    let (nu, nv) = (u.l2_norm(), v.l2_norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    for (m, name) in [(m1, "M1"), (m2, "M2")] {
        if m.degree() != Some(0.0) {
            return Err(invalid("symbol", format!("{name} must be homogeneous of degree 0")));
        }
    }
    let a = apply_symbol(&frac_laplacian(u, s - n / 2.0)?, m1, ZeroModePolicy::Annihilate)?;
    let b = apply_symbol(&frac_laplacian(v, -s)?, m2, ZeroModePolicy::Annihilate)?;
    Ok(a.mul(&b)?.l2_norm() / (nu * nv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{band_limited, windowed_field};

    #[test]
    fn zero_input() {
        let g = Grid::new(1, 256, 1.0).unwrap();
        let d = DomainMask::ball(&g, &[0.0], 0.1);
        let dec = hodge_decompose(&GridFunction::zeros(&g), &d, 0.5).unwrap();
        assert_eq!(dec.phi.max_abs(), 0.0);
        assert_eq!(dec.h.max_abs(), 0.0);
    }

    #[test]
    fn representable_input_has_small_remainder() {
        let g = Grid::new(1, 512, 1.0).unwrap();
        let inner = windowed_field(&g, 3, &[0.0], 0.05, 32).unwrap();
        let f = frac_laplacian(&inner, 0.5).unwrap();
        let dec = hodge_decompose(&f, &DomainMask::ball(&g, &[0.0], 0.1), 0.5).unwrap();
        assert!(dec.h.l2_norm() <= 1e-8 * f.l2_norm());
    }

    #[test]
    fn decomposition_invariants() {
        let g = Grid::new(1, 512, 1.0).unwrap();
        let f = band_limited(&g, 7).unwrap();
        let dec = hodge_decompose(&f, &DomainMask::ball(&g, &[0.0], 0.1), 0.5).unwrap();
        let d = dec.diagnostics().unwrap();
        assert!(d.residual <= 1e-10);
        assert!(d.orthogonality <= 1e-8, "{}", d.orthogonality);
        assert!(d.energy_factor <= 5.0);
        let psi = windowed_field(&g, 9, &[0.0], 0.05, 16).unwrap();
        assert!(dec.energy_increase(&psi, 1e-3).unwrap() >= -1e-10);
    }

    #[test]
    fn representative_matches_functional() {
        let g = Grid::new(1, 256, 1.0).unwrap();
        let b = windowed_field(&g, 2, &[0.3], 0.05, 16).unwrap();
        let rep = localization_representative(&b, &[0.0], 0.05, 0.15).unwrap();
        let res = representation_residual(&b, &rep.a, &[0.0], 0.05).unwrap();
        assert!(res <= 1e-10, "{res}");
        let zero = localization_representative(&GridFunction::zeros(&g), &[0.0], 0.05, 0.1).unwrap();
        assert_eq!(zero.a.max_abs(), 0.0);
    }
}
