//! Real-space fractional Laplacian, Gagliardo seminorms and their
//! agreement with the spectral operator.
//!
//! On the torus the singular integral uses the periodized kernel
//! `K(z) = sum_k |z + kL|^{-e}`: images within a cube are summed explicitly
//! and the remainder is added as the exterior integral of `|z|^{-e}`.
//! With `raw(f)(x) = 1/2 sum_z (2f(x) - f(x+z) - f(x-z)) K(z) h^n`, the
//! calibrated operator is `c * raw`, with positive `c`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::calibration::{CalibratedConstant, GridSpec, Provenance};
use crate::error::{invalid, Error, Result};
use crate::grid::{norm, DomainMask, Grid, GridFunction};
use crate::multiplier::{derivatives_of_order, frac_laplacian};
use crate::spectral::{dft_in_place, inverse_complex, transform_forward};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetrization {
    /// `f(x) - f(x+z)`, valid for `s < 1`.
    FirstDifference,
    /// `2f(x) - f(x+z) - f(x-z)`, valid for `s < 2`.
    SecondDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Truncation {
    /// Periodized kernel with images up to `images` boxes away (`None`:
    /// chosen from the grid size) plus the analytic exterior tail.
    Periodic { images: Option<usize> },
    /// Plain kernel cut at `|z| < radius`, no images.
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularQuadratureScheme {
    /// Excluded core `|z| < exclusion_cells * h`.
    pub exclusion_cells: f64,
    pub symmetrization: Symmetrization,
    pub truncation: Truncation,
}

impl Default for SingularQuadratureScheme {
    fn default() -> Self {
        Self {
            exclusion_cells: 0.5,
            symmetrization: Symmetrization::SecondDifference,
            truncation: Truncation::Periodic { images: None },
        }
    }
}

impl SingularQuadratureScheme {
    fn validate(&self, s: f64) -> Result<()> {
        if !(s > 0.0 && s < 2.0) {
            return Err(invalid("s", format!("{s} outside (0, 2)")));
        }
        if !(self.exclusion_cells > 0.0) {
            return Err(invalid("exclusion_radius", "must be positive"));
        }
        if s >= 1.0 && self.symmetrization == Symmetrization::FirstDifference {
            return Err(invalid("symmetrization", "second differences are required for s >= 1"));
        }
        Ok(())
    }
}

fn default_images(grid: &Grid) -> usize {
    let budget = (1u64 << 22) as f64 / grid.len() as f64;
    let side = budget.powf(1.0 / grid.dim() as f64);
    (((side - 1.0) / 2.0).floor() as usize).clamp(1, 64)
}

/// `int_{[-1,1]^{n-1}} (1 + |u|^2)^{-(n+sigma)/2} du` by composite Simpson.
fn face_integral(n: usize, sigma: f64) -> f64 {
    let e = (n as f64 + sigma) / 2.0;
    let m = 400;
    let w = |i: usize| {
        if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let step = 2.0 / m as f64;
    let node = |i: usize| -1.0 + step * i as f64;
    match n {
        1 => 1.0,
        2 => (0..=m).map(|i| w(i) * (1.0 + node(i).powi(2)).powf(-e)).sum::<f64>() * step / 3.0,
        _ => {
            let mut total = 0.0;
            for i in 0..=m {
                for j in 0..=m {
                    total += w(i) * w(j) * (1.0 + node(i).powi(2) + node(j).powi(2)).powf(-e);
                }
            }
            total * (step / 3.0).powi(2)
        }
    }
}

/// `int_{|z|_inf > a} |z|^{-n-sigma} dz`.
fn exterior_tail(n: usize, sigma: f64, a: f64) -> f64 {
    2.0 * n as f64 * face_integral(n, sigma) * a.powf(-sigma) / sigma
}

/// Kernel samples at every index displacement plus the exterior tail.
struct Kernel {
    values: Vec<f64>,
    tail: f64,
}

fn kernel(grid: &Grid, exponent: f64, scheme: &SingularQuadratureScheme) -> Kernel {
    let dim = grid.dim();
    let h = grid.spacing();
    let l = grid.box_length();
    let excl = scheme.exclusion_cells * h;
    let images = match scheme.truncation {
        Truncation::Periodic { images } => images.unwrap_or_else(|| default_images(grid)) as i64,
        Truncation::Radius(_) => 0,
    };
    let values = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let idx = grid.unravel(flat);
            let mut d = [0.0; 3];
            for axis in 0..dim {
                d[axis] = grid.mode(idx[axis]) as f64 * h;
            }
            match scheme.truncation {
                Truncation::Radius(r) => {
                    let dist = norm(&d[..dim]);
                    if dist >= excl && dist < r {
                        dist.powf(-exponent)
                    } else {
                        0.0
                    }
                }
                Truncation::Periodic { .. } => {
                    let mut total = 0.0;
                    let range = -images..=images;
                    let ks: Vec<[i64; 3]> = match dim {
                        1 => range.map(|a| [a, 0, 0]).collect(),
                        2 => range.clone().flat_map(|a| range.clone().map(move |b| [a, b, 0])).collect(),
                        _ => range
                            .clone()
                            .flat_map(|a| {
                                let r2 = range.clone();
                                r2.clone().flat_map(move |b| r2.clone().map(move |c| [a, b, c]))
                            })
                            .collect(),
                    };
                    for k in ks {
                        let mut z = [0.0; 3];
                        for axis in 0..dim {
                            z[axis] = d[axis] + k[axis] as f64 * l;
                        }
                        let dist = norm(&z[..dim]);
                        if dist >= excl {
                            total += dist.powf(-exponent);
                        }
                    }
                    total
                }
            }
        })
        .collect();
    let tail = match scheme.truncation {
        Truncation::Periodic { .. } => {
            exterior_tail(dim, exponent - dim as f64, (images as f64 + 0.5) * l)
        }
        Truncation::Radius(_) => 0.0,
    };
    Kernel { values, tail }
}

/// Fourier multiplier of `raw`: `sum_z K(z)(1 - cos(2 pi xi.z)) h^n + tail`.
fn raw_multiplier(grid: &Grid, exponent: f64, scheme: &SingularQuadratureScheme) -> Vec<f64> {
    let k = kernel(grid, exponent, scheme);
    let w = grid.cell_volume();
    let total: f64 = k.values.iter().sum();
    let mut data: Vec<Complex64> = k.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_in_place(grid, &mut data, true);
    data.iter()
        .enumerate()
        .map(|(i, c)| if i == 0 { 0.0 } else { (total - c.re) * w + k.tail })
        .collect()
}

fn apply_real_multiplier(f: &GridFunction, table: &[f64]) -> Result<GridFunction> {
    let mut spec = transform_forward(f);
    spec.coeffs_mut()
        .par_iter_mut()
        .zip(table.par_iter())
        .for_each(|(c, t)| *c *= t);
    GridFunction::new(f.grid(), inverse_complex(&spec).into_iter().map(|c| c.re).collect())
}

/// Uncalibrated quadrature `raw(f)` on the whole grid, evaluated by FFT.
pub fn raw_operator(f: &GridFunction, s: f64, scheme: &SingularQuadratureScheme) -> Result<GridFunction> {
    scheme.validate(s)?;
    let exponent = f.grid().dim() as f64 + s;
    apply_real_multiplier(f, &raw_multiplier(f.grid(), exponent, scheme))
}

/// Calibrated quadrature operator on the whole grid.
pub fn frac_lap_quadrature(
    f: &GridFunction,
    s: f64,
    scheme: &SingularQuadratureScheme,
    c: &CalibratedConstant,
) -> Result<GridFunction> {
    Ok(raw_operator(f, s, scheme)?.scale(c.value))
}

fn raw_at(f: &GridFunction, s: f64, index: usize, scheme: &SingularQuadratureScheme) -> Result<f64> {
    scheme.validate(s)?;
    let grid = f.grid();
    if index >= grid.len() {
        return Err(invalid("x", format!("index {index} outside the grid")));
    }
    let k = kernel(grid, grid.dim() as f64 + s, scheme);
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let v = f.values();
    let x = grid.unravel(index);
    let fx = v[index];
    let shifted = |d: &[usize; 3], sign: bool| {
        let mut idx = [0usize; 3];
        for axis in 0..dim {
            idx[axis] = if sign { (x[axis] + d[axis]) % n } else { (x[axis] + n - d[axis]) % n };
        }
        v[grid.ravel(&idx)]
    };
    let sum: f64 = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let kv = k.values[flat];
            if kv == 0.0 {
                return 0.0;
            }
            let d = grid.unravel(flat);
            match scheme.symmetrization {
                Symmetrization::SecondDifference => {
                    0.5 * (2.0 * fx - shifted(&d, true) - shifted(&d, false)) * kv
                }
                Symmetrization::FirstDifference => (fx - shifted(&d, true)) * kv,
            }
        })
        .sum();
    // far images see f through its mean; written so constants cancel exactly
    let centered_mean = v.iter().map(|&y| y - fx).sum::<f64>() / v.len() as f64;
    Ok(sum * grid.cell_volume() - k.tail * centered_mean)
}

/// Calibrated quadrature value at one grid point, by direct summation.
pub fn frac_lap_pointwise(
    f: &GridFunction,
    s: f64,
    index: usize,
    scheme: &SingularQuadratureScheme,
    c: &CalibratedConstant,
) -> Result<f64> {
    Ok(c.value * raw_at(f, s, index, scheme)?)
}

/// `c = spectral / raw` on `cos(2 pi x_1)` at the origin.
pub fn calibrate_cns(grid: &Grid, s: f64, scheme: &SingularQuadratureScheme) -> Result<CalibratedConstant> {
    scheme.validate(s)?;
    let l = grid.box_length();
    if (l - l.round()).abs() > 1e-12 || l.round() < 1.0 {
        return Err(invalid("box_length", "reference cos(2 pi x_1) needs an integer box length"));
    }
    let reference = GridFunction::from_fn(grid, |x| (2.0 * PI * x[0]).cos())?;
    let origin = grid.nearest_index(&vec![0.0; grid.dim()]);
    let raw = raw_at(&reference, s, origin, scheme)?;
    if raw.abs() < 1e-12 {
        return Err(Error::Degenerate(format!("raw quadrature value {raw:e} on the reference")));
    }
    let spectral = frac_laplacian(&reference, s)?.values()[origin];
    CalibratedConstant::new(
        format!("c_{{{},{}}}", grid.dim(), s),
        spectral / raw,
        Provenance {
            seed: None,
            oracle: "spectral |xi|^s on cos(2 pi x_1) at the origin".into(),
            grid: Some(GridSpec::from(grid)),
        },
    )
}

/// Largest point count for the O(|D|^2) sums before subsampling.
pub fn pair_sum_cap(dim: usize) -> usize {
    if dim == 1 {
        1 << 13
    } else {
        1 << 12
    }
}

/// Points of `mask` used by the double sums, with their quadrature weight.
/// Above the cap, every `stride`-th point per axis is kept.
fn pair_sum_points(mask: &DomainMask) -> Result<(Vec<usize>, f64, usize)> {
    let grid = mask.grid();
    let dim = grid.dim();
    let cap = pair_sum_cap(dim);
    let mut stride = 1usize;
    loop {
        let pts: Vec<usize> = mask
            .indices()
            .into_iter()
            .filter(|&i| grid.unravel(i)[..dim].iter().all(|&k| k % stride == 0))
            .collect();
        if pts.len() <= cap {
            let w = (grid.spacing() * stride as f64).powi(dim as i32);
            return Ok((pts, w, stride));
        }
        stride *= 2;
        if stride > 16 {
            return Err(invalid("D", format!("{} points is too many for the pairwise sum", mask.count())));
        }
    }
}

/// `[f]_{D,s}`: Gagliardo double sum on `floor(s)`-th derivatives, or
/// `||nabla^s f||_{L^2(D)}` for integer `s`.
pub fn gagliardo_seminorm(f: &GridFunction, mask: &DomainMask, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("{s} must be nonnegative")));
    }
    if mask.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = f.grid();
    let k = s.floor();
    let sigma = s - k;
    let derivs = derivatives_of_order(f, k as u32)?;
    if sigma == 0.0 {
        let total: f64 = mask
            .indices()
            .into_iter()
            .map(|i| derivs.iter().map(|(d, w)| w * d.values()[i].powi(2)).sum::<f64>())
            .sum();
        return Ok((total * grid.cell_volume()).sqrt());
    }
    let (pts, w, _) = pair_sum_points(mask)?;
    let dim = grid.dim();
    let exponent = dim as f64 + 2.0 * sigma;
    let coords: Vec<[f64; 3]> = pts.iter().map(|&i| grid.point(i)).collect();
    let total: f64 = (0..pts.len())
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            for b in 0..pts.len() {
                if a == b {
                    continue;
                }
                let diff: f64 = derivs
                    .iter()
                    .map(|(d, wt)| wt * (d.values()[pts[a]] - d.values()[pts[b]]).powi(2))
                    .sum();
                if diff == 0.0 {
                    continue;
                }
                let dist = grid.periodic_distance(&coords[a][..dim], &coords[b][..dim]);
                acc += diff * dist.powf(-exponent);
            }
            acc
        })
        .sum();
    Ok((total * w * w).sqrt())
}

/// `(c/2) sum sum (v(x) - v(y))(w(x) - w(y)) K(x - y) h^{2n}` with the
/// periodized kernel of exponent `n + s`; approximates `<|xi|^s v, w>`.
pub fn bilinear_form(
    v: &GridFunction,
    w: &GridFunction,
    s: f64,
    scheme: &SingularQuadratureScheme,
    c: &CalibratedConstant,
) -> Result<f64> {
    if v.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let a = raw_operator(v, s, scheme)?.inner(w)?;
    let b = raw_operator(w, s, scheme)?.inner(v)?;
    // both orders agree analytically; averaging makes the symmetry exact
    Ok(c.value * 0.5 * (a + b))
}

/// `|| |xi|^s f ||^2` divided by the raw double sum
/// `sum sum |f(x) - f(y)|^2 K(x - y) h^{2n}` with exponent `n + 2s`.
pub fn equivalence_ratio(f: &GridFunction, s: f64, scheme: &SingularQuadratureScheme) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("{s} outside (0, 1)")));
    }
    let spectral = frac_laplacian(f, s)?.l2_norm().powi(2);
    let raw = 2.0 * raw_operator(f, 2.0 * s, scheme)?.inner(f)?;
    if !(raw > 0.0) || spectral == 0.0 {
        return Err(Error::Degenerate("zero seminorm".into()));
    }
    Ok(spectral / raw)
}
