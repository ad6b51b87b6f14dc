//! Periodic box discretization.
//!
//! A [`Grid`] samples the torus `[-L/2, L/2)^dim` with `N` points per axis.
//! Point `j` on an axis sits at `(j - N/2) h`, so the origin is a grid point
//! and balls centered at `0` are symmetric. Values are stored row-major with
//! the last axis fastest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on `N^dim`.
pub const DEFAULT_SIZE_GUARD: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        Self::with_guard(dim, points_per_axis, box_length, DEFAULT_SIZE_GUARD)
    }

    pub fn with_guard(
        dim: usize,
        points_per_axis: usize,
        box_length: f64,
        guard: usize,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid {
                field: "dim",
                reason: format!("{dim} is not in 1..=3"),
            });
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid {
                field: "points_per_axis",
                reason: format!("{points_per_axis} is not a power of two >= 8"),
            });
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid {
                field: "box_length",
                reason: format!("{box_length} is not a positive real"),
            });
        }
        let points = points_per_axis
            .checked_pow(dim as u32)
            .unwrap_or(usize::MAX);
        if points > guard {
            return Err(Error::SizeGuard {
                points,
                limit: guard,
            });
        }
        Ok(Self {
            dim,
            points_per_axis,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// `h^dim`, the quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `L^dim`.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = flat % n;
            flat /= n;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let n = self.points_per_axis;
        idx[..self.dim].iter().fold(0, |acc, &i| acc * n + (i % n))
    }

    /// Physical coordinate of the index along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.points_per_axis / 2) as f64) * self.spacing()
    }

    /// Physical position of a flat index (unused axes are zero).
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Index of the grid point nearest to `x` (periodically wrapped).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let n = self.points_per_axis as i64;
        let h = self.spacing();
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            let j = (x[axis] / h).round() as i64 + n / 2;
            idx[axis] = j.rem_euclid(n) as usize;
        }
        self.ravel(&idx)
    }

    /// Signed mode number of a per-axis frequency index, in `[-N/2, N/2)`.
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.points_per_axis;
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Physical frequency `xi = mode / L` of a flat frequency index.
    pub fn frequency(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = self.mode(idx[axis]) as f64 / self.box_length;
        }
        xi
    }

    /// Flat index of the lattice point `-k` (mod N on each axis).
    pub fn negated_index(&self, flat: usize) -> usize {
        let n = self.points_per_axis;
        let idx = self.unravel(flat);
        let mut neg = [0usize; 3];
        for axis in 0..self.dim {
            neg[axis] = (n - idx[axis]) % n;
        }
        self.ravel(&neg)
    }

    /// Minimum-image displacement `a - b` on the torus.
    pub fn periodic_delta(&self, a: &[f64], b: &[f64]) -> [f64; 3] {
        let l = self.box_length;
        let mut d = [0.0; 3];
        for axis in 0..self.dim {
            let mut v = a[axis] - b[axis];
            v -= l * (v / l).round();
            d[axis] = v;
        }
        d
    }

    pub fn periodic_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        norm(&self.periodic_delta(a, b)[..self.dim])
    }

    /// Grid with the same box and twice the points per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.dim, self.points_per_axis * 2, self.box_length)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Boolean field over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: Grid,
    inside: Vec<bool>,
}

impl DomainMask {
    pub fn from_predicate(grid: &Grid, mut pred: impl FnMut(&[f64]) -> bool) -> Self {
        let inside = (0..grid.len())
            .map(|i| pred(&grid.point(i)[..grid.dim()]))
            .collect();
        Self { grid: *grid, inside }
    }

    pub fn full(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            inside: vec![true; grid.len()],
        }
    }

    pub fn empty(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            inside: vec![false; grid.len()],
        }
    }

    /// Points with periodic distance `< r` from `center`.
    pub fn ball(grid: &Grid, center: &[f64], r: f64) -> Self {
        Self::from_predicate(grid, |x| grid.periodic_distance(x, center) < r)
    }

    /// Points with `inner <= |x - center| < outer`.
    pub fn annulus(grid: &Grid, center: &[f64], inner: f64, outer: f64) -> Self {
        Self::from_predicate(grid, |x| {
            let d = grid.periodic_distance(x, center);
            d >= inner && d < outer
        })
    }

    /// `A_k = B_{2^{k+1} r} \ B_{2^{k-1} r}`.
    pub fn dyadic_annulus(grid: &Grid, center: &[f64], r: f64, k: i32) -> Self {
        Self::annulus(
            grid,
            center,
            r * 2f64.powi(k - 1),
            r * 2f64.powi(k + 1),
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.inside[flat]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&i| self.inside[i]).collect()
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            inside: self.inside.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            inside: self
                .inside
                .iter()
                .zip(&other.inside)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.inside
            .iter()
            .zip(&other.inside)
            .all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        self.inside
            .iter()
            .zip(&other.inside)
            .all(|(&a, &b)| !(a && b))
    }
}

/// Real field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    support: Option<DomainMask>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("length {} does not match grid size {}", values.len(), grid.len()),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid: *grid,
            values,
            support: None,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: *grid,
            values,
            support: None,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_vec_unchecked(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_vec_unchecked(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.point(i)[..grid.dim()]))
            .collect();
        Self::new(grid, values)
    }

    /// Attach a support mask; values outside must vanish to `1e-14 max|f|`.
    pub fn with_support(mut self, mask: DomainMask) -> Result<Self> {
        if mask.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let tol = 1e-14 * self.max_abs();
        if let Some(i) = (0..self.values.len()).find(|&i| !mask.inside[i] && self.values[i].abs() > tol) {
            return Err(Error::Support(format!(
                "value {:e} at index {i} lies outside the attached mask",
                self.values[i]
            )));
        }
        self.support = Some(mask);
        Ok(self)
    }

    pub fn support(&self) -> Option<&DomainMask> {
        self.support.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    /// `a self + b other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip(other, |x, y| a * x + b * y)
    }

    /// Zero out samples outside the mask.
    pub fn restrict(&self, mask: &DomainMask) -> Result<Self> {
        if mask.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&mask.inside)
                .map(|(&v, &m)| if m { v } else { 0.0 })
                .collect(),
        ))
    }

    /// Quadrature inner product `sum f g h^dim`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        lp_norm(self, 2.0, None).unwrap_or(0.0)
    }

    /// Translate by a whole number of grid cells (periodic).
    pub fn shift_cells(&self, offset: &[i64]) -> Self {
        let n = self.grid.points_per_axis() as i64;
        let mut out = vec![0.0; self.values.len()];
        for (flat, v) in self.values.iter().enumerate() {
            let mut idx = self.grid.unravel(flat);
            for axis in 0..self.grid.dim() {
                idx[axis] = (idx[axis] as i64 + offset[axis]).rem_euclid(n) as usize;
            }
            out[self.grid.ravel(&idx)] = *v;
        }
        Self::from_vec_unchecked(&self.grid, out)
    }
}

/// `(sum_{x in mask} |f(x)|^p h^dim)^{1/p}`, or the masked sup for `p = inf`.
pub fn lp_norm(f: &GridFunction, p: f64, mask: Option<&DomainMask>) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("{p} < 1")));
    }
    if let Some(m) = mask {
        if m.grid != f.grid {
            return Err(Error::GridMismatch);
        }
    }
    let selected = f
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m.inside[*i]))
        .map(|(_, v)| v.abs());
    if p.is_infinite() {
        return Ok(selected.fold(0.0, f64::max));
    }
    let vals: Vec<f64> = selected.collect();
    let scale = vals.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    // scaled to avoid overflow for large p
    let sum: f64 = vals.iter().map(|v| (v / scale).powf(p)).sum();
    Ok(scale * (sum * f.grid.cell_volume()).powf(1.0 / p))
}
