//! Decreasing rearrangements and Lorentz norms on step profiles.
//!
//! A grid sample carries measure `h^dim`, so `f*` is a step function and
//! every Lorentz integral has a closed form:
//! `||f||_{p,q}^q = sum_i v_i^q (p/q)(t_i^{q/p} - t_{i-1}^{q/p})`.
//! Breakpoints are stored as integer cell counts, which keeps the
//! rearrangement inequalities exactly checkable.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, norm, DomainMask, Grid, GridFunction};
use crate::spectral::{inverse_complex, transform_forward};

/// `f*` as steps `values[i]` on `[t_{i-1}, t_i)`, `t_i = counts[i] * cell`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementProfile {
    counts: Vec<usize>,
    values: Vec<f64>,
    cell: f64,
    total: usize,
}

impl RearrangementProfile {
    /// Profile of `|values|` where each sample has measure `cell`.
    pub fn from_values(values: &[f64], cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(invalid("cell", "measure must be positive"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        let mut counts = Vec::new();
        let mut steps = Vec::new();
        for (i, v) in abs.iter().enumerate() {
            if v == &0.0 {
                break;
            }
            if steps.last() == Some(v) {
                *counts.last_mut().expect("nonempty") = i + 1;
            } else {
                steps.push(*v);
                counts.push(i + 1);
            }
        }
        Ok(Self {
            counts,
            values: steps,
            cell,
            total: values.len(),
        })
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 * self.cell).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    /// Measure of the whole domain, zeros included.
    pub fn total_measure(&self) -> f64 {
        self.total as f64 * self.cell
    }

    /// `f*` at `count` cells, i.e. at `t = count * cell`.
    pub fn value_at_count(&self, count: usize) -> f64 {
        // first step whose right end exceeds count
        let i = self.counts.partition_point(|&c| c <= count);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let i = self.breakpoints().partition_point(|&b| b <= t);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Distribution function `d(lambda) = |{|f| > lambda}|`.
    pub fn distribution(&self, lambda: f64) -> f64 {
        let j = self.values.partition_point(|&v| v > lambda);
        if j == 0 {
            0.0
        } else {
            self.counts[j - 1] as f64 * self.cell
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self {
                counts: vec![],
                values: vec![],
                cell: self.cell,
                total: self.total,
            };
        }
        Self {
            values: self.values.iter().map(|v| v * c.abs()).collect(),
            ..self.clone()
        }
    }

    /// CSV rows `t,value` at every breakpoint.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Unsupported(format!("csv export failed: {e}"));
        w.write_record(["t", "value"]).map_err(io)?;
        for (t, v) in self.breakpoints().iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()]).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Unsupported(format!("csv export failed: {e}")))?;
        Ok(())
    }
}

pub fn decreasing_rearrangement(f: &GridFunction) -> RearrangementProfile {
    RearrangementProfile::from_values(f.values(), f.grid().cell_volume())
        .expect("grid functions are finite and cells positive")
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0) {
        return Err(invalid("p", format!("{p} must lie in (1, inf]")));
    }
    if !(q >= 1.0) {
        return Err(invalid("q", format!("{q} must lie in [1, inf]")));
    }
    if p.is_infinite() && q.is_finite() {
        return Err(invalid("q", "p = inf is only admissible with q = inf"));
    }
    Ok(())
}

/// Closed-form `||f||_{p,q}` of a profile.
pub fn profile_lorentz_norm(profile: &RearrangementProfile, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    let top = match profile.values.first() {
        None => return Ok(0.0),
        Some(&v) => v,
    };
    if p.is_infinite() {
        return Ok(top);
    }
    let t = profile.breakpoints();
    if q.is_infinite() {
        return Ok(t
            .iter()
            .zip(&profile.values)
            .map(|(ti, v)| ti.powf(1.0 / p) * v)
            .fold(0.0, f64::max));
    }
    let r = q / p;
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (ti, v) in t.iter().zip(&profile.values) {
        let cur = ti.powf(r);
        acc += (v / top).powf(q) * (cur - prev);
        prev = cur;
    }
    Ok(top * (acc * p / q).powf(1.0 / q))
}

pub fn lorentz_norm(f: &GridFunction, p: f64, q: f64) -> Result<f64> {
    profile_lorentz_norm(&decreasing_rearrangement(f), p, q)
}

/// `sup_t t^{1/p} f*(t)`, attained at right ends of the steps.
pub fn weak_norm(profile: &RearrangementProfile, p: f64) -> Result<f64> {
    profile_lorentz_norm(profile, p, f64::INFINITY)
}

/// `(q/p)^{1/q} ||f||_{p,q} - sup_t t^{1/p} f*(t)`, nonnegative on every
/// profile.
pub fn weak_bound_margin(profile: &RearrangementProfile, p: f64, q: f64) -> Result<f64> {
    let strong = profile_lorentz_norm(profile, p, q)?;
    Ok((q / p).powf(1.0 / q) * strong - weak_norm(profile, p)?)
}

/// Smallest `f*(t) g*(t) - (fg)*(2t)` over `t` at every breakpoint of
/// `f*`, `g*`, and half-breakpoints of `(fg)*`. Comparisons are exact.
pub fn product_rearrangement_margin(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let fg = f.mul(g)?;
    let (pf, pg, pfg) = (
        decreasing_rearrangement(f),
        decreasing_rearrangement(g),
        decreasing_rearrangement(&fg),
    );
    let mut counts: Vec<usize> = vec![0];
    counts.extend(pf.counts.iter().copied());
    counts.extend(pg.counts.iter().copied());
    counts.extend(pfg.counts.iter().map(|c| c / 2));
    counts.extend(pfg.counts.iter().map(|c| c.div_ceil(2)));
    counts.sort_unstable();
    counts.dedup();
    Ok(counts
        .into_iter()
        .map(|c| pf.value_at_count(c) * pg.value_at_count(c) - pfg.value_at_count(2 * c))
        .fold(f64::INFINITY, f64::min))
}

/// Profile of `min(|x|^{-lambda}, cap)` on the grid.
pub fn weighted_power_profile(grid: &Grid, lambda: f64, cap: f64) -> Result<RearrangementProfile> {
    let n = grid.dim() as f64;
    if !(lambda > 0.0 && lambda < n) {
        return Err(invalid("lambda", format!("{lambda} outside (0, {n})")));
    }
    if !(cap > 0.0) {
        return Err(invalid("cap", "must be positive"));
    }
    let f = GridFunction::from_fn(grid, |x| {
        let r = norm(x);
        if r == 0.0 {
            cap
        } else {
            r.powf(-lambda).min(cap)
        }
    })?;
    Ok(decreasing_rearrangement(&f))
}

/// `||f(2 .)||_{p,q} / ||f||_{p,q}` divided by `2^{-n/p}`, minus 1. The
/// dilated function is sampled on a box twice as small with the same
/// number of points, `f` itself on `grid`.
pub fn scaling_law_error(
    grid: &Grid,
    f: impl Fn(&[f64]) -> f64,
    p: f64,
    q: f64,
) -> Result<f64> {
    let base = GridFunction::from_fn(grid, &f)?;
    let fine = Grid::new(grid.dim(), grid.points_per_axis() * 2, grid.box_length())?;
    let dilated = GridFunction::from_fn(&fine, |x| {
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        f(&y)
    })?;
    let a = lorentz_norm(&base, p, q)?;
    if a == 0.0 {
        return Err(Error::Degenerate("zero norm".into()));
    }
    let b = lorentz_norm(&dilated, p, q)?;
    let n = grid.dim() as f64;
    let expect = if p.is_infinite() { 1.0 } else { 2f64.powf(-n / p) };
    Ok(b / a / expect - 1.0)
}

/// Lorentz exponent pair `(p, q)`.
pub type Exponents = (f64, f64);

/// `||fg||_{p,q} / (||f||_{p1,q1} ||g||_{p2,q2})`.
pub fn holder_ratio(f: &GridFunction, g: &GridFunction, out: Exponents, a: Exponents, b: Exponents) -> Result<f64> {
    let lhs = lorentz_norm(&f.mul(g)?, out.0, out.1)?;
    let rhs = lorentz_norm(f, a.0, a.1)? * lorentz_norm(g, b.0, b.1)?;
    if rhs == 0.0 {
        return Err(Error::Degenerate("zero right-hand side".into()));
    }
    Ok(lhs / rhs)
}

/// `||f||_{p,q} / (|D|^{1/p - 1/p1} ||f||_{p1})` for `f` supported in `D`.
pub fn compact_support_ratio(f: &GridFunction, mask: &DomainMask, out: Exponents, p1: f64) -> Result<f64> {
    let outside = f.values().iter().zip(mask.as_slice()).any(|(v, &m)| !m && *v != 0.0);
    if outside {
        return Err(Error::Support("f does not vanish outside D".into()));
    }
    if p1 < out.0 {
        return Err(invalid("p1", "must be at least p"));
    }
    let rhs = mask.measure().powf(1.0 / out.0 - 1.0 / p1) * lp_norm(f, p1, Some(mask))?;
    if rhs == 0.0 {
        return Err(Error::Degenerate("zero right-hand side".into()));
    }
    Ok(lorentz_norm(f, out.0, out.1)? / rhs)
}

/// Periodic convolution `f * g` through the transform.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let mut a = transform_forward(f);
    let b = transform_forward(g);
    for (x, y) in a.coeffs_mut().iter_mut().zip(b.coeffs()) {
        *x *= y;
    }
    // centered transforms turn the product into the continuum convolution
    GridFunction::new(f.grid(), inverse_complex(&a).into_iter().map(|c| c.re).collect())
}

/// `||f * g||_{p,q} / (||f||_{p1,q1} ||g||_{p2,q2})`.
pub fn convolution_ratio(f: &GridFunction, g: &GridFunction, out: Exponents, a: Exponents, b: Exponents) -> Result<f64> {
    let lhs = lorentz_norm(&convolve(f, g)?, out.0, out.1)?;
    let rhs = lorentz_norm(f, a.0, a.1)? * lorentz_norm(g, b.0, b.1)?;
    if rhs == 0.0 {
        return Err(Error::Degenerate("zero right-hand side".into()));
    }
    Ok(lhs / rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::band_limited;

    #[test]
    fn indicator_profile_and_norms() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let f = GridFunction::from_fn(&g, |x| if (-0.25..0.25).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let prof = decreasing_rearrangement(&f);
        let mu = prof.breakpoints()[0];
        assert_eq!(prof.values(), &[1.0]);
        assert!((mu - 0.5).abs() < 1e-12);
        for (p, q) in [(2.0_f64, 1.0_f64), (3.0, 2.0), (1.5, 4.0)] {
            let expect = (p / q).powf(1.0 / q) * mu.powf(1.0 / p);
            assert!((lorentz_norm(&f, p, q).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_norm_is_lebesgue() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let f = band_limited(&g, 4).unwrap();
        let a = lorentz_norm(&f, 2.0, 2.0).unwrap();
        let b = lp_norm(&f, 2.0, None).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn distribution_is_right_continuous() {
        let prof = RearrangementProfile::from_values(&[3.0, 1.0, 1.0, 2.0, 0.0], 0.5).unwrap();
        assert_eq!(prof.distribution(0.0), 2.0);
        assert_eq!(prof.distribution(1.0), 1.0);
        assert_eq!(prof.distribution(2.5), 0.5);
        assert_eq!(prof.distribution(3.0), 0.0);
        assert_eq!(prof.value_at(0.0), 3.0);
        assert_eq!(prof.value_at(0.5), 2.0);
        assert_eq!(prof.value_at(1.9), 1.0);
        assert_eq!(prof.value_at(2.0), 0.0);
        assert!((prof.total_measure() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn admissibility() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let f = GridFunction::zeros(&g);
        assert_eq!(lorentz_norm(&f, 2.0, 3.0).unwrap(), 0.0);
        assert!(lorentz_norm(&f, f64::INFINITY, 2.0).is_err());
        assert!(lorentz_norm(&f, 1.0, 2.0).is_err());
        assert!(weighted_power_profile(&g, 1.0, 10.0).is_err());
    }

    #[test]
    fn convolution_with_centered_delta() {
        let g = Grid::new(1, 32, 2.0).unwrap();
        let f = band_limited(&g, 2).unwrap();
        let mut delta = vec![0.0; 32];
        delta[16] = 1.0 / g.spacing();
        let d = GridFunction::new(&g, delta).unwrap();
        let c = convolve(&f, &d).unwrap();
        assert!(c.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let prof = RearrangementProfile::from_values(&[2.0, 1.0], 0.5).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n0.5,2\n1,1\n");
    }
}
