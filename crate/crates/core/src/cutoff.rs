//! Dyadic partition of unity.
//!
//! `eta^0(x) = psi(|x|)` with `psi = 1` on `[0, 3/2]` and `0` beyond 2;
//! `eta^k = (1 - sum_{l<k} eta^l) * sum_{l<k} eta^l(./2)` for `k >= 1`.
//! The recursion is evaluated literally (dynamic programming over the points
//! `x / 2^j`), so support and partition properties hold to rounding; first
//! and second derivatives are carried through the same recursion as jets.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::linear_fit;
use crate::grid::{lp_norm, norm, DomainMask, Grid, GridFunction};
use crate::multiplier::frac_laplacian;

fn g(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn g1(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        g(t) / (t * t)
    }
}

fn g2(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        g(t) * (1.0 / t.powi(4) - 2.0 / t.powi(3))
    }
}

/// Radial profile of the base cutoff: 1 up to `plateau`, 0 from `support`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseProfile {
    pub plateau: f64,
    pub support: f64,
}

impl Default for BaseProfile {
    fn default() -> Self {
        Self {
            plateau: 1.5,
            support: 2.0,
        }
    }
}

impl BaseProfile {
    /// `(psi, psi', psi'')` at radius `r`.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.plateau {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.support {
            return (0.0, 0.0, 0.0);
        }
        let (ta, tb) = (self.support - r, r - self.plateau);
        let (a, b) = (g(ta), g(tb));
        let (a1, b1) = (-g1(ta), g1(tb));
        let (a2, b2) = (g2(ta), g2(tb));
        let s = a + b;
        let num = a1 * b - a * b1;
        let num1 = a2 * b - a * b2;
        (a / s, num / (s * s), (num1 * s - 2.0 * num * (a1 + b1)) / (s * s * s))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.radial(r).0
    }

    fn jet(&self, y: &[f64], scale: f64) -> Jet {
        // eta0(x / scale) as a function of x
        let dim = y.len();
        let r = norm(y);
        let (p, p1, p2) = self.radial(r);
        let mut jet = Jet::constant(p);
        if p1 == 0.0 && p2 == 0.0 {
            return jet;
        }
        for i in 0..dim {
            jet.grad[i] = p1 * y[i] / r / scale;
            for j in 0..dim {
                let uu = y[i] * y[j] / (r * r);
                let delta = if i == j { 1.0 } else { 0.0 };
                jet.hess[i][j] = (p2 * uu + p1 / r * (delta - uu)) / (scale * scale);
            }
        }
        jet
    }
}

/// `eta^0` with the default profile at normalized radius `t`.
pub fn base_profile(t: f64) -> f64 {
    BaseProfile::default().value(t)
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    fn constant(v: f64) -> Self {
        Self {
            value: v,
            grad: [0.0; 3],
            hess: [[0.0; 3]; 3],
        }
    }

    /// `a + (1 - a) b`.
    fn blend(a: &Jet, b: &Jet) -> Jet {
        let mut out = Jet::constant(a.value + (1.0 - a.value) * b.value);
        for i in 0..3 {
            out.grad[i] = a.grad[i] + (1.0 - a.value) * b.grad[i] - a.grad[i] * b.value;
            for j in 0..3 {
                out.hess[i][j] = a.hess[i][j] + (1.0 - a.value) * b.hess[i][j]
                    - a.grad[i] * b.grad[j]
                    - a.grad[j] * b.grad[i]
                    - a.hess[i][j] * b.value;
            }
        }
        out
    }

    /// `(1 - a) b`.
    fn complement_times(a: &Jet, b: &Jet) -> Jet {
        let mut out = Jet::constant((1.0 - a.value) * b.value);
        for i in 0..3 {
            out.grad[i] = (1.0 - a.value) * b.grad[i] - a.grad[i] * b.value;
            for j in 0..3 {
                out.hess[i][j] = (1.0 - a.value) * b.hess[i][j]
                    - a.grad[i] * b.grad[j]
                    - a.grad[j] * b.grad[i]
                    - a.hess[i][j] * b.value;
            }
        }
        out
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }

    /// Frobenius norm of the Hessian.
    pub fn hess_norm(&self) -> f64 {
        self.hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// The family `eta^0, ..., eta^K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicCutoffFamily {
    depth: usize,
    base: BaseProfile,
}

pub fn build_family(depth: usize, base: BaseProfile) -> Result<DyadicCutoffFamily> {
    if depth < 1 {
        return Err(invalid("depth", "K must be at least 1"));
    }
    if !(base.plateau >= 1.5 && base.support <= 2.0 && base.plateau < base.support) {
        return Err(invalid(
            "base",
            format!(
                "profile must equal 1 on B_3/2 and vanish outside B_2 (plateau {}, support {})",
                base.plateau, base.support
            ),
        ));
    }
    Ok(DyadicCutoffFamily { depth, base })
}

impl DyadicCutoffFamily {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base(&self) -> &BaseProfile {
        &self.base
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.depth {
            return Err(invalid("k", format!("{k} exceeds depth {}", self.depth)));
        }
        Ok(())
    }

    /// Partial sums `T[j][i] = sum_{l<=j} eta^l(x / 2^i)` for `i + j <= k`.
    fn partial_sums(&self, x: &[f64], k: usize) -> Vec<Vec<Jet>> {
        let mut rows: Vec<Vec<Jet>> = Vec::with_capacity(k + 1);
        let first: Vec<Jet> = (0..=k)
            .map(|i| {
                let scale = (1u64 << i) as f64;
                let y: Vec<f64> = x.iter().map(|v| v / scale).collect();
                self.base.jet(&y, scale)
            })
            .collect();
        rows.push(first);
        for j in 1..=k {
            let prev = &rows[j - 1];
            let row: Vec<Jet> = (0..=k - j).map(|i| Jet::blend(&prev[i], &prev[i + 1])).collect();
            rows.push(row);
        }
        rows
    }

    /// Jet of `eta^k` at `x` (unit scale, centered at 0).
    pub fn jet(&self, k: usize, x: &[f64]) -> Result<Jet> {
        self.check_index(k)?;
        let t = self.partial_sums(x, k);
        if k == 0 {
            return Ok(t[0][0]);
        }
        Ok(Jet::complement_times(&t[k - 1][0], &t[k - 1][1]))
    }

    pub fn value(&self, k: usize, x: &[f64]) -> Result<f64> {
        self.check_index(k)?;
        let t = self.partial_sums(x, k);
        if k == 0 {
            return Ok(t[0][0].value);
        }
        let (a, b) = (t[k - 1][0].value, t[k - 1][1].value);
        Ok((1.0 - a) * b)
    }

    /// `sum_{l<=k} eta^l(x)` summed term by term.
    pub fn partial_sum(&self, k: usize, x: &[f64]) -> Result<f64> {
        (0..=k).map(|l| self.value(l, x)).sum()
    }

    /// Declared support of `eta^k_{r,x}`: `B_{2r}` for `k = 0`, otherwise
    /// `B_{2^{k+1} r} \ closure(B_{2^{k-1} r})`.
    pub fn support_mask(&self, grid: &Grid, k: usize, r: f64, center: &[f64]) -> DomainMask {
        let outer = 2f64.powi(k as i32 + 1) * r;
        let inner = if k == 0 { -1.0 } else { 2f64.powi(k as i32 - 1) * r };
        DomainMask::from_predicate(grid, |p| {
            let d = grid.periodic_distance(p, center);
            d > inner && d < outer
        })
    }

    /// `eta^k((. - x) / r)` sampled on the grid, with its support mask.
    pub fn evaluate(&self, grid: &Grid, k: usize, r: f64, center: &[f64]) -> Result<GridFunction> {
        self.check_index(k)?;
        if r <= 0.0 {
            return Err(invalid("r", "scale must be positive"));
        }
        let outer = 2f64.powi(k as i32 + 1) * r;
        if outer > grid.box_length() / 2.0 {
            return Err(Error::Support(format!(
                "support radius {outer} exceeds half the box length {}",
                grid.box_length() / 2.0
            )));
        }
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let d = grid.periodic_delta(&grid.point(i)[..dim], center);
                let y: Vec<f64> = d[..dim].iter().map(|v| v / r).collect();
                self.value(k, &y)
            })
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::new(grid, values)?.with_support(self.support_mask(grid, k, r, center))
    }

    /// `sup |nabla^i eta^k| * 2^{k i}` for `i = 1, 2`, sampled along a ray
    /// (the functions are radial) with `samples` points per unit.
    pub fn normalized_derivative_sups(&self, k: usize, samples: usize) -> Result<[f64; 2]> {
        self.check_index(k)?;
        let outer = 2f64.powi(k as i32 + 1);
        let count = (outer * samples as f64).ceil() as usize;
        let mut sup = [0.0f64; 2];
        for i in 0..=count {
            let x = [outer * i as f64 / count as f64, 0.0, 0.0];
            let jet = self.jet(k, &x)?;
            sup[0] = sup[0].max(jet.grad_norm());
            sup[1] = sup[1].max(jet.hess_norm());
        }
        let scale = 2f64.powi(k as i32);
        Ok([sup[0] * scale, sup[1] * scale * scale])
    }
}

/// Scaling of `|| |xi|^s eta^k_r ||_{p'}` in `k`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub ks: Vec<usize>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    pub pass: bool,
}

/// Pass rule: relative 10%, or absolute 0.1 when the expected slope is 0.
pub fn slope_within(slope: f64, expected: f64, rel: f64) -> bool {
    if expected == 0.0 {
        slope.abs() <= rel
    } else {
        (slope - expected).abs() <= rel * expected.abs()
    }
}

pub fn norm_scaling_experiment(
    family: &DyadicCutoffFamily,
    grid: &Grid,
    s: f64,
    p_prime: f64,
    ks: &[usize],
    r: f64,
) -> Result<ScalingReport> {
    if ks.len() < 4 {
        return Err(invalid("k_range", "need at least four values of k"));
    }
    let center = vec![0.0; grid.dim()];
    let norms = ks
        .iter()
        .map(|&k| {
            let eta = family.evaluate(grid, k, r, &center)?;
            lp_norm(&frac_laplacian(&eta, s)?, p_prime, None)
        })
        .collect::<Result<Vec<f64>>>()?;
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.log2()).collect();
    let slope = linear_fit(&x, &y)?.slope;
    let n = grid.dim() as f64;
    let expected = -s + if p_prime.is_infinite() { 0.0 } else { n / p_prime };
    Ok(ScalingReport {
        ks: ks.to_vec(),
        norms,
        slope,
        expected,
        pass: slope_within(slope, expected, 0.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_profile_shape() {
        assert_eq!(base_profile(0.0), 1.0);
        assert_eq!(base_profile(1.5), 1.0);
        assert_eq!(base_profile(2.0), 0.0);
        let mid = base_profile(1.75);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radial_derivatives_match_differences() {
        let p = BaseProfile::default();
        for r in [1.55, 1.7, 1.8, 1.95] {
            let h = 1e-5;
            let (_, d1, d2) = p.radial(r);
            let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
            let fd2 = (p.radial(r + h).1 - p.radial(r - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn first_member_formula() {
        let fam = build_family(1, BaseProfile::default()).unwrap();
        for r in [0.5, 1.2, 1.7, 2.5, 3.1, 3.9, 4.2] {
            let expect = (1.0 - base_profile(r)) * base_profile(r / 2.0);
            assert_eq!(fam.value(1, &[r]).unwrap(), expect);
        }
        assert_eq!(fam.value(1, &[1.0]).unwrap(), 0.0);
        assert_eq!(fam.value(1, &[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn jets_match_differences() {
        let fam = build_family(3, BaseProfile::default()).unwrap();
        let x = [2.3, 1.9];
        let h = 1e-5;
        let j = fam.jet(2, &x).unwrap();
        for axis in 0..2 {
            let mut a = x;
            let mut b = x;
            a[axis] += h;
            b[axis] -= h;
            let fd = (fam.value(2, &a).unwrap() - fam.value(2, &b).unwrap()) / (2.0 * h);
            assert!((fd - j.grad[axis]).abs() < 1e-7);
            let fdh = (fam.jet(2, &a).unwrap().grad[0] - fam.jet(2, &b).unwrap().grad[0]) / (2.0 * h);
            assert!((fdh - j.hess[0][axis]).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_family(0, BaseProfile::default()).is_err());
        let bad = BaseProfile { plateau: 1.0, support: 2.0 };
        assert!(build_family(3, bad).is_err());
        let fam = build_family(3, BaseProfile::default()).unwrap();
        let g = Grid::new(1, 64, 8.0).unwrap();
        assert!(matches!(fam.evaluate(&g, 2, 1.0, &[0.0]), Err(Error::Support(_))));
    }
}
