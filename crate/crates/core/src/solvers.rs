//! Matrix-free Krylov and power iterations on flat vectors.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fields::rng;
use crate::grid::{DomainMask, Grid, GridFunction};

/// Coordinates of grid functions supported in a mask.
#[derive(Debug, Clone)]
pub struct MaskSpace {
    grid: Grid,
    indices: Vec<usize>,
}

impl MaskSpace {
    pub fn new(mask: &DomainMask) -> Result<Self> {
        let indices = mask.indices();
        if indices.is_empty() {
            return Err(Error::Degenerate("empty mask".into()));
        }
        Ok(Self { grid: *mask.grid(), indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn embed(&self, coords: &[f64]) -> Result<GridFunction> {
        let mut values = vec![0.0; self.grid.len()];
        for (&i, &c) in self.indices.iter().zip(coords) {
            values[i] = c;
        }
        GridFunction::new(&self.grid, values)
    }

    pub fn extract(&self, f: &GridFunction) -> Vec<f64> {
        self.indices.iter().map(|&i| f.values()[i]).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn vnorm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit.
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive semidefinite operator.
/// A zero right-hand side returns zero immediately.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let bn = vnorm(b);
    let mut x = vec![0.0; b.len()];
    if bn == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence {
                solver: "conjugate gradient",
                iterations: it,
                residual: rr.sqrt() / bn,
            });
        }
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bn {
            // confirm with a true residual to guard against drift
            let ax = apply(&x)?;
            let true_res = vnorm(&b.iter().zip(&ax).map(|(u, v)| u - v).collect::<Vec<_>>()) / bn;
            if true_res <= tol {
                return Ok(CgOutcome {
                    x,
                    iterations: it,
                    relative_residual: true_res,
                });
            }
            r = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
            p = r.clone();
            rr = dot(&r, &r);
            continue;
        }
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: rr.sqrt() / bn,
    })
}

#[derive(Debug, Clone)]
pub struct PowerOutcome {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator, by
/// power iteration on Rayleigh quotients from a seeded start.
pub fn power_iteration(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    len: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<PowerOutcome> {
    let mut rng = rng(seed);
    let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    let n = vnorm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut last = f64::NAN;
    for it in 1..=max_iter {
        let w = apply(&v)?;
        let lambda = dot(&v, &w);
        let wn = vnorm(&w);
        if wn == 0.0 {
            return Ok(PowerOutcome {
                eigenvalue: 0.0,
                vector: v,
                iterations: it,
            });
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if (lambda - last).abs() < tol * lambda.abs() {
            return Ok(PowerOutcome {
                eigenvalue: lambda,
                vector: v,
                iterations: it,
            });
        }
        last = lambda;
    }
    Err(Error::NoConvergence {
        solver: "power iteration",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: Vec<f64>) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
        move |x: &[f64]| Ok(x.iter().zip(&d).map(|(a, b)| a * b).collect())
    }

    #[test]
    fn cg_solves_diagonal() {
        let d: Vec<f64> = (1..=20).map(f64::from).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let out = conjugate_gradient(diag(d.clone()), &b, 1e-12, 100).unwrap();
        for i in 0..20 {
            assert!((out.x[i] * d[i] - b[i]).abs() < 1e-10);
        }
        let zero = conjugate_gradient(diag(d), &[0.0; 20], 1e-12, 100).unwrap();
        assert_eq!(zero.iterations, 0);
    }

    #[test]
    fn power_finds_top_eigenvalue() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let out = power_iteration(diag(d), 10, 3, 1e-12, 10_000).unwrap();
        assert!((out.eigenvalue - 10.0).abs() < 1e-6);
    }
}
