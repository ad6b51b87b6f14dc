//! Seeded test fields.
//!
//! One distribution backs every calibrated constant: Gaussian Fourier
//! coefficients on the modes with `|mode|_inf <= N/8`, turned into a real
//! field and scaled to unit L2 norm.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::grid::{norm, Grid, GridFunction};
use crate::spectral::{inverse_complex, Spectrum};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with Gaussian coefficients on `|mode|_inf <= cutoff`, zero mean
/// removed when `mean_free`, unit L2 norm.
pub fn band_limited_with_cutoff(
    grid: &Grid,
    seed: u64,
    cutoff: usize,
    mean_free: bool,
) -> Result<GridFunction> {
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be at least one mode"));
    }
    let mut rng = rng(seed);
    let cutoff = cutoff as i64;
    let coeffs = (0..grid.len())
        .map(|flat| {
            let idx = grid.unravel(flat);
            let inside = idx[..grid.dim()]
                .iter()
                .all(|&k| grid.mode(k).abs() <= cutoff);
            // draw for every mode so the stream does not depend on the cutoff
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if inside && !(mean_free && flat == 0) {
                Complex64::new(re, im)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let spectrum = Spectrum::new(grid, coeffs)?;
    let values: Vec<f64> = inverse_complex(&spectrum).into_iter().map(|c| c.re).collect();
    let f = GridFunction::new(grid, values)?;
    let l2 = f.l2_norm();
    if l2 == 0.0 {
        return Err(invalid("seed", "generated field vanished"));
    }
    Ok(f.scale(1.0 / l2))
}

/// The standard generator: cutoff `N/8`, mean-free, unit L2 norm.
pub fn band_limited(grid: &Grid, seed: u64) -> Result<GridFunction> {
    band_limited_with_cutoff(grid, seed, grid.points_per_axis() / 8, true)
}

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`, zero outside. Equals 1 at 0.
pub fn bump_profile(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Smooth bump of radius `r` at `center`.
pub fn bump(grid: &Grid, center: &[f64], r: f64) -> Result<GridFunction> {
    if r <= 0.0 {
        return Err(invalid("r", "radius must be positive"));
    }
    GridFunction::from_fn(grid, |x| {
        bump_profile(grid.periodic_distance(x, center) / r)
    })
}

/// Band-limited field multiplied by a bump of radius `r`: a smooth random
/// function supported in `B_r(center)`, unit L2 norm.
pub fn windowed_field(grid: &Grid, seed: u64, center: &[f64], r: f64, cutoff: usize) -> Result<GridFunction> {
    let base = band_limited_with_cutoff(grid, seed, cutoff, false)?;
    let window = bump(grid, center, r)?;
    let f = base.mul(&window)?;
    let l2 = f.l2_norm();
    if l2 == 0.0 {
        return Err(invalid("r", "window contains no grid points"));
    }
    Ok(f.scale(1.0 / l2))
}

/// Seeded direction on the unit sphere of `R^dim`.
pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::transform_forward;

    #[test]
    fn generator_is_seeded_and_normalized() {
        let g = Grid::new(2, 32, 1.0).unwrap();
        let a = band_limited(&g, 7).unwrap();
        let b = band_limited(&g, 7).unwrap();
        let c = band_limited(&g, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.l2_norm() - 1.0).abs() < 1e-12);
        assert!(a.mean().abs() < 1e-12);
        assert!(transform_forward(&a).high_band_fraction() < 1e-20);
    }

    #[test]
    fn bump_support() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let f = bump(&g, &[0.0], 1.0).unwrap();
        for i in 0..g.len() {
            if g.point(i)[0].abs() >= 1.0 {
                assert_eq!(f.values()[i], 0.0);
            }
        }
        assert_eq!(f.values()[32], 1.0);
    }
}
