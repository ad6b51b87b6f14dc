//! Discrete Fourier transform with continuum normalization.
//!
//! Forward: `F(xi) = h^dim * sum_j f(x_j) exp(-2 pi i x_j . xi)` with
//! `xi = mode / L`. Inverse: `f(x_j) = L^-dim * sum_xi F(xi) exp(2 pi i x_j . xi)`.
//! With this pair, `sum_j |f(x_j)|^2 h^dim = L^-dim sum_xi |F(xi)|^2` holds
//! exactly, and `F` approximates the continuum transform of compactly
//! supported data.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, forward))
        .or_insert_with(|| {
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

/// In-place unnormalized DFT along every axis.
fn fft_all_axes(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let fft = plan(n, forward);
    let total = data.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Unnormalized DFT in index order, no centering or quadrature weights.
pub(crate) fn dft_in_place(grid: &Grid, data: &mut [Complex64], forward: bool) {
    fft_all_axes(grid, data, forward);
}

/// Sign `(-1)^{sum of per-axis indices}` from centering the grid at 0.
fn centering_sign(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.unravel(flat);
    let parity: usize = idx[..grid.dim()].iter().sum();
    if parity.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Coefficient table on the frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: *grid,
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at the given signed modes.
    pub fn at_modes(&self, modes: &[i64]) -> Complex64 {
        let n = self.grid.points_per_axis() as i64;
        let mut idx = [0usize; 3];
        for axis in 0..self.grid.dim() {
            idx[axis] = modes[axis].rem_euclid(n) as usize;
        }
        self.coeffs[self.grid.ravel(&idx)]
    }

    /// `L^-dim sum |F|^2`, equal to the squared quadrature L2 norm.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.volume()
    }

    /// Fraction of spectral energy at modes with some `|mode| >= N/4`.
    pub fn high_band_fraction(&self) -> f64 {
        let quarter = (self.grid.points_per_axis() / 4) as i64;
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let idx = self.grid.unravel(*i);
                idx[..self.grid.dim()]
                    .iter()
                    .any(|&k| self.grid.mode(k).abs() >= quarter)
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        high / total
    }
}

pub fn forward_complex(grid: &Grid, values: &[Complex64]) -> Spectrum {
    let mut data = values.to_vec();
    fft_all_axes(grid, &mut data, true);
    let w = grid.cell_volume();
    for (i, c) in data.iter_mut().enumerate() {
        *c *= w * centering_sign(grid, i);
    }
    Spectrum {
        grid: *grid,
        coeffs: data,
    }
}

pub fn inverse_complex(spectrum: &Spectrum) -> Vec<Complex64> {
    let grid = spectrum.grid;
    let mut data: Vec<Complex64> = spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * centering_sign(&grid, i))
        .collect();
    fft_all_axes(&grid, &mut data, false);
    let w = 1.0 / grid.volume();
    for c in data.iter_mut() {
        *c *= w;
    }
    data
}

/// Forward transform of a real field.
pub fn transform_forward(f: &GridFunction) -> Spectrum {
    let values: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_complex(f.grid(), &values)
}

/// Inverse transform, keeping the real part, plus the largest imaginary
/// residue for callers that need to check reality.
pub fn transform_inverse_real(spectrum: &Spectrum) -> Result<(GridFunction, f64)> {
    let data = inverse_complex(spectrum);
    let imag = data.iter().fold(0.0, |m: f64, c| m.max(c.im.abs()));
    let f = GridFunction::new(&spectrum.grid, data.into_iter().map(|c| c.re).collect())?;
    Ok((f, imag))
}

/// Parseval sum `L^-dim sum |F|^2` of a field.
pub fn parseval_energy(f: &GridFunction) -> f64 {
    transform_forward(f).energy()
}
