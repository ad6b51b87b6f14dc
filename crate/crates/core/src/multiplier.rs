//! Fourier multiplier operators on periodic grids.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::base_profile;
use crate::error::{invalid, Error, Result};
use crate::fit::loglog_slope;
use crate::grid::{norm, lp_norm, DomainMask, Grid, GridFunction};
use crate::spectral::{inverse_complex, transform_forward, Spectrum};
use crate::symbol::{FrequencySymbol, MultiIndex};

/// Treatment of the `xi = 0` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroModePolicy {
    /// Set the zero mode to 0.
    Annihilate,
    /// Keep the zero mode unchanged (multiplier 1 there).
    IdentityForSZero,
    /// Drop the mean before applying a negative-order operator.
    ProjectMeanFirst,
}

/// Multiplier values on every lattice point, with Nyquist symmetrization for
/// real symbols so that real inputs stay real.
pub fn symbol_table(grid: &Grid, m: &FrequencySymbol, policy: ZeroModePolicy) -> Result<Vec<Complex64>> {
    if m.dim() != grid.dim() {
        return Err(invalid("symbol", format!("dim {} on a {}-dimensional grid", m.dim(), grid.dim())));
    }
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let table: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            if flat == 0 {
                return match policy {
                    ZeroModePolicy::IdentityForSZero => Complex64::new(1.0, 0.0),
                    _ => Complex64::new(0.0, 0.0),
                };
            }
            let xi = grid.frequency(flat);
            let v = m.evaluate(&xi[..dim]);
            let idx = grid.unravel(flat);
            let nyquist = idx[..dim].contains(&(n / 2));
            if m.is_real() && nyquist {
                let partner = grid.frequency(grid.negated_index(flat));
                0.5 * (v + m.evaluate(&partner[..dim]).conj())
            } else {
                v
            }
        })
        .collect();
    if table.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::SymbolNotFinite { id: m.id().to_string() });
    }
    Ok(table)
}

pub(crate) fn multiply_table(spectrum: &mut Spectrum, table: &[Complex64]) {
    spectrum
        .coeffs_mut()
        .par_iter_mut()
        .zip(table.par_iter())
        .for_each(|(c, t)| *c *= t);
}

/// Complex result of applying `m`, for symbols without the reality flag.
pub fn apply_symbol_complex(f: &GridFunction, m: &FrequencySymbol, policy: ZeroModePolicy) -> Result<Vec<Complex64>> {
    let table = symbol_table(f.grid(), m, policy)?;
    let mut spec = transform_forward(f);
    multiply_table(&mut spec, &table);
    Ok(inverse_complex(&spec))
}

/// Real-to-real application of a symbol carrying the reality flag.
pub fn apply_symbol(f: &GridFunction, m: &FrequencySymbol, policy: ZeroModePolicy) -> Result<GridFunction> {
    if !m.is_real() {
        return Err(Error::Unsupported(format!(
            "symbol `{}` does not map real fields to real fields; use apply_symbol_complex",
            m.id()
        )));
    }
    let out = apply_symbol_complex(f, m, policy)?;
    GridFunction::new(f.grid(), out.into_iter().map(|c| c.re).collect())
}

/// Apply a sequence of real symbols in a single transform pair.
pub fn apply_product(f: &GridFunction, symbols: &[&FrequencySymbol], policy: ZeroModePolicy) -> Result<GridFunction> {
    let mut spec = transform_forward(f);
    for m in symbols {
        if !m.is_real() {
            return Err(Error::Unsupported(format!("symbol `{}` is not real", m.id())));
        }
        multiply_table(&mut spec, &symbol_table(f.grid(), m, policy)?);
    }
    GridFunction::new(f.grid(), inverse_complex(&spec).into_iter().map(|c| c.re).collect())
}

/// `|xi|^s` applied; `s = 0` is the identity and `s < 0` inverts.
pub fn frac_laplacian(f: &GridFunction, s: f64) -> Result<GridFunction> {
    if !s.is_finite() {
        return Err(invalid("s", "must be finite"));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    if s < 0.0 {
        return inv_frac_laplacian(f, -s, ZeroModePolicy::Annihilate);
    }
    apply_abs_pow(f, s)
}

fn apply_abs_pow(f: &GridFunction, s: f64) -> Result<GridFunction> {
    let grid = f.grid();
    let dim = grid.dim();
    let mut spec = transform_forward(f);
    spec.coeffs_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(flat, c)| {
            if flat == 0 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= norm(&grid.frequency(flat)[..dim]).powf(s);
            }
        });
    GridFunction::new(grid, inverse_complex(&spec).into_iter().map(|c| c.re).collect())
}

/// Relative mean `|mean| / rms`, the quantity checked before inverting.
fn relative_mean(f: &GridFunction) -> f64 {
    let rms = (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt();
    if rms == 0.0 {
        0.0
    } else {
        f.mean().abs() / rms
    }
}

/// `|xi|^{-s}` on nonzero modes.
pub fn inv_frac_laplacian(f: &GridFunction, s: f64, policy: ZeroModePolicy) -> Result<GridFunction> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("{s} must be positive")));
    }
    if policy != ZeroModePolicy::ProjectMeanFirst && relative_mean(f) > 1e-10 {
        return Err(Error::NonZeroMean { mean: f.mean() });
    }
    apply_abs_pow(f, -s)
}

/// `d^alpha f` computed spectrally.
pub fn derivative(f: &GridFunction, alpha: MultiIndex) -> Result<GridFunction> {
    if alpha.order() == 0 {
        return Ok(f.clone());
    }
    let m = FrequencySymbol::derivative(f.grid().dim(), alpha)?;
    apply_symbol(f, &m, ZeroModePolicy::Annihilate)
}

/// All partial derivatives of order exactly `k`, ordered as
/// [`MultiIndex::all_up_to`], paired with their multinomial weights
/// `k!/alpha!` so that `sum w |d^alpha f|^2 = |nabla^k f|^2`.
pub fn derivatives_of_order(f: &GridFunction, k: u32) -> Result<Vec<(GridFunction, f64)>> {
    let kf: f64 = (1..=k).map(f64::from).product();
    MultiIndex::all_up_to(f.grid().dim(), k)
        .into_iter()
        .filter(|a| a.order() == k)
        .map(|a| Ok((derivative(f, a)?, kf / a.factorial())))
        .collect()
}

/// `chi(x) x^alpha` with a smooth window `chi = 1` on `B_radius(0)`.
pub fn windowed_monomial(grid: &Grid, alpha: MultiIndex, radius: f64) -> Result<GridFunction> {
    if radius <= 0.0 {
        return Err(invalid("radius", "must be positive"));
    }
    let rho = radius / 1.5;
    GridFunction::from_fn(grid, |x| base_profile(norm(x) / rho) * alpha.monomial(x))
}

fn monomial_field(grid: &Grid, alpha: MultiIndex, radius: f64, coef: f64) -> Result<GridFunction> {
    Ok(windowed_monomial(grid, alpha, radius)?.scale(coef))
}

/// `|| M |xi|^s (Q phi) - sum_beta d^beta Q / beta! * M_{beta,s} |xi|^{s-|beta|} phi ||`
/// on `window`, for `Q = x^alpha` realized with a smooth window on the
/// central third.
pub fn product_rule_residual(
    phi: &GridFunction,
    alpha: MultiIndex,
    s: f64,
    window: &DomainMask,
    m: &FrequencySymbol,
) -> Result<f64> {
    let order = alpha.order();
    if s < f64::from(order) {
        return Err(invalid("s", format!("{s} < |alpha| = {order}")));
    }
    if window.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = phi.grid();
    let radius = grid.box_length() / 3.0;
    let q = monomial_field(grid, alpha, radius, 1.0)?;
    let abs_s = FrequencySymbol::abs_pow(grid.dim(), s)?;
    let zero = if s == 0.0 {
        ZeroModePolicy::IdentityForSZero
    } else {
        ZeroModePolicy::Annihilate
    };
    let lhs = apply_product(&q.mul(phi)?, &[m, &abs_s], zero)?;
    let mut rhs = GridFunction::zeros(grid);
    for beta in alpha.sub_indices() {
        let rest = alpha.checked_sub(&beta).expect("beta <= alpha");
        // d^beta x^alpha = alpha!/(alpha-beta)! x^{alpha-beta}
        let coef = alpha.factorial() / rest.factorial() / beta.factorial();
        let dq = monomial_field(grid, rest, radius, coef)?;
        let mb = m.derived(beta, s)?;
        let t = s - f64::from(beta.order());
        let abs_t = FrequencySymbol::abs_pow(grid.dim(), t)?;
        let policy = if t == 0.0 && beta.order() == 0 {
            zero
        } else {
            ZeroModePolicy::Annihilate
        };
        let term = apply_product(phi, &[&mb, &abs_t], policy)?;
        rhs = rhs.add(&dq.mul(&term)?)?;
    }
    lp_norm(&lhs.sub(&rhs)?, 2.0, Some(window))
}

/// Decay of `I(R) = |int eta_R x^alpha |xi|^s phi|` in `R`.
#[derive(Debug, Clone, Serialize)]
pub struct AnnihilationReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

pub fn polynomial_annihilation(
    alpha: MultiIndex,
    s: f64,
    phi: &GridFunction,
    r_list: &[f64],
    p_prime: f64,
) -> Result<AnnihilationReport> {
    if r_list.len() < 3 {
        return Err(invalid("r_list", "need at least three radii"));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("r_list", "radii must increase"));
    }
    let order = f64::from(alpha.order());
    if s <= order {
        return Err(invalid("s", format!("{s} must exceed |alpha| = {order}")));
    }
    let grid = phi.grid();
    let half = grid.box_length() / 2.0;
    if r_list.iter().any(|&r| 2.0 * r > half) {
        return Err(invalid("r_list", "cutoff support B_{2R} leaves the box"));
    }
    let lap = frac_laplacian(phi, s)?;
    let values = r_list
        .iter()
        .map(|&r| {
            let w = GridFunction::from_fn(grid, |x| base_profile(norm(x) / r) * alpha.monomial(x))?;
            Ok(w.inner(&lap)?.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = grid.dim() as f64;
    let bound = -s + order + if p_prime.is_infinite() { 0.0 } else { n / p_prime };
    let floor = 1e-10 * lp_norm(&lap, 1.0, None)?.max(f64::MIN_POSITIVE);
    let slope = if values.iter().all(|&v| v > floor) {
        Some(loglog_slope(r_list, &values)?)
    } else {
        None
    };
    // below the floor the integral is numerically zero, which satisfies any decay bound
    let pass = slope.is_none_or(|sl| sl <= bound);
    Ok(AnnihilationReport {
        radii: r_list.to_vec(),
        values,
        slope,
        bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::band_limited;
    use std::f64::consts::PI;

    fn cos_mode(g: &Grid, k: f64) -> GridFunction {
        GridFunction::from_fn(g, |x| (2.0 * PI * k * x[0]).cos()).unwrap()
    }

    #[test]
    fn identity_and_eigenfunctions() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let f = band_limited(&g, 3).unwrap();
        let id = FrequencySymbol::identity(1).unwrap();
        let out = apply_symbol(&f, &id, ZeroModePolicy::IdentityForSZero).unwrap();
        assert!(out.sub(&f).unwrap().max_abs() < 1e-12);

        let c = cos_mode(&g, 1.0);
        let abs1 = FrequencySymbol::abs_pow(1, 1.0).unwrap();
        let out = apply_symbol(&c, &abs1, ZeroModePolicy::Annihilate).unwrap();
        assert!(out.sub(&c).unwrap().max_abs() < 1e-12);

        let sine = GridFunction::from_fn(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let riesz = FrequencySymbol::riesz(1, 0).unwrap();
        let out = apply_symbol(&sine, &riesz, ZeroModePolicy::Annihilate).unwrap();
        assert!(out.sub(&c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn frac_laplacian_examples() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let c3 = cos_mode(&g, 3.0);
        let out = frac_laplacian(&c3, 0.5).unwrap();
        assert!(out.sub(&c3.scale(3f64.sqrt())).unwrap().max_abs() < 1e-12);
        let k = frac_laplacian(&GridFunction::constant(&g, 2.0), 1.0).unwrap();
        assert!(k.max_abs() < 1e-14);
        let f = band_limited(&g, 11).unwrap();
        let a = frac_laplacian(&frac_laplacian(&f, 0.3).unwrap(), 0.9).unwrap();
        let b = frac_laplacian(&f, 1.2).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() <= 1e-10 * b.l2_norm());
    }

    #[test]
    fn inverse_examples() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let c = cos_mode(&g, 1.0);
        let out = inv_frac_laplacian(&c, 1.0, ZeroModePolicy::Annihilate).unwrap();
        assert!(out.sub(&c).unwrap().max_abs() < 1e-12);
        let one = GridFunction::constant(&g, 1.0);
        assert!(matches!(
            inv_frac_laplacian(&one, 1.0, ZeroModePolicy::Annihilate),
            Err(Error::NonZeroMean { .. })
        ));
        let shifted = c.map(|v| v + 0.25);
        let inv = inv_frac_laplacian(&shifted, 0.7, ZeroModePolicy::ProjectMeanFirst).unwrap();
        let back = frac_laplacian(&inv, 0.7).unwrap();
        assert!(back.sub(&c).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn nyquist_keeps_output_real() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let alt = GridFunction::from_fn(&g, |x| (PI * 16.0 * x[0]).cos()).unwrap();
        let riesz = FrequencySymbol::riesz(1, 0).unwrap();
        let out = apply_symbol_complex(&alt, &riesz, ZeroModePolicy::Annihilate).unwrap();
        assert!(out.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn product_rule_trivial_q() {
        let g = Grid::new(1, 128, 12.0).unwrap();
        let phi = crate::fields::bump(&g, &[0.0], 1.0).unwrap();
        let window = DomainMask::ball(&g, &[0.0], 1.5);
        let m = FrequencySymbol::identity(1).unwrap();
        let res = product_rule_residual(&phi, MultiIndex::zero(), 0.8, &window, &m).unwrap();
        assert!(res < 1e-12);
        assert!(product_rule_residual(&phi, MultiIndex::unit(0).add(&MultiIndex::unit(0)), 1.0, &window, &m).is_err());
    }

    #[test]
    fn annihilation_needs_three_radii() {
        let g = Grid::new(1, 128, 64.0).unwrap();
        let phi = crate::fields::bump(&g, &[0.0], 1.0).unwrap();
        assert!(polynomial_annihilation(MultiIndex::zero(), 1.0, &phi, &[2.0, 4.0], 2.0).is_err());
    }
}
