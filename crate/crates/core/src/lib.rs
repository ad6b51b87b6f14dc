//! Numerics for fractional Laplacians on periodic grids: Fourier multipliers,
//! singular-integral quadrature, Lorentz norms, dyadic cutoffs, compensation
//! commutators, fractional Poincaré and Hodge decompositions, and discrete
//! growth/iteration lemmas.

pub mod calibration;
pub mod compensation;
pub mod cutoff;
pub mod error;
pub mod fields;
pub mod fit;
pub mod grid;
pub mod growth;
pub mod hodge;
pub mod lorentz;
pub mod multiplier;
pub mod poincare;
pub mod singular;
pub mod solvers;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
pub use grid::{lp_norm, DomainMask, Grid, GridFunction};
pub use multiplier::{apply_symbol, frac_laplacian, inv_frac_laplacian, ZeroModePolicy};
pub use spectral::{transform_forward, transform_inverse_real, Spectrum};
pub use symbol::{FrequencySymbol, MultiIndex};
