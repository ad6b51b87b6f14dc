use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Everything a run depends on. Unset numeric fields fall back to the
/// experiment's defaults; `dim` and `s` also select among built-in cases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub dim: Option<usize>,
    pub points_per_axis: Option<usize>,
    pub box_length: Option<f64>,
    pub s: Option<f64>,
    pub seed: u64,
    pub scales: Option<Vec<f64>>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub constants: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            ..Self::default()
        }
    }

    /// Field-level checks that do not depend on the experiment.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.dim {
            if !(1..=3).contains(&d) {
                return Err(config("dim", format!("{d} is not 1, 2 or 3")));
            }
        }
        if let Some(n) = self.points_per_axis {
            if n < 8 || !n.is_power_of_two() {
                return Err(config("points_per_axis", format!("{n} is not a power of two >= 8")));
            }
        }
        if let Some(l) = self.box_length {
            if !(l.is_finite() && l > 0.0) {
                return Err(config("box_length", format!("{l} must be positive")));
            }
        }
        if let Some(s) = self.s {
            if !(s.is_finite() && s > 0.0) {
                return Err(config("s", format!("{s} must be positive")));
            }
        }
        if let Some(sc) = &self.scales {
            if sc.is_empty() || sc.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(config("scales", "need a nonempty list of positive numbers"));
            }
        }
        Ok(())
    }

    pub(crate) fn grid_or(&self, default: usize) -> usize {
        self.points_per_axis.unwrap_or(default)
    }

    pub(crate) fn box_or(&self, default: f64) -> f64 {
        self.box_length.unwrap_or(default)
    }

    pub(crate) fn scales_or(&self, default: &[f64]) -> Vec<f64> {
        self.scales.clone().unwrap_or_else(|| default.to_vec())
    }

    /// Keep the built-in cases matching `--dim` / `--s`, if given.
    pub(crate) fn select<T: Copy>(&self, cases: &[T], dim: impl Fn(&T) -> usize, s: impl Fn(&T) -> f64) -> Result<Vec<T>> {
        let picked: Vec<T> = cases
            .iter()
            .copied()
            .filter(|c| self.dim.is_none_or(|d| d == dim(c)))
            .filter(|c| self.s.is_none_or(|v| (v - s(c)).abs() < 1e-12))
            .collect();
        if picked.is_empty() {
            return Err(config("dim", "no built-in case matches the requested dim/s"));
        }
        Ok(picked)
    }
}
