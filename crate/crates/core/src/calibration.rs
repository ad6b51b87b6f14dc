//! Empirical constants fixed by seeded calibration runs and enforced
//! afterwards as regression bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Current constants-file format.
pub const CONSTANTS_VERSION: u32 = 1;

/// Slack applied to every calibrated bound.
pub const REGRESSION_SLACK: f64 = 1.01;

/// Grid parameters a constant was calibrated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        Self {
            dim: g.dim(),
            points_per_axis: g.points_per_axis(),
            box_length: g.box_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub oracle: String,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstant {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

impl CalibratedConstant {
    pub fn new(name: impl Into<String>, value: f64, provenance: Provenance) -> Result<Self> {
        let name = name.into();
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid("value", format!("constant `{name}` = {value} must be finite and positive")));
        }
        Ok(Self { name, value, provenance })
    }

    /// Largest admissible sample under the regression policy.
    pub fn bound(&self) -> f64 {
        self.value * REGRESSION_SLACK
    }

    /// `bound - sample`; nonnegative means the regression passes.
    pub fn margin(&self, sample: f64) -> f64 {
        self.bound() - sample
    }
}

/// Calibrate as the maximum over a family of samples.
pub fn calibrate_max(name: &str, samples: &[f64], provenance: Provenance) -> Result<CalibratedConstant> {
    if samples.is_empty() {
        return Err(invalid("samples", "cannot calibrate on an empty family"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid("samples", "non-finite sample"));
    }
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    CalibratedConstant::new(name, max, provenance)
}

/// Versioned collection of constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub version: u32,
    pub suite: String,
    pub seed: u64,
    pub constants: Vec<CalibratedConstant>,
}

impl ConstantsFile {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        Self {
            version: CONSTANTS_VERSION,
            suite: suite.into(),
            seed,
            constants: Vec::new(),
        }
    }

    pub fn insert(&mut self, c: CalibratedConstant) {
        match self.constants.iter_mut().find(|o| o.name == c.name) {
            Some(slot) => *slot = c,
            None => self.constants.push(c),
        }
    }

    pub fn get(&self, name: &str) -> Option<&CalibratedConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Look up a constant, refusing if it was calibrated on another grid.
    pub fn for_grid(&self, name: &str, grid: Option<&GridSpec>) -> Result<&CalibratedConstant> {
        if self.version != CONSTANTS_VERSION {
            return Err(Error::Constraint(format!(
                "constants file version {} differs from supported version {CONSTANTS_VERSION}",
                self.version
            )));
        }
        let c = self
            .get(name)
            .ok_or_else(|| invalid("constants", format!("no calibrated constant `{name}`")))?;
        if let (Some(want), Some(have)) = (grid, c.provenance.grid.as_ref()) {
            if want != have {
                return Err(Error::Constraint(format!(
                    "constant `{name}` was calibrated on grid {have:?}, refusing to regress on {want:?}"
                )));
            }
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            seed: Some(1),
            oracle: "test".into(),
            grid: Some(GridSpec { dim: 1, points_per_axis: 64, box_length: 1.0 }),
        }
    }

    #[test]
    fn calibrate_then_regress() {
        let c = calibrate_max("c", &[0.5, 2.0, 1.0], prov()).unwrap();
        assert_eq!(c.value, 2.0);
        assert!(c.margin(2.0) >= 0.0);
        assert!(c.margin(2.03) < 0.0);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(CalibratedConstant::new("z", 0.0, prov()).is_err());
        assert!(CalibratedConstant::new("n", f64::NAN, prov()).is_err());
        assert!(calibrate_max("e", &[], prov()).is_err());
    }

    #[test]
    fn grid_mismatch_refused() {
        let mut file = ConstantsFile::new("suite", 1);
        file.insert(calibrate_max("c", &[1.0], prov()).unwrap());
        let same = GridSpec { dim: 1, points_per_axis: 64, box_length: 1.0 };
        let other = GridSpec { dim: 1, points_per_axis: 128, box_length: 1.0 };
        assert!(file.for_grid("c", Some(&same)).is_ok());
        assert!(matches!(file.for_grid("c", Some(&other)), Err(Error::Constraint(_))));
    }
}
