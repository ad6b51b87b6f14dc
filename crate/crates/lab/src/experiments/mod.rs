//! The experiment registry: one id per checked property.

mod algebra;
mod growth;
mod locality;
mod operators;

use std::time::Instant;

use fracmap_core::calibration::ConstantsFile;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{Outcome, Report};
use crate::suites::read_constants;

pub use algebra::{SCALING_TOL, STRUCTURE_TOL};
pub use growth::{EXPONENT_TOL, SEQUENCES};
pub use locality::{HARMONIC_SLACK, HODGE_ENERGY, HODGE_ORTHOGONALITY, HODGE_RESIDUAL, PAIRING_REL_TOL, POINCARE_REL_TOL};
pub use operators::{DEFINITION_SECONDS, DEFINITION_TOL, EQUIVALENCE_SPREAD, PARTITION_TOL};

type RunFn = fn(&ExperimentConfig, Option<&ConstantsFile>) -> Result<Outcome>;

pub struct Experiment {
    pub id: &'static str,
    pub summary: &'static str,
    run: RunFn,
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        id: "definition-equivalence",
        summary: "calibrated singular-integral quadrature against the spectral operator on a bump",
        run: operators::definition_equivalence,
    },
    Experiment {
        id: "norm-equivalence",
        summary: "spectral vs. double-integral seminorm ratio across seeded fields",
        run: operators::norm_equivalence,
    },
    Experiment {
        id: "partition-of-unity",
        summary: "dyadic cutoffs sum to one and respect their annular supports",
        run: operators::partition_of_unity,
    },
    Experiment {
        id: "cutoff-scaling",
        summary: "scaling of fractional derivatives of dyadic cutoffs in k",
        run: operators::cutoff_scaling,
    },
    Experiment {
        id: "hodge",
        summary: "local Hodge splitting: residual, orthogonality and energy bound",
        run: locality::hodge,
    },
    Experiment {
        id: "disjoint-support",
        summary: "decay of fractional pairings between disjointly supported bumps",
        run: locality::disjoint_support,
    },
    Experiment {
        id: "poincare-scaling",
        summary: "fractional Poincaré constants on balls scale like r^s",
        run: locality::poincare_scaling,
    },
    Experiment {
        id: "harmonic-decay",
        summary: "worst-case mass of local-splitting remainders in a small ball",
        run: locality::harmonic_decay,
    },
    Experiment {
        id: "lorentz-algebra",
        summary: "rearrangement product bound, weak-norm bound, scaling law, calibrated Hölder constants",
        run: algebra::lorentz_algebra,
    },
    Experiment {
        id: "compensation",
        summary: "structure identity for sphere-valued maps and calibrated commutator bounds",
        run: algebra::compensation,
    },
    Experiment {
        id: "iteration-lemmas",
        summary: "growth conclusions on generated sequences and witnesses on counterexamples",
        run: growth::iteration_lemmas,
    },
    Experiment {
        id: "dirichlet-growth",
        summary: "three Hölder-exponent estimators on synthetic power singularities",
        run: growth::dirichlet_growth,
    },
];

pub fn find(id: &str) -> Result<&'static Experiment> {
    EXPERIMENTS
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| LabError::UnknownExperiment(id.to_string()))
}

/// Validate, run and time one experiment; writes the report when
/// `config.out` is set.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    let exp = find(&config.experiment)?;
    config.validate()?;
    let constants = config.constants.as_deref().map(read_constants).transpose()?;
    let start = Instant::now();
    let outcome = (exp.run)(config, constants.as_ref())?;
    let report = Report::new(config.clone(), outcome, start.elapsed().as_secs_f64());
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    Ok(report)
}
