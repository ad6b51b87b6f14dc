//! Calibrated-constant suites: a family of seeded samples per constant,
//! calibrated as the family maximum and enforced with the 1% slack.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fracmap_core::calibration::{calibrate_max, ConstantsFile, GridSpec, Provenance};
use fracmap_core::compensation::{defect_scan, fourier_domination_check, h_norm_ratio, triangle_defect_scan};
use fracmap_core::fields::{band_limited, windowed_field};
use fracmap_core::lorentz::{compact_support_ratio, holder_ratio, Exponents};
use fracmap_core::{DomainMask, Grid};
use rayon::prelude::*;

use crate::error::{io, LabError, Result};
use crate::report::{Outcome, Table, Verdict};

/// Seeds in a calibration family.
pub const CALIBRATION_SEEDS: u64 = 4000;
/// Seeds checked by a regression run.
pub const REGRESSION_SEEDS: u64 = 10;
/// Offset separating in-run regression seeds from the calibration family.
pub const FRESH_OFFSET: u64 = 1000;

/// One sample per constant for one seed.
pub struct Sample {
    pub name: String,
    pub value: f64,
    /// Whether the constant depends on the grid it was measured on.
    pub on_grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Compensation,
    Lorentz,
}

pub const SUITES: [(&str, Suite); 2] = [("compensation", Suite::Compensation), ("lorentz", Suite::Lorentz)];

impl Suite {
    pub fn parse(id: &str) -> Result<Self> {
        SUITES
            .iter()
            .find(|(name, _)| *name == id)
            .map(|(_, s)| *s)
            .ok_or_else(|| LabError::UnknownSuite(id.to_string()))
    }

    pub fn id(self) -> &'static str {
        SUITES.iter().find(|(_, s)| *s == self).map(|(n, _)| *n).expect("registered")
    }

    pub fn default_grid(self) -> (usize, usize, f64) {
        match self {
            Suite::Compensation => (1, 1024, 1.0),
            Suite::Lorentz => (1, 1024, 1.0),
        }
    }

    /// One value per constant for one seed.
    pub fn samples(self, grid: &Grid, seed: u64) -> Result<Vec<Sample>> {
        match self {
            Suite::Compensation => compensation_samples(grid, seed),
            Suite::Lorentz => lorentz_samples(grid, seed),
        }
    }
}

const DEFECT_CASES: [(f64, f64); 3] = [(0.5, 0.5), (1.0, 0.5), (2.0, 0.0)];
const TRIANGLE_P: [f64; 1] = [0.5];
const SCAN_SAMPLES: usize = 1 << 11;

fn compensation_samples(grid: &Grid, seed: u64) -> Result<Vec<Sample>> {
    let u = band_limited(grid, seed)?;
    let v = band_limited(grid, seed ^ 0x5555_5555)?;
    let h = h_norm_ratio(&u, &v)?;
    let dom = fourier_domination_check(&u, &v)?;
    let mut out = vec![
        Sample { name: "h_l2".into(), value: h.l2, on_grid: true },
        Sample { name: "h_lorentz_21".into(), value: h.lorentz_21, on_grid: true },
        Sample { name: "h_weak".into(), value: h.weak, on_grid: true },
        Sample { name: "h_fourier_domination".into(), value: dom.max_ratio, on_grid: true },
    ];
    let dim = grid.dim();
    for (p, theta) in DEFECT_CASES {
        out.push(Sample {
            name: format!("defect_n{dim}_p{p}_theta{theta}"),
            value: defect_scan(dim, p, theta, SCAN_SAMPLES, seed)?,
            on_grid: false,
        });
    }
    for p in TRIANGLE_P {
        out.push(Sample {
            name: format!("triangle_n{dim}_p{p}"),
            value: triangle_defect_scan(dim, p, SCAN_SAMPLES, seed)?,
            on_grid: false,
        });
    }
    Ok(out)
}

type HolderTriple = (Exponents, Exponents, Exponents);
const HOLDER_TRIPLES: [HolderTriple; 3] = [
    ((2.0, 1.0), (4.0, 2.0), (4.0, 2.0)),
    ((2.0, 2.0), (4.0, 4.0), (4.0, 4.0)),
    ((1.5, 3.0), (3.0, 6.0), (3.0, 6.0)),
];
const COMPACT_CASES: [(Exponents, f64); 2] = [((2.0, 1.0), 4.0), ((1.5, 2.0), 3.0)];

fn lorentz_samples(grid: &Grid, seed: u64) -> Result<Vec<Sample>> {
    let f = band_limited(grid, seed)?;
    let g = band_limited(grid, seed ^ 0x5555_5555)?;
    let mut out = Vec::new();
    for (o, a, b) in HOLDER_TRIPLES {
        out.push(Sample {
            name: format!("holder_{}_{}", o.0, o.1),
            value: holder_ratio(&f, &g, o, a, b)?,
            on_grid: true,
        });
    }
    let center = vec![0.0; grid.dim()];
    let radius = grid.box_length() / 8.0;
    let mask = DomainMask::ball(grid, &center, radius);
    let w = windowed_field(grid, seed, &center, radius, grid.points_per_axis() / 8)?;
    for (o, p1) in COMPACT_CASES {
        out.push(Sample {
            name: format!("compact_{}_{}_from_{}", o.0, o.1, p1),
            value: compact_support_ratio(&w, &mask, o, p1)?,
            on_grid: true,
        });
    }
    Ok(out)
}

/// Calibrate every constant of `suite` on seeds `seed .. seed + CALIBRATION_SEEDS`.
pub fn calibrate(suite: Suite, grid: &Grid, seed: u64) -> Result<ConstantsFile> {
    let per_seed = (seed..seed + CALIBRATION_SEEDS)
        .into_par_iter()
        .map(|s| suite.samples(grid, s))
        .collect::<Result<Vec<_>>>()?;
    let mut families: BTreeMap<String, (Vec<f64>, bool)> = BTreeMap::new();
    let mut order = Vec::new();
    for sample in per_seed.into_iter().flatten() {
        if !families.contains_key(&sample.name) {
            order.push(sample.name.clone());
        }
        let entry = families.entry(sample.name).or_insert((Vec::new(), sample.on_grid));
        entry.0.push(sample.value);
    }
    let mut file = ConstantsFile::new(suite.id(), seed);
    for name in order {
        let (values, on_grid) = &families[&name];
        let prov = Provenance {
            seed: Some(seed),
            oracle: format!("max over seeds {seed}..{} of the {} suite", seed + CALIBRATION_SEEDS, suite.id()),
            grid: on_grid.then(|| GridSpec::from(grid)),
        };
        file.insert(calibrate_max(&name, values, prov)?);
    }
    Ok(file)
}

/// Check `REGRESSION_SEEDS` samples starting at `seed` against `file`;
/// appends a table and one verdict per constant (the worst margin).
pub fn regress(suite: Suite, grid: &Grid, file: &ConstantsFile, seed: u64, out: &mut Outcome) -> Result<()> {
    if file.suite != suite.id() {
        return Err(crate::error::config(
            "constants",
            format!("file holds suite `{}`, expected `{}`", file.suite, suite.id()),
        ));
    }
    let spec = GridSpec::from(grid);
    let mut table = Table::new(format!("{}_regression", suite.id()), &["seed", "constant_index", "sample", "bound"]);
    let mut worst: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for s in seed..seed + REGRESSION_SEEDS {
        for sample in suite.samples(grid, s)? {
            let c = file.for_grid(&sample.name, Some(&spec))?;
            let idx = file.constants.iter().position(|k| k.name == sample.name).expect("present");
            table.push(vec![s as f64, idx as f64, sample.value, c.bound()])?;
            let margin = c.margin(sample.value);
            let e = worst.entry(sample.name).or_insert((idx, sample.value, margin));
            if margin < e.2 {
                *e = (idx, sample.value, margin);
            }
        }
    }
    let mut entries: Vec<_> = worst.into_iter().collect();
    entries.sort_by_key(|(_, (idx, _, _))| *idx);
    for (name, (idx, value, _)) in entries {
        out.verdict(Verdict::at_most(format!("regression_{name}"), value, file.constants[idx].bound()));
    }
    out.constants.extend(file.constants.iter().cloned());
    out.table(table);
    Ok(())
}

pub fn read_constants(path: &Path) -> Result<ConstantsFile> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_constants(path: &Path, file: &ConstantsFile) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(file)? + "\n").map_err(|e| io(path, e))
}
