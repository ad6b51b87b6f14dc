//! Discrete iteration lemmas and Hölder-exponent recovery.

use fracmap_core::calibration::ConstantsFile;
use fracmap_core::error::Error;
use fracmap_core::fields::bump_profile;
use fracmap_core::growth::{driteration, generate_driteration, generate_iteration, holder_exponent_estimate, iteration_reduce, AnnulusSequence, Exponent};
use fracmap_core::{DomainMask, Grid, GridFunction};

use crate::config::ExperimentConfig;
use crate::error::{config, Result};
use crate::report::{Outcome, Table, Verdict};

pub const SEQUENCES: u64 = 1000;
pub const SEQUENCE_LEN: usize = 48;

const DR_GAMMA: f64 = 1.0;
const DR_ALPHA: f64 = 0.5;
const IT: (f64, f64, f64, i64) = (1.0, 1.0, 1.0, 2);

fn witness_of(r: fracmap_core::Result<impl Sized>) -> Option<i64> {
    match r {
        Err(Error::Hypothesis { witness }) => Some(witness),
        _ => None,
    }
}

pub fn iteration_lemmas(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut runs = Table::new("runs", &["seed", "lemma", "passed", "beta", "constant"]);
    let (mut dr_fail, mut it_fail) = (0usize, 0usize);
    for k in 0..SEQUENCES {
        let seed = cfg.seed + k;
        let (a, lambda) = generate_driteration(seed, SEQUENCE_LEN, DR_GAMMA, DR_ALPHA)?;
        match driteration(&a, DR_GAMMA, DR_ALPHA, lambda) {
            Ok(r) => runs.push(vec![seed as f64, 0.0, 1.0, r.beta, r.constant])?,
            Err(_) => {
                dr_fail += 1;
                runs.push(vec![seed as f64, 0.0, 0.0, 0.0, 0.0])?;
            }
        }
        let (l1, l2, gamma, l) = IT;
        let b = generate_iteration(seed, SEQUENCE_LEN, l1, l2, gamma, l)?;
        match iteration_reduce(&b, l1, l2, gamma, l) {
            Ok(r) => runs.push(vec![seed as f64, 1.0, 1.0, r.beta, r.constant])?,
            Err(_) => {
                it_fail += 1;
                runs.push(vec![seed as f64, 1.0, 0.0, 0.0, 0.0])?;
            }
        }
    }
    out.verdict(Verdict::at_most("driteration_failures", dr_fail as f64, 0.0));
    out.verdict(Verdict::at_most("iteration_failures", it_fail as f64, 0.0));
    out.table(runs);

    // constructed counterexamples with hand-derived witnesses
    let mut cases = Table::new("counterexamples", &["case", "expected_witness", "reported_witness"]);
    let mut all_ok = true;
    let mut check = |case: usize, expected: i64, got: Option<i64>| -> Result<()> {
        all_ok &= got == Some(expected);
        cases.push(vec![case as f64, expected as f64, got.map_or(f64::INFINITY, |w| w as f64).min(f64::MAX)])
    };
    // a_k = 2^k: every N < 0 holds, A_0 = 2 - 2^-60 exceeds rhs = 1
    let geometric = AnnulusSequence::new(-60, (-60..=0).map(|k| 2f64.powi(k)).collect())?;
    check(0, 0, witness_of(driteration(&geometric, 1.0, 1.0, 1.0)))?;
    // a single mass of 100 at k = -10 beats Lambda 2^{-10 alpha} first at N = -10
    let mut spike = AnnulusSequence::zeros(-20, 0);
    spike = spike_at(&spike, -10, 100.0)?;
    check(1, -10, witness_of(driteration(&spike, 1.0, 1.0, 1.0)))?;
    // a mass of 100 at k = -5 under (1, 1, 1, L = 2): for N >= -5 the rhs is
    // 50 + 100 * 2^{-(N+5)} + 2^N, first below 100 at N = -3
    let late = spike_at(&AnnulusSequence::zeros(-20, 0), -5, 100.0)?;
    check(2, -3, witness_of(iteration_reduce(&late, 1.0, 1.0, 1.0, 2)))?;
    out.verdict(Verdict::holds("counterexample_witnesses", all_ok));
    out.table(cases);

    out.param("sequences", SEQUENCES);
    out.param("sequence_len", SEQUENCE_LEN);
    out.param("driteration_gamma_alpha", (DR_GAMMA, DR_ALPHA));
    out.param("iteration_l1_l2_gamma_l", IT);
    Ok(out)
}

fn spike_at(a: &AnnulusSequence, k: i64, mass: f64) -> Result<AnnulusSequence> {
    let mut values = a.values().to_vec();
    values[(k - a.k_min()) as usize] = mass;
    Ok(AnnulusSequence::new(a.k_min(), values)?)
}

pub const EXPONENT_TOL: f64 = 0.05;

pub fn dirichlet_growth(cfg: &ExperimentConfig, _: Option<&ConstantsFile>) -> Result<Outcome> {
    let dim = cfg.dim.unwrap_or(1);
    let n = cfg.grid_or(32768);
    let l = cfg.box_or(1.0);
    let alphas = cfg.scales_or(&[0.25, 0.5]);
    if alphas.iter().any(|a| *a >= 1.0) {
        return Err(config("scales", "Hölder exponents must lie in (0, 1)"));
    }
    let grid = Grid::new(dim, n, l)?;
    let window = 0.45 * l;
    let region = l / 32.0;
    let r_max = l / 64.0;
    let origin = vec![0.0; dim];
    let mask = DomainMask::ball(&grid, &origin, region);
    let mut out = Outcome::default();
    let mut table = Table::new("estimates", &["alpha", "seminorm", "campanato", "oscillation"]);
    for &alpha in &alphas {
        let v = GridFunction::from_fn(&grid, |x| {
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            r.powf(alpha) * bump_profile(r / window)
        })?;
        let rep = holder_exponent_estimate(&v, &mask, r_max)?;
        let value = |e: Exponent| e.value().unwrap_or(f64::INFINITY);
        let est = [value(rep.seminorm), value(rep.campanato), value(rep.oscillation)];
        table.push(vec![alpha, est[0].min(f64::MAX), est[1].min(f64::MAX), est[2].min(f64::MAX)])?;
        for (name, e) in ["seminorm", "campanato", "oscillation"].iter().zip(est) {
            out.verdict(Verdict::at_most(format!("{name}_alpha{alpha}"), (e - alpha).abs(), EXPONENT_TOL));
        }
    }
    out.param("dim", dim);
    out.param("points_per_axis", n);
    out.param("box_length", l);
    out.param("window_radius", window);
    out.param("region_radius", region);
    out.param("r_max", r_max);
    out.table(table);
    Ok(out)
}
