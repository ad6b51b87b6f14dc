//! The twelve acceptance criteria, one test each, at their stated
//! tolerances. Every test prints one status line outside the harness's
//! output capture.

use std::io::Write;

use fracmap_lab::{run, ExperimentConfig, Report};

fn status(criterion: u32, title: &str, report: &Report) {
    let detail: Vec<String> = report
        .verdicts
        .iter()
        .map(|v| format!("{}={:.4e}{}", v.name, v.value, if v.pass { "" } else { "!" }))
        .collect();
    let line = format!(
        "acceptance {criterion:>2} {:<4} {title}: {}\n",
        if report.passed { "PASS" } else { "FAIL" },
        detail.join(" ")
    );
    std::io::stdout().write_all(line.as_bytes()).unwrap();
}

fn check(criterion: u32, title: &str, id: &str) -> Report {
    let report = run(&ExperimentConfig::new(id)).unwrap();
    status(criterion, title, &report);
    assert!(report.passed, "criterion {criterion} failed: {:?}", report.failures());
    report
}

#[test]
fn criterion_01_definition_equivalence() {
    let r = check(1, "quadrature vs spectral, n=1 s=0.5 N=4096", "definition-equivalence");
    assert!(r.verdict("interior_relative_linf_error").unwrap().value <= 1e-3);
    assert!(r.verdict("runtime_seconds").unwrap().value <= 10.0);
}

#[test]
fn criterion_02_norm_equivalence() {
    let r = check(2, "equivalence ratio spread, 10 fields n=1 s=0.25 N=2048", "norm-equivalence");
    assert_eq!(r.table("ratios").unwrap().rows.len(), 10);
    assert!(r.verdict("max_over_min").unwrap().value <= 1.02);
}

#[test]
fn criterion_03_partition_of_unity() {
    let r = check(3, "sum of eta^k, k<=10, on B_1024", "partition-of-unity");
    assert!(r.verdict("max_partition_deviation").unwrap().value <= 1e-12);
    assert_eq!(r.verdict("support_violations").unwrap().value, 0.0);
}

#[test]
fn criterion_04_cutoff_scaling() {
    let r = check(4, "cutoff norm slopes (1,1/2,inf) and (2,1,2)", "cutoff-scaling");
    assert_eq!(r.verdicts.len(), 2);
    assert!(r.verdicts.iter().all(|v| v.value <= 0.1));
}

#[test]
fn criterion_05_hodge() {
    let r = check(5, "Hodge splitting, 20 fields n=1 s=0.5", "hodge");
    assert_eq!(r.table("cases").unwrap().rows.len(), 20);
    assert!(r.verdict("max_residual").unwrap().value <= 1e-10);
    assert!(r.verdict("max_orthogonality").unwrap().value <= 1e-8);
    assert!(r.verdict("max_energy_factor").unwrap().value <= 5.0);
    assert!(r.verdict("max_cg_iterations").unwrap().value <= 500.0);
}

#[test]
fn criterion_06_disjoint_support() {
    let r = check(6, "pairing decay slopes (1,1/4,1/4) and (2,1/2,1/2)", "disjoint-support");
    assert_eq!(r.verdicts.len(), 2);
    assert!(r.verdicts.iter().all(|v| v.value <= 0.15));
}

#[test]
fn criterion_07_poincare_scaling() {
    let r = check(7, "Poincare exponent for s in {0.5, 1}", "poincare-scaling");
    assert_eq!(r.verdicts.len(), 2);
    assert!(r.verdicts.iter().all(|v| v.value <= 0.05));
}

#[test]
fn criterion_08_harmonic_decay() {
    let r = check(8, "rho(32)/rho(8) against 4^(-1/4) * 1.1", "harmonic-decay");
    assert!(r.verdict("rho32_over_rho8").unwrap().value <= 4f64.powf(-0.25) * 1.1);
}

#[test]
fn criterion_09_lorentz_algebra() {
    let r = check(9, "rearrangement product, scaling law, weak bound", "lorentz-algebra");
    assert!(r.verdict("product_rearrangement_margin").unwrap().value >= 0.0);
    assert!(r.verdict("weak_bound_margin").unwrap().value >= 0.0);
    assert!(r.verdict("scaling_law_error").unwrap().value <= 0.01);
}

#[test]
fn criterion_10_compensation() {
    let r = check(10, "structure identity and calibrated regressions", "compensation");
    assert!(r.verdict("structure_identity_residual").unwrap().value <= 1e-10);
    for name in ["h_l2", "h_lorentz_21", "h_weak"] {
        assert!(r.verdict(&format!("regression_{name}")).is_some());
    }
    assert!(r.verdicts.iter().any(|v| v.name.starts_with("regression_defect")));
}

#[test]
fn criterion_11_iteration_lemmas() {
    let r = check(11, "1000 generated sequences per lemma, counterexample witnesses", "iteration-lemmas");
    assert_eq!(r.table("runs").unwrap().rows.len(), 2000);
    assert_eq!(r.verdict("driteration_failures").unwrap().value, 0.0);
    assert_eq!(r.verdict("iteration_failures").unwrap().value, 0.0);
    assert!(r.verdict("counterexample_witnesses").unwrap().pass);
}

#[test]
fn criterion_12_dirichlet_growth() {
    let r = check(12, "Holder estimators for alpha in {0.25, 0.5}", "dirichlet-growth");
    assert_eq!(r.verdicts.len(), 6);
    assert!(r.verdicts.iter().all(|v| v.value <= 0.05));
}
