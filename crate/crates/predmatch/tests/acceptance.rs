//! Acceptance suite: runs every verification criterion at its stated
//! tolerance and replicate count, printing one pass/fail line per criterion
//! (visible with `cargo test --test acceptance -- --nocapture`).

use predmatch::cli::{render_manifest, verify_all, VerifyOptions};

#[test]
fn acceptance_criteria_pass_at_full_scale() {
    let manifest = verify_all(&VerifyOptions::default());
    print!("{}", render_manifest(&manifest));
    for c in &manifest.criteria {
        assert!(
            c.pass,
            "criterion {} failed: {} -- {}",
            c.id, c.description, c.detail
        );
    }
    assert!(manifest.all_pass);
}

#[test]
fn corrupted_tolerances_fail_the_suite() {
    // negative control: shrinking every tolerance a millionfold must turn
    // the deterministic criteria red and the overall verdict false
    let opts = VerifyOptions {
        seed: 3,
        mc_scale: 0.05,
        tolerance_scale: 1e-6,
    };
    let manifest = verify_all(&opts);
    assert!(!manifest.all_pass);
    assert!(manifest.criteria.iter().any(|c| !c.pass));
}

#[test]
fn repeated_scaled_runs_are_byte_identical() {
    let opts = VerifyOptions {
        seed: 5,
        mc_scale: 0.05,
        tolerance_scale: 1.0,
    };
    let a = serde_json::to_string(&verify_all(&opts)).unwrap();
    let b = serde_json::to_string(&verify_all(&opts)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coverage_defect_is_stable_in_n() {
    // the first-order defect coefficient does not depend on n, so the
    // replicated defects at n = 10 and n = 20 must agree within noise
    use predmatch::coverage::coverage_mc;
    use predmatch::{builtin_family, NumericsConfig};
    let cfg = NumericsConfig::default();
    let fam = builtin_family("location-scale-normal").unwrap();
    let jeffreys = fam.named_prior("jeffreys").unwrap();
    let a = coverage_mc(&fam, &jeffreys, &[0.0, 1.0], 10, 0.1, 400, 23, &cfg).unwrap();
    let b = coverage_mc(&fam, &jeffreys, &[0.0, 1.0], 20, 0.1, 400, 24, &cfg).unwrap();
    let combined = (a.se_defect.powi(2) + b.se_defect.powi(2)).sqrt();
    assert!(
        (a.defect_hat - b.defect_hat).abs() <= 3.0 * combined,
        "defects {} vs {} (3 combined se {})",
        a.defect_hat,
        b.defect_hat,
        3.0 * combined
    );
}
