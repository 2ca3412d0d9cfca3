//! Structure scan of the region-mass gradient across built-in families.
//!
//! The scan classifies how the sensitivity factorizes in parameter and
//! level: one shared level profile, a pointwise shared profile, fully
//! separable components, or no structure. Shared profiles mean linearly
//! dependent sensitivities and hence no unique region-matching prior.
//!
//! ```text
//! cargo run --example separability_scan
//! ```

use predmatch::hpd_match::separability_diagnosis;
use predmatch::numerics::NumericsConfig;
use predmatch::{builtin_family, Result};

fn main() -> Result<()> {
    let cfg = NumericsConfig::default();
    let cases: Vec<(&str, Vec<Vec<f64>>)> = vec![
        (
            "bvn-cholesky",
            vec![
                vec![1.0, 1.0, 0.0],
                vec![1.0, 2.0, 0.3],
                vec![0.5, 1.5, -0.4],
            ],
        ),
        (
            "mvlocation-spherical-2d",
            vec![vec![0.0, 0.0], vec![1.0, -2.0]],
        ),
        (
            "location-scale-normal",
            vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![-0.5, 2.0]],
        ),
        ("normal-mean-eq-var", vec![vec![0.5], vec![1.0], vec![2.0]]),
    ];

    for (name, grid) in cases {
        let fam = builtin_family(name)?;
        let rep = separability_diagnosis(&fam, &grid, &cfg)?;
        println!("{name}:");
        println!("  form: {} (evidence {:.3e})", rep.form, rep.evidence);
        println!("  active components: {:?}", rep.active);
        println!(
            "  per-point rank-one defect: {:?}",
            summarized(&rep.per_theta_ratio)
        );
        println!(
            "  per-component defect: {:?}",
            summarized(&rep.per_component_ratio)
        );
        println!();
    }
    Ok(())
}

fn summarized(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.2e}")).collect()
}
