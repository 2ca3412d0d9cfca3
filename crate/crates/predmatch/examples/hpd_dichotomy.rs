//! Uniqueness dichotomy for region matching.
//!
//! Whether a unique region-matching prior exists hinges on the linear
//! independence of the region-sensitivity profiles. The Gram matrix of
//! their level derivatives decides: a healthy active block yields the
//! unique gradient, a singular or empty one means no prior or infinitely
//! many, and the operation refuses to invent an answer.
//!
//! ```text
//! cargo run --example hpd_dichotomy
//! ```

use predmatch::hpd_match::{hpd_upmp_gradient, profile_gram};
use predmatch::numerics::NumericsConfig;
use predmatch::{builtin_family, Result};

fn main() -> Result<()> {
    let cfg = NumericsConfig::default();
    let cases: Vec<(&str, Vec<f64>)> = vec![
        ("location-scale-normal", vec![0.0, 1.0]),
        ("normal-mean-eq-var", vec![1.0]),
        ("bvn-cholesky", vec![1.0, 1.0, 0.0]),
        ("mvlocation-spherical-2d", vec![0.0, 0.0]),
    ];

    for (name, theta) in cases {
        let fam = builtin_family(name)?;
        let gram = profile_gram(&fam, &theta, &cfg)?;
        println!("{name} at {theta:?}:");
        println!(
            "  active components: {:?}, independence ratio: {:.3e}",
            gram.active, gram.independence_ratio
        );
        match hpd_upmp_gradient(&fam, &theta, &cfg) {
            Ok(g) => println!("  unique matching gradient: {g:?}"),
            Err(e) => println!("  {e}"),
        }
        println!();
    }

    // the N(theta, theta) model has a unique region-matching prior that is
    // NOT the square-root-determinant prior
    let fam = builtin_family("normal-mean-eq-var")?;
    let theta = [1.0];
    let matching = hpd_upmp_gradient(&fam, &theta, &cfg)?;
    let jeffreys = fam.named_prior("jeffreys")?.gradient(&theta);
    println!(
        "mean-equals-variance normal at theta = 1: matching gradient {:.4} vs \
         Jeffreys gradient {:.4} -- different priors",
        matching[0], jeffreys[0]
    );
    Ok(())
}
