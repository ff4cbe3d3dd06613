//! Generate both benchmark suites, save one as a manifest and check that the
//! reloaded instances evaluate identically.
//!
//! `cargo run --release --example benchmark_suite`

use ensemble_search::benchmarks::{eval_composite, make_suite, SuiteFamily, SuiteManifest};

fn main() -> ensemble_search::Result<()> {
    let n_x = 20;
    for family in [SuiteFamily::CecLike, SuiteFamily::BbobLike] {
        println!("{family:?}, n_x = {n_x}");
        for b in make_suite(family, n_x, 7)? {
            let at_min = eval_composite(&b, &b.argmin())?;
            let origin = eval_composite(&b, &vec![0.0; n_x])?;
            println!(
                "  {:5} f(x*) = {:+.3e}  f(0) = {:.3e}  groups = {}",
                b.name,
                at_min,
                origin,
                b.groups.len()
            );
        }
    }

    let manifest = SuiteManifest::generate(SuiteFamily::CecLike, n_x, 7)?;
    let path = std::env::temp_dir().join("ensemble_search_suite.json");
    manifest.save(&path)?;
    let back = SuiteManifest::load(&path)?;
    let x: Vec<f64> = (0..n_x).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
    for (a, b) in manifest.instances.iter().zip(&back.instances) {
        assert_eq!(eval_composite(a, &x)?.to_bits(), eval_composite(b, &x)?.to_bits());
    }
    println!("manifest round trip through {} is exact", path.display());
    Ok(())
}
