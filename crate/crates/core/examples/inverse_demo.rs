//! Recover an absorption field from sparse detector readings and compare the
//! ensemble optimizer with the cost-only filtering baseline.
//!
//! `cargo run --release --example inverse_demo`

use ensemble_search::inverse::{median, run_recovery_study, Method, StudyConfig};

fn main() -> ensemble_search::Result<()> {
    let mut study = StudyConfig::new(20, vec![20, 10, 5], (0..4).collect());
    study.eval_budget = 20_000;
    let rows = run_recovery_study(&study)?;

    println!("true field: {:?}", study.mu_true());
    println!("{:10} {:>9} {:>12} {:>10}", "method", "detectors", "median rmse", "contrast");
    for &c in &study.detector_counts {
        for method in [Method::Optimizer, Method::Filtering] {
            let cell: Vec<_> = rows
                .iter()
                .filter(|r| r.method == method && r.detector_count == c)
                .collect();
            let rmse = median(&cell.iter().map(|r| r.rmse).collect::<Vec<_>>());
            let contrast = median(&cell.iter().map(|r| r.contrast).collect::<Vec<_>>());
            println!("{:10} {c:>9} {rmse:>12.3e} {contrast:>10.2}", method.name());
        }
    }
    Ok(())
}
