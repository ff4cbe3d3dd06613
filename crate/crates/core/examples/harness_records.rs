//! Run several seeds through the harness and write the run records as CSV
//! and JSON.
//!
//! `cargo run --release --example harness_records`

use ensemble_search::harness::{
    read_records_json, run_experiment, write_records, BenchmarkSelection, ExperimentConfig, RecordFormat, RunOptions,
};
use ensemble_search::SearchConfig;

fn main() -> ensemble_search::Result<()> {
    let exp = ExperimentConfig {
        selection: BenchmarkSelection::Function("ackley".into()),
        dim: 5,
        instance_seed: 1,
        search: SearchConfig {
            max_iters: 5000,
            ..Default::default()
        },
        seeds: (0..6).collect(),
        output: None,
        options: RunOptions {
            record_stride: 50,
            ..Default::default()
        },
    };
    let records = run_experiment(&exp)?;
    for r in &records {
        let last = r.final_point().expect("trace is never empty");
        println!(
            "seed {}: {:10} iter {:5} error {:.2e}",
            r.seed,
            r.status.label(),
            last.iteration,
            last.error.unwrap_or(f64::NAN)
        );
    }

    let dir = std::env::temp_dir();
    let csv = dir.join("ensemble_search_ackley.csv");
    let json = dir.join("ensemble_search_ackley.json");
    write_records(&records, &csv, RecordFormat::Csv)?;
    write_records(&records, &json, RecordFormat::Json)?;
    assert_eq!(read_records_json(&json)?, records);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
