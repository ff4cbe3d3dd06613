//! Run the split (substructure-by-substructure) search on a 16-D sphere and
//! compare substructure counts.
//!
//! `cargo run --release --example split_search`

use ensemble_search::benchmarks::benchmark_by_name;
use ensemble_search::harness::{run_seed, RunOptions};
use ensemble_search::split::make_partition;
use ensemble_search::SearchConfig;

fn main() -> ensemble_search::Result<()> {
    let n_x = 16;
    let spec = benchmark_by_name("sphere", n_x, 3)?.objective()?;
    let opts = RunOptions::default();

    for n_p in [1, 2, 4] {
        let partition = make_partition(n_x, n_p)?;
        let cfg = SearchConfig {
            n_p,
            max_iters: 30_000,
            ..Default::default()
        };
        let mut line = format!("n_p = {n_p} blocks {:?}:", partition.sizes());
        for seed in 0..3 {
            let out = run_seed(&spec, &cfg, seed, &opts);
            let last = out.record.final_point().expect("trace is never empty");
            line += &format!(
                "  [{} at {} iters, err {:.1e}, {} evals]",
                out.record.status.label(),
                last.iteration,
                last.error.unwrap_or(f64::NAN),
                out.evaluations
            );
        }
        println!("{line}");
    }
    Ok(())
}
