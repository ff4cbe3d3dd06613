//! A vector-valued objective. The engine drives every component toward the
//! component-wise best seen across the ensemble.
//!
//! `cargo run --release --example vector_objective`

use ensemble_search::harness::{run_seed, RunOptions};
use ensemble_search::{ObjectiveSpec, SearchConfig};

fn main() -> ensemble_search::Result<()> {
    // Two residuals that vanish together at (1, -2, 0.5).
    let spec = ObjectiveSpec::new("residuals", 2, vec![-5.0; 3], vec![5.0; 3], |x| {
        vec![
            (x[0] - 1.0).powi(2) + (x[2] - 0.5).powi(2),
            (x[1] + 2.0).powi(2) + (x[0] - 1.0).abs(),
        ]
    })?
    .with_optimum(vec![0.0, 0.0]);

    let cfg = SearchConfig {
        epsilon: 1e-6,
        max_iters: 20_000,
        ..Default::default()
    };
    let out = run_seed(&spec, &cfg, 5, &RunOptions::default());
    let last = out.record.final_point().expect("trace is never empty");
    println!(
        "{} after {} iterations, best f = {:?}",
        out.record.status.label(),
        last.iteration,
        last.best
    );
    if let Some((x, f)) = out.best_point {
        println!("best point {x:.5?} with f = [{:.2e}, {:.2e}]", f[0], f[1]);
    }
    Ok(())
}
