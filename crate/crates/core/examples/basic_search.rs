//! Minimize a user-supplied objective by stepping the engine by hand.
//!
//! `cargo run --release --example basic_search`

use ensemble_search::engine::iterate;
use ensemble_search::ensemble::init_ensemble;
use ensemble_search::{ObjectiveSpec, RngStream, SearchConfig};

fn main() -> ensemble_search::Result<()> {
    // Rosenbrock on [-2, 2]^2, minimum 0 at (1, 1).
    let spec = ObjectiveSpec::scalar("rosenbrock", 2, -2.0, 2.0, |x| {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    })?
    .with_optimum(vec![0.0]);

    let cfg = SearchConfig::default();
    let mut rng = RngStream::new(42);
    let mut ens = init_ensemble(&spec, &cfg, &mut rng)?;
    let mut best = f64::INFINITY;
    let mut best_x = Vec::new();

    for it in 1..=3000 {
        let (next, report) = iterate(&ens, &spec, &cfg, &mut rng)?;
        ens = next;
        if let Some((x, f)) = report.best_point {
            if f[0] < best {
                best = f[0];
                best_x = x;
            }
        }
        if it % 500 == 0 {
            println!("iter {it:5}  best f = {best:.3e}");
        }
        if best < 1e-8 {
            println!("reached 1e-8 after {it} iterations");
            break;
        }
    }
    println!("x* ~ ({:.6}, {:.6})", best_x[0], best_x[1]);
    Ok(())
}
