//! Record the random draws of each iteration and replay them. With a single
//! substructure the split iteration consumes the same tape as the plain one
//! and produces the same ensemble.
//!
//! `cargo run --release --example tape_replay`

use ensemble_search::benchmarks::benchmark_by_name;
use ensemble_search::engine::iterate;
use ensemble_search::ensemble::init_ensemble;
use ensemble_search::rng::{Player, Recorder};
use ensemble_search::split::{iterate_3s, make_partition};
use ensemble_search::{RngStream, SearchConfig};

fn main() -> ensemble_search::Result<()> {
    let spec = benchmark_by_name("rastrigin", 6, 0)?.objective()?;
    let cfg = SearchConfig {
        p_inertia: 0.5,
        ..Default::default()
    };
    let mut rec = Recorder::new(RngStream::new(11));
    let mut ens = init_ensemble(&spec, &cfg, &mut rec)?;
    let partition = make_partition(spec.n_x, 1)?;

    for it in 0..5 {
        let start = rec.tape().len();
        let (plain, _) = iterate(&ens, &spec, &cfg, &mut rec)?;
        let tape = rec.tape()[start..].to_vec();

        let mut player = Player::new(&tape);
        let (split, _) = iterate_3s(&ens, &spec, &cfg, &partition, &mut player)?;
        player.finish()?;

        let same = plain
            .particles
            .iter()
            .flatten()
            .zip(split.particles.iter().flatten())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        println!("iteration {it}: {} draws, identical = {same}", tape.len());
        assert!(same);
        ens = plain;
    }
    Ok(())
}
