//! Derivative-free global optimization with an ensemble of particles driven
//! by Kalman-like gain updates.
//!
//! Each iteration predicts particles by a small random walk, assembles an
//! innovation (misfit to the ensemble-best objective vector, optionally
//! stacked with a coalescence term pulling particles together), computes an
//! ensemble gain, and proposes element-wise scrambled and fitness-blended
//! candidates. A randomizer keeps most particles unchanged, and selection
//! accepts only candidates that reduce the misfit. State-space splitting
//! ([`split`]) runs the same machinery substructure by substructure.
//!
//! Entry points:
//! - [`engine::iterate`] / [`split::iterate_3s`] advance an [`Ensemble`] by one iteration.
//! - `harness::run_seed` and [`harness::run_experiment`] drive whole runs and produce [`harness::RunRecord`]s.
//! - [`benchmarks`] builds shifted / rotated / grouped test objectives.
//! - [`inverse`] is a small diffusion-absorption recovery study.

pub mod benchmarks;
pub mod cli;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod inverse;
pub mod rng;
pub mod split;

pub use ensemble::{BoundsPolicy, Ensemble, NoiseScale, ObjectiveSpec, SearchConfig};
pub use error::{Result, SearchError};
pub use rng::{Draws, RngStream};
