//! Seeded random streams and a record/replay tape.
//!
//! Every stochastic step of the engines pulls its variates through the
//! [`Draws`] trait, so a run can be recorded once and replayed into a
//! different engine implementation to compare them draw for draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SearchError};

/// Source of the three kinds of variates the search consumes.
pub trait Draws {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
    /// Standard normal.
    fn normal(&mut self) -> f64;
    /// Uniform index from `{0..n} \ {exclude}`; requires `n >= 2`.
    fn index_excluding(&mut self, n: usize, exclude: usize) -> usize;
}

/// Deterministic seeded stream. Identical seeds give identical sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Independent child stream, for work that must not perturb the parent
    /// sequence (e.g. benchmark instance generation).
    pub fn fork(&mut self) -> RngStream {
        RngStream::new(self.rng.random())
    }
}

impl Draws for RngStream {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn index_excluding(&mut self, n: usize, exclude: usize) -> usize {
        debug_assert!(n >= 2 && exclude < n);
        let k = self.rng.random_range(0..n - 1);
        if k >= exclude {
            k + 1
        } else {
            k
        }
    }
}

/// One recorded variate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Uniform(f64),
    Normal(f64),
    Index { n: usize, exclude: usize, value: usize },
}

/// Wraps a [`Draws`] source and records everything it hands out.
pub struct Recorder<D> {
    inner: D,
    tape: Vec<Draw>,
}

impl<D: Draws> Recorder<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            tape: Vec::new(),
        }
    }

    pub fn tape(&self) -> &[Draw] {
        &self.tape
    }

    pub fn into_tape(self) -> Vec<Draw> {
        self.tape
    }
}

impl<D: Draws> Draws for Recorder<D> {
    fn uniform(&mut self) -> f64 {
        let v = self.inner.uniform();
        self.tape.push(Draw::Uniform(v));
        v
    }

    fn normal(&mut self) -> f64 {
        let v = self.inner.normal();
        self.tape.push(Draw::Normal(v));
        v
    }

    fn index_excluding(&mut self, n: usize, exclude: usize) -> usize {
        let value = self.inner.index_excluding(n, exclude);
        self.tape.push(Draw::Index { n, exclude, value });
        value
    }
}

/// Replays a recorded tape. The first request that does not match the
/// recorded kind (or runs past the end) is remembered and reported by
/// [`Player::finish`]; later requests get neutral values.
pub struct Player<'a> {
    tape: &'a [Draw],
    pos: usize,
    fault: Option<String>,
}

impl<'a> Player<'a> {
    pub fn new(tape: &'a [Draw]) -> Self {
        Self {
            tape,
            pos: 0,
            fault: None,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Ok when every request matched and the whole tape was consumed.
    pub fn finish(self) -> Result<()> {
        if let Some(msg) = self.fault {
            return Err(SearchError::Tape(msg));
        }
        if self.pos != self.tape.len() {
            return Err(SearchError::Tape(format!(
                "{} of {} draws left unconsumed",
                self.tape.len() - self.pos,
                self.tape.len()
            )));
        }
        Ok(())
    }

    fn next(&mut self, wanted: &str) -> Option<Draw> {
        if self.fault.is_some() {
            return None;
        }
        match self.tape.get(self.pos) {
            Some(d) => {
                self.pos += 1;
                Some(*d)
            }
            None => {
                self.fault = Some(format!("tape exhausted at {} requesting {wanted}", self.pos));
                None
            }
        }
    }

    fn mismatch(&mut self, wanted: &str, got: Draw) {
        if self.fault.is_none() {
            self.fault = Some(format!(
                "draw {} requested {wanted}, tape holds {got:?}",
                self.pos - 1
            ));
        }
    }
}

impl Draws for Player<'_> {
    fn uniform(&mut self) -> f64 {
        match self.next("uniform") {
            Some(Draw::Uniform(v)) => v,
            Some(other) => {
                self.mismatch("uniform", other);
                0.5
            }
            None => 0.5,
        }
    }

    fn normal(&mut self) -> f64 {
        match self.next("normal") {
            Some(Draw::Normal(v)) => v,
            Some(other) => {
                self.mismatch("normal", other);
                0.0
            }
            None => 0.0,
        }
    }

    fn index_excluding(&mut self, n: usize, exclude: usize) -> usize {
        let fallback = if exclude == 0 { 1 } else { 0 };
        match self.next("index") {
            Some(Draw::Index {
                n: rn,
                exclude: re,
                value,
            }) if rn == n && re == exclude => value,
            Some(other) => {
                self.mismatch("index", other);
                fallback
            }
            None => fallback,
        }
    }
}
