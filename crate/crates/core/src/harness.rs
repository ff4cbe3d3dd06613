//! Seeded runs, convergence detection and convergence records.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{benchmark_by_name, make_suite, SuiteFamily};
use crate::engine::{self, IterationReport};
use crate::ensemble::{init_ensemble, Ensemble, ObjectiveSpec, SearchConfig};
use crate::error::{Result, SearchError};
use crate::rng::RngStream;
use crate::split::{iterate_3s, make_partition, Partition};

/// Iterations without an improvement larger than epsilon before a run
/// with unknown optimum is declared converged.
pub const DEFAULT_STAGNATION_WINDOW: usize = 500;
/// Record every n-th iteration (plus the first and last).
pub const DEFAULT_RECORD_STRIDE: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// Component-wise best objective values seen so far.
    pub best: Vec<f64>,
    /// Distance of `best` to the known optimum.
    pub error: Option<f64>,
    pub evals: u64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Converged { iteration: usize },
    MaxIterations { error: Option<f64> },
    Failed { message: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged { .. } => "converged",
            RunStatus::MaxIterations { .. } => "max_iters",
            RunStatus::Failed { .. } => "failed",
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, RunStatus::Converged { .. })
    }
}

/// Convergence trace of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub seed: u64,
    pub n_f: usize,
    pub trace: Vec<TracePoint>,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn final_point(&self) -> Option<&TracePoint> {
        self.trace.last()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.final_point().and_then(|p| p.error)
    }
}

/// Knobs of the run loop that are not part of the search itself.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub record_stride: usize,
    pub stagnation_window: usize,
    pub measure_wall_time: bool,
    /// Stop once this many objective evaluations have been spent.
    pub eval_budget: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_stride: DEFAULT_RECORD_STRIDE,
            stagnation_window: DEFAULT_STAGNATION_WINDOW,
            measure_wall_time: false,
            eval_budget: None,
        }
    }
}

/// Running component-wise minimum plus convergence bookkeeping; kept apart
/// from the engines so the reported trace is monotone by construction.
#[derive(Clone, Debug)]
pub struct BestTracker {
    best: Vec<f64>,
    optimum: Option<Vec<f64>>,
    last_improvement: usize,
    reference: Vec<f64>,
}

impl BestTracker {
    pub fn new(initial: &[f64], optimum: Option<Vec<f64>>) -> Self {
        Self {
            best: initial.to_vec(),
            optimum,
            last_improvement: 0,
            reference: initial.to_vec(),
        }
    }

    pub fn best(&self) -> &[f64] {
        &self.best
    }

    pub fn error(&self) -> Option<f64> {
        self.optimum.as_ref().map(|opt| {
            self.best
                .iter()
                .zip(opt)
                .map(|(b, o)| (b - o) * (b - o))
                .sum::<f64>()
                .sqrt()
        })
    }

    pub fn observe(&mut self, iteration: usize, values: &[f64], epsilon: f64) {
        for (b, &v) in self.best.iter_mut().zip(values) {
            if v < *b {
                *b = v;
            }
        }
        if self.best.iter().zip(&self.reference).any(|(b, r)| r - b > epsilon) {
            self.reference = self.best.clone();
            self.last_improvement = iteration;
        }
    }

    pub fn converged(&self, iteration: usize, epsilon: f64, window: usize) -> bool {
        match self.error() {
            Some(e) => e < epsilon,
            None => iteration >= self.last_improvement.saturating_add(window),
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub ensemble: Option<Ensemble>,
    /// Evaluated point with the smallest objective sum over the run.
    pub best_point: Option<(Vec<f64>, Vec<f64>)>,
    pub evaluations: u64,
}

/// Builds the substructure layout for a run.
pub fn partition_for(spec: &ObjectiveSpec, cfg: &SearchConfig, seed: u64) -> Result<Partition> {
    if cfg.shuffle_partition {
        Partition::shuffled(spec.n_x, cfg.n_p, &mut RngStream::new(seed ^ 0x9e37_79b9_7f4a_7c15))
    } else {
        make_partition(spec.n_x, cfg.n_p)
    }
}

/// Advances `ens` by one iteration with the engine matching `cfg.n_p`.
pub fn step(
    ens: &Ensemble,
    spec: &ObjectiveSpec,
    cfg: &SearchConfig,
    partition: &Partition,
    rng: &mut RngStream,
) -> Result<(Ensemble, IterationReport)> {
    if partition.n_p() == 1 && !cfg.shuffle_partition {
        engine::iterate(ens, spec, cfg, rng)
    } else {
        iterate_3s(ens, spec, cfg, partition, rng)
    }
}

/// One seeded run of the search on `spec`.
pub fn run_seed(spec: &ObjectiveSpec, cfg: &SearchConfig, seed: u64, opts: &RunOptions) -> RunOutcome {
    let cfg = SearchConfig { seed, ..cfg.clone() };
    let start = Instant::now();
    let wall = |t: &Instant| if opts.measure_wall_time { t.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let stride = opts.record_stride.max(1);
    let mut rng = RngStream::new(seed);

    let fail = |msg: String, trace: Vec<TracePoint>, evals: u64| RunOutcome {
        record: RunRecord {
            function: spec.name.clone(),
            seed,
            n_f: spec.n_f,
            trace,
            status: RunStatus::Failed { message: msg },
        },
        ensemble: None,
        best_point: None,
        evaluations: evals,
    };

    let partition = match partition_for(spec, &cfg, seed) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string(), Vec::new(), 0),
    };
    let mut ens = match init_ensemble(spec, &cfg, &mut rng) {
        Ok(e) => e,
        Err(e) => return fail(e.to_string(), Vec::new(), 0),
    };
    let mut evals = ens.len() as u64;
    let mut best_point = ens
        .particles
        .iter()
        .zip(&ens.values)
        .min_by(|a, b| a.1.iter().sum::<f64>().total_cmp(&b.1.iter().sum::<f64>()))
        .map(|(x, f)| (x.clone(), f.clone()));
    let mut tracker = BestTracker::new(&crate::ensemble::best_vector(&ens), spec.optimum.clone());
    let point = |it: usize, t: &BestTracker, evals: u64| TracePoint {
        iteration: it,
        best: t.best().to_vec(),
        error: t.error(),
        evals,
        wall_ms: wall(&start),
    };
    let mut trace = vec![point(0, &tracker, evals)];

    let mut status = None;
    if tracker.converged(0, cfg.epsilon, opts.stagnation_window) && spec.optimum.is_some() {
        status = Some(RunStatus::Converged { iteration: 0 });
    }
    let mut it = 0;
    while status.is_none() && it < cfg.max_iters {
        it += 1;
        let (next, report) = match step(&ens, spec, &cfg, &partition, &mut rng) {
            Ok(r) => r,
            Err(e) => {
                trace.push(point(it, &tracker, evals));
                let mut out = fail(e.to_string(), trace, evals);
                out.ensemble = Some(ens);
                out.best_point = best_point;
                return out;
            }
        };
        ens = next;
        evals += report.evaluations as u64;
        tracker.observe(it, &report.best_values, cfg.epsilon);
        if let Some((x, f)) = report.best_point {
            let better = best_point
                .as_ref()
                .is_none_or(|(_, bf)| f.iter().sum::<f64>() < bf.iter().sum::<f64>());
            if better {
                best_point = Some((x, f));
            }
        }
        let done = tracker.converged(it, cfg.epsilon, opts.stagnation_window);
        let out_of_budget = opts.eval_budget.is_some_and(|b| evals >= b);
        if done {
            status = Some(RunStatus::Converged { iteration: it });
        } else if out_of_budget || it == cfg.max_iters {
            status = Some(RunStatus::MaxIterations {
                error: tracker.error(),
            });
        }
        if status.is_some() || it % stride == 0 {
            trace.push(point(it, &tracker, evals));
        }
    }
    let status = status.unwrap_or(RunStatus::MaxIterations {
        error: tracker.error(),
    });
    RunOutcome {
        record: RunRecord {
            function: spec.name.clone(),
            seed,
            n_f: spec.n_f,
            trace,
            status,
        },
        ensemble: Some(ens),
        best_point,
        evaluations: evals,
    }
}

/// Which objectives an experiment runs on.
#[derive(Clone, Debug)]
pub enum BenchmarkSelection {
    /// A base-function name or suite id, e.g. `sphere`, `F3`, `IF15`.
    Function(String),
    Suite(SuiteFamily),
    Custom(ObjectiveSpec),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub selection: BenchmarkSelection,
    pub dim: usize,
    /// Seed of the generated benchmark instance(s).
    pub instance_seed: u64,
    pub search: SearchConfig,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    pub options: RunOptions,
}

impl ExperimentConfig {
    pub fn objectives(&self) -> Result<Vec<ObjectiveSpec>> {
        match &self.selection {
            BenchmarkSelection::Function(name) => Ok(vec![benchmark_by_name(name, self.dim, self.instance_seed)?.objective()?]),
            BenchmarkSelection::Suite(family) => make_suite(*family, self.dim, self.instance_seed)?
                .iter()
                .map(|b| b.objective())
                .collect(),
            BenchmarkSelection::Custom(spec) => Ok(vec![spec.clone()]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(SearchError::config("seed list is empty"));
        }
        for spec in self.objectives()? {
            self.search.validate(spec.n_x, spec.n_f)?;
        }
        Ok(())
    }
}

/// Runs every seed on every selected objective. Seeds run in parallel;
/// the result order is objective-major, then seed order. A failing seed is
/// reported in its record and does not stop the batch.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    exp.validate()?;
    let mut out = Vec::new();
    for spec in exp.objectives()? {
        let records: Vec<RunRecord> = exp
            .seeds
            .par_iter()
            .map(|&s| run_seed(&spec, &exp.search, s, &exp.options).record)
            .collect();
        out.extend(records);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl std::str::FromStr for RecordFormat {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "json" => Ok(RecordFormat::Json),
            other => Err(SearchError::config(format!("unknown format `{other}`"))),
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// CSV text for `records`; all records must share `n_f` (`n_f` is used for
/// the header when the list is empty).
pub fn records_to_csv(records: &[RunRecord], n_f: usize) -> Result<String> {
    let n_f = records.first().map_or(n_f, |r| r.n_f);
    if records.iter().any(|r| r.n_f != n_f) {
        return Err(SearchError::config("records with different objective counts"));
    }
    let mut s = String::from("seed,iteration");
    for i in 1..=n_f {
        write!(s, ",best_f_{i}").unwrap();
    }
    s.push_str(",error,evals,wall_ms,status\n");
    for r in records {
        let last = r.trace.len().saturating_sub(1);
        for (k, p) in r.trace.iter().enumerate() {
            write!(s, "{},{}", r.seed, p.iteration).unwrap();
            for v in &p.best {
                write!(s, ",{}", fmt_f64(*v)).unwrap();
            }
            let err = p.error.map(fmt_f64).unwrap_or_default();
            let status = if k == last { r.status.label() } else { "running" };
            writeln!(s, ",{err},{},{},{status}", p.evals, fmt_f64(p.wall_ms)).unwrap();
        }
    }
    Ok(s)
}

pub fn write_records(records: &[RunRecord], path: &Path, format: RecordFormat) -> Result<()> {
    let text = match format {
        RecordFormat::Csv => records_to_csv(records, 1)?,
        RecordFormat::Json => serde_json::to_string_pretty(records)? + "\n",
    };
    std::fs::write(path, text).map_err(|e| SearchError::io(path, e))
}

pub fn read_records_json(path: &Path) -> Result<Vec<RunRecord>> {
    let s = std::fs::read_to_string(path).map_err(|e| SearchError::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::NoiseScale;

    fn sphere(n: usize) -> ObjectiveSpec {
        ObjectiveSpec::scalar("sphere", n, -5.0, 5.0, |x| x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum())
            .unwrap()
            .with_optimum(vec![0.0])
    }

    #[test]
    fn frozen_engine_hits_max_with_flat_trace() {
        let cfg = SearchConfig {
            n_e: 6,
            p_inertia: 1.0,
            sigma_b: Some(NoiseScale::Uniform(0.0)),
            max_iters: 30,
            ..Default::default()
        };
        let out = run_seed(&sphere(3), &cfg, 4, &RunOptions::default());
        assert!(matches!(out.record.status, RunStatus::MaxIterations { .. }));
        let first = &out.record.trace[0].best;
        assert!(out.record.trace.iter().all(|p| &p.best == first));
        assert_eq!(out.record.trace.last().unwrap().iteration, 30);
    }

    #[test]
    fn trace_is_monotone_and_increasing() {
        let cfg = SearchConfig {
            n_e: 8,
            max_iters: 300,
            ..Default::default()
        };
        let opts = RunOptions {
            record_stride: 1,
            ..Default::default()
        };
        let out = run_seed(&sphere(4), &cfg, 1, &opts);
        for w in out.record.trace.windows(2) {
            assert!(w[1].iteration > w[0].iteration);
            assert!(w[1].best[0] <= w[0].best[0]);
            assert!(w[1].evals >= w[0].evals);
        }
    }

    #[test]
    fn stagnation_declares_convergence_without_optimum() {
        let mut t = BestTracker::new(&[1.0], None);
        t.observe(1, &[0.5], 1e-3);
        assert!(!t.converged(10, 1e-3, 20));
        t.observe(15, &[0.4999], 1e-3);
        assert!(t.converged(21, 1e-3, 20));
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            records_to_csv(&[], 2).unwrap(),
            "seed,iteration,best_f_1,best_f_2,error,evals,wall_ms,status\n"
        );
        let rec = RunRecord {
            function: "f".into(),
            seed: 3,
            n_f: 1,
            trace: (0..3)
                .map(|i| TracePoint {
                    iteration: i,
                    best: vec![1.0 / (i + 1) as f64],
                    error: Some(0.5),
                    evals: 10 * i as u64,
                    wall_ms: 0.0,
                })
                .collect(),
            status: RunStatus::MaxIterations { error: Some(0.5) },
        };
        let csv = records_to_csv(&[rec], 1).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[2],
            "3,1,5.0000000000000000e-1,5.0000000000000000e-1,10,0.0000000000000000e0,running"
        );
        assert!(lines[3].ends_with(",max_iters"));
    }
}
