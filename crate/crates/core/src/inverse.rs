//! Sparse-data coefficient recovery on a 1-D diffusion-absorption model.
//!
//! The forward model solves `-kappa phi'' + mu phi = S` on `N` interior
//! nodes of `[0, 1]` with `phi = 0` at both ends. Detectors observe the
//! absorbed energy `H = mu * phi` at a few nodes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::engine::{compute_gain, predict};
use crate::ensemble::{component_min, ensemble_mean, init_ensemble, best_vector, BoundsPolicy, Ensemble, ObjectiveSpec, SearchConfig};
use crate::error::{Result, SearchError};
use crate::harness::{fmt_f64, run_seed, BestTracker, RunOptions, RunRecord, RunStatus, TracePoint};
use crate::rng::{Draws, RngStream};

/// Tridiagonal finite-difference model.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyForwardModel {
    n: usize,
    kappa: f64,
    source: Vec<f64>,
}

impl ToyForwardModel {
    /// `n` interior nodes, unit source.
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n == 0 {
            return Err(SearchError::config("grid needs at least one node"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(SearchError::config("diffusion coefficient must be positive"));
        }
        Ok(Self {
            n,
            kappa,
            source: vec![1.0; n],
        })
    }

    pub fn with_source(mut self, source: Vec<f64>) -> Result<Self> {
        if source.len() != self.n {
            return Err(SearchError::Dimension {
                expected: self.n,
                got: source.len(),
            });
        }
        self.source = source;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// Grid spacing `1 / (N + 1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    fn coupling(&self) -> f64 {
        self.kappa / (self.h() * self.h())
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n {
            return Err(SearchError::Dimension {
                expected: self.n,
                got: mu.len(),
            });
        }
        if let Some((node, &value)) = mu.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
            return Err(SearchError::NonPositiveCoefficient { node, value });
        }
        Ok(())
    }

    /// Fluence `phi` for absorption `mu`, by the Thomas algorithm.
    pub fn solve_forward(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_mu(mu)?;
        let n = self.n;
        let c = self.coupling();
        // sub- and super-diagonal are both -c
        let mut diag: Vec<f64> = mu.iter().map(|m| 2.0 * c + m).collect();
        let mut rhs = self.source.clone();
        for i in 1..n {
            let factor = -c / diag[i - 1];
            diag[i] -= factor * -c;
            rhs[i] -= factor * rhs[i - 1];
        }
        let mut phi = vec![0.0; n];
        phi[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            phi[i] = (rhs[i] + c * phi[i + 1]) / diag[i];
        }
        debug_assert!(self.residual_max(mu, &phi) < 1e-10 * (1.0 + self.source.iter().fold(0.0f64, |a, s| a.max(s.abs()))));
        Ok(phi)
    }

    /// `max_i |(A phi - S)_i|`.
    pub fn residual_max(&self, mu: &[f64], phi: &[f64]) -> f64 {
        let c = self.coupling();
        (0..self.n)
            .map(|i| {
                let left = if i > 0 { phi[i - 1] } else { 0.0 };
                let right = if i + 1 < self.n { phi[i + 1] } else { 0.0 };
                let a_phi = c * (2.0 * phi[i] - left - right) + mu[i] * phi[i];
                (a_phi - self.source[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Absorbed energy `H = mu * phi` at every node.
    pub fn absorbed_energy(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let phi = self.solve_forward(mu)?;
        Ok(mu.iter().zip(phi).map(|(m, p)| m * p).collect())
    }
}

/// Noisy samples of `H` at detector nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub detectors: Vec<usize>,
    pub values: Vec<f64>,
    pub noise_rel: f64,
}

fn check_detectors(detectors: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &d in detectors {
        if d >= n {
            return Err(SearchError::config(format!("detector node {d} outside grid of {n}")));
        }
        if std::mem::replace(&mut seen[d], true) {
            return Err(SearchError::config(format!("detector node {d} listed twice")));
        }
    }
    Ok(())
}

/// `count` detectors spread evenly over `n` nodes.
pub fn even_detectors(n: usize, count: usize) -> Result<Vec<usize>> {
    if count == 0 || count > n {
        return Err(SearchError::config(format!("detector count {count} must lie in 1..={n}")));
    }
    Ok((0..count).map(|i| ((2 * i + 1) * n) / (2 * count)).collect())
}

/// `y_d = H_true(d) (1 + noise_rel xi_d)`.
pub fn synthesize(
    model: &ToyForwardModel,
    mu_true: &[f64],
    detectors: &[usize],
    noise_rel: f64,
    rng: &mut impl Draws,
) -> Result<MeasurementSet> {
    check_detectors(detectors, model.n())?;
    let h = model.absorbed_energy(mu_true)?;
    let values = detectors.iter().map(|&d| h[d] * (1.0 + noise_rel * rng.normal())).collect();
    Ok(MeasurementSet {
        detectors: detectors.to_vec(),
        values,
        noise_rel,
    })
}

/// One objective per detector, `|H(mu)_d - y_d|`, over `mu` in
/// `[mu_min, mu_max]^N`. Non-positive `mu` (only reachable with free
/// bounds) evaluates to infinity.
pub fn misfit_objective(meas: &MeasurementSet, model: &ToyForwardModel, mu_min: f64, mu_max: f64) -> Result<ObjectiveSpec> {
    check_detectors(&meas.detectors, model.n())?;
    if !(mu_min > 0.0 && mu_max > mu_min) {
        return Err(SearchError::config("absorption bounds must satisfy 0 < min < max"));
    }
    let n = model.n();
    let n_f = meas.detectors.len();
    let model = model.clone();
    let meas = meas.clone();
    ObjectiveSpec::new("misfit", n_f, vec![mu_min; n], vec![mu_max; n], move |mu: &[f64]| {
        match model.absorbed_energy(mu) {
            Ok(h) => meas.detectors.iter().zip(&meas.values).map(|(&d, y)| (h[d] - y).abs()).collect(),
            Err(_) => vec![f64::INFINITY; n_f],
        }
    })
}

/// Prediction plus the plain cost-innovation gain update, nothing else.
/// Runs until `cfg.max_iters` or the evaluation budget. Returns the record
/// and the ensemble mean as the estimate.
pub fn filtering_baseline(
    spec: &ObjectiveSpec,
    cfg: &SearchConfig,
    opts: &RunOptions,
    rng: &mut impl Draws,
) -> Result<(RunRecord, Vec<f64>)> {
    let cfg = SearchConfig {
        use_coalescence: false,
        use_cost_innovation: true,
        ..cfg.clone()
    };
    cfg.validate(spec.n_x, spec.n_f)?;
    let ens = init_ensemble(spec, &cfg, rng)?;
    filtering_baseline_from(ens, spec, &cfg, opts, rng)
}

/// [`filtering_baseline`] from a given initial ensemble.
pub fn filtering_baseline_from(
    mut ens: Ensemble,
    spec: &ObjectiveSpec,
    cfg: &SearchConfig,
    opts: &RunOptions,
    rng: &mut impl Draws,
) -> Result<(RunRecord, Vec<f64>)> {
    let cfg = SearchConfig {
        use_coalescence: false,
        use_cost_innovation: true,
        ..cfg.clone()
    };
    let stride = opts.record_stride.max(1);
    let mut evals = ens.len() as u64;
    let mut tracker = BestTracker::new(&best_vector(&ens), spec.optimum.clone());
    let point = |it: usize, t: &BestTracker, evals: u64| TracePoint {
        iteration: it,
        best: t.best().to_vec(),
        error: t.error(),
        evals,
        wall_ms: 0.0,
    };
    let mut trace = vec![point(0, &tracker, evals)];
    let mut status = RunStatus::MaxIterations { error: tracker.error() };

    for it in 1..=cfg.max_iters {
        let mut pred = predict(&ens, spec, &cfg, rng)?;
        pred.values = pred.particles.iter().map(|p| spec.evaluate(p)).collect();
        evals += pred.len() as u64;
        let f_tilde = component_min(&pred.values);
        for v in &pred.values {
            tracker.observe(it, v, cfg.epsilon);
        }
        let inn: Vec<Vec<f64>> = pred
            .values
            .iter()
            .map(|v| f_tilde.iter().zip(v).map(|(t, f)| t - f).collect())
            .collect();
        let gain = compute_gain(&pred.particles, &inn, &cfg, spec.n_f)?;
        for (p, i) in pred.particles.iter_mut().zip(&inn) {
            let u = gain.update(i);
            let mut x: Vec<f64> = p.iter().zip(&u).map(|(a, b)| a + b).collect();
            cfg.bounds_policy.apply_all(&mut x, &spec.lb, &spec.ub);
            *p = x;
        }
        pred.values.iter_mut().flatten().for_each(|v| *v = f64::NAN);
        pred.fitness.iter_mut().for_each(|v| *v = f64::NAN);
        ens = pred;

        let converged = spec.optimum.is_some() && tracker.converged(it, cfg.epsilon, opts.stagnation_window);
        let spent = opts.eval_budget.is_some_and(|b| evals >= b);
        let last = converged || spent || it == cfg.max_iters;
        if converged {
            status = RunStatus::Converged { iteration: it };
        } else if last {
            status = RunStatus::MaxIterations { error: tracker.error() };
        }
        if last || it % stride == 0 {
            trace.push(point(it, &tracker, evals));
        }
        if last {
            break;
        }
    }
    let record = RunRecord {
        function: spec.name.clone(),
        seed: cfg.seed,
        n_f: spec.n_f,
        trace,
        status,
    };
    Ok((record, ensemble_mean(&ens)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Optimizer,
    Filtering,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Optimizer => "optimizer",
            Method::Filtering => "filtering",
        }
    }
}

/// How the optimizer's recovered field is read off its final state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimate {
    /// Ensemble mean.
    Mean,
    /// Evaluated point with the smallest summed misfit.
    Best,
}

/// Layout and budgets of a recovery study.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub grid_n: usize,
    pub kappa: f64,
    /// Background absorption `b`.
    pub background: f64,
    /// Anomaly level as a multiple of `b`.
    pub contrast: f64,
    /// Anomaly node range, half-open.
    pub anomaly: (usize, usize),
    pub detector_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub noise_rel: f64,
    /// Search box as multiples of `b`.
    pub bounds: (f64, f64),
    /// Objective evaluations granted to each method.
    pub eval_budget: u64,
    /// Optimizer settings; the baseline shares `n_e`, prediction and bounds.
    pub search: SearchConfig,
    pub estimate: Estimate,
}

impl StudyConfig {
    pub fn new(grid_n: usize, detector_counts: Vec<usize>, seeds: Vec<u64>) -> Self {
        let lo = (grid_n * 2) / 5;
        let hi = (grid_n * 3) / 5;
        Self {
            grid_n,
            kappa: 1e-2,
            background: 0.01,
            contrast: 5.0,
            anomaly: (lo, hi.max(lo + 1)),
            detector_counts,
            seeds,
            noise_rel: 0.01,
            bounds: (0.2, 10.0),
            eval_budget: 40_000,
            search: SearchConfig {
                n_e: 20,
                n_p: 2,
                use_coalescence: false,
                max_iters: usize::MAX,
                bounds_policy: BoundsPolicy::Clip,
                ..Default::default()
            },
            estimate: Estimate::Mean,
        }
    }

    pub fn mu_true(&self) -> Vec<f64> {
        (0..self.grid_n)
            .map(|i| {
                if (self.anomaly.0..self.anomaly.1).contains(&i) {
                    self.contrast * self.background
                } else {
                    self.background
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(SearchError::config("seed list is empty"));
        }
        if self.anomaly.0 >= self.anomaly.1 || self.anomaly.1 > self.grid_n || self.anomaly.1 - self.anomaly.0 == self.grid_n {
            return Err(SearchError::config("anomaly must be a proper, nonempty node range"));
        }
        for &c in &self.detector_counts {
            even_detectors(self.grid_n, c)?;
        }
        ToyForwardModel::new(self.grid_n, self.kappa)?;
        Ok(())
    }
}

/// One (method, detector count, seed) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub method: Method,
    pub detector_count: usize,
    pub seed: u64,
    pub rmse: f64,
    /// Mean recovered anomaly over mean recovered background.
    pub contrast: f64,
    pub evaluations: u64,
    pub estimate: Vec<f64>,
    pub record: RunRecord,
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Recovered contrast of `mu` for the anomaly range `[lo, hi)`.
pub fn contrast_ratio(mu: &[f64], anomaly: (usize, usize)) -> f64 {
    let (mut a, mut na, mut b, mut nb) = (0.0, 0, 0.0, 0);
    for (i, &m) in mu.iter().enumerate() {
        if (anomaly.0..anomaly.1).contains(&i) {
            a += m;
            na += 1;
        } else {
            b += m;
            nb += 1;
        }
    }
    (a / na as f64) / (b / nb as f64)
}

fn study_cell(study: &StudyConfig, method: Method, count: usize, seed: u64) -> Result<StudyRow> {
    let model = ToyForwardModel::new(study.grid_n, study.kappa)?;
    let mu_true = study.mu_true();
    let detectors = even_detectors(study.grid_n, count)?;
    let mut noise_rng = RngStream::new(seed ^ 0x5eed_da7a);
    let meas = synthesize(&model, &mu_true, &detectors, study.noise_rel, &mut noise_rng)?;
    let b = study.background;
    let spec = misfit_objective(&meas, &model, study.bounds.0 * b, study.bounds.1 * b)?;
    let opts = RunOptions {
        eval_budget: Some(study.eval_budget),
        stagnation_window: usize::MAX,
        ..Default::default()
    };
    let cfg = SearchConfig {
        seed,
        ..study.search.clone()
    };
    let (record, estimate, evaluations) = match method {
        Method::Optimizer => {
            cfg.validate(spec.n_x, spec.n_f)?;
            let out = run_seed(&spec, &cfg, seed, &opts);
            if let RunStatus::Failed { message } = &out.record.status {
                return Err(SearchError::config(format!("optimizer run failed: {message}")));
            }
            let ens = out.ensemble.as_ref().expect("successful run keeps its ensemble");
            let est = match (study.estimate, &out.best_point) {
                (Estimate::Best, Some((x, _))) => x.clone(),
                _ => ensemble_mean(ens),
            };
            (out.record.clone(), est, out.evaluations)
        }
        Method::Filtering => {
            let mut rng = RngStream::new(seed);
            let (record, est) = filtering_baseline(&spec, &cfg, &opts, &mut rng)?;
            let evals = record.final_point().map_or(0, |p| p.evals);
            (record, est, evals)
        }
    };
    Ok(StudyRow {
        method,
        detector_count: count,
        seed,
        rmse: rmse(&estimate, &mu_true),
        contrast: contrast_ratio(&estimate, study.anomaly),
        evaluations,
        estimate,
        record,
    })
}

/// Runs both methods for every detector count and seed, cells in
/// parallel. Rows come back ordered by method, detector count, seed.
pub fn run_recovery_study(study: &StudyConfig) -> Result<Vec<StudyRow>> {
    study.validate()?;
    let mut cells = Vec::new();
    for method in [Method::Optimizer, Method::Filtering] {
        for &count in &study.detector_counts {
            for &seed in &study.seeds {
                cells.push((method, count, seed));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(m, c, s)| study_cell(study, m, c, s))
        .collect()
}

pub fn study_to_csv(rows: &[StudyRow]) -> String {
    let mut s = String::from("method,detectors,seed,rmse,contrast,evals\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.method.name(),
            r.detector_count,
            r.seed,
            fmt_f64(r.rmse),
            fmt_f64(r.contrast),
            r.evaluations
        )
        .unwrap();
    }
    s
}

/// Median of the values (mean of the middle pair for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
