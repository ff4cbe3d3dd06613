//! Particles, objectives, configuration and the ensemble statistics shared
//! by every search variant.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SearchError};
use crate::rng::Draws;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A (possibly multi-objective) black box `f: R^n_x -> R^n_f` on a box.
#[derive(Clone)]
pub struct ObjectiveSpec {
    pub name: String,
    pub n_x: usize,
    pub n_f: usize,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    /// Known optimal objective vector, used only for error reporting.
    pub optimum: Option<Vec<f64>>,
    evaluator: Evaluator,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("n_x", &self.n_x)
            .field("n_f", &self.n_f)
            .field("optimum", &self.optimum)
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    pub fn new<F>(name: impl Into<String>, n_f: usize, lb: Vec<f64>, ub: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let spec = Self {
            name: name.into(),
            n_x: lb.len(),
            n_f,
            lb,
            ub,
            optimum: None,
            evaluator: Arc::new(f),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Scalar objective on the cube `[lo, hi]^n_x`.
    pub fn scalar<F>(name: impl Into<String>, n_x: usize, lo: f64, hi: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, vec![lo; n_x], vec![hi; n_x], move |x| vec![f(x)])
    }

    pub fn with_optimum(mut self, optimum: Vec<f64>) -> Self {
        self.optimum = Some(optimum);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_f == 0 {
            return Err(SearchError::config("n_x and n_f must be positive"));
        }
        if self.ub.len() != self.n_x {
            return Err(SearchError::Dimension {
                expected: self.n_x,
                got: self.ub.len(),
            });
        }
        for (i, (&lo, &hi)) in self.lb.iter().zip(&self.ub).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(SearchError::config(format!("bound {i} is not finite")));
            }
            if lo >= hi {
                return Err(SearchError::config(format!(
                    "lower bound {lo} not below upper bound {hi} at component {i}"
                )));
            }
        }
        if let Some(opt) = &self.optimum {
            if opt.len() != self.n_f {
                return Err(SearchError::Dimension {
                    expected: self.n_f,
                    got: opt.len(),
                });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_x);
        let v = (self.evaluator)(x);
        debug_assert_eq!(v.len(), self.n_f);
        v
    }
}

/// What happens to a component that leaves `[lb, ub]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsPolicy {
    #[default]
    Clip,
    Reflect,
    /// Leave the particle wherever it lands (search over all of R^n_x).
    Free,
}

impl BoundsPolicy {
    pub fn apply(self, v: f64, lo: f64, hi: f64) -> f64 {
        match self {
            BoundsPolicy::Clip => v.clamp(lo, hi),
            BoundsPolicy::Free => v,
            BoundsPolicy::Reflect => {
                if (lo..=hi).contains(&v) {
                    return v;
                }
                if !v.is_finite() {
                    return v.clamp(lo, hi);
                }
                let width = hi - lo;
                let mut t = (v - lo).rem_euclid(2.0 * width);
                if t > width {
                    t = 2.0 * width - t;
                }
                lo + t
            }
        }
    }

    pub fn apply_all(self, x: &mut [f64], lb: &[f64], ub: &[f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(lb).zip(ub) {
            *v = self.apply(*v, lo, hi);
        }
    }
}

impl std::str::FromStr for BoundsPolicy {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clip" => Ok(BoundsPolicy::Clip),
            "reflect" => Ok(BoundsPolicy::Reflect),
            "free" | "none" => Ok(BoundsPolicy::Free),
            other => Err(SearchError::config(format!("unknown bounds policy `{other}`"))),
        }
    }
}

/// A noise scale given either once for every component or per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseScale {
    Uniform(f64),
    PerComponent(Vec<f64>),
}

impl NoiseScale {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            NoiseScale::Uniform(s) => vec![*s; n],
            NoiseScale::PerComponent(v) if v.len() == n => v.clone(),
            NoiseScale::PerComponent(v) => {
                return Err(SearchError::Dimension {
                    expected: n,
                    got: v.len(),
                })
            }
        };
        if v.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(SearchError::config("noise scales must be finite and non-negative"));
        }
        Ok(v)
    }
}

/// Default prediction step as a fraction of the box width. Coarser steps
/// keep retained particles from settling below about this scale.
pub const DEFAULT_SIGMA_B_FRACTION: f64 = 1e-6;

/// Every tunable of the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Ensemble size.
    pub n_e: usize,
    /// Number of state-space substructures.
    pub n_p: usize,
    /// Probability of retaining a particle without update.
    pub p_inertia: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    /// Prediction random-walk scale; `None` means `DEFAULT_SIGMA_B_FRACTION * (ub - lb)`.
    pub sigma_b: Option<NoiseScale>,
    /// Cost-noise scale per objective component.
    pub sigma_w: NoiseScale,
    /// Coalescence noise intensity.
    pub alpha: f64,
    pub use_prediction: bool,
    pub use_cost_innovation: bool,
    pub use_coalescence: bool,
    pub use_selection: bool,
    /// Off: the update is added to the particle's own components.
    pub use_scrambling: bool,
    /// Off: the blend branch takes the unblended candidate.
    pub use_blending: bool,
    pub bounds_policy: BoundsPolicy,
    /// Randomly permute components before cutting them into substructures.
    pub shuffle_partition: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_e: 20,
            n_p: 1,
            p_inertia: 0.9,
            epsilon: 1e-5,
            max_iters: 10_000,
            sigma_b: None,
            sigma_w: NoiseScale::Uniform(1e-2),
            alpha: 1e-4,
            use_prediction: true,
            use_cost_innovation: true,
            use_coalescence: true,
            use_selection: true,
            use_scrambling: true,
            use_blending: true,
            bounds_policy: BoundsPolicy::Clip,
            shuffle_partition: false,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, n_x: usize, n_f: usize) -> Result<()> {
        if self.n_e < 2 {
            return Err(SearchError::config("ensemble size must be at least 2"));
        }
        if self.n_p == 0 || self.n_p > n_x {
            return Err(SearchError::config(format!(
                "substructure count {} must lie in 1..={n_x}",
                self.n_p
            )));
        }
        if !(0.0..=1.0).contains(&self.p_inertia) {
            return Err(SearchError::config("inertia probability must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(SearchError::config("alpha must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(SearchError::config("epsilon must be positive"));
        }
        let w = self.sigma_w.resolve(n_f)?;
        if w.iter().any(|&s| s <= 0.0) {
            return Err(SearchError::config("sigma_w must be positive"));
        }
        if let Some(b) = &self.sigma_b {
            b.resolve(n_x)?;
        }
        if !self.use_cost_innovation && !self.use_coalescence {
            return Err(SearchError::config(
                "at least one of cost innovation and coalescence must be enabled",
            ));
        }
        Ok(())
    }

    /// Per-dimension prediction noise for `spec`.
    pub fn sigma_b_for(&self, spec: &ObjectiveSpec) -> Result<Vec<f64>> {
        match &self.sigma_b {
            Some(s) => s.resolve(spec.n_x),
            None => Ok(spec.lb.iter().zip(&spec.ub).map(|(l, u)| DEFAULT_SIGMA_B_FRACTION * (u - l)).collect()),
        }
    }

    /// Diagonal of `Sigma_W Sigma_W^T`.
    pub fn cost_variances(&self, n_f: usize) -> Result<Vec<f64>> {
        Ok(self.sigma_w.resolve(n_f)?.into_iter().map(|s| s * s).collect())
    }
}

/// The particles of one iteration together with their objective values,
/// fitness and blend weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub particles: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles.first().map_or(0, Vec::len)
    }

    /// Re-evaluates every particle; returns the number of evaluations.
    pub fn refresh_values(&mut self, spec: &ObjectiveSpec) -> usize {
        self.values = self.particles.iter().map(|p| spec.evaluate(p)).collect();
        self.particles.len()
    }

    /// Recomputes fitness against the current component-wise best.
    pub fn refresh_fitness(&mut self) {
        let best = best_vector(self);
        self.fitness = self.values.iter().map(|v| fitness(&best, v)).collect();
    }
}

/// Uniform initial scatter on `[lb, ub]` with uniform blend weights.
pub fn init_ensemble(spec: &ObjectiveSpec, cfg: &SearchConfig, rng: &mut impl Draws) -> Result<Ensemble> {
    spec.validate()?;
    cfg.validate(spec.n_x, spec.n_f)?;
    let particles: Vec<Vec<f64>> = (0..cfg.n_e)
        .map(|_| {
            spec.lb
                .iter()
                .zip(&spec.ub)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.uniform())
                .collect()
        })
        .collect();
    let mut ens = Ensemble {
        values: Vec::new(),
        fitness: Vec::new(),
        weights: vec![1.0 / cfg.n_e as f64; cfg.n_e],
        particles,
    };
    ens.refresh_values(spec);
    ens.refresh_fitness();
    Ok(ens)
}

/// Component-wise minimum of the ensemble's objective values.
pub fn best_vector(ens: &Ensemble) -> Vec<f64> {
    component_min(&ens.values)
}

pub(crate) fn component_min(values: &[Vec<f64>]) -> Vec<f64> {
    let mut it = values.iter();
    let mut best = it.next().cloned().unwrap_or_default();
    for v in it {
        for (b, &x) in best.iter_mut().zip(v) {
            if x < *b {
                *b = x;
            }
        }
    }
    best
}

/// Euclidean misfit between the best vector and a particle's values.
pub fn fitness(f_tilde: &[f64], f_x: &[f64]) -> f64 {
    debug_assert_eq!(f_tilde.len(), f_x.len());
    f_tilde
        .iter()
        .zip(f_x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Arithmetic mean of the particles.
pub fn ensemble_mean(ens: &Ensemble) -> Vec<f64> {
    mean_of(&ens.particles)
}

pub(crate) fn mean_of(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}
