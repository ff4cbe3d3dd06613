//! Shifted, rotated and grouped benchmark objectives.
//!
//! Instances are generated from a seed: shifts are uniform inside the
//! family's domain, rotations come from QR-orthogonalized Gaussian
//! matrices and group membership from a random permutation. Every instance
//! has its global minimum value 0 at `argmin()`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::ObjectiveSpec;
use crate::error::{Result, SearchError};
use crate::rng::{Draws, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFunction {
    Sphere,
    Elliptic,
    Rastrigin,
    Ackley,
    Schwefel12,
    /// Minimum at the all-ones vector.
    Rosenbrock,
    /// Slope with its optimum on the domain boundary, written in the form
    /// that holds on the feasible side of that boundary: `sum c_i |z_i|`.
    LinearSlope,
    Discus,
    BentCigar,
}

impl BaseFunction {
    pub const ALL: [BaseFunction; 9] = [
        BaseFunction::Sphere,
        BaseFunction::Elliptic,
        BaseFunction::Rastrigin,
        BaseFunction::Ackley,
        BaseFunction::Schwefel12,
        BaseFunction::Rosenbrock,
        BaseFunction::LinearSlope,
        BaseFunction::Discus,
        BaseFunction::BentCigar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Elliptic => "elliptic",
            BaseFunction::Rastrigin => "rastrigin",
            BaseFunction::Ackley => "ackley",
            BaseFunction::Schwefel12 => "schwefel_1_2",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::LinearSlope => "linear_slope",
            BaseFunction::Discus => "discus",
            BaseFunction::BentCigar => "bent_cigar",
        }
    }

    /// Minimizer of the base function in `z` coordinates.
    pub fn argmin(self, n: usize) -> Vec<f64> {
        match self {
            BaseFunction::Rosenbrock => vec![1.0; n],
            _ => vec![0.0; n],
        }
    }

    /// CEC-style search domain half-width.
    fn cec_bound(self) -> f64 {
        match self {
            BaseFunction::Rastrigin => 5.0,
            BaseFunction::Ackley => 32.0,
            _ => 100.0,
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseFunction {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "schwefel" | "schwefel12" => "schwefel_1_2",
            "ellipsoidal" => "elliptic",
            "slope" => "linear_slope",
            "cigar" => "bent_cigar",
            other => other,
        };
        BaseFunction::ALL
            .into_iter()
            .find(|b| b.name() == alias)
            .ok_or_else(|| SearchError::config(format!("unknown base function `{s}`")))
    }
}

/// Evaluates a base function.
pub fn eval_base(f: BaseFunction, z: &[f64]) -> f64 {
    let n = z.len();
    match f {
        BaseFunction::Sphere => z.iter().map(|v| v * v).sum(),
        BaseFunction::Elliptic => {
            if n == 1 {
                return z[0] * z[0];
            }
            z.iter()
                .enumerate()
                .map(|(i, v)| 1e6f64.powf(i as f64 / (n - 1) as f64) * v * v)
                .sum()
        }
        BaseFunction::Rastrigin => z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum(),
        BaseFunction::Ackley => {
            let nf = n as f64;
            let sq = z.iter().map(|v| v * v).sum::<f64>() / nf;
            let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / nf;
            // expm1 form: exactly 0 at z = 0, no cancellation nearby
            -20.0 * (-0.2 * sq.sqrt()).exp_m1() - E * (cs - 1.0).exp_m1()
        }
        BaseFunction::Schwefel12 => {
            let mut acc = 0.0;
            z.iter()
                .map(|v| {
                    acc += v;
                    acc * acc
                })
                .sum()
        }
        BaseFunction::Rosenbrock => z
            .windows(2)
            .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
            .sum(),
        BaseFunction::LinearSlope => {
            if n == 1 {
                return z[0].abs();
            }
            z.iter()
                .enumerate()
                .map(|(i, v)| 10f64.powf(i as f64 / (n - 1) as f64) * v.abs())
                .sum()
        }
        BaseFunction::Discus => 1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>(),
        BaseFunction::BentCigar => z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>(),
    }
}

/// Square orthogonal matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    /// Q factor of a Gaussian matrix, with column signs fixed so the
    /// distribution is Haar.
    pub fn random(n: usize, rng: &mut impl Draws) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        for c in 0..n {
            if r[(c, c)] < 0.0 {
                q.column_mut(c).neg_mut();
            }
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(q[(i, j)]);
            }
        }
        Self { n, data }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `max |R R^T - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.data[i * n + k] * self.data[j * n + k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// A group of permuted components evaluated by `base`, optionally rotated
/// and weighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub indices: Vec<usize>,
    pub base: BaseFunction,
    pub rotation: Option<Rotation>,
    pub weight: f64,
}

/// Shifted objective made of one or more groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeBenchmark {
    pub name: String,
    pub n_x: usize,
    pub shift: Vec<f64>,
    pub groups: Vec<Group>,
    pub lower: f64,
    pub upper: f64,
}

impl CompositeBenchmark {
    /// Plain shifted base function over all components.
    pub fn shifted(name: impl Into<String>, base: BaseFunction, shift: Vec<f64>, lower: f64, upper: f64) -> Self {
        let n_x = shift.len();
        Self {
            name: name.into(),
            n_x,
            shift,
            groups: vec![Group {
                indices: (0..n_x).collect(),
                base,
                rotation: None,
                weight: 1.0,
            }],
            lower,
            upper,
        }
    }

    /// Point where the value is exactly 0.
    pub fn argmin(&self) -> Vec<f64> {
        self.shift.clone()
    }

    pub fn rotations(&self) -> impl Iterator<Item = &Rotation> {
        self.groups.iter().filter_map(|g| g.rotation.as_ref())
    }

    pub fn objective(&self) -> Result<ObjectiveSpec> {
        let bench = Arc::new(self.clone());
        Ok(ObjectiveSpec::scalar(self.name.clone(), self.n_x, self.lower, self.upper, move |x| {
            eval_composite_unchecked(&bench, x)
        })?
        .with_optimum(vec![0.0]))
    }
}

/// Value of a composite benchmark at `x`.
pub fn eval_composite(bench: &CompositeBenchmark, x: &[f64]) -> Result<f64> {
    if x.len() != bench.n_x {
        return Err(SearchError::Dimension {
            expected: bench.n_x,
            got: x.len(),
        });
    }
    Ok(eval_composite_unchecked(bench, x))
}

fn eval_composite_unchecked(bench: &CompositeBenchmark, x: &[f64]) -> f64 {
    bench
        .groups
        .iter()
        .map(|g| {
            let z: Vec<f64> = g.indices.iter().map(|&i| x[i] - bench.shift[i]).collect();
            let mut z = match &g.rotation {
                Some(r) => r.apply(&z),
                None => z,
            };
            // Rosenbrock's minimizer sits at ones; move it onto the shift.
            if g.base == BaseFunction::Rosenbrock {
                z.iter_mut().for_each(|v| *v += 1.0);
            }
            g.weight * eval_base(g.base, &z)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteFamily {
    CecLike,
    BbobLike,
}

impl FromStr for SuiteFamily {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cec" | "cec_like" | "cec-like" => Ok(SuiteFamily::CecLike),
            "bbob" | "bbob_like" | "bbob-like" => Ok(SuiteFamily::BbobLike),
            other => Err(SearchError::config(format!("unknown suite `{other}`"))),
        }
    }
}

struct Builder {
    rng: RngStream,
    n_x: usize,
}

impl Builder {
    fn shift(&mut self, half: f64) -> Vec<f64> {
        (0..self.n_x).map(|_| self.rng.uniform_in(-0.8 * half, 0.8 * half)).collect()
    }

    fn permutation(&mut self) -> Vec<usize> {
        let mut p: Vec<usize> = (0..self.n_x).collect();
        for i in (1..p.len()).rev() {
            let k = ((self.rng.uniform() * (i + 1) as f64) as usize).min(i);
            p.swap(i, k);
        }
        p
    }

    fn rest_base(base: BaseFunction) -> BaseFunction {
        match base {
            BaseFunction::Schwefel12 | BaseFunction::Rosenbrock => BaseFunction::Sphere,
            b => b,
        }
    }

    fn rotated(base: BaseFunction) -> bool {
        matches!(base, BaseFunction::Elliptic | BaseFunction::Rastrigin | BaseFunction::Ackley)
    }

    fn group(&mut self, indices: Vec<usize>, base: BaseFunction, rotate: bool, weight: f64) -> Group {
        let rotation = rotate.then(|| Rotation::random(indices.len(), &mut self.rng));
        Group {
            indices,
            base,
            rotation,
            weight,
        }
    }

    fn separable(&mut self, name: &str, base: BaseFunction) -> CompositeBenchmark {
        let b = base.cec_bound();
        CompositeBenchmark::shifted(name, base, self.shift(b), -b, b)
    }

    /// `1e6 * f(R z[P_1..P_m]) + g(z[P_m+1..])`
    fn single_group(&mut self, name: &str, base: BaseFunction, m: usize) -> CompositeBenchmark {
        let b = base.cec_bound();
        let shift = self.shift(b);
        let perm = self.permutation();
        let head = self.group(perm[..m].to_vec(), base, Self::rotated(base), 1e6);
        let tail = self.group(perm[m..].to_vec(), Self::rest_base(base), false, 1.0);
        CompositeBenchmark {
            name: name.into(),
            n_x: self.n_x,
            shift,
            groups: vec![head, tail],
            lower: -b,
            upper: b,
        }
    }

    /// `k` rotated groups of size `m`, plus the remainder (if any)
    /// evaluated unrotated.
    fn multi_group(&mut self, name: &str, base: BaseFunction, m: usize, k: usize) -> CompositeBenchmark {
        let b = base.cec_bound();
        let shift = self.shift(b);
        let perm = self.permutation();
        let mut groups: Vec<Group> = (0..k)
            .map(|g| self.group(perm[g * m..(g + 1) * m].to_vec(), base, Self::rotated(base), 1.0))
            .collect();
        if k * m < self.n_x {
            groups.push(self.group(perm[k * m..].to_vec(), Self::rest_base(base), false, 1.0));
        }
        CompositeBenchmark {
            name: name.into(),
            n_x: self.n_x,
            shift,
            groups,
            lower: -b,
            upper: b,
        }
    }

    fn bbob(&mut self, name: &str, base: BaseFunction, rotate: bool) -> CompositeBenchmark {
        let shift = if base == BaseFunction::LinearSlope {
            // optimum on a corner of [-5, 5]^n
            (0..self.n_x)
                .map(|_| if self.rng.uniform() < 0.5 { -5.0 } else { 5.0 })
                .collect()
        } else {
            (0..self.n_x).map(|_| self.rng.uniform_in(-4.0, 4.0)).collect()
        };
        let group = self.group((0..self.n_x).collect(), base, rotate, 1.0);
        CompositeBenchmark {
            name: name.into(),
            n_x: self.n_x,
            shift,
            groups: vec![group],
            lower: -5.0,
            upper: 5.0,
        }
    }
}

/// Default group size for the grouped CEC-style classes.
pub fn default_group_size(n_x: usize) -> usize {
    (n_x / 4).max(2)
}

/// Deterministic suite. `cec_like` gives ten instances covering the
/// separable, single-group, half-grouped, fully grouped and non-separable
/// classes; `bbob_like` gives six.
pub fn make_suite(family: SuiteFamily, n_x: usize, seed: u64) -> Result<Vec<CompositeBenchmark>> {
    let mut b = Builder {
        rng: RngStream::new(seed),
        n_x,
    };
    match family {
        SuiteFamily::CecLike => {
            let m = default_group_size(n_x);
            if n_x < 8 {
                return Err(SearchError::config(format!(
                    "cec_like suite needs n_x >= 8, got {n_x}"
                )));
            }
            let half = n_x / (2 * m);
            let full = n_x / m;
            Ok(vec![
                b.separable("F1", BaseFunction::Elliptic),
                b.separable("F2", BaseFunction::Rastrigin),
                b.separable("F3", BaseFunction::Ackley),
                b.single_group("F4", BaseFunction::Elliptic, m),
                b.single_group("F6", BaseFunction::Ackley, m),
                b.multi_group("F9", BaseFunction::Elliptic, m, half),
                b.multi_group("F13", BaseFunction::Rosenbrock, m, half),
                b.multi_group("F14", BaseFunction::Elliptic, m, full),
                b.separable("F19", BaseFunction::Schwefel12),
                b.separable("F20", BaseFunction::Rosenbrock),
            ])
        }
        SuiteFamily::BbobLike => {
            if n_x < 2 {
                return Err(SearchError::config("bbob_like suite needs n_x >= 2"));
            }
            Ok(vec![
                b.bbob("IF1", BaseFunction::Sphere, false),
                b.bbob("IF2", BaseFunction::Elliptic, false),
                b.bbob("IF5", BaseFunction::LinearSlope, false),
                b.bbob("IF11", BaseFunction::Discus, true),
                b.bbob("IF12", BaseFunction::BentCigar, true),
                b.bbob("IF15", BaseFunction::Rastrigin, true),
            ])
        }
    }
}

/// Resolves a benchmark by suite id (`F3`, `IF15`) or by base-function
/// name (plain shifted instance on the CEC-style domain).
pub fn benchmark_by_name(name: &str, n_x: usize, seed: u64) -> Result<CompositeBenchmark> {
    let upper = name.to_ascii_uppercase();
    if upper.starts_with("IF") {
        return make_suite(SuiteFamily::BbobLike, n_x, seed)?
            .into_iter()
            .find(|b| b.name == upper)
            .ok_or_else(|| SearchError::config(format!("no bbob_like instance `{name}`")));
    }
    if upper.starts_with('F') && upper[1..].chars().all(|c| c.is_ascii_digit()) && upper.len() > 1 {
        return make_suite(SuiteFamily::CecLike, n_x, seed)?
            .into_iter()
            .find(|b| b.name == upper)
            .ok_or_else(|| SearchError::config(format!("no cec_like instance `{name}`")));
    }
    let base: BaseFunction = name.parse()?;
    let mut b = Builder {
        rng: RngStream::new(seed),
        n_x,
    };
    Ok(b.separable(&format!("shifted_{}", base.name()), base))
}

/// Replayable description of a generated suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub family: SuiteFamily,
    pub n_x: usize,
    pub seed: u64,
    pub instances: Vec<CompositeBenchmark>,
}

impl SuiteManifest {
    pub fn generate(family: SuiteFamily, n_x: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            family,
            n_x,
            seed,
            instances: make_suite(family, n_x, seed)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| SearchError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| SearchError::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_values_by_hand() {
        assert_eq!(eval_base(BaseFunction::Rastrigin, &[0.0; 5]), 0.0);
        assert_eq!(eval_base(BaseFunction::Rastrigin, &[1.0; 7]), 7.0);
        let mut e = vec![0.0; 6];
        e[5] = 1.0;
        assert!((eval_base(BaseFunction::Elliptic, &e) - 1e6).abs() < 1e-6);
        let mut s = vec![0.0; 9];
        s[0] = 1.0;
        assert_eq!(eval_base(BaseFunction::Schwefel12, &s), 9.0);
        assert_eq!(eval_base(BaseFunction::Rosenbrock, &[1.0; 4]), 0.0);
        assert!(eval_base(BaseFunction::Ackley, &[0.0; 4]).abs() < 1e-14);
        for f in BaseFunction::ALL {
            assert_eq!(eval_base(f, &f.argmin(6)).abs() < 1e-12, true, "{f}");
        }
    }

    #[test]
    fn names_round_trip() {
        for f in BaseFunction::ALL {
            assert_eq!(f.name().parse::<BaseFunction>().unwrap(), f);
        }
        assert!("weierstrass".parse::<BaseFunction>().is_err());
    }

    #[test]
    fn grouped_elliptic_identity_rotation_by_hand() {
        let bench = CompositeBenchmark {
            name: "k2".into(),
            n_x: 4,
            shift: vec![0.0; 4],
            groups: vec![
                Group {
                    indices: vec![0, 1],
                    base: BaseFunction::Elliptic,
                    rotation: Some(Rotation::identity(2)),
                    weight: 1.0,
                },
                Group {
                    indices: vec![2, 3],
                    base: BaseFunction::Elliptic,
                    rotation: Some(Rotation::identity(2)),
                    weight: 1.0,
                },
            ],
            lower: -100.0,
            upper: 100.0,
        };
        let x = [1.0, 2.0, 3.0, 0.5];
        let expect = (1.0 + 1e6 * 4.0) + (9.0 + 1e6 * 0.25);
        assert_eq!(eval_composite(&bench, &x).unwrap(), expect);
        assert!(eval_composite(&bench, &x[..3]).is_err());
    }

    #[test]
    fn rotated_sphere_is_norm_invariant() {
        let mut rng = RngStream::new(4);
        let r = Rotation::random(6, &mut rng);
        let bench = CompositeBenchmark {
            name: "rs".into(),
            n_x: 6,
            shift: vec![0.5; 6],
            groups: vec![Group {
                indices: (0..6).collect(),
                base: BaseFunction::Sphere,
                rotation: Some(r),
                weight: 1.0,
            }],
            lower: -5.0,
            upper: 5.0,
        };
        let plain = CompositeBenchmark::shifted("s", BaseFunction::Sphere, vec![0.5; 6], -5.0, 5.0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
            let a = eval_composite(&bench, &x).unwrap();
            let b = eval_composite(&plain, &x).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn suites_have_expected_sizes_and_are_deterministic() {
        assert_eq!(make_suite(SuiteFamily::CecLike, 40, 1).unwrap().len(), 10);
        assert_eq!(make_suite(SuiteFamily::BbobLike, 40, 1).unwrap().len(), 6);
        assert_eq!(
            make_suite(SuiteFamily::CecLike, 16, 9).unwrap(),
            make_suite(SuiteFamily::CecLike, 16, 9).unwrap()
        );
        assert_ne!(
            make_suite(SuiteFamily::CecLike, 16, 9).unwrap(),
            make_suite(SuiteFamily::CecLike, 16, 10).unwrap()
        );
        assert!(make_suite(SuiteFamily::CecLike, 6, 1).is_err());
    }

    #[test]
    fn f2_analog_zero_at_shift() {
        let f2 = benchmark_by_name("F2", 20, 3).unwrap();
        assert_eq!(eval_composite(&f2, &f2.argmin()).unwrap(), 0.0);
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = SuiteManifest::generate(SuiteFamily::CecLike, 12, 5).unwrap();
        let back = SuiteManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }
}
