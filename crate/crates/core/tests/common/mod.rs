//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's linear algebra.

#![allow(dead_code)]

use ensemble_search::rng::Draws;

/// Solves `a x = b` for every column of `b` by Gauss-Jordan elimination
/// with partial pivoting. `a` is `d x d`, `b` is `d x k`, row-major.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = a.len();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for v in b[col].iter_mut() {
            *v /= p;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..d {
                        a[r][c] -= f * a[col][c];
                    }
                    for c in 0..b[r].len() {
                        b[r][c] -= f * b[col][c];
                    }
                }
            }
        }
    }
    b
}

/// `G = X FX^T (FX FX^T + diag(cov))^-1` with plain loops. `states` and
/// `innovations` are per particle; FX holds deviations of the negated
/// innovations. Returns `G` as `n_s` rows of length `d`.
pub fn loop_gain(states: &[Vec<f64>], innovations: &[Vec<f64>], cov: &[f64]) -> Vec<Vec<f64>> {
    let n_e = states.len();
    let n_s = states[0].len();
    let d = innovations[0].len();
    let scale = 1.0 / ((n_e - 1) as f64).sqrt();

    let mut xm = vec![0.0; n_s];
    let mut im = vec![0.0; d];
    for j in 0..n_e {
        for r in 0..n_s {
            xm[r] += states[j][r] / n_e as f64;
        }
        for r in 0..d {
            im[r] += innovations[j][r] / n_e as f64;
        }
    }
    let x = |r: usize, j: usize| (states[j][r] - xm[r]) * scale;
    let fx = |r: usize, j: usize| -(innovations[j][r] - im[r]) * scale;

    // A = FX FX^T + C (symmetric), B = FX X^T, then G^T = A^-1 B
    let mut a = vec![vec![0.0; d]; d];
    for r in 0..d {
        for c in 0..d {
            let mut s = 0.0;
            for j in 0..n_e {
                s += fx(r, j) * fx(c, j);
            }
            a[r][c] = s + if r == c { cov[r] } else { 0.0 };
        }
    }
    let mut b = vec![vec![0.0; n_s]; d];
    for r in 0..d {
        for c in 0..n_s {
            for j in 0..n_e {
                b[r][c] += fx(r, j) * x(c, j);
            }
        }
    }
    let gt = dense_solve(a, b);
    (0..n_s).map(|r| (0..d).map(|c| gt[c][r]).collect()).collect()
}

/// `[f~ - f(x_j); x_j - x_s1(j)]` with either block optional.
pub fn loop_innovations(
    states: &[Vec<f64>],
    values: &[Vec<f64>],
    f_tilde: &[f64],
    sigma1: &[usize],
    cost: bool,
    coalescence: bool,
) -> Vec<Vec<f64>> {
    (0..states.len())
        .map(|j| {
            let mut v = Vec::new();
            if cost {
                for i in 0..f_tilde.len() {
                    v.push(f_tilde[i] - values[j][i]);
                }
            }
            if coalescence {
                for l in 0..states[j].len() {
                    v.push(states[j][l] - states[sigma1[j]][l]);
                }
            }
            v
        })
        .collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

pub fn bits_equal(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()))
}

/// A random small gain instance.
pub struct GainCase {
    pub n_x: usize,
    pub n_f: usize,
    pub n_e: usize,
    pub states: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub sigma1: Vec<usize>,
    pub sigma_w: f64,
    pub alpha: f64,
}

impl GainCase {
    pub fn random(rng: &mut impl Draws, max_x: usize, max_f: usize, max_e: usize) -> Self {
        let mut pick = |lo: usize, hi: usize| (lo + (rng.uniform() * (hi - lo + 1) as f64) as usize).min(hi);
        let n_x = pick(1, max_x);
        let n_f = pick(1, max_f);
        let n_e = pick(2, max_e);
        let states = (0..n_e).map(|_| (0..n_x).map(|_| 4.0 * rng.uniform() - 2.0).collect()).collect();
        let values = (0..n_e).map(|_| (0..n_f).map(|_| 10.0 * rng.uniform()).collect()).collect();
        let sigma1 = (0..n_e).map(|j| rng.index_excluding(n_e, j)).collect();
        let sigma_w = 0.05 + rng.uniform();
        let alpha = 1e-3 + rng.uniform();
        Self {
            n_x,
            n_f,
            n_e,
            states,
            values,
            sigma1,
            sigma_w,
            alpha,
        }
    }

    pub fn f_tilde(&self) -> Vec<f64> {
        (0..self.n_f)
            .map(|i| self.values.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn cov(&self, cost: bool, coalescence: bool) -> Vec<f64> {
        let mut c = Vec::new();
        if cost {
            c.extend(std::iter::repeat_n(self.sigma_w * self.sigma_w, self.n_f));
        }
        if coalescence {
            c.extend(std::iter::repeat_n(self.alpha, self.n_x));
        }
        c
    }
}
