//! State-space splitting: the unknown vector is cut into `n_p`
//! substructures that are updated one after another. Each substructure
//! step evaluates composite states (already-updated blocks followed by
//! still-predicted blocks), so later blocks see the effect of earlier ones.

use std::ops::Range;

use crate::engine::{
    assert_simplex, blend, blend_weights, draw_action, draw_sigma1, draw_sigma2, gain_from, innovations, mark_stale,
    predict, Action, Decision, GainContext, Innovation, InnovationLayout, IterationReport,
};
use crate::ensemble::{component_min, fitness, Ensemble, ObjectiveSpec, SearchConfig};
use crate::error::{Result, SearchError};
use crate::rng::Draws;

/// Layout of the substructures. Substructure `m` covers the state
/// components `order[ranges[m]]`; with the default contiguous layout
/// `order` is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    order: Vec<usize>,
    ranges: Vec<Range<usize>>,
}

/// First `n_p - 1` blocks get `floor(n_x / n_p)` components, the last one
/// takes the rest.
pub fn make_partition(n_x: usize, n_p: usize) -> Result<Partition> {
    if n_p == 0 || n_p > n_x {
        return Err(SearchError::config(format!(
            "cannot split {n_x} components into {n_p} substructures"
        )));
    }
    let size = n_x / n_p;
    let ranges = (0..n_p)
        .map(|m| {
            let start = m * size;
            let end = if m + 1 == n_p { n_x } else { start + size };
            start..end
        })
        .collect();
    Ok(Partition {
        order: (0..n_x).collect(),
        ranges,
    })
}

impl Partition {
    /// Same block sizes, but over a random permutation of the components.
    pub fn shuffled(n_x: usize, n_p: usize, rng: &mut impl Draws) -> Result<Partition> {
        let mut p = make_partition(n_x, n_p)?;
        for i in (1..n_x).rev() {
            let k = ((rng.uniform() * (i + 1) as f64) as usize).min(i);
            p.order.swap(i, k);
        }
        Ok(p)
    }

    pub fn n_p(&self) -> usize {
        self.ranges.len()
    }

    pub fn n_x(&self) -> usize {
        self.order.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    /// State components belonging to substructure `m`.
    pub fn indices(&self, m: usize) -> &[usize] {
        &self.order[self.ranges[m].clone()]
    }

    /// Substructure that owns component `i`.
    pub fn owner(&self, i: usize) -> usize {
        let pos = self.order.iter().position(|&k| k == i).expect("component in partition");
        self.ranges.iter().position(|r| r.contains(&pos)).expect("covered")
    }
}

/// Composite particles `x^(m)(j)`: blocks before `step` hold updated
/// values, the remaining blocks still hold the predicted ones.
#[derive(Clone, Debug)]
pub struct CompositeState {
    predicted: Vec<Vec<f64>>,
    current: Vec<Vec<f64>>,
    step: usize,
}

impl CompositeState {
    pub fn new(predicted: Vec<Vec<f64>>) -> Self {
        Self {
            current: predicted.clone(),
            predicted,
            step: 0,
        }
    }

    pub fn particles(&self) -> &[Vec<f64>] {
        &self.current
    }

    pub fn predicted(&self) -> &[Vec<f64>] {
        &self.predicted
    }

    /// Index of the next substructure to update.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Installs the result of updating substructure `step`.
    pub fn commit(&mut self, next: Vec<Vec<f64>>, partition: &Partition) {
        debug_assert!(next.iter().zip(&self.current).all(|(n, c)| {
            (0..n.len()).all(|i| partition.owner(i) == self.step || n[i].to_bits() == c[i].to_bits())
        }));
        self.current = next;
        self.step += 1;
    }

    /// True when every block at or after `step` still equals the
    /// prediction.
    pub fn audit(&self, partition: &Partition) -> bool {
        (self.step..partition.n_p()).all(|m| {
            partition.indices(m).iter().all(|&i| {
                self.current
                    .iter()
                    .zip(&self.predicted)
                    .all(|(c, p)| c[i].to_bits() == p[i].to_bits())
            })
        })
    }

    pub fn into_particles(self) -> Vec<Vec<f64>> {
        self.current
    }
}

/// `G^(m) = S^(m) FX^(m)^T (FX^(m) FX^(m)^T + Cov_meas)^-1` where `S^(m)`
/// holds only the substructure-`m` components and the innovations are
/// full length.
pub fn substructure_gain(
    composites: &[Vec<f64>],
    innovations: &[Innovation],
    partition: &Partition,
    m: usize,
    cfg: &SearchConfig,
    n_f: usize,
) -> Result<GainContext> {
    if composites.len() < 2 {
        return Err(SearchError::config("gain needs at least two particles"));
    }
    let layout = InnovationLayout::new(cfg, partition.n_x(), n_f)?;
    let idx = partition.indices(m);
    let states: Vec<Vec<f64>> = composites.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect();
    gain_from(&states, innovations, layout.cov_meas(cfg)?)
}

/// Weight recursion across substructures: `w^(m)` from `w^(m-1)` and the
/// composite fitness `chi^(m)`.
pub fn substructure_blend_weights(prev_w: &[f64], fitness_m: &[f64]) -> Vec<f64> {
    blend_weights(prev_w, fitness_m)
}

/// One split iteration: predict, draw `s1`/`s2` once, then sweep the
/// substructures in order.
pub fn iterate_3s(
    ens: &Ensemble,
    spec: &ObjectiveSpec,
    cfg: &SearchConfig,
    partition: &Partition,
    rng: &mut impl Draws,
) -> Result<(Ensemble, IterationReport)> {
    if partition.n_x() != spec.n_x {
        return Err(SearchError::Dimension {
            expected: spec.n_x,
            got: partition.n_x(),
        });
    }
    let n_e = ens.len();
    let layout = InnovationLayout::new(cfg, spec.n_x, spec.n_f)?;
    let cov = layout.cov_meas(cfg)?;
    let mut report = IterationReport::default();

    let pred = predict(ens, spec, cfg, rng)?;
    let sigma1 = draw_sigma1(n_e, rng);
    let sigma2 = draw_sigma2(n_e, spec.n_x, rng);

    let mut comp = CompositeState::new(pred.particles);
    let mut weights = ens.weights.clone();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut chi: Vec<f64> = Vec::new();
    let mut fresh = vec![true; n_e];

    for m in 0..partition.n_p() {
        let idx = partition.indices(m);
        let current = comp.particles();
        values = current.iter().map(|p| spec.evaluate(p)).collect();
        for (p, v) in current.iter().zip(&values) {
            report.observe(p, v);
        }
        let f_tilde = component_min(&values);
        chi = values.iter().map(|v| fitness(&f_tilde, v)).collect();
        weights = substructure_blend_weights(&weights, &chi);
        assert_simplex(&weights);
        report.weight_history.push(weights.clone());

        let inn = innovations(current, &values, &f_tilde, &sigma1, layout);
        debug_assert!(inn.iter().all(|i| i.len() == layout.len()));
        let states: Vec<Vec<f64>> = current.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect();
        let gain = gain_from(&states, &inn, cov.clone())?;

        let mut next = current.to_vec();
        fresh.iter_mut().for_each(|f| *f = true);
        for j in 0..n_e {
            let action = draw_action(cfg.p_inertia, rng);
            let mut decision = Decision {
                substructure: m,
                particle: j,
                action,
                fitness_before: chi[j],
                fitness_candidate: None,
                accepted: false,
            };
            if action == Action::Retain {
                report.decisions.push(decision);
                continue;
            }
            let u = gain.update(&inn[j]);
            let mut scrambled: Vec<f64> = idx
                .iter()
                .zip(&u)
                .map(|(&l, du)| {
                    let src = if cfg.use_scrambling { sigma2[j][l] } else { j };
                    current[src][l] + du
                })
                .collect();
            for (v, &l) in scrambled.iter_mut().zip(idx) {
                *v = cfg.bounds_policy.apply(*v, spec.lb[l], spec.ub[l]);
            }
            let sub = match action {
                Action::Scramble => scrambled,
                _ if !cfg.use_blending => scrambled,
                _ => {
                    let own: Vec<f64> = idx.iter().map(|&l| current[j][l]).collect();
                    blend(&own, &scrambled, weights[j])
                }
            };
            let mut cand = current[j].clone();
            for (&l, v) in idx.iter().zip(sub) {
                cand[l] = v;
            }
            if cfg.use_selection {
                let fc = spec.evaluate(&cand);
                report.observe(&cand, &fc);
                let chi_c = fitness(&f_tilde, &fc);
                decision.fitness_candidate = Some(chi_c);
                if chi_c < chi[j] {
                    next[j] = cand;
                    values[j] = fc;
                    chi[j] = chi_c;
                    decision.accepted = true;
                }
            } else {
                next[j] = cand;
                fresh[j] = false;
                decision.accepted = true;
            }
            report.decisions.push(decision);
        }
        comp.commit(next, partition);
        debug_assert!(comp.audit(partition));
    }

    let mut out = Ensemble {
        particles: comp.into_particles(),
        values,
        fitness: chi,
        weights,
    };
    mark_stale(&mut out, &fresh);
    Ok((out, report))
}
