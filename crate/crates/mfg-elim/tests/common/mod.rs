//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use mfg_elim::{Lipschitz, MeanFieldModel, Policy, Shape, SharedModel};
use ndarray::Array2;
use rand::Rng;

/// Explicit tables. The kernel at density `mu` mixes `base` and `alt` with
/// weight `lambda * mu[0]`; the reward is `(w + b mu[0]) / (H (1 + b))`.
#[derive(Clone, Debug)]
pub struct TableModel {
    pub shape: Shape,
    pub base: Vec<Array2<f64>>,
    pub alt: Vec<Array2<f64>>,
    pub lambda: f64,
    pub w: Vec<Array2<f64>>,
    pub b: f64,
    pub initial: Vec<f64>,
}

impl MeanFieldModel for TableModel {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn initial_density(&self) -> &[f64] {
        &self.initial
    }

    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64> {
        let t = self.lambda * density[0];
        let r = s * self.shape.actions + a;
        (0..self.shape.states)
            .map(|k| (1.0 - t) * self.base[h][[r, k]] + t * self.alt[h][[r, k]])
            .collect()
    }

    fn reward(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64 {
        (self.w[h][[s, a]] + self.b * density[0]) / (self.shape.horizon as f64 * (1.0 + self.b))
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz {
            transition: 2.0 * self.lambda,
            reward: self.b / (self.shape.horizon as f64 * (1.0 + self.b)),
        }
    }
}

pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let t: f64 = v.iter().sum();
    v.into_iter().map(|x| x / t).collect()
}

fn random_kernel<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Array2<f64> {
    let mut k = Array2::zeros((shape.pairs(), shape.states));
    for r in 0..shape.pairs() {
        let row = random_simplex(shape.states, rng);
        for (j, p) in row.into_iter().enumerate() {
            k[[r, j]] = p;
        }
    }
    k
}

pub fn random_table_model<R: Rng + ?Sized>(shape: Shape, lambda: f64, b: f64, rng: &mut R) -> TableModel {
    TableModel {
        shape,
        base: (0..shape.horizon).map(|_| random_kernel(shape, rng)).collect(),
        alt: (0..shape.horizon).map(|_| random_kernel(shape, rng)).collect(),
        lambda,
        w: (0..shape.horizon)
            .map(|_| Array2::from_shape_fn((shape.states, shape.actions), |_| rng.random::<f64>()))
            .collect(),
        b,
        initial: random_simplex(shape.states, rng),
    }
}

pub fn shared(m: TableModel) -> SharedModel {
    Arc::new(m)
}

/// Flow by explicit summation.
pub fn oracle_flow(m: &dyn MeanFieldModel, pi: &Policy) -> Vec<Vec<f64>> {
    let shape = m.shape();
    let mut flow = vec![m.initial_density().to_vec()];
    for h in 0..shape.horizon - 1 {
        let mu = flow[h].clone();
        let mut next = vec![0.0; shape.states];
        for s in 0..shape.states {
            for a in 0..shape.actions {
                let p = m.transition(h, s, a, &mu);
                for k in 0..shape.states {
                    next[k] += mu[s] * pi.prob(h, s, a) * p[k];
                }
            }
        }
        flow.push(next);
    }
    flow
}

/// Sums `payoff(h, s, a)` along every state-action path of `eval` under the
/// dynamics frozen at `flow`, weighted by path probability.
pub fn enumerate_paths(
    m: &dyn MeanFieldModel,
    eval: &Policy,
    flow: &[Vec<f64>],
    payoff: &dyn Fn(usize, usize, usize) -> f64,
) -> f64 {
    let shape = m.shape();
    fn walk(
        m: &dyn MeanFieldModel,
        eval: &Policy,
        flow: &[Vec<f64>],
        payoff: &dyn Fn(usize, usize, usize) -> f64,
        h: usize,
        s: usize,
        prob: f64,
        acc: f64,
        shape: Shape,
    ) -> f64 {
        let mut total = 0.0;
        for a in 0..shape.actions {
            let pa = prob * eval.prob(h, s, a);
            if pa == 0.0 {
                continue;
            }
            let acc = acc + payoff(h, s, a);
            if h + 1 == shape.horizon {
                total += pa * acc;
            } else {
                let next = m.transition(h, s, a, &flow[h]);
                for (k, &p) in next.iter().enumerate() {
                    if p > 0.0 {
                        total += walk(m, eval, flow, payoff, h + 1, k, pa * p, acc, shape);
                    }
                }
            }
        }
        total
    }
    (0..shape.states)
        .filter(|&s| m.initial_density()[s] > 0.0)
        .map(|s| walk(m, eval, flow, payoff, 0, s, m.initial_density()[s], 0.0, shape))
        .sum()
}

pub fn oracle_return(m: &dyn MeanFieldModel, eval: &Policy, reference: &Policy) -> f64 {
    let flow = oracle_flow(m, reference);
    enumerate_paths(m, eval, &flow, &|h, s, a| m.reward(h, s, a, &flow[h]))
}

/// Every deterministic policy of `shape`.
pub fn all_deterministic(shape: Shape) -> Vec<Policy> {
    let cells = shape.horizon * shape.states;
    let total = shape.actions.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut choice = vec![0; cells];
            for c in choice.iter_mut() {
                *c = code % shape.actions;
                code /= shape.actions;
            }
            Policy::deterministic(shape, |h, s| choice[h * shape.states + s])
        })
        .collect()
}

pub fn oracle_best(m: &dyn MeanFieldModel, reference: &Policy) -> f64 {
    all_deterministic(m.shape())
        .iter()
        .map(|p| oracle_return(m, p, reference))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn oracle_gap(m: &dyn MeanFieldModel, pi: &Policy) -> f64 {
    oracle_best(m, pi) - oracle_return(m, pi, pi)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Expected discrepancy of `eval`, trajectories in `m`.
pub fn oracle_discrepancy(m: &dyn MeanFieldModel, n: &dyn MeanFieldModel, eval: &Policy, reference: &Policy) -> f64 {
    let fm = oracle_flow(m, reference);
    let fn_ = oracle_flow(n, reference);
    enumerate_paths(m, eval, &fm, &|h, s, a| {
        l1(&m.transition(h, s, a, &fm[h]), &n.transition(h, s, a, &fn_[h]))
    })
}

pub fn oracle_distance(m: &dyn MeanFieldModel, n: &dyn MeanFieldModel, reference: &Policy) -> f64 {
    all_deterministic(m.shape())
        .iter()
        .map(|p| oracle_discrepancy(m, n, p, reference).max(oracle_discrepancy(n, m, p, reference)))
        .fold(0.0, f64::max)
}
