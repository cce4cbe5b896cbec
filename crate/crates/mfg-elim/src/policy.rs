//! Non-stationary Markov policies stored as one row-stochastic `S x A`
//! matrix per step.

use std::hash::{Hash, Hasher};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Shape;

const ROW_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyData", into = "PolicyData")]
pub struct Policy {
    steps: Vec<Array2<f64>>,
}

/// Flat row-major form used for serialization.
#[derive(Serialize, Deserialize)]
struct PolicyData {
    horizon: usize,
    states: usize,
    actions: usize,
    probs: Vec<f64>,
}

impl TryFrom<PolicyData> for Policy {
    type Error = Error;

    fn try_from(d: PolicyData) -> Result<Self> {
        let per = d.states * d.actions;
        if d.probs.len() != d.horizon * per {
            return Err(Error::InvalidPolicy(format!(
                "expected {} entries, got {}",
                d.horizon * per,
                d.probs.len()
            )));
        }
        let steps = d
            .probs
            .chunks(per.max(1))
            .take(d.horizon)
            .map(|c| Array2::from_shape_vec((d.states, d.actions), c.to_vec()).unwrap())
            .collect();
        Policy::new(steps)
    }
}

impl From<Policy> for PolicyData {
    fn from(p: Policy) -> Self {
        let shape = p.shape();
        let probs = p.steps.iter().flat_map(|m| m.iter().copied()).collect();
        PolicyData {
            horizon: shape.horizon,
            states: shape.states,
            actions: shape.actions,
            probs,
        }
    }
}

impl Policy {
    /// Builds a policy, checking that every row is a probability vector.
    pub fn new(steps: Vec<Array2<f64>>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidPolicy("empty horizon".into()));
        }
        let dim = steps[0].dim();
        if dim.0 == 0 || dim.1 == 0 {
            return Err(Error::InvalidPolicy("zero states or actions".into()));
        }
        for (h, m) in steps.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::InvalidPolicy(format!("step {h} has shape {:?}", m.dim())));
            }
            for (s, row) in m.rows().into_iter().enumerate() {
                if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(Error::InvalidPolicy(format!("negative entry at step {h}, state {s}")));
                }
                let total: f64 = row.sum();
                if (total - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidPolicy(format!(
                        "row (step {h}, state {s}) sums to {total}"
                    )));
                }
            }
        }
        Ok(Policy { steps })
    }

    pub(crate) fn from_steps_unchecked(steps: Vec<Array2<f64>>) -> Self {
        Policy { steps }
    }

    pub fn uniform(shape: Shape) -> Self {
        let p = 1.0 / shape.actions as f64;
        Policy {
            steps: vec![Array2::from_elem((shape.states, shape.actions), p); shape.horizon],
        }
    }

    /// Deterministic policy choosing `choice(h, s)` at every step and state.
    pub fn deterministic(shape: Shape, choice: impl Fn(usize, usize) -> usize) -> Self {
        let steps = (0..shape.horizon)
            .map(|h| {
                let mut m = Array2::zeros((shape.states, shape.actions));
                for s in 0..shape.states {
                    let a = choice(h, s);
                    assert!(a < shape.actions, "action {a} out of range");
                    m[[s, a]] = 1.0;
                }
                m
            })
            .collect();
        Policy { steps }
    }

    /// Random policy with each row drawn from the flat Dirichlet distribution.
    pub fn random<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let steps = (0..shape.horizon)
            .map(|_| {
                let mut m = Array2::zeros((shape.states, shape.actions));
                for mut row in m.rows_mut() {
                    let draws: Vec<f64> = (0..shape.actions).map(|_| Exp1.sample(rng)).collect();
                    let total: f64 = draws.iter().sum();
                    for (x, d) in row.iter_mut().zip(draws) {
                        *x = d / total;
                    }
                }
                m
            })
            .collect();
        Policy { steps }
    }

    pub fn shape(&self) -> Shape {
        let (s, a) = self.steps[0].dim();
        Shape::new(self.steps.len(), s, a)
    }

    pub fn step(&self, h: usize) -> &Array2<f64> {
        &self.steps[h]
    }

    pub fn steps(&self) -> &[Array2<f64>] {
        &self.steps
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.steps[h][[s, a]]
    }

    /// `(1 - alpha) * self + alpha * other`.
    pub fn mix(&self, other: &Policy, alpha: f64) -> Policy {
        let steps = self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(p, q)| p * (1.0 - alpha) + q * alpha)
            .collect();
        Policy { steps }
    }

    pub fn is_deterministic(&self) -> bool {
        self.steps.iter().all(|m| m.iter().all(|&p| p == 0.0 || p == 1.0))
    }

    /// Hash of the exact bit patterns of all entries.
    pub fn content_hash(&self) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        let shape = self.shape();
        (shape.horizon, shape.states, shape.actions).hash(&mut hasher);
        for m in &self.steps {
            for p in m.iter() {
                p.to_bits().hash(&mut hasher);
            }
        }
        hasher.finish()
    }

    /// Short hex id used in traces and reports.
    pub fn id(&self) -> String {
        format!("{:016x}", self.content_hash())
    }
}

/// `max_{h,s} || p_h(.|s) - q_h(.|s) ||_1`.
pub fn policy_distance(p: &Policy, q: &Policy) -> f64 {
    assert_eq!(p.shape(), q.shape(), "policy shapes differ");
    let mut best: f64 = 0.0;
    for (a, b) in p.steps.iter().zip(&q.steps) {
        for (ra, rb) in a.rows().into_iter().zip(b.rows()) {
            let d: f64 = ra.iter().zip(rb.iter()).map(|(x, y)| (x - y).abs()).sum();
            best = best.max(d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_rows() {
        let bad = Array2::from_shape_vec((1, 2), vec![0.7, 0.7]).unwrap();
        assert!(Policy::new(vec![bad]).is_err());
        let neg = Array2::from_shape_vec((1, 2), vec![1.5, -0.5]).unwrap();
        assert!(Policy::new(vec![neg]).is_err());
    }

    #[test]
    fn distance_extremes() {
        let shape = Shape::new(2, 3, 2);
        let p = Policy::deterministic(shape, |_, _| 0);
        let q = Policy::deterministic(shape, |_, _| 1);
        assert_eq!(policy_distance(&p, &p), 0.0);
        assert_eq!(policy_distance(&p, &q), 2.0);
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Policy::random(Shape::new(2, 3, 4), &mut rng);
        let text = serde_json::to_string(&p).unwrap();
        let back: Policy = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.content_hash(), back.content_hash());
    }
}
