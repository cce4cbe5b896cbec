use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{lift, MultiTypeModel};
use crate::error::{config, Result};
use crate::model::{Lipschitz, ModelClass, SharedModel};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMultiTypeSpec {
    pub horizon: usize,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub density_sensitivity: f64,
    pub seed: u64,
}

/// Flat parameters of one type. `Z` below is the total state count over all
/// types; joint densities are concatenated in type order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeParams {
    /// `H x (S*A) x S`.
    pub logits: Vec<f64>,
    /// `H x (S*A*S) x Z`.
    pub tilts: Vec<f64>,
    /// `H x (S*A)`.
    pub w: Vec<f64>,
    /// `H x (S*A)`.
    pub b: Vec<f64>,
    /// `H x Z`.
    pub c: Vec<f64>,
}

/// A multi-type model stored with a `types` array, one entry per type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMultiTypeClass {
    pub spec: TabularMultiTypeSpec,
    pub types: Vec<TypeParams>,
}

impl TabularMultiTypeClass {
    pub fn generate(spec: &TabularMultiTypeSpec) -> Result<Self> {
        let w_n = spec.states.len();
        if w_n == 0 || spec.actions.len() != w_n || spec.horizon == 0 {
            return config("multi-type spec needs matching nonempty state and action lists");
        }
        if spec.states.iter().chain(&spec.actions).any(|&x| x == 0) {
            return config("every type needs positive state and action counts");
        }
        let z: usize = spec.states.iter().sum();
        let hf = spec.horizon as f64;
        let mut rng = stream_rng(spec.seed, 2);
        let mut draw = |n: usize, lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };
        let types = (0..w_n)
            .map(|w| {
                let (s, a, h) = (spec.states[w], spec.actions[w], spec.horizon);
                TypeParams {
                    logits: draw(h * s * a * s, -2.0, 2.0),
                    tilts: draw(h * s * a * s * z, -1.0, 1.0),
                    w: draw(h * s * a, 0.0, 0.7 / hf),
                    b: draw(h * s * a, 0.0, 0.3 / hf),
                    c: draw(h * z, 0.0, 1.0),
                }
            })
            .collect();
        Ok(TabularMultiTypeClass {
            spec: spec.clone(),
            types,
        })
    }

    pub fn model(&self) -> TabularMultiType {
        let z = self.spec.states.iter().sum();
        TabularMultiType {
            spec: self.spec.clone(),
            types: self.types.clone(),
            total_states: z,
            initial: self.spec.states.iter().map(|&s| vec![1.0 / s as f64; s]).collect(),
        }
    }

    /// Single-member class holding the lift of the model.
    pub fn build_lifted_class(&self) -> Result<ModelClass> {
        let lifted = lift(Arc::new(self.model()));
        ModelClass::new(vec![Arc::new(lifted) as SharedModel], Some(0))
    }
}

/// Per type `w`: `P^w_h(.|s,a,joint) = softmax(theta + lambda * Theta [joint])`,
/// reward `clamp(w + b <c, [joint]> / W, 0, 1/H)` where `[joint]` is the
/// concatenation of the per-type densities.
#[derive(Clone, Debug)]
pub struct TabularMultiType {
    spec: TabularMultiTypeSpec,
    types: Vec<TypeParams>,
    total_states: usize,
    initial: Vec<Vec<f64>>,
}

impl TabularMultiType {
    fn concat(joint: &[Vec<f64>]) -> Vec<f64> {
        joint.iter().flat_map(|v| v.iter().copied()).collect()
    }
}

impl MultiTypeModel for TabularMultiType {
    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn type_count(&self) -> usize {
        self.types.len()
    }

    fn type_shape(&self, w: usize) -> (usize, usize) {
        (self.spec.states[w], self.spec.actions[w])
    }

    fn initial(&self, w: usize) -> &[f64] {
        &self.initial[w]
    }

    fn transition(&self, w: usize, h: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> Vec<f64> {
        let (s_n, a_n) = self.type_shape(w);
        let z = self.total_states;
        let p = &self.types[w];
        let x = Self::concat(joint);
        let row = s * a_n + a;
        let base = (h * s_n * a_n + row) * s_n;
        let mut out: Vec<f64> = (0..s_n)
            .map(|k| {
                let t0 = (base + k) * z;
                let tilt: f64 = p.tilts[t0..t0 + z].iter().zip(&x).map(|(t, m)| t * m).sum();
                p.logits[base + k] + self.spec.density_sensitivity * tilt
            })
            .collect();
        let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        out.iter_mut().for_each(|v| *v /= total);
        out
    }

    fn reward(&self, w: usize, h: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> f64 {
        let (s_n, a_n) = self.type_shape(w);
        let z = self.total_states;
        let p = &self.types[w];
        let x = Self::concat(joint);
        let i = h * s_n * a_n + s * a_n + a;
        let tilt: f64 = p.c[h * z..(h + 1) * z].iter().zip(&x).map(|(c, m)| c * m).sum();
        let cap = 1.0 / self.spec.horizon as f64;
        (p.w[i] + p.b[i] * tilt / self.types.len() as f64).clamp(0.0, cap)
    }

    fn lipschitz(&self) -> Lipschitz {
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let reward = self
            .types
            .iter()
            .map(|p| max_abs(&p.b) * max_abs(&p.c) / self.types.len() as f64)
            .fold(0.0, f64::max);
        Lipschitz {
            transition: 2.0 * self.spec.density_sensitivity,
            reward,
        }
    }
}
