//! The mean-field model interface and the containers built around it.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Horizon, state count and action count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
}

impl Shape {
    pub fn new(horizon: usize, states: usize, actions: usize) -> Self {
        Shape { horizon, states, actions }
    }

    /// Number of state-action pairs; kernel rows are indexed `s * A + a`.
    pub fn pairs(&self) -> usize {
        self.states * self.actions
    }
}

/// Declared Lipschitz constants of the transition and the reward with
/// respect to the l1 norm of the density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lipschitz {
    pub transition: f64,
    pub reward: f64,
}

/// A row-stochastic kernel stored as `left . right`; row `r` is
/// `left.row(r) . right`.
#[derive(Clone, Debug)]
pub struct LowRankKernel {
    pub left: Array2<f64>,
    pub right: Array2<f64>,
}

impl LowRankKernel {
    pub fn dense(&self) -> Array2<f64> {
        self.left.dot(&self.right)
    }
}

/// A finite-horizon MF-MDP. Steps are zero-based: `h` runs over `0..H`.
///
/// `density` arguments are state distributions at step `h`. Models only need
/// `transition` and `reward`; the table methods exist so that structured
/// models can evaluate whole kernels in bulk.
pub trait MeanFieldModel: Send + Sync + fmt::Debug {
    fn shape(&self) -> Shape;

    fn initial_density(&self) -> &[f64];

    /// Next-state distribution `P_h(.|s, a, density)`.
    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64>;

    fn reward(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64;

    fn lipschitz(&self) -> Lipschitz;

    /// Upper end of the reward range. `1/H` unless a model says otherwise.
    fn reward_bound(&self) -> f64 {
        1.0 / self.shape().horizon as f64
    }

    /// Kernel rows `rows` (flat `s * A + a` indices) at `density`.
    fn kernel_rows(&self, h: usize, density: &[f64], rows: Range<usize>) -> Array2<f64> {
        let shape = self.shape();
        let mut out = Array2::zeros((rows.len(), shape.states));
        for (i, row) in rows.enumerate() {
            let p = self.transition(h, row / shape.actions, row % shape.actions, density);
            out.row_mut(i).assign(&Array1::from(p));
        }
        out
    }

    /// Full `(S*A) x S` kernel at `density`.
    fn kernel(&self, h: usize, density: &[f64]) -> Array2<f64> {
        self.kernel_rows(h, density, 0..self.shape().pairs())
    }

    /// The full kernel in factored form, for models that have one.
    fn low_rank_kernel(&self, _h: usize, _density: &[f64]) -> Option<LowRankKernel> {
        None
    }

    /// Rewards for every pair, flat `s * A + a`.
    fn reward_table(&self, h: usize, density: &[f64]) -> Array1<f64> {
        let shape = self.shape();
        Array1::from_shape_fn(shape.pairs(), |i| {
            self.reward(h, i / shape.actions, i % shape.actions, density)
        })
    }
}

/// State distributions `mu_0 .. mu_{H-1}` induced by a policy.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityFlow {
    pub steps: Vec<Array1<f64>>,
}

impl DensityFlow {
    pub fn step(&self, h: usize) -> &Array1<f64> {
        &self.steps[h]
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// `max_h || self_h - other_h ||_1`.
    pub fn max_l1(&self, other: &DensityFlow) -> f64 {
        self.steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub type SharedModel = Arc<dyn MeanFieldModel>;

/// Ordered candidate models plus the index of the true one, if known.
#[derive(Clone)]
pub struct ModelClass {
    models: Vec<SharedModel>,
    true_index: Option<usize>,
}

impl fmt::Debug for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelClass")
            .field("len", &self.models.len())
            .field("shape", &self.shape())
            .field("true_index", &self.true_index)
            .finish()
    }
}

impl ModelClass {
    /// Checks that the class is nonempty and that all members share the
    /// shape and the initial density.
    pub fn new(models: Vec<SharedModel>, true_index: Option<usize>) -> Result<Self> {
        let Some(first) = models.first() else {
            return config("model class is empty");
        };
        let shape = first.shape();
        if shape.horizon == 0 || shape.states == 0 || shape.actions == 0 {
            return config(format!("degenerate shape {shape:?}"));
        }
        let mu = first.initial_density();
        if mu.len() != shape.states || (mu.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return config("initial density is not a distribution over the states");
        }
        for (i, m) in models.iter().enumerate() {
            if m.shape() != shape {
                return config(format!("model {i} has shape {:?}, expected {shape:?}", m.shape()));
            }
            if m.initial_density() != mu {
                return config(format!("model {i} has a different initial density"));
            }
        }
        if let Some(t) = true_index {
            if t >= models.len() {
                return config(format!("true index {t} out of range"));
            }
        }
        Ok(ModelClass { models, true_index })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.models[0].shape()
    }

    pub fn get(&self, i: usize) -> &SharedModel {
        &self.models[i]
    }

    pub fn models(&self) -> &[SharedModel] {
        &self.models
    }

    pub fn true_index(&self) -> Option<usize> {
        self.true_index
    }

    pub fn true_model(&self) -> Option<&SharedModel> {
        self.true_index.map(|i| &self.models[i])
    }

    pub fn with_true_index(mut self, index: Option<usize>) -> Result<Self> {
        if let Some(t) = index {
            if t >= self.models.len() {
                return config(format!("true index {t} out of range"));
            }
        }
        self.true_index = index;
        Ok(self)
    }

    /// Largest declared Lipschitz constants over the members.
    pub fn lipschitz(&self) -> Lipschitz {
        self.models.iter().fold(Lipschitz::default(), |acc, m| {
            let l = m.lipschitz();
            Lipschitz {
                transition: acc.transition.max(l.transition),
                reward: acc.reward.max(l.reward),
            }
        })
    }
}
