use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::reward::{DensityReward, RewardParams};
use crate::error::{config, Result};
use crate::model::{Lipschitz, MeanFieldModel, ModelClass, Shape, SharedModel};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularSpec {
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub class_size: usize,
    pub density_sensitivity: f64,
    pub seed: u64,
}

/// Per member: logits `theta_h(s,a,s')` and tilts `Theta_h(s,a,s',x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularClass {
    pub spec: TabularSpec,
    /// `K x H x (S*A) x S`.
    pub logits: Vec<f64>,
    /// `K x H x (S*A*S) x S`.
    pub tilts: Vec<f64>,
    pub reward: RewardParams,
    pub true_index: usize,
}

pub fn gen_tabular_class(
    horizon: usize,
    states: usize,
    actions: usize,
    class_size: usize,
    density_sensitivity: f64,
    seed: u64,
) -> Result<ModelClass> {
    TabularClass::generate(&TabularSpec {
        horizon,
        states,
        actions,
        class_size,
        density_sensitivity,
        seed,
    })?
    .build()
}

impl TabularClass {
    /// Logits `U(-2, 2)`, tilts `U(-1, 1)`; the reward is drawn first, then
    /// each member in order, then the true index.
    pub fn generate(spec: &TabularSpec) -> Result<Self> {
        if spec.horizon == 0 || spec.states == 0 || spec.actions == 0 || spec.class_size == 0 {
            return config("tabular class needs positive H, S, A, K");
        }
        if !(spec.density_sensitivity >= 0.0) {
            return config("density_sensitivity must be nonnegative");
        }
        let shape = Shape::new(spec.horizon, spec.states, spec.actions);
        let mut rng = stream_rng(spec.seed, 1);
        let reward = RewardParams::generate(shape, &mut rng);
        let n_logit = spec.horizon * shape.pairs() * spec.states;
        let n_tilt = n_logit * spec.states;
        let mut logits = Vec::with_capacity(spec.class_size * n_logit);
        let mut tilts = Vec::with_capacity(spec.class_size * n_tilt);
        for _ in 0..spec.class_size {
            logits.extend((0..n_logit).map(|_| rng.random_range(-2.0..2.0)));
            tilts.extend((0..n_tilt).map(|_| rng.random_range(-1.0..1.0)));
        }
        let true_index = rng.random_range(0..spec.class_size);
        Ok(TabularClass {
            spec: spec.clone(),
            logits,
            tilts,
            reward,
            true_index,
        })
    }

    pub fn models(&self) -> Vec<Arc<TabularModel>> {
        let spec = &self.spec;
        let shape = Shape::new(spec.horizon, spec.states, spec.actions);
        let reward = Arc::new(DensityReward::new(shape, &self.reward));
        let (sa, s_n) = (shape.pairs(), spec.states);
        let per_logit = sa * s_n;
        let per_tilt = per_logit * s_n;
        (0..spec.class_size)
            .map(|i| {
                let logits = (0..spec.horizon)
                    .map(|h| {
                        let start = (i * spec.horizon + h) * per_logit;
                        Array2::from_shape_vec((sa, s_n), self.logits[start..start + per_logit].to_vec()).unwrap()
                    })
                    .collect();
                let tilts = (0..spec.horizon)
                    .map(|h| {
                        let start = (i * spec.horizon + h) * per_tilt;
                        Array2::from_shape_vec((per_logit, s_n), self.tilts[start..start + per_tilt].to_vec())
                            .unwrap()
                    })
                    .collect();
                Arc::new(TabularModel {
                    shape,
                    logits,
                    tilts,
                    sensitivity: spec.density_sensitivity,
                    reward: Arc::clone(&reward),
                    initial: vec![1.0 / s_n as f64; s_n],
                })
            })
            .collect()
    }

    pub fn build(&self) -> Result<ModelClass> {
        let models = self.models().into_iter().map(|m| m as SharedModel).collect();
        ModelClass::new(models, Some(self.true_index))
    }
}

/// `P_h(.|s,a,mu) = softmax(theta_h(s,a,.) + lambda * Theta_h(s,a,.,.) mu)`.
#[derive(Clone, Debug)]
pub struct TabularModel {
    shape: Shape,
    logits: Vec<Array2<f64>>,
    tilts: Vec<Array2<f64>>,
    sensitivity: f64,
    reward: Arc<DensityReward>,
    initial: Vec<f64>,
}

impl TabularModel {
    /// Builds a model directly from per-step logit and tilt tables. Used by
    /// fixtures that need hand-made kernels.
    pub fn from_parts(
        shape: Shape,
        logits: Vec<Array2<f64>>,
        tilts: Vec<Array2<f64>>,
        sensitivity: f64,
        reward: Arc<DensityReward>,
        initial: Vec<f64>,
    ) -> Self {
        TabularModel {
            shape,
            logits,
            tilts,
            sensitivity,
            reward,
            initial,
        }
    }

    pub fn logits(&self, h: usize) -> &Array2<f64> {
        &self.logits[h]
    }

    fn softmax_into(row: &mut [f64]) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
}

impl MeanFieldModel for TabularModel {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn initial_density(&self) -> &[f64] {
        &self.initial
    }

    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64> {
        let s_n = self.shape.states;
        let row = s * self.shape.actions + a;
        let mut out: Vec<f64> = self.logits[h].row(row).to_vec();
        if self.sensitivity != 0.0 {
            let mu = ndarray::ArrayView1::from(density);
            for (k, x) in out.iter_mut().enumerate() {
                *x += self.sensitivity * self.tilts[h].row(row * s_n + k).dot(&mu);
            }
        }
        Self::softmax_into(&mut out);
        out
    }

    fn reward(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64 {
        self.reward.value(h, s, a, density)
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz {
            transition: 2.0 * self.sensitivity,
            reward: self.reward.lipschitz(),
        }
    }

    fn kernel(&self, h: usize, density: &[f64]) -> Array2<f64> {
        let (sa, s_n) = (self.shape.pairs(), self.shape.states);
        let mut z = self.logits[h].clone();
        if self.sensitivity != 0.0 {
            let t = self.tilts[h].dot(&ndarray::ArrayView1::from(density));
            let t = t.into_shape_with_order((sa, s_n)).unwrap();
            z.scaled_add(self.sensitivity, &t);
        }
        for mut row in z.rows_mut() {
            Self::softmax_into(row.as_slice_mut().unwrap());
        }
        z
    }

    fn reward_table(&self, h: usize, density: &[f64]) -> Array1<f64> {
        self.reward.table(h, density)
    }
}
