use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{simplex_grid, simplex_grid_len};
use crate::error::{config, Result};
use crate::model::{Lipschitz, MeanFieldModel, ModelClass, Shape, SharedModel};

/// The three-layer family in which only the step-two density matters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    /// Number of states and of actions.
    pub d: usize,
    pub eps: f64,
    pub lipschitz: f64,
    /// Grid resolution; defaults to `floor(L_T / (5 eps))`.
    pub zeta: Option<usize>,
    /// Number of bump models (the flat model is added on top).
    pub n_models: usize,
}

impl HardInstanceSpec {
    pub fn resolved_zeta(&self) -> usize {
        self.zeta
            .unwrap_or_else(|| (self.lipschitz / (5.0 * self.eps) + 1e-9).floor() as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardClass {
    pub spec: HardInstanceSpec,
    pub zeta: usize,
    /// Bump centers, one per bump model, as grid densities.
    pub centers: Vec<Vec<f64>>,
}

pub fn gen_hard_instance(spec: &HardInstanceSpec) -> Result<ModelClass> {
    HardClass::generate(spec)?.build()
}

impl HardClass {
    /// Centers are the first `n_models` grid points in lexicographic order;
    /// the first is the optimal density of the true model (index 0). The
    /// flat model comes last.
    pub fn generate(spec: &HardInstanceSpec) -> Result<Self> {
        if spec.d < 2 {
            return config("hard instance needs d >= 2");
        }
        if !(spec.eps > 0.0) || !(spec.lipschitz > 0.0) || spec.lipschitz > 1.0 {
            return config("hard instance needs eps > 0 and 0 < L_T <= 1");
        }
        if spec.eps > spec.lipschitz / (spec.d as f64 + 1.0) + 1e-12 {
            return config(format!("eps must be at most L_T/(d+1) = {}", spec.lipschitz / (spec.d as f64 + 1.0)));
        }
        let zeta = spec.resolved_zeta();
        if zeta == 0 {
            return config("grid resolution is zero");
        }
        let size = simplex_grid_len(spec.d, zeta);
        if spec.n_models as u128 > size {
            return config(format!("{} models requested but the grid has only {size} points", spec.n_models));
        }
        let centers = simplex_grid(spec.d, zeta)
            .into_iter()
            .take(spec.n_models)
            .map(|n| n.into_iter().map(|k| k as f64 / zeta as f64).collect())
            .collect();
        Ok(HardClass {
            spec: spec.clone(),
            zeta,
            centers,
        })
    }

    /// The full resolution grid used by the standard eluder estimator.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        simplex_grid(self.spec.d, self.zeta)
            .into_iter()
            .map(|n| n.into_iter().map(|k| k as f64 / self.zeta as f64).collect())
            .collect()
    }

    pub fn models(&self) -> Vec<Arc<HardModel>> {
        let mut out: Vec<Arc<HardModel>> = self
            .centers
            .iter()
            .map(|c| Arc::new(HardModel::new(self.spec.d, self.spec.eps, self.spec.lipschitz, Some(c.clone()))))
            .collect();
        out.push(Arc::new(HardModel::new(self.spec.d, self.spec.eps, self.spec.lipschitz, None)));
        out
    }

    pub fn build(&self) -> Result<ModelClass> {
        let models = self.models().into_iter().map(|m| m as SharedModel).collect();
        let truth = if self.centers.is_empty() { None } else { Some(0) };
        ModelClass::new(models, truth)
    }
}

/// One member: step 0 moves deterministically to the state named by the
/// action, step 1 sends mass `1/2 + bump` to state 0 and the rest to state 1,
/// step 2 keeps the state. Reward 1 for being in state 0 at step 2.
#[derive(Clone, Debug)]
pub struct HardModel {
    d: usize,
    eps: f64,
    lipschitz: f64,
    center: Option<Vec<f64>>,
    initial: Vec<f64>,
}

impl HardModel {
    pub fn new(d: usize, eps: f64, lipschitz: f64, center: Option<Vec<f64>>) -> Self {
        let mut initial = vec![0.0; d];
        initial[0] = 1.0;
        HardModel {
            d,
            eps,
            lipschitz,
            center,
            initial,
        }
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.center.as_deref()
    }

    /// `2 eps [1 - (L_T / 4 eps) || mu - center ||_1]^+`.
    pub fn bump(&self, density: &[f64]) -> f64 {
        match &self.center {
            None => 0.0,
            Some(c) => {
                let dist: f64 = c.iter().zip(density).map(|(x, y)| (x - y).abs()).sum();
                2.0 * self.eps * (1.0 - self.lipschitz / (4.0 * self.eps) * dist).max(0.0)
            }
        }
    }
}

impl MeanFieldModel for HardModel {
    fn shape(&self) -> Shape {
        Shape::new(3, self.d, self.d)
    }

    fn initial_density(&self) -> &[f64] {
        &self.initial
    }

    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        match h {
            0 => out[a] = 1.0,
            1 => {
                let b = self.bump(density);
                out[0] = 0.5 + b;
                out[1] = 0.5 - b;
            }
            _ => out[s] = 1.0,
        }
        out
    }

    fn reward(&self, h: usize, s: usize, _a: usize, _density: &[f64]) -> f64 {
        if h == 2 && s == 0 {
            1.0
        } else {
            0.0
        }
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz {
            transition: self.lipschitz,
            reward: 0.0,
        }
    }

    fn reward_bound(&self) -> f64 {
        1.0
    }
}
