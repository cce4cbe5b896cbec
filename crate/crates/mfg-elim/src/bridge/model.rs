use std::sync::{Arc, Mutex};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PolicyCover;
use crate::engine::{central_model_among, freeze};
use crate::error::{config, Result};
use crate::frozen::FrozenMdp;
use crate::model::{ModelClass, Shape};
use crate::ne::{solve_pam_ne, NeConfig, NeReport};
use crate::pam::{FrozenCache, PolicyAwareModel, PAM_CACHE_LIMIT};
use crate::policy::{policy_distance, Policy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeEntry {
    pub cover_index: usize,
    pub center: usize,
    pub neighborhood_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeDiagnostics {
    pub eps0: f64,
    pub eps_bar: f64,
    pub members: Vec<usize>,
    /// Every cover member's center has more than half the members as neighbors.
    pub precondition_holds: bool,
    pub waived: bool,
    pub entries: Vec<BridgeEntry>,
}

/// PAM whose kernel at `pi` mixes the centers' kernels (each frozen at its own
/// cover member) with weights `[2 eps_bar - d(pi, cover member)]^+`.
pub struct BridgeModel {
    shape: Shape,
    cover: Arc<PolicyCover>,
    centers: Vec<Arc<FrozenMdp>>,
    diagnostics: BridgeDiagnostics,
    cache: Mutex<FrozenCache>,
}

/// Builds the bridge model over `members` of `class`. Fails if some cover
/// member's center covers at most half of `members`, unless `waive` is set.
pub fn bridge_model(
    class: &ModelClass,
    members: &[usize],
    eps0: f64,
    cover: Arc<PolicyCover>,
    waive: bool,
) -> Result<BridgeModel> {
    let shape = class.shape();
    if cover.is_empty() || cover.policies[0].shape() != shape {
        return config("cover does not match the class shape");
    }
    let centers: Vec<(usize, usize)> = cover
        .policies
        .par_iter()
        .map(|p| central_model_among(class, members, p, eps0))
        .collect::<Result<_>>()?;
    let half = members.len() as f64 / 2.0;
    let precondition_holds = centers.iter().all(|&(_, n)| n as f64 > half);
    if !precondition_holds && !waive {
        return config("bridge precondition fails: some cover member's center covers at most half the class");
    }
    let frozen: Vec<Arc<FrozenMdp>> = cover
        .policies
        .par_iter()
        .zip(&centers)
        .map(|(p, &(c, _))| freeze(class.get(c).as_ref(), p).map(|x| Arc::new(x.1)))
        .collect::<Result<_>>()?;
    let entries = centers
        .iter()
        .enumerate()
        .map(|(i, &(center, n))| BridgeEntry {
            cover_index: i,
            center,
            neighborhood_size: n,
        })
        .collect();
    Ok(BridgeModel {
        shape,
        diagnostics: BridgeDiagnostics {
            eps0,
            eps_bar: cover.eps_bar,
            members: members.to_vec(),
            precondition_holds,
            waived: waive,
            entries,
        },
        cover,
        centers: frozen,
        cache: Mutex::new(FrozenCache::new(PAM_CACHE_LIMIT)),
    })
}

impl BridgeModel {
    pub fn diagnostics(&self) -> &BridgeDiagnostics {
        &self.diagnostics
    }

    pub fn cover(&self) -> &PolicyCover {
        &self.cover
    }

    /// Normalized mixture weights over cover members at `pi`.
    pub fn weights(&self, pi: &Policy) -> Vec<f64> {
        let two = 2.0 * self.cover.eps_bar;
        let raw: Vec<f64> = self
            .cover
            .policies
            .iter()
            .map(|q| (two - policy_distance(pi, q)).max(0.0))
            .collect();
        let total: f64 = raw.iter().sum();
        assert!(total > 0.0, "cover has no member within 2 eps_bar of the policy");
        raw.into_iter().map(|w| w / total).collect()
    }

    fn mix(&self, pi: &Policy) -> FrozenMdp {
        let w = self.weights(pi);
        let first = &self.centers[0];
        let mut kernels: Vec<Array2<f64>> = (0..self.shape.horizon).map(|h| Array2::zeros(first.step_kernel(h).dim())).collect();
        let mut rewards: Vec<Array1<f64>> = first.rewards().iter().map(|r| Array1::zeros(r.len())).collect();
        for (wk, f) in w.iter().zip(&self.centers) {
            if *wk == 0.0 {
                continue;
            }
            for h in 0..self.shape.horizon {
                kernels[h].scaled_add(*wk, f.kernel(h));
                rewards[h].scaled_add(*wk, f.reward(h));
            }
        }
        FrozenMdp::new(first.initial().clone(), kernels, rewards)
    }
}

impl PolicyAwareModel for BridgeModel {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn frozen(&self, reference: &Policy) -> Arc<FrozenMdp> {
        if let Some(f) = self.cache.lock().unwrap().get(reference) {
            return f;
        }
        let f = Arc::new(self.mix(reference));
        self.cache.lock().unwrap().insert(reference.clone(), Arc::clone(&f));
        f
    }
}

/// Damped best response on the bridge model from the uniform policy.
pub fn bridge_policy(bridge: &BridgeModel, alpha: f64, tol: f64, max_iter: usize) -> Result<NeReport> {
    let cfg = NeConfig { alpha, tol, max_iter };
    solve_pam_ne(bridge, &cfg, &Policy::uniform(bridge.shape))
}
