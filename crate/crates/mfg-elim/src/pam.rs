//! Policy-aware models: kernels and rewards indexed by a reference policy
//! instead of a density. A mean-field model becomes one by freezing at the
//! flow of the reference policy.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use crate::engine::freeze;
use crate::frozen::FrozenMdp;
use crate::model::{Shape, SharedModel};
use crate::policy::Policy;

pub const PAM_CACHE_LIMIT: usize = 10_000;

pub trait PolicyAwareModel: Send + Sync {
    fn shape(&self) -> Shape;

    /// The MDP `(P(.|.,.,reference), r(.,.,reference))`.
    fn frozen(&self, reference: &Policy) -> Arc<FrozenMdp>;

    fn transition(&self, h: usize, s: usize, a: usize, reference: &Policy) -> Vec<f64> {
        let row = s * self.shape().actions + a;
        self.frozen(reference).kernel(h).row(row).to_vec()
    }

    fn reward(&self, h: usize, s: usize, a: usize, reference: &Policy) -> f64 {
        self.frozen(reference).reward(h)[s * self.shape().actions + a]
    }

    /// `J(eval; reference)` in the PAM.
    fn conditional_return(&self, eval: &Policy, reference: &Policy) -> f64 {
        self.frozen(reference).evaluate(eval)
    }

    /// NE gap of `policy` in the PAM.
    fn ne_gap(&self, policy: &Policy) -> f64 {
        self.frozen(policy).gap(policy)
    }
}

/// Bounded cache of frozen MDPs keyed by policy content.
pub(crate) struct FrozenCache {
    limit: usize,
    map: HashMap<u64, Vec<(Policy, Arc<FrozenMdp>)>>,
    order: VecDeque<u64>,
}

impl FrozenCache {
    pub(crate) fn new(limit: usize) -> Self {
        FrozenCache {
            limit,
            map: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    pub(crate) fn get(&self, p: &Policy) -> Option<Arc<FrozenMdp>> {
        self.map
            .get(&p.content_hash())
            .and_then(|v| v.iter().find(|(q, _)| q == p).map(|(_, f)| Arc::clone(f)))
    }

    pub(crate) fn insert(&mut self, p: Policy, f: Arc<FrozenMdp>) {
        let key = p.content_hash();
        self.map.entry(key).or_default().push((p, f));
        self.order.push_back(key);
        while self.order.len() > self.limit {
            if let Some(old) = self.order.pop_front() {
                if let Some(v) = self.map.get_mut(&old) {
                    v.remove(0);
                    if v.is_empty() {
                        self.map.remove(&old);
                    }
                }
            }
        }
    }
}

/// A mean-field model viewed as a PAM.
pub struct MfPam {
    model: SharedModel,
    cache: Mutex<FrozenCache>,
}

pub fn to_pam(model: SharedModel) -> MfPam {
    MfPam {
        model,
        cache: Mutex::new(FrozenCache::new(PAM_CACHE_LIMIT)),
    }
}

impl MfPam {
    pub fn model(&self) -> &SharedModel {
        &self.model
    }
}

impl PolicyAwareModel for MfPam {
    fn shape(&self) -> Shape {
        self.model.shape()
    }

    fn frozen(&self, reference: &Policy) -> Arc<FrozenMdp> {
        if let Some(f) = self.cache.lock().unwrap().get(reference) {
            return f;
        }
        let f = Arc::new(
            freeze(self.model.as_ref(), reference)
                .expect("reference policy shape matches the model")
                .1,
        );
        self.cache.lock().unwrap().insert(reference.clone(), Arc::clone(&f));
        f
    }
}
