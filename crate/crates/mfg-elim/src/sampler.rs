//! Trajectory oracle: runs a deviating policy in the true model while the
//! population follows a reference policy whose flow fixes the dynamics.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::engine::evolve_density;
use crate::error::{config, Result};
use crate::model::{DensityFlow, SharedModel};
use crate::multitype::{lift, typed_flow, MultiTypeModel};
use crate::policy::Policy;
use crate::rng::stream_rng;

const CACHE_SLOTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
}

#[derive(Serialize)]
struct LogRow<'a> {
    run_id: &'a str,
    query_id: u64,
    h: usize,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if p > 0.0 {
            last = i;
        }
        if u < acc {
            return i;
        }
    }
    last
}

/// Sampling state: the true model, a seed, budget counters and a small flow
/// cache keyed by policy content.
pub struct Sampler {
    model: SharedModel,
    multi: Option<Arc<dyn MultiTypeModel>>,
    seed: u64,
    queries: u64,
    trajectories: u64,
    cache_enabled: bool,
    cache: Vec<(u64, Vec<Policy>, Vec<Vec<Vec<f64>>>)>,
    log: Option<(String, csv::Writer<File>)>,
}

impl Sampler {
    pub fn new(model: SharedModel, seed: u64) -> Self {
        Sampler {
            model,
            multi: None,
            seed,
            queries: 0,
            trajectories: 0,
            cache_enabled: true,
            cache: Vec::new(),
            log: None,
        }
    }

    /// Sampler for a multi-type truth. `query` runs on its lift.
    pub fn multi_type(mt: Arc<dyn MultiTypeModel>, seed: u64) -> Self {
        let lifted: SharedModel = Arc::new(lift(Arc::clone(&mt)));
        let mut s = Sampler::new(lifted, seed);
        s.multi = Some(mt);
        s
    }

    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache_enabled = enabled;
        self
    }

    /// Appends every sampled transition to a CSV file.
    pub fn with_log(mut self, path: &Path, run_id: &str) -> Result<Self> {
        let writer = csv::Writer::from_path(path)?;
        self.log = Some((run_id.to_string(), writer));
        Ok(self)
    }

    pub fn model(&self) -> &SharedModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn trajectories(&self) -> u64 {
        self.trajectories
    }

    fn cached_flow<F>(&mut self, key: &[Policy], compute: F) -> Result<Vec<Vec<Vec<f64>>>>
    where
        F: FnOnce() -> Result<Vec<Vec<Vec<f64>>>>,
    {
        if !self.cache_enabled {
            return compute();
        }
        let hash = key.iter().fold(0u64, |acc, p| acc.rotate_left(17) ^ p.content_hash());
        if let Some(pos) = self.cache.iter().position(|(h, p, _)| *h == hash && p.as_slice() == key) {
            let entry = self.cache.remove(pos);
            let flow = entry.2.clone();
            self.cache.push(entry);
            return Ok(flow);
        }
        let flow = compute()?;
        if self.cache.len() == CACHE_SLOTS {
            self.cache.remove(0);
        }
        self.cache.push((hash, key.to_vec(), flow.clone()));
        Ok(flow)
    }

    fn record(&mut self, traj: &Trajectory) -> Result<()> {
        let query_id = self.queries;
        self.queries += 1;
        self.trajectories += 1;
        if let Some((run_id, w)) = self.log.as_mut() {
            for t in &traj.steps {
                w.serialize(LogRow {
                    run_id,
                    query_id,
                    h: t.h,
                    s: t.s,
                    a: t.a,
                    r: t.r,
                    s_next: t.s_next,
                })?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// One trajectory of `eval` with dynamics frozen at the flow of
    /// `reference` in the true model.
    pub fn query(&mut self, eval: &Policy, reference: &Policy) -> Result<Trajectory> {
        let shape = self.model.shape();
        if eval.shape() != shape || reference.shape() != shape {
            return config("policy shape does not match the true model");
        }
        let model = Arc::clone(&self.model);
        let flow = self.cached_flow(std::slice::from_ref(reference), || {
            let f: DensityFlow = evolve_density(model.as_ref(), reference)?;
            Ok(f.steps.into_iter().map(|m| vec![m.to_vec()]).collect())
        })?;
        let mut rng = stream_rng(self.seed, self.queries);
        let mut s = sample_index(&mut rng, model.initial_density());
        let mut steps = Vec::with_capacity(shape.horizon);
        for h in 0..shape.horizon {
            let mu = &flow[h][0];
            let a = sample_index(&mut rng, eval.step(h).row(s).as_slice().unwrap());
            let r = model.reward(h, s, a, mu);
            let s_next = sample_index(&mut rng, &model.transition(h, s, a, mu));
            steps.push(Transition { h, s, a, r, s_next });
            s = s_next;
        }
        let traj = Trajectory { steps };
        self.record(&traj)?;
        Ok(traj)
    }

    /// One type-`w` trajectory of `deviation` with all types' dynamics frozen
    /// at the flow of `joint`.
    pub fn query_mt(&mut self, joint: &[Policy], w: usize, deviation: &Policy) -> Result<Trajectory> {
        let Some(mt) = self.multi.clone() else {
            return config("sampler was not built for a multi-type model");
        };
        if w >= mt.type_count() {
            return config(format!("type index {w} out of range"));
        }
        let (s_n, a_n) = mt.type_shape(w);
        if deviation.shape() != crate::model::Shape::new(mt.horizon(), s_n, a_n) {
            return config("deviation policy has the wrong shape");
        }
        let flow = self.cached_flow(joint, || typed_flow(mt.as_ref(), joint))?;
        let mut rng = stream_rng(self.seed, self.queries);
        let mut s = sample_index(&mut rng, mt.initial(w));
        let mut steps = Vec::with_capacity(mt.horizon());
        for (h, joint_h) in flow.iter().enumerate() {
            let a = sample_index(&mut rng, deviation.step(h).row(s).as_slice().unwrap());
            let r = mt.reward(w, h, s, a, joint_h);
            let s_next = sample_index(&mut rng, &mt.transition(w, h, s, a, joint_h));
            steps.push(Transition { h, s, a, r, s_next });
            s = s_next;
        }
        let traj = Trajectory { steps };
        self.record(&traj)?;
        Ok(traj)
    }
}
