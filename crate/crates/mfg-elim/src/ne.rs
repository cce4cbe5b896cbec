//! Damped best-response iteration with exact gap certification.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::freeze;
use crate::error::{config, Result};
use crate::frozen::FrozenMdp;
use crate::model::{MeanFieldModel, ModelClass};
use crate::multitype::LiftedModel;
use crate::pam::PolicyAwareModel;
use crate::policy::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NeConfig {
    fn default() -> Self {
        NeConfig {
            alpha: 0.02,
            tol: 5e-4,
            max_iter: 5000,
        }
    }
}

impl NeConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return config("alpha must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return config("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeReport {
    /// Best iterate seen.
    pub policy: Policy,
    /// Number of mixing updates performed.
    pub iterations: usize,
    /// Exact gap of `policy`.
    pub gap: f64,
    pub converged: bool,
    /// Gap of the initial policy.
    pub initial_gap: f64,
    /// Gap after each update; its length equals `iterations`.
    pub gap_history: Vec<f64>,
}

/// Row of the NE table JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeTableEntry {
    pub model_index: usize,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

type Allowed<'a> = Option<&'a dyn Fn(usize) -> Range<usize>>;

fn iterate<F>(freeze_at: F, cfg: &NeConfig, init: &Policy, allowed: Allowed) -> Result<NeReport>
where
    F: Fn(&Policy) -> Result<Arc<FrozenMdp>>,
{
    cfg.validate()?;
    let evaluate = |p: &Policy| -> Result<(Policy, f64)> {
        let mdp = freeze_at(p)?;
        let (br, v) = mdp.optimize_with(mdp.rewards(), allowed);
        Ok((br, v - mdp.evaluate(p)))
    };
    let mut policy = init.clone();
    let (mut br, initial_gap) = evaluate(&policy)?;
    let mut best = (policy.clone(), initial_gap);
    let mut history = Vec::new();
    let mut converged = initial_gap <= cfg.tol;
    while !converged && history.len() < cfg.max_iter {
        policy = policy.mix(&br, cfg.alpha);
        let (next_br, gap) = evaluate(&policy)?;
        br = next_br;
        history.push(gap);
        if gap < best.1 {
            best = (policy.clone(), gap);
        }
        converged = gap <= cfg.tol;
    }
    Ok(NeReport {
        policy: best.0,
        iterations: history.len(),
        gap: best.1,
        converged,
        initial_gap,
        gap_history: history,
    })
}

/// `pi_{i+1} = (1 - alpha) pi_i + alpha BR(pi_i)` until the exact gap drops
/// to `tol` or `max_iter` updates were made.
pub fn solve_ne(model: &dyn MeanFieldModel, alpha: f64, tol: f64, max_iter: usize, init: &Policy) -> Result<NeReport> {
    if init.shape() != model.shape() {
        return config("initial policy shape does not match the model");
    }
    let cfg = NeConfig { alpha, tol, max_iter };
    iterate(|p| freeze(model, p).map(|x| Arc::new(x.1)), &cfg, init, None)
}

/// The same iteration on a policy-aware model.
pub fn solve_pam_ne(pam: &dyn PolicyAwareModel, cfg: &NeConfig, init: &Policy) -> Result<NeReport> {
    if init.shape() != pam.shape() {
        return config("initial policy shape does not match the model");
    }
    iterate(|p| Ok(pam.frozen(p)), cfg, init, None)
}

/// Damped best response on a lift with deviations kept inside each type
/// block. The gaps are constrained gaps.
pub fn solve_constrained_ne(lifted: &LiftedModel, cfg: &NeConfig, init: &Policy) -> Result<NeReport> {
    if !lifted.is_constrained(init) {
        return config("initial policy takes cross-type actions");
    }
    let allowed = |s: usize| lifted.allowed_actions(s);
    iterate(|p| freeze(lifted, p).map(|x| Arc::new(x.1)), cfg, init, Some(&allowed))
}

/// One report per member, each started from the uniform policy.
pub fn ne_policy_table(class: &ModelClass, cfg: &NeConfig) -> Result<Vec<NeReport>> {
    let init = Policy::uniform(class.shape());
    class
        .models()
        .par_iter()
        .map(|m| solve_ne(m.as_ref(), cfg.alpha, cfg.tol, cfg.max_iter, &init))
        .collect()
}

pub fn ne_table_entries(reports: &[NeReport]) -> Vec<NeTableEntry> {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| NeTableEntry {
            model_index: i,
            gap: r.gap.max(0.0),
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect()
}
