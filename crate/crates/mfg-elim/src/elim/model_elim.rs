use log::debug;

use super::delta::DeltaTable;
use super::trace::{Branch, GapMonitor, TraceRow};
use super::{CandidateMode, ElimConfig};
use crate::engine::evolve_density;
use crate::error::{config, Error, Result};
use crate::model::{DensityFlow, ModelClass};
use crate::policy::Policy;
use crate::sampler::{Sampler, Transition};

/// Log-likelihood assigned to an observation the model deems impossible.
pub const LOG_ZERO: f64 = -1e30;

/// A candidate adversary policy; `owner` is the member whose NE it is.
/// Owned candidates drop out once their owner is eliminated.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub policy: Policy,
    pub owner: Option<usize>,
}

/// Bookkeeping of one elimination call inside a driver.
#[derive(Clone, Copy, Debug)]
pub struct ElimCall<'a> {
    pub round: usize,
    pub branch: Branch,
    /// Confidence used in the threshold.
    pub delta: f64,
    pub monitor: Option<&'a GapMonitor>,
}

impl<'a> ElimCall<'a> {
    pub fn standalone(delta: f64) -> Self {
        ElimCall {
            round: 1,
            branch: Branch::If,
            delta,
            monitor: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ElimOutcome {
    pub survivors: Vec<usize>,
    pub rows: Vec<TraceRow>,
    pub delta_max: Vec<f64>,
    /// Trajectories drawn by this call.
    pub trajectories: u64,
    /// True when the call stopped because the discrepancy fell below `eps_tilde`.
    pub resolved: bool,
    /// Candidate-restricted maximum discrepancy at exit.
    pub final_delta: f64,
}

fn log_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_ZERO
    }
}

/// Likelihood-based elimination of `survivors` under `reference`.
///
/// Each iteration finds the candidate and member pair with the largest
/// expected transition discrepancy, stops if it is at most `eps_tilde`, and
/// otherwise samples `2H` trajectories and drops members whose
/// log-likelihood falls below the leader by more than
/// `log(H T |M| / delta)`.
pub fn model_elim(
    reference: &Policy,
    class: &ModelClass,
    survivors: &[usize],
    cfg: &ElimConfig,
    sampler: &mut Sampler,
    candidates: &[Candidate],
    call: &ElimCall,
) -> Result<ElimOutcome> {
    cfg.validate()?;
    if survivors.is_empty() {
        return config("model_elim needs at least one model");
    }
    let shape = class.shape();
    if reference.shape() != shape {
        return config("reference policy shape does not match the class");
    }
    let exact = cfg.mode == CandidateMode::AllPolicies;
    if !exact && candidates.is_empty() {
        return config("candidate list is empty");
    }
    let n = survivors.len();
    let horizon = shape.horizon;
    let start = sampler.trajectories();
    let threshold = ((horizon * cfg.max_iter * class.len()) as f64 / call.delta).ln();
    let table = if exact {
        DeltaTable::exact(class, survivors, reference)?
    } else {
        let policies: Vec<Policy> = candidates.iter().map(|c| c.policy.clone()).collect();
        DeltaTable::listed(class, survivors, reference, &policies)?
    };
    let flows: Vec<DensityFlow> = survivors
        .iter()
        .map(|&i| evolve_density(class.get(i).as_ref(), reference))
        .collect::<Result<_>>()?;
    let mut alive = vec![true; n];
    let mut scores = vec![0.0f64; n];
    let mut out = ElimOutcome {
        survivors: survivors.to_vec(),
        rows: Vec::new(),
        delta_max: Vec::new(),
        trajectories: 0,
        resolved: false,
        final_delta: f64::INFINITY,
    };
    for t in 1..=cfg.max_iter {
        let cand_alive: Vec<bool> = candidates
            .iter()
            .map(|c| match c.owner {
                None => true,
                Some(o) => survivors.iter().position(|&m| m == o).is_none_or(|p| alive[p]),
            })
            .collect();
        let best = table.argmax(&alive, &cand_alive);
        out.delta_max.push(best.value);
        out.final_delta = best.value;
        let current: Vec<usize> = (0..n).filter(|&p| alive[p]).map(|p| survivors[p]).collect();
        let row = |remaining: usize, sampler: &Sampler| TraceRow {
            round: call.round,
            branch: call.branch,
            inner_iter: t,
            delta_max: best.value,
            models_remaining: remaining,
            trajectories_total: sampler.trajectories(),
            norm_max_ne_gap: 0.0,
        };
        if best.value <= cfg.eps_tilde {
            let mut r = row(current.len(), sampler);
            r.norm_max_ne_gap = call.monitor.map_or(0.0, |m| m.normalized(&current));
            out.rows.push(r);
            out.resolved = true;
            break;
        }
        let adversary = match (&best.policy, best.candidate) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => candidates[c].policy.clone(),
            (None, None) => reference.clone(),
        };
        let mut tuples: Vec<Transition> = Vec::with_capacity(2 * horizon);
        for h in 0..horizon {
            tuples.push(sampler.query(reference, reference)?.steps[h]);
            tuples.push(sampler.query(&adversary, reference)?.steps[h]);
        }
        for p in (0..n).filter(|&p| alive[p]) {
            let model = class.get(survivors[p]);
            for tr in &tuples {
                let next = model.transition(tr.h, tr.s, tr.a, flows[p].step(tr.h).as_slice().unwrap());
                scores[p] += log_prob(next[tr.s_next]);
            }
        }
        let lead = (0..n).filter(|&p| alive[p]).map(|p| scores[p]).fold(f64::NEG_INFINITY, f64::max);
        for p in 0..n {
            if alive[p] && scores[p] < lead - threshold {
                alive[p] = false;
            }
        }
        let remaining: Vec<usize> = (0..n).filter(|&p| alive[p]).map(|p| survivors[p]).collect();
        if remaining.is_empty() {
            return Err(Error::AllEliminated(format!(
                "round {} iteration {t}: scores {:?}, threshold {threshold}",
                call.round, scores
            )));
        }
        debug!(
            "round {} iter {t}: delta {:.3e}, {} models left",
            call.round,
            best.value,
            remaining.len()
        );
        let mut r = row(remaining.len(), sampler);
        r.norm_max_ne_gap = call.monitor.map_or(0.0, |m| m.normalized(&remaining));
        out.rows.push(r);
    }
    out.survivors = (0..n).filter(|&p| alive[p]).map(|p| survivors[p]).collect();
    out.trajectories = sampler.trajectories() - start;
    Ok(out)
}
