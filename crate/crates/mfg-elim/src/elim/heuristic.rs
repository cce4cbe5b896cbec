use std::collections::HashMap;

use log::info;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::delta::pair_l1;
use super::model_elim::{model_elim, Candidate, ElimCall};
use super::trace::{Branch, ElimTrace, GapMonitor, RoundRecord, TraceRow};
use super::{CandidateMode, ElimConfig};
use crate::bridge::policy_cover;
use crate::engine::{freeze, frozen_distance};
use crate::error::{config, Result};
use crate::frozen::FrozenMdp;
use crate::model::ModelClass;
use crate::policy::Policy;
use crate::sampler::Sampler;

/// Policy-independent lower bounds on pairwise conditional distances: the
/// first-step discrepancy under the best action, where every flow still
/// equals the initial density.
pub fn lower_bound_distances(class: &ModelClass) -> Array2<f64> {
    let shape = class.shape();
    let (s_n, a_n) = (shape.states, shape.actions);
    let n = class.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut bounds = vec![(0.0, 0.0); pairs.len()];
    for s in 0..s_n {
        let weights: Vec<f64> = class.models().iter().map(|m| m.initial_density()[s]).collect();
        if weights.iter().all(|&w| w == 0.0) {
            continue;
        }
        let rows: Vec<Array2<f64>> = class
            .models()
            .par_iter()
            .map(|m| m.kernel_rows(0, m.initial_density(), s * a_n..(s + 1) * a_n))
            .collect();
        let mut worst = vec![0.0f64; pairs.len()];
        for a in 0..a_n {
            let block = Array2::from_shape_fn((n, s_n), |(i, k)| rows[i][[a, k]]);
            for (w, d) in worst.iter_mut().zip(pair_l1(block.view(), &pairs)) {
                *w = w.max(d);
            }
        }
        for ((b, &(i, j)), w) in bounds.iter_mut().zip(&pairs).zip(worst) {
            b.0 += weights[i] * w;
            b.1 += weights[j] * w;
        }
    }
    let values = bounds.into_iter().map(|(bi, bj)| bi.max(bj));
    let mut out = Array2::zeros((n, n));
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[[i, j]] = v;
        out[[j, i]] = v;
    }
    out
}

/// `|B(M, survivors)|` under `reference` for every survivor `M`, using
/// `bounds` to skip pairs that cannot be within `eps0`.
pub(crate) fn neighborhood_counts(
    class: &ModelClass,
    survivors: &[usize],
    reference: &Policy,
    eps0: f64,
    bounds: &Array2<f64>,
) -> Result<Vec<usize>> {
    let n = survivors.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| bounds[[survivors[i], survivors[j]]] <= eps0)
        .collect();
    let mut counts = vec![1; n];
    if pairs.is_empty() {
        return Ok(counts);
    }
    let mut needed: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    needed.sort_unstable();
    needed.dedup();
    let frozen: HashMap<usize, FrozenMdp> = needed
        .par_iter()
        .map(|&p| freeze(class.get(survivors[p]).as_ref(), reference).map(|x| (p, x.1)))
        .collect::<Result<_>>()?;
    let close: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| frozen_distance(&frozen[&i], &frozen[&j]) <= eps0)
        .collect();
    for (&(i, j), c) in pairs.iter().zip(close) {
        if c {
            counts[i] += 1;
            counts[j] += 1;
        }
    }
    Ok(counts)
}

/// Candidate adversaries for one call: the reference first, then the
/// configured set.
pub(crate) fn candidates_for(
    cfg: &ElimConfig,
    reference: &Policy,
    survivors: &[usize],
    ne_table: Option<&[Policy]>,
) -> Result<Vec<Candidate>> {
    let mut out = vec![Candidate {
        policy: reference.clone(),
        owner: None,
    }];
    match &cfg.mode {
        CandidateMode::NeSet => {
            let Some(table) = ne_table else {
                return config("ne-set candidates need an NE table");
            };
            out.extend(survivors.iter().map(|&i| Candidate {
                policy: table[i].clone(),
                owner: Some(i),
            }));
        }
        CandidateMode::EpsCover { eps_bar } => {
            let shape = reference.shape();
            let cover = policy_cover(*eps_bar, shape.states, shape.actions, shape.horizon)?;
            out.extend(cover.policies.into_iter().map(|policy| Candidate { policy, owner: None }));
        }
        CandidateMode::Explicit(list) => {
            out.extend(list.iter().map(|p| Candidate {
                policy: p.clone(),
                owner: None,
            }));
        }
        CandidateMode::AllPolicies => {}
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverStatus {
    /// The policy of the returned model survived its own elimination call.
    Returned,
    /// One model was left.
    Single,
    /// The round cap was reached without returning.
    RoundLimit,
}

#[derive(Clone, Debug)]
pub struct DriverOutcome {
    pub status: DriverStatus,
    pub policy: Option<Policy>,
    /// Class index whose NE was returned, if any.
    pub returned_model: Option<usize>,
    pub survivors: Vec<usize>,
    pub trace: ElimTrace,
    pub trajectories: u64,
}

impl DriverOutcome {
    pub fn completed(&self) -> bool {
        self.status != DriverStatus::RoundLimit
    }
}

fn single_row(round: usize, sampler: &Sampler, survivors: &[usize], monitor: Option<&GapMonitor>) -> TraceRow {
    TraceRow {
        round,
        branch: Branch::Single,
        inner_iter: 0,
        delta_max: 0.0,
        models_remaining: survivors.len(),
        trajectories_total: sampler.trajectories(),
        norm_max_ne_gap: monitor.map_or(0.0, |m| m.normalized(survivors)),
    }
}

/// Elimination driver that only uses members' NE policies as references.
///
/// Each round looks, in index order, for a survivor whose NE policy leaves
/// every neighborhood at most half the survivors and eliminates under it.
/// Otherwise the survivor with the largest neighborhood under its own NE
/// policy is used, and that policy is returned if the model survives.
pub fn mebp_heuristic(
    class: &ModelClass,
    cfg: &ElimConfig,
    sampler: &mut Sampler,
    ne_table: &[Policy],
    monitor: Option<&GapMonitor>,
) -> Result<DriverOutcome> {
    cfg.validate()?;
    if ne_table.len() != class.len() {
        return config("NE table must cover every class member");
    }
    let start = sampler.trajectories();
    let bounds = lower_bound_distances(class);
    let delta = cfg.per_call_delta(class.len());
    let cap = ElimConfig::round_cap(class.len());
    let mut survivors: Vec<usize> = (0..class.len()).collect();
    let mut trace = ElimTrace::default();
    for round in 1..=cap {
        if survivors.len() == 1 {
            let m = survivors[0];
            trace.rows.push(single_row(round, sampler, &survivors, monitor));
            trace.rounds.push(RoundRecord {
                round,
                branch: Branch::Single,
                reference_id: ne_table[m].id(),
                reference_model: Some(m),
                survivors: survivors.clone(),
                trajectories_used: 0,
                delta_max: Vec::new(),
                max_norm_gap: monitor.map_or(0.0, |g| g.normalized(&survivors)),
            });
            return Ok(DriverOutcome {
                status: DriverStatus::Single,
                policy: Some(ne_table[m].clone()),
                returned_model: Some(m),
                survivors,
                trace,
                trajectories: sampler.trajectories() - start,
            });
        }
        let half = survivors.len() as f64 / 2.0;
        let mut own = Vec::with_capacity(survivors.len());
        let mut chosen = None;
        for (pos, &m) in survivors.iter().enumerate() {
            let counts = neighborhood_counts(class, &survivors, &ne_table[m], cfg.eps0, &bounds)?;
            let widest = counts.iter().copied().max().unwrap_or(0);
            if widest as f64 <= half {
                chosen = Some((m, Branch::If));
                break;
            }
            own.push(counts[pos]);
        }
        let (m, branch) = chosen.unwrap_or_else(|| {
            let mut best = 0;
            for p in 1..own.len() {
                if own[p] > own[best] {
                    best = p;
                }
            }
            (survivors[best], Branch::Else)
        });
        let reference = &ne_table[m];
        let candidates = candidates_for(cfg, reference, &survivors, Some(ne_table))?;
        let call = ElimCall {
            round,
            branch,
            delta,
            monitor,
        };
        let out = model_elim(reference, class, &survivors, cfg, sampler, &candidates, &call)?;
        info!(
            "round {round} ({branch:?}, ref {m}): {} -> {} models, {} trajectories",
            survivors.len(),
            out.survivors.len(),
            out.trajectories
        );
        survivors = out.survivors;
        trace.rows.extend(out.rows);
        trace.rounds.push(RoundRecord {
            round,
            branch,
            reference_id: reference.id(),
            reference_model: Some(m),
            survivors: survivors.clone(),
            trajectories_used: out.trajectories,
            delta_max: out.delta_max,
            max_norm_gap: monitor.map_or(0.0, |g| g.normalized(&survivors)),
        });
        if branch == Branch::Else && survivors.contains(&m) {
            return Ok(DriverOutcome {
                status: DriverStatus::Returned,
                policy: Some(reference.clone()),
                returned_model: Some(m),
                survivors,
                trace,
                trajectories: sampler.trajectories() - start,
            });
        }
    }
    Ok(DriverOutcome {
        status: DriverStatus::RoundLimit,
        policy: None,
        returned_model: None,
        survivors,
        trace,
        trajectories: sampler.trajectories() - start,
    })
}
