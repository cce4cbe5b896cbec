use std::sync::Arc;

use log::info;
use rand::Rng;
use rayon::prelude::*;

use super::heuristic::{candidates_for, DriverOutcome, DriverStatus};
use super::model_elim::{model_elim, ElimCall};
use super::trace::{Branch, ElimTrace, RoundRecord, TraceRow};
use super::{CandidateMode, ElimConfig};
use crate::bridge::{bridge_model, bridge_policy, policy_cover};
use crate::engine::{central_model_among, ne_gap};
use crate::error::{config, Result};
use crate::model::ModelClass;
use crate::ne::{solve_ne, NeConfig};
use crate::policy::Policy;
use crate::rng::{derive_seed, stream_rng};
use crate::sampler::Sampler;

/// Largest `(S, A, H)` accepted by [`mebp_exact`].
pub const EXACT_LIMITS: (usize, usize, usize) = (3, 3, 2);

/// Elimination with bridge policies over a full policy cover.
///
/// Each round picks the cover member whose central model has the fewest
/// neighbors. If that is at most half the survivors, elimination runs under
/// it. Otherwise the bridge policy is computed and used as reference; it is
/// returned once its gap in a uniformly drawn survivor is at most `3 eps / 4`.
/// A `NeSet` candidate mode is promoted to the exact maximization over all
/// policies since toy instances afford it.
pub fn mebp_exact(
    class: &ModelClass,
    cfg: &ElimConfig,
    eps_bar: f64,
    sampler: &mut Sampler,
    ne: &NeConfig,
) -> Result<DriverOutcome> {
    cfg.validate()?;
    let shape = class.shape();
    let (ls, la, lh) = EXACT_LIMITS;
    if shape.states > ls || shape.actions > la || shape.horizon > lh {
        return config(format!(
            "exact elimination is limited to S <= {ls}, A <= {la}, H <= {lh}; got S = {}, A = {}, H = {}",
            shape.states, shape.actions, shape.horizon
        ));
    }
    let start = sampler.trajectories();
    let mut trace = ElimTrace::default();
    if class.len() == 1 {
        let report = solve_ne(class.get(0).as_ref(), ne.alpha, ne.tol, ne.max_iter, &Policy::uniform(shape))?;
        trace.rows.push(TraceRow {
            round: 1,
            branch: Branch::Single,
            inner_iter: 0,
            delta_max: 0.0,
            models_remaining: 1,
            trajectories_total: sampler.trajectories(),
            norm_max_ne_gap: 0.0,
        });
        return Ok(DriverOutcome {
            status: DriverStatus::Single,
            policy: Some(report.policy),
            returned_model: Some(0),
            survivors: vec![0],
            trace,
            trajectories: 0,
        });
    }
    let cover = Arc::new(policy_cover(eps_bar, shape.states, shape.actions, shape.horizon)?);
    let mut cfg = cfg.clone();
    if cfg.mode == CandidateMode::NeSet {
        cfg.mode = CandidateMode::AllPolicies;
    }
    let delta = cfg.per_call_delta(class.len());
    let cap = ElimConfig::round_cap(class.len());
    let mut survivors: Vec<usize> = (0..class.len()).collect();
    for round in 1..=cap {
        let centers: Vec<(usize, usize)> = cover
            .policies
            .par_iter()
            .map(|p| central_model_among(class, &survivors, p, cfg.eps0))
            .collect::<Result<_>>()?;
        let mut k = 0;
        for (i, c) in centers.iter().enumerate() {
            if c.1 < centers[k].1 {
                k = i;
            }
        }
        let if_branch = centers[k].1 as f64 <= survivors.len() as f64 / 2.0;
        let (reference, branch) = if if_branch {
            (cover.policies[k].clone(), Branch::If)
        } else {
            let bridge = bridge_model(class, &survivors, cfg.eps0, Arc::clone(&cover), false)?;
            (bridge_policy(&bridge, ne.alpha, ne.tol, ne.max_iter)?.policy, Branch::Else)
        };
        let candidates = candidates_for(&cfg, &reference, &survivors, None)?;
        let call = ElimCall {
            round,
            branch,
            delta,
            monitor: None,
        };
        let out = model_elim(&reference, class, &survivors, &cfg, sampler, &candidates, &call)?;
        info!(
            "exact round {round} ({branch:?}): {} -> {} models",
            survivors.len(),
            out.survivors.len()
        );
        survivors = out.survivors;
        trace.rows.extend(out.rows);
        trace.rounds.push(RoundRecord {
            round,
            branch,
            reference_id: reference.id(),
            reference_model: None,
            survivors: survivors.clone(),
            trajectories_used: out.trajectories,
            delta_max: out.delta_max,
            max_norm_gap: 0.0,
        });
        if branch == Branch::Else {
            let mut rng = stream_rng(derive_seed(sampler.seed(), round as u64), 0);
            let pick = survivors[rng.random_range(0..survivors.len())];
            let gap = ne_gap(class.get(pick).as_ref(), &reference)?;
            if gap <= 0.75 * cfg.eps {
                return Ok(DriverOutcome {
                    status: DriverStatus::Returned,
                    policy: Some(reference),
                    returned_model: Some(pick),
                    survivors,
                    trace,
                    trajectories: sampler.trajectories() - start,
                });
            }
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
