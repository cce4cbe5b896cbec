//! Exact operations on mean-field models: density flows, conditional values,
//! best responses, NE gaps, conditional model distances and neighborhoods.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{config, Result};
use crate::frozen::{FrozenMdp, StepKernel};
use crate::model::{DensityFlow, MeanFieldModel, ModelClass};
use crate::policy::Policy;

fn check_shape(model: &dyn MeanFieldModel, policy: &Policy) -> Result<()> {
    if model.shape() != policy.shape() {
        return config(format!(
            "policy shape {:?} does not match model shape {:?}",
            policy.shape(),
            model.shape()
        ));
    }
    Ok(())
}

fn step_kernel(model: &dyn MeanFieldModel, h: usize, density: &[f64]) -> StepKernel {
    match model.low_rank_kernel(h, density) {
        Some(f) => StepKernel::low_rank(f),
        None => StepKernel::dense(model.kernel(h, density)),
    }
}

/// Mean-field flow `mu_0 .. mu_{H-1}` of `policy` in `model`.
pub fn evolve_density(model: &dyn MeanFieldModel, policy: &Policy) -> Result<DensityFlow> {
    check_shape(model, policy)?;
    let shape = model.shape();
    let mut steps = Vec::with_capacity(shape.horizon);
    let mut mu = Array1::from(model.initial_density().to_vec());
    for h in 0..shape.horizon {
        if h + 1 < shape.horizon {
            let k = step_kernel(model, h, mu.as_slice().unwrap());
            let next = k.push(shape.actions, &mu, policy.step(h));
            steps.push(mu);
            mu = next;
        } else {
            steps.push(mu.clone());
        }
    }
    Ok(DensityFlow { steps })
}

/// Freezes `model` at a given flow.
pub fn freeze_at(model: &dyn MeanFieldModel, flow: &DensityFlow) -> FrozenMdp {
    let shape = model.shape();
    let (kernels, rewards) = (0..shape.horizon)
        .map(|h| {
            let mu = flow.step(h).as_slice().unwrap();
            (step_kernel(model, h, mu), model.reward_table(h, mu))
        })
        .unzip();
    FrozenMdp::from_steps(Array1::from(model.initial_density().to_vec()), kernels, rewards)
}

/// Computes the flow of `policy` and the MDP frozen along it in one pass.
pub fn freeze(model: &dyn MeanFieldModel, policy: &Policy) -> Result<(DensityFlow, FrozenMdp)> {
    check_shape(model, policy)?;
    let shape = model.shape();
    let mut steps = Vec::with_capacity(shape.horizon);
    let mut kernels = Vec::with_capacity(shape.horizon);
    let mut rewards = Vec::with_capacity(shape.horizon);
    let mut mu = Array1::from(model.initial_density().to_vec());
    for h in 0..shape.horizon {
        let slice = mu.as_slice().unwrap();
        let k = step_kernel(model, h, slice);
        rewards.push(model.reward_table(h, slice));
        let next = if h + 1 < shape.horizon {
            Some(k.push(shape.actions, &mu, policy.step(h)))
        } else {
            None
        };
        kernels.push(k);
        steps.push(mu);
        match next {
            Some(n) => mu = n,
            None => break,
        }
    }
    let initial = steps[0].clone();
    Ok((DensityFlow { steps }, FrozenMdp::from_steps(initial, kernels, rewards)))
}

/// `J_M(eval; ref)`: value of `eval` with dynamics and rewards frozen at the
/// flow of `ref`.
pub fn conditional_return(model: &dyn MeanFieldModel, eval: &Policy, reference: &Policy) -> Result<f64> {
    check_shape(model, eval)?;
    let (_, mdp) = freeze(model, reference)?;
    Ok(mdp.evaluate(eval))
}

/// Deterministic best response to the flow of `reference` and its value.
pub fn best_response(model: &dyn MeanFieldModel, reference: &Policy) -> Result<(Policy, f64)> {
    let (_, mdp) = freeze(model, reference)?;
    Ok(mdp.best_response())
}

/// Raw NE gap `max_pi J(pi; policy) - J(policy; policy)`.
pub fn ne_gap(model: &dyn MeanFieldModel, policy: &Policy) -> Result<f64> {
    let (_, mdp) = freeze(model, policy)?;
    Ok(mdp.gap(policy))
}

/// Per-step l1 distances between matching kernel rows.
pub fn discrepancy_costs(a: &FrozenMdp, b: &FrozenMdp) -> Vec<Array1<f64>> {
    (0..a.shape().horizon)
        .map(|h| (a.kernel(h), b.kernel(h)))
        .map(|(ka, kb)| {
            Array1::from_iter(
                ka.rows()
                    .into_iter()
                    .zip(kb.rows())
                    .map(|(ra, rb)| ra.iter().zip(rb.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>()),
            )
        })
        .collect()
}

/// Distance between two frozen models: the larger of the two directional
/// maxima, each computed by a DP over the respective dynamics.
pub fn frozen_distance(a: &FrozenMdp, b: &FrozenMdp) -> f64 {
    let costs = discrepancy_costs(a, b);
    let ab = a.optimize_with(&costs, None).1;
    let ba = b.optimize_with(&costs, None).1;
    ab.max(ba)
}

/// `d(M, N | ref)`.
pub fn conditional_model_distance(
    m: &dyn MeanFieldModel,
    n: &dyn MeanFieldModel,
    reference: &Policy,
) -> Result<f64> {
    if m.shape() != n.shape() {
        return config("models have different shapes");
    }
    let (_, fm) = freeze(m, reference)?;
    let (_, fn_) = freeze(n, reference)?;
    Ok(frozen_distance(&fm, &fn_))
}

/// Symmetric matrix of conditional distances between `members`, indexed by
/// position in `members`.
pub fn pairwise_distances(class: &ModelClass, members: &[usize], reference: &Policy) -> Result<Array2<f64>> {
    let frozen: Vec<FrozenMdp> = members
        .par_iter()
        .map(|&i| freeze(class.get(i).as_ref(), reference).map(|x| x.1))
        .collect::<Result<_>>()?;
    let n = members.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| frozen_distance(&frozen[i], &frozen[j]))
        .collect();
    let mut out = Array2::zeros((n, n));
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[[i, j]] = v;
        out[[j, i]] = v;
    }
    Ok(out)
}

/// Indices `j` with `d(class[center], class[j] | ref) <= eps0`.
pub fn neighborhood(class: &ModelClass, center: usize, reference: &Policy, eps0: f64) -> Result<Vec<usize>> {
    if center >= class.len() {
        return config(format!("center index {center} out of range"));
    }
    let c = class.get(center).as_ref();
    let mut out = Vec::new();
    for j in 0..class.len() {
        if j == center || conditional_model_distance(c, class.get(j).as_ref(), reference)? <= eps0 {
            out.push(j);
        }
    }
    Ok(out)
}

/// Member of `members` with the most `eps0`-neighbors among `members`,
/// lowest position on ties. Returns the class index and the count.
pub fn central_model_among(
    class: &ModelClass,
    members: &[usize],
    reference: &Policy,
    eps0: f64,
) -> Result<(usize, usize)> {
    if members.is_empty() {
        return config("no members");
    }
    let d = pairwise_distances(class, members, reference)?;
    let (pos, count) = central_from_distances(&d, eps0);
    Ok((members[pos], count))
}

/// Position of the row with the most entries `<= eps0`, lowest on ties.
pub fn central_from_distances(d: &Array2<f64>, eps0: f64) -> (usize, usize) {
    let mut best = (0, 0);
    for (i, row) in d.rows().into_iter().enumerate() {
        let count = row.iter().enumerate().filter(|&(j, &x)| j == i || x <= eps0).count();
        if count > best.1 {
            best = (i, count);
        }
    }
    best
}

/// Central model of the whole class.
pub fn central_model(class: &ModelClass, reference: &Policy, eps0: f64) -> Result<(usize, usize)> {
    let all: Vec<usize> = (0..class.len()).collect();
    central_model_among(class, &all, reference, eps0)
}
