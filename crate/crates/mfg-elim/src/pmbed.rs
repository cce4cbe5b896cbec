//! Greedy certified lower bounds on eluder-type dimensions of a model class.
//!
//! A sequence item is independent of its prefix when some pair of models
//! disagrees on it by more than `eps` in l1 while their squared
//! disagreements over the prefix sum to at most `eps^2`. The partial
//! variants evaluate each model at a policy-induced density; the standard
//! variant takes the density from a supplied grid.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::evolve_density;
use crate::error::{config, Result};
use crate::model::ModelClass;
use crate::policy::Policy;
use crate::rng::stream_rng;

/// Largest class accepted by the exhaustive pair search.
pub const PAIR_SEARCH_LIMIT: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EluderVariant {
    /// Each model at its own flow under the reference policy.
    PartialI,
    /// Every model at the true model's flow.
    PartialII,
    /// Densities from an explicit grid.
    Standard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceItem {
    pub s: usize,
    pub a: usize,
    /// Grid density for standard sequences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
    /// Pair that certified the item.
    pub witness: (usize, usize),
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EluderReport {
    pub variant: EluderVariant,
    pub step: usize,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_id: Option<String>,
    /// Reference policy of partial variants, kept for re-verification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    pub sequence: Vec<SequenceItem>,
    pub length: usize,
}

fn l1(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Greedy pass over a fixed item order. `rows(item)` returns one kernel row
/// per model; the first qualifying pair in lexicographic order witnesses.
struct Greedy {
    eps: f64,
    pairs: Vec<(usize, usize)>,
    prefix: Vec<f64>,
}

impl Greedy {
    fn new(n: usize, eps: f64) -> Self {
        let pairs = pairs(n);
        let prefix = vec![0.0; pairs.len()];
        Greedy { eps, pairs, prefix }
    }

    /// Offers an item with per-model rows `r` (row `m` of the matrix); returns
    /// the witness if the item is appended.
    fn offer(&mut self, r: &Array2<f64>) -> Option<((usize, usize), f64)> {
        let disc: Vec<f64> = self.pairs.par_iter().map(|&(i, j)| l1(r.row(i), r.row(j))).collect();
        let eps2 = self.eps * self.eps;
        let hit = (0..self.pairs.len()).find(|&p| self.prefix[p] <= eps2 && disc[p] > self.eps)?;
        for (acc, d) in self.prefix.iter_mut().zip(&disc) {
            *acc += d * d;
        }
        Some((self.pairs[hit], disc[hit]))
    }
}

fn check_class(class: &ModelClass, h: usize, eps: f64) -> Result<()> {
    if class.len() > PAIR_SEARCH_LIMIT {
        return config(format!("class has {} models; the pair search allows {PAIR_SEARCH_LIMIT}", class.len()));
    }
    if h >= class.shape().horizon {
        return config(format!("step {h} out of range"));
    }
    if !(eps > 0.0) {
        return config("eps must be positive");
    }
    Ok(())
}

/// Densities at which each model is evaluated at step `h`.
fn partial_densities(class: &ModelClass, h: usize, reference: &Policy, variant: EluderVariant) -> Result<Vec<Vec<f64>>> {
    match variant {
        EluderVariant::PartialI => class
            .models()
            .par_iter()
            .map(|m| evolve_density(m.as_ref(), reference).map(|f| f.step(h).to_vec()))
            .collect(),
        EluderVariant::PartialII => {
            let Some(truth) = class.true_model() else {
                return config("type-II sequences need a class with a true model");
            };
            let mu = evolve_density(truth.as_ref(), reference)?.step(h).to_vec();
            Ok(vec![mu; class.len()])
        }
        EluderVariant::Standard => config("use greedy_standard_sequence for the standard variant"),
    }
}

/// Greedy partially `eps`-independent sequence over `(s, a)` in
/// lexicographic order at step `h`.
pub fn greedy_partial_sequence(
    class: &ModelClass,
    h: usize,
    reference: &Policy,
    eps: f64,
    variant: EluderVariant,
) -> Result<EluderReport> {
    check_class(class, h, eps)?;
    if reference.shape() != class.shape() {
        return config("reference policy shape does not match the class");
    }
    let shape = class.shape();
    let (s_n, a_n) = (shape.states, shape.actions);
    let nu = partial_densities(class, h, reference, variant)?;
    let mut greedy = Greedy::new(class.len(), eps);
    let mut sequence = Vec::new();
    for s in 0..s_n {
        let blocks: Vec<Array2<f64>> = class
            .models()
            .par_iter()
            .zip(&nu)
            .map(|(m, mu)| m.kernel_rows(h, mu, s * a_n..(s + 1) * a_n))
            .collect();
        for a in 0..a_n {
            let rows = Array2::from_shape_fn((class.len(), s_n), |(m, k)| blocks[m][[a, k]]);
            if let Some((witness, discrepancy)) = greedy.offer(&rows) {
                sequence.push(SequenceItem {
                    s,
                    a,
                    density: None,
                    witness,
                    discrepancy,
                });
            }
        }
    }
    Ok(EluderReport {
        variant,
        step: h,
        eps,
        policy_id: Some(reference.id()),
        policy: Some(reference.clone()),
        grid_size: None,
        length: sequence.len(),
        sequence,
    })
}

/// Greedy `eps`-independent sequence over `(s, a, mu)` with `mu` from
/// `grid`, ordered by state, action, then grid index.
pub fn greedy_standard_sequence(class: &ModelClass, h: usize, eps: f64, grid: &[Vec<f64>]) -> Result<EluderReport> {
    check_class(class, h, eps)?;
    let shape = class.shape();
    let (s_n, a_n) = (shape.states, shape.actions);
    if grid.iter().any(|mu| mu.len() != s_n) {
        return config("grid densities must have one entry per state");
    }
    let mut greedy = Greedy::new(class.len(), eps);
    let mut sequence = Vec::new();
    for s in 0..s_n {
        // blocks[g][m] holds the A x S rows of model m at grid density g.
        let blocks: Vec<Vec<Array2<f64>>> = grid
            .par_iter()
            .map(|mu| class.models().iter().map(|m| m.kernel_rows(h, mu, s * a_n..(s + 1) * a_n)).collect())
            .collect();
        for a in 0..a_n {
            for (g, mu) in grid.iter().enumerate() {
                let rows = Array2::from_shape_fn((class.len(), s_n), |(m, k)| blocks[g][m][[a, k]]);
                if let Some((witness, discrepancy)) = greedy.offer(&rows) {
                    sequence.push(SequenceItem {
                        s,
                        a,
                        density: Some(mu.clone()),
                        witness,
                        discrepancy,
                    });
                }
            }
        }
    }
    Ok(EluderReport {
        variant: EluderVariant::Standard,
        step: h,
        eps,
        policy_id: None,
        policy: None,
        grid_size: Some(grid.len()),
        length: sequence.len(),
        sequence,
    })
}

/// Checks every item of `report` against its prefix with a fresh
/// exhaustive pair search.
pub fn reverify(class: &ModelClass, report: &EluderReport) -> Result<bool> {
    let shape = class.shape();
    let n = class.len();
    let nu = match report.variant {
        EluderVariant::Standard => None,
        v => {
            let Some(p) = &report.policy else {
                return config("partial report carries no policy");
            };
            Some(partial_densities(class, report.step, p, v)?)
        }
    };
    let items: Vec<Vec<ndarray::Array1<f64>>> = report
        .sequence
        .iter()
        .map(|it| {
            (0..n)
                .map(|m| {
                    let mu = match (&nu, &it.density) {
                        (Some(nu), _) => nu[m].clone(),
                        (None, Some(d)) => d.clone(),
                        (None, None) => vec![0.0; shape.states],
                    };
                    let r = it.s * shape.actions + it.a;
                    class.get(m).kernel_rows(report.step, &mu, r..r + 1).row(0).to_owned()
                })
                .collect()
        })
        .collect();
    if report.variant == EluderVariant::Standard && report.sequence.iter().any(|it| it.density.is_none()) {
        return Ok(false);
    }
    let eps2 = report.eps * report.eps;
    for k in 0..items.len() {
        let ok = pairs(n).into_iter().any(|(i, j)| {
            let prior: f64 = items[..k].iter().map(|it| l1(it[i].view(), it[j].view()).powi(2)).sum();
            prior <= eps2 && l1(items[k][i].view(), items[k][j].view()) > report.eps
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(report.length == report.sequence.len())
}

#[derive(Clone, Debug, Default)]
pub struct PmbedOptions {
    /// Random policies drawn in addition to the uniform one.
    pub policy_samples: usize,
    pub seed: u64,
    /// Extra conditioning policies, typically members' NE policies.
    pub extra_policies: Vec<Policy>,
    /// Use the type-II densities instead of each model's own.
    pub type_two: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PmbedEstimate {
    pub value: usize,
    /// Longest sequence found.
    pub best: Option<EluderReport>,
    pub policies_tried: usize,
}

/// Maximum certified partial length over all steps and the conditioning
/// policies: uniform, `policy_samples` seeded random ones and the extras.
pub fn pmbed_estimate(class: &ModelClass, eps: f64, opts: &PmbedOptions) -> Result<PmbedEstimate> {
    let shape = class.shape();
    let mut policies = vec![Policy::uniform(shape)];
    for k in 0..opts.policy_samples {
        let mut rng = stream_rng(opts.seed, k as u64);
        policies.push(Policy::random(shape, &mut rng));
    }
    policies.extend(opts.extra_policies.iter().cloned());
    let variant = if opts.type_two {
        EluderVariant::PartialII
    } else {
        EluderVariant::PartialI
    };
    let mut best: Option<EluderReport> = None;
    for p in &policies {
        for h in 0..shape.horizon {
            let r = greedy_partial_sequence(class, h, p, eps, variant)?;
            if best.as_ref().is_none_or(|b| r.length > b.length) {
                best = Some(r);
            }
        }
    }
    Ok(PmbedEstimate {
        value: best.as_ref().map_or(0, |b| b.length),
        best,
        policies_tried: policies.len(),
    })
}
