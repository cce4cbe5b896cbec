use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::engine::{discrepancy_costs, evolve_density, freeze};
use crate::error::{config, Result};
use crate::model::{DensityFlow, MeanFieldModel, ModelClass};
use crate::policy::Policy;

/// `E_{eval, M(reference)}[ sum_h || P_M,h - P_N,h ||_1 ]`, each model at its
/// own flow under `reference`, trajectories drawn in `m`.
pub fn discrepancy_value(
    m: &dyn MeanFieldModel,
    n: &dyn MeanFieldModel,
    eval: &Policy,
    reference: &Policy,
) -> Result<f64> {
    let (_, fm) = freeze(m, reference)?;
    let (_, fn_) = freeze(n, reference)?;
    Ok(fm.evaluate_with(eval, &discrepancy_costs(&fm, &fn_)))
}

/// l1 distance with several accumulators so the loop vectorizes.
fn l1(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for k in 0..chunks {
        let (x, y) = (&a[8 * k..8 * k + 8], &b[8 * k..8 * k + 8]);
        for l in 0..8 {
            acc[l] += (x[l] - y[l]).abs();
        }
    }
    let mut tail = 0.0;
    for k in 8 * chunks..a.len() {
        tail += (a[k] - b[k]).abs();
    }
    acc.iter().sum::<f64>() + tail
}

/// `l1` between rows `i` and `j` of `block` for every pair, with the block
/// copied into contiguous memory so a whole sweep stays in cache.
pub(crate) fn pair_l1(block: ArrayView2<f64>, pairs: &[(usize, usize)]) -> Vec<f64> {
    let block = block.as_standard_layout();
    pairs.par_iter().map(|&(i, j)| l1(block.row(i).as_slice().unwrap(), block.row(j).as_slice().unwrap())).collect()
}

enum Table {
    /// `values[(i * n + j) * candidates + c]`.
    Listed { values: Vec<f64>, candidates: usize },
    /// Best value over all policies per ordered pair, with the maximizer.
    Exact { values: Array2<f64>, policies: Vec<Vec<Option<Policy>>> },
}

/// Discrepancy values of one elimination call. Positions `i, j` refer to the
/// `members` slice the table was built for.
pub struct DeltaTable {
    members: Vec<usize>,
    table: Table,
}

/// Winning entry of [`DeltaTable::argmax`].
#[derive(Clone, Debug)]
pub struct DeltaArgmax {
    pub value: f64,
    /// Candidate index for listed tables.
    pub candidate: Option<usize>,
    /// Maximizing policy for exact tables.
    pub policy: Option<Policy>,
    pub pair: Option<(usize, usize)>,
}

impl DeltaTable {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Values for every listed candidate and ordered member pair, computed
    /// in one forward sweep over steps and states.
    pub fn listed(class: &ModelClass, members: &[usize], reference: &Policy, candidates: &[Policy]) -> Result<Self> {
        let shape = class.shape();
        if candidates.iter().any(|c| c.shape() != shape) || reference.shape() != shape {
            return config("candidate shapes do not match the class");
        }
        let (s_n, a_n) = (shape.states, shape.actions);
        let n = members.len();
        let m = candidates.len();
        let flows: Vec<DensityFlow> = members
            .par_iter()
            .map(|&i| evolve_density(class.get(i).as_ref(), reference))
            .collect::<Result<_>>()?;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut values = vec![0.0; m * n * n];
        let mu0 = ndarray::Array1::from(class.get(members[0]).initial_density().to_vec());
        let mut occ: Vec<Array2<f64>> = (0..n)
            .map(|_| {
                let mut d = Array2::zeros((m, s_n));
                for mut row in d.rows_mut() {
                    row.assign(&mu0);
                }
                d
            })
            .collect();
        for h in 0..shape.horizon {
            let last = h + 1 == shape.horizon;
            let mut next: Vec<Array2<f64>> = if last {
                Vec::new()
            } else {
                (0..n).map(|_| Array2::zeros((m, s_n))).collect()
            };
            for s in 0..s_n {
                let active: Vec<bool> = occ.iter().map(|d| d.column(s).iter().any(|&x| x != 0.0)).collect();
                if !active.iter().any(|&x| x) {
                    continue;
                }
                let rows: Vec<Array2<f64>> = members
                    .par_iter()
                    .enumerate()
                    .map(|(i, &mi)| {
                        if active[i] || !pairs.is_empty() {
                            class.get(mi).kernel_rows(h, flows[i].step(h).as_slice().unwrap(), s * a_n..(s + 1) * a_n)
                        } else {
                            Array2::zeros((a_n, s_n))
                        }
                    })
                    .collect();
                let pi_s = Array2::from_shape_fn((m, a_n), |(c, a)| candidates[c].prob(h, s, a));
                if !pairs.is_empty() {
                    let mut cost = Array2::zeros((pairs.len(), a_n));
                    for a in 0..a_n {
                        let block = Array2::from_shape_fn((n, s_n), |(i, k)| rows[i][[a, k]]);
                        cost.column_mut(a).assign(&Array1::from(pair_l1(block.view(), &pairs)));
                    }
                    let y = cost.dot(&pi_s.t());
                    let occ_s: Vec<Vec<f64>> = occ.iter().map(|d| d.column(s).to_vec()).collect();
                    for (p, &(i, j)) in pairs.iter().enumerate() {
                        let yp = y.row(p);
                        let yp = yp.as_slice().unwrap();
                        let (oi, oj) = (&occ_s[i], &occ_s[j]);
                        let ij = &mut values[(i * n + j) * m..(i * n + j + 1) * m];
                        for c in 0..m {
                            ij[c] += oi[c] * yp[c];
                        }
                        let ji = &mut values[(j * n + i) * m..(j * n + i + 1) * m];
                        for c in 0..m {
                            ji[c] += oj[c] * yp[c];
                        }
                    }
                }
                if !last {
                    for i in 0..n {
                        if !active[i] {
                            continue;
                        }
                        let weights = Array2::from_shape_fn((m, a_n), |(c, a)| occ[i][[c, s]] * pi_s[[c, a]]);
                        let contrib = weights.dot(&rows[i]);
                        next[i] += &contrib;
                    }
                }
            }
            if !last {
                occ = next;
            }
        }
        Ok(DeltaTable {
            members: members.to_vec(),
            table: Table::Listed { values, candidates: m },
        })
    }

    /// Exact maximum over all policies for every ordered pair.
    pub fn exact(class: &ModelClass, members: &[usize], reference: &Policy) -> Result<Self> {
        let n = members.len();
        let frozen: Vec<_> = members
            .par_iter()
            .map(|&i| freeze(class.get(i).as_ref(), reference).map(|x| x.1))
            .collect::<Result<_>>()?;
        let mut values = Array2::zeros((n, n));
        let mut policies = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let costs = discrepancy_costs(&frozen[i], &frozen[j]);
                let (p, v) = frozen[i].optimize_with(&costs, None);
                values[[i, j]] = v;
                policies[i][j] = Some(p);
            }
        }
        Ok(DeltaTable {
            members: members.to_vec(),
            table: Table::Exact { values, policies },
        })
    }

    /// Value for candidate `c` and member positions `(i, j)` of a listed table.
    pub fn value(&self, c: usize, i: usize, j: usize) -> f64 {
        let n = self.members.len();
        match &self.table {
            Table::Listed { values, candidates } => values[(i * n + j) * candidates + c],
            Table::Exact { values, .. } => values[[i, j]],
        }
    }

    /// Largest value over alive candidates and ordered pairs of alive
    /// member positions, lowest `(candidate, i, j)` on ties.
    pub fn argmax(&self, alive: &[bool], candidate_alive: &[bool]) -> DeltaArgmax {
        let n = self.members.len();
        let mut best = DeltaArgmax {
            value: 0.0,
            candidate: None,
            policy: None,
            pair: None,
        };
        let mut found = false;
        match &self.table {
            Table::Listed { values, candidates } => {
                for c in 0..*candidates {
                    if !candidate_alive[c] {
                        continue;
                    }
                    if best.candidate.is_none() {
                        best.candidate = Some(c);
                    }
                    for i in (0..n).filter(|&i| alive[i]) {
                        for j in (0..n).filter(|&j| alive[j] && j != i) {
                            let v = values[(i * n + j) * candidates + c];
                            if !found || v > best.value {
                                found = true;
                                best.value = v;
                                best.candidate = Some(c);
                                best.pair = Some((i, j));
                            }
                        }
                    }
                }
            }
            Table::Exact { values, policies } => {
                for i in (0..n).filter(|&i| alive[i]) {
                    for j in (0..n).filter(|&j| alive[j] && j != i) {
                        let v = values[[i, j]];
                        if !found || v > best.value {
                            found = true;
                            best.value = v;
                            best.pair = Some((i, j));
                            best.policy = policies[i][j].clone();
                        }
                    }
                }
            }
        }
        best
    }
}
