use ndarray::Array2;

use crate::env::{simplex_grid, simplex_grid_len};
use crate::error::{config, Result};
use crate::model::Shape;
use crate::policy::Policy;

/// Largest cover that will be enumerated.
pub const COVER_LIMIT: u128 = 1_000_000;

/// Every policy whose rows are grid points `(N_1/N, .., N_A/N)` with
/// `N = ceil(2A / eps_bar)`.
#[derive(Clone, Debug)]
pub struct PolicyCover {
    pub eps_bar: f64,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub policies: Vec<Policy>,
}

impl PolicyCover {
    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    /// Grid row closest to `row` in l1, lowest index on ties.
    pub fn nearest_row(&self, row: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, r) in self.rows.iter().enumerate() {
            let d: f64 = r.iter().zip(row).map(|(x, y)| (x - y).abs()).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

pub fn policy_cover(eps_bar: f64, states: usize, actions: usize, horizon: usize) -> Result<PolicyCover> {
    if !(eps_bar > 0.0) {
        return config("eps_bar must be positive");
    }
    if states == 0 || actions == 0 || horizon == 0 {
        return config("cover needs positive S, A, H");
    }
    let n = (2.0 * actions as f64 / eps_bar).ceil() as usize;
    let per_row = simplex_grid_len(actions, n);
    let slots = (states * horizon) as u32;
    let count = per_row.checked_pow(slots).unwrap_or(u128::MAX);
    if count > COVER_LIMIT {
        return config(format!("policy cover would have {count} members (limit {COVER_LIMIT})"));
    }
    let rows: Vec<Vec<f64>> = simplex_grid(actions, n)
        .into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / n as f64).collect())
        .collect();
    let shape = Shape::new(horizon, states, actions);
    let r = rows.len();
    let policies = (0..count as usize)
        .map(|mut idx| {
            // Mixed-radix digits, the last (h, s) slot varying fastest.
            let mut digits = vec![0; slots as usize];
            for d in digits.iter_mut().rev() {
                *d = idx % r;
                idx /= r;
            }
            let steps = (0..shape.horizon)
                .map(|h| {
                    let mut m = Array2::zeros((shape.states, shape.actions));
                    for s in 0..shape.states {
                        let row = &rows[digits[h * shape.states + s]];
                        for a in 0..shape.actions {
                            m[[s, a]] = row[a];
                        }
                    }
                    m
                })
                .collect();
            Policy::from_steps_unchecked(steps)
        })
        .collect();
    Ok(PolicyCover {
        eps_bar,
        n,
        rows,
        policies,
    })
}
