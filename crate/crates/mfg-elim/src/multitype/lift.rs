use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::MultiTypeModel;
use crate::engine::freeze;
use crate::error::{config, Error, Result};
use crate::model::{Lipschitz, MeanFieldModel, Shape};
use crate::policy::Policy;

/// Single-type model over type-tagged states and actions. Types are laid out
/// as consecutive blocks; `state_offsets[w]..state_offsets[w+1]` are the
/// lifted states of type `w`, likewise for actions.
#[derive(Debug, Clone)]
pub struct LiftedModel {
    mt: Arc<dyn MultiTypeModel>,
    pub state_offsets: Vec<usize>,
    pub action_offsets: Vec<usize>,
    initial: Vec<f64>,
}

pub fn lift(mt: Arc<dyn MultiTypeModel>) -> LiftedModel {
    let w_n = mt.type_count();
    let mut state_offsets = vec![0];
    let mut action_offsets = vec![0];
    for w in 0..w_n {
        let (s, a) = mt.type_shape(w);
        state_offsets.push(state_offsets[w] + s);
        action_offsets.push(action_offsets[w] + a);
    }
    let initial = (0..w_n)
        .flat_map(|w| mt.initial(w).iter().map(|p| p / w_n as f64).collect::<Vec<_>>())
        .collect();
    LiftedModel {
        mt,
        state_offsets,
        action_offsets,
        initial,
    }
}

fn block_of(offsets: &[usize], i: usize) -> (usize, usize) {
    let w = offsets.partition_point(|&o| o <= i) - 1;
    (w, i - offsets[w])
}

impl LiftedModel {
    pub fn inner(&self) -> &Arc<dyn MultiTypeModel> {
        &self.mt
    }

    pub fn type_count(&self) -> usize {
        self.mt.type_count()
    }

    /// `(type, local index)` of a lifted state.
    pub fn state_type(&self, s: usize) -> (usize, usize) {
        block_of(&self.state_offsets, s)
    }

    /// `(type, local index)` of a lifted action.
    pub fn action_type(&self, a: usize) -> (usize, usize) {
        block_of(&self.action_offsets, a)
    }

    /// Lifted actions allowed at lifted state `s`.
    pub fn allowed_actions(&self, s: usize) -> std::ops::Range<usize> {
        let (w, _) = self.state_type(s);
        self.action_offsets[w]..self.action_offsets[w + 1]
    }

    /// Per-type densities recovered from a lifted density, each block
    /// renormalized by its own mass (uniform when the block is empty).
    pub fn split_density(&self, density: &[f64]) -> Vec<Vec<f64>> {
        (0..self.type_count())
            .map(|w| {
                let block = &density[self.state_offsets[w]..self.state_offsets[w + 1]];
                let mass: f64 = block.iter().sum();
                if mass > 0.0 {
                    block.iter().map(|x| x / mass).collect()
                } else {
                    vec![1.0 / block.len() as f64; block.len()]
                }
            })
            .collect()
    }

    /// Whether `policy` only uses same-type actions.
    pub fn is_constrained(&self, policy: &Policy) -> bool {
        self.check_constrained(policy).is_ok()
    }

    fn check_constrained(&self, policy: &Policy) -> Result<()> {
        if policy.shape() != self.shape() {
            return config("policy shape does not match the lifted model");
        }
        for (h, m) in policy.steps().iter().enumerate() {
            for s in 0..m.nrows() {
                let ok = self.allowed_actions(s);
                for a in 0..m.ncols() {
                    if !ok.contains(&a) && m[[s, a]] > 0.0 {
                        return Err(Error::InvalidPolicy(format!(
                            "step {h}: lifted state {s} puts mass on cross-type action {a}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl MeanFieldModel for LiftedModel {
    fn shape(&self) -> Shape {
        let w_n = self.type_count();
        Shape::new(self.mt.horizon(), self.state_offsets[w_n], self.action_offsets[w_n])
    }

    fn initial_density(&self) -> &[f64] {
        &self.initial
    }

    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64> {
        let total = self.shape().states;
        let (ws, ls) = self.state_type(s);
        let (wa, la) = self.action_type(a);
        if ws != wa {
            return vec![1.0 / total as f64; total];
        }
        let joint = self.split_density(density);
        let p = self.mt.transition(ws, h, ls, la, &joint);
        let mut out = vec![0.0; total];
        out[self.state_offsets[ws]..self.state_offsets[ws + 1]].copy_from_slice(&p);
        out
    }

    fn reward(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64 {
        let (ws, ls) = self.state_type(s);
        let (wa, la) = self.action_type(a);
        if ws != wa {
            return 0.0;
        }
        self.mt.reward(ws, h, ls, la, &self.split_density(density))
    }

    fn lipschitz(&self) -> Lipschitz {
        // Block renormalization scales density differences by up to W.
        let l = self.mt.lipschitz();
        let w = self.type_count() as f64;
        Lipschitz {
            transition: w * l.transition,
            reward: w * l.reward,
        }
    }

    fn kernel(&self, h: usize, density: &[f64]) -> Array2<f64> {
        let shape = self.shape();
        let joint = self.split_density(density);
        let mut out = Array2::from_elem((shape.pairs(), shape.states), 1.0 / shape.states as f64);
        for s in 0..shape.states {
            let (ws, ls) = self.state_type(s);
            for a in self.allowed_actions(s) {
                let la = a - self.action_offsets[ws];
                let p = self.mt.transition(ws, h, ls, la, &joint);
                let mut row = out.row_mut(s * shape.actions + a);
                row.fill(0.0);
                for (k, x) in p.into_iter().enumerate() {
                    row[self.state_offsets[ws] + k] = x;
                }
            }
        }
        out
    }

    fn reward_table(&self, h: usize, density: &[f64]) -> Array1<f64> {
        let shape = self.shape();
        let joint = self.split_density(density);
        let mut out = Array1::zeros(shape.pairs());
        for s in 0..shape.states {
            let (ws, ls) = self.state_type(s);
            for a in self.allowed_actions(s) {
                out[s * shape.actions + a] = self.mt.reward(ws, h, ls, a - self.action_offsets[ws], &joint);
            }
        }
        out
    }
}

/// Embeds typed policies into a constrained lifted policy.
pub fn lift_policy(lifted: &LiftedModel, typed: &[Policy]) -> Result<Policy> {
    let shape = lifted.shape();
    if typed.len() != lifted.type_count() {
        return config(format!("expected {} typed policies, got {}", lifted.type_count(), typed.len()));
    }
    for (w, p) in typed.iter().enumerate() {
        let (s, a) = lifted.mt.type_shape(w);
        if p.shape() != Shape::new(shape.horizon, s, a) {
            return config(format!("typed policy {w} has shape {:?}", p.shape()));
        }
    }
    let steps = (0..shape.horizon)
        .map(|h| {
            let mut m = Array2::zeros((shape.states, shape.actions));
            for (w, p) in typed.iter().enumerate() {
                let (s0, a0) = (lifted.state_offsets[w], lifted.action_offsets[w]);
                let src = p.step(h);
                for s in 0..src.nrows() {
                    for a in 0..src.ncols() {
                        m[[s0 + s, a0 + a]] = src[[s, a]];
                    }
                }
            }
            m
        })
        .collect();
    Ok(Policy::from_steps_unchecked(steps))
}

/// Inverse of [`lift_policy`]; rejects policies outside the constrained set.
pub fn lower_policy(lifted: &LiftedModel, policy: &Policy) -> Result<Vec<Policy>> {
    lifted.check_constrained(policy)?;
    (0..lifted.type_count())
        .map(|w| {
            let (s0, s1) = (lifted.state_offsets[w], lifted.state_offsets[w + 1]);
            let (a0, a1) = (lifted.action_offsets[w], lifted.action_offsets[w + 1]);
            let steps = policy
                .steps()
                .iter()
                .map(|m| m.slice(ndarray::s![s0..s1, a0..a1]).to_owned())
                .collect();
            Policy::new(steps)
        })
        .collect()
}

/// Best response restricted to same-type actions, and its value.
pub fn constrained_best_response(lifted: &LiftedModel, policy: &Policy) -> Result<(Policy, f64)> {
    lifted.check_constrained(policy)?;
    let (_, mdp) = freeze(lifted, policy)?;
    let allowed = |s: usize| lifted.allowed_actions(s);
    Ok(mdp.optimize_with(mdp.rewards(), Some(&allowed)))
}

/// `max_{pi in constrained set} J(pi; policy) - J(policy; policy)`.
pub fn constrained_ne_gap(lifted: &LiftedModel, policy: &Policy) -> Result<f64> {
    lifted.check_constrained(policy)?;
    let (_, mdp) = freeze(lifted, policy)?;
    let allowed = |s: usize| lifted.allowed_actions(s);
    let best = mdp.optimize_with(mdp.rewards(), Some(&allowed)).1;
    Ok(best - mdp.evaluate(policy))
}
