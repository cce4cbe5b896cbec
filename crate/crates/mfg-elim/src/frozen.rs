//! A finite-horizon MDP obtained by freezing a mean-field model at a fixed
//! density flow. All exact value computations run on this type.

use std::ops::Range;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};

use crate::model::{LowRankKernel, Shape};
use crate::policy::Policy;

/// One step's transition matrix, either dense or as factors whose dense
/// form is built only when rows are asked for.
#[derive(Clone, Debug)]
pub struct StepKernel {
    factors: Option<LowRankKernel>,
    dense: OnceLock<Array2<f64>>,
}

impl StepKernel {
    pub fn dense(kernel: Array2<f64>) -> Self {
        StepKernel {
            factors: None,
            dense: OnceLock::from(kernel),
        }
    }

    pub fn low_rank(factors: LowRankKernel) -> Self {
        StepKernel {
            factors: Some(factors),
            dense: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        match &self.factors {
            Some(f) => (f.left.nrows(), f.right.ncols()),
            None => self.matrix().dim(),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        self.dense.get_or_init(|| self.factors.as_ref().expect("kernel has a form").dense())
    }

    /// `P v` over all pairs.
    pub fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        match &self.factors {
            Some(f) => f.left.dot(&f.right.dot(v)),
            None => self.matrix().dot(v),
        }
    }

    /// `d'(s') = sum_{s,a} d(s) pi(a|s) P(s'|s,a)`.
    pub fn push(&self, a_n: usize, d: &Array1<f64>, pi: &Array2<f64>) -> Array1<f64> {
        match &self.factors {
            Some(f) => {
                let mut z = Array1::zeros(f.left.ncols());
                for (i, row) in f.left.rows().into_iter().enumerate() {
                    let w = d[i / a_n] * pi[[i / a_n, i % a_n]];
                    if w != 0.0 {
                        z.scaled_add(w, &row);
                    }
                }
                z.dot(&f.right)
            }
            None => push(a_n, d, pi, self.matrix()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrozenMdp {
    shape: Shape,
    initial: Array1<f64>,
    kernels: Vec<StepKernel>,
    rewards: Vec<Array1<f64>>,
}

impl FrozenMdp {
    /// `kernels[h]` is `(S*A) x S`, `rewards[h]` has length `S*A`.
    pub fn new(initial: Array1<f64>, kernels: Vec<Array2<f64>>, rewards: Vec<Array1<f64>>) -> Self {
        Self::from_steps(initial, kernels.into_iter().map(StepKernel::dense).collect(), rewards)
    }

    pub fn from_steps(initial: Array1<f64>, kernels: Vec<StepKernel>, rewards: Vec<Array1<f64>>) -> Self {
        let states = initial.len();
        let horizon = kernels.len();
        assert!(horizon > 0 && rewards.len() == horizon);
        let pairs = kernels[0].dim().0;
        assert!(states > 0 && pairs % states == 0);
        for (k, r) in kernels.iter().zip(&rewards) {
            assert_eq!(k.dim(), (pairs, states));
            assert_eq!(r.len(), pairs);
        }
        FrozenMdp {
            shape: Shape::new(horizon, states, pairs / states),
            initial,
            kernels,
            rewards,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn initial(&self) -> &Array1<f64> {
        &self.initial
    }

    pub fn kernel(&self, h: usize) -> &Array2<f64> {
        self.kernels[h].matrix()
    }

    pub fn step_kernel(&self, h: usize) -> &StepKernel {
        &self.kernels[h]
    }

    pub fn reward(&self, h: usize) -> &Array1<f64> {
        &self.rewards[h]
    }

    pub fn rewards(&self) -> &[Array1<f64>] {
        &self.rewards
    }

    fn q_values(&self, h: usize, costs: &Array1<f64>, next: Option<&Array1<f64>>) -> Array1<f64> {
        match next {
            Some(v) => costs + &self.kernels[h].apply(v),
            None => costs.clone(),
        }
    }

    /// Expected total of `costs` (per step, flat pairs) when following `policy`.
    pub fn evaluate_with(&self, policy: &Policy, costs: &[Array1<f64>]) -> f64 {
        let a_n = self.shape.actions;
        let mut next: Option<Array1<f64>> = None;
        for h in (0..self.shape.horizon).rev() {
            let q = self.q_values(h, &costs[h], next.as_ref());
            let pi = policy.step(h);
            let v = Array1::from_shape_fn(self.shape.states, |s| {
                (0..a_n).map(|a| pi[[s, a]] * q[s * a_n + a]).sum::<f64>()
            });
            next = Some(v);
        }
        next.unwrap().dot(&self.initial)
    }

    /// `J(policy)` under the frozen rewards.
    pub fn evaluate(&self, policy: &Policy) -> f64 {
        self.evaluate_with(policy, &self.rewards)
    }

    /// Maximizes the expected total of `costs` by backward induction. Actions
    /// at state `s` are restricted to `allowed(s)` when given. Ties go to the
    /// lowest action index.
    pub fn optimize_with(
        &self,
        costs: &[Array1<f64>],
        allowed: Option<&dyn Fn(usize) -> Range<usize>>,
    ) -> (Policy, f64) {
        let (s_n, a_n) = (self.shape.states, self.shape.actions);
        let mut steps = vec![Array2::zeros((s_n, a_n)); self.shape.horizon];
        let mut next: Option<Array1<f64>> = None;
        for h in (0..self.shape.horizon).rev() {
            let q = self.q_values(h, &costs[h], next.as_ref());
            let mut v = Array1::zeros(s_n);
            for s in 0..s_n {
                let range = allowed.map_or(0..a_n, |f| f(s));
                let mut best_a = range.start;
                let mut best = q[s * a_n + best_a];
                for a in range.start + 1..range.end {
                    if q[s * a_n + a] > best {
                        best = q[s * a_n + a];
                        best_a = a;
                    }
                }
                steps[h][[s, best_a]] = 1.0;
                v[s] = best;
            }
            next = Some(v);
        }
        let value = next.unwrap().dot(&self.initial);
        (Policy::from_steps_unchecked(steps), value)
    }

    /// Deterministic best response and its value.
    pub fn best_response(&self) -> (Policy, f64) {
        self.optimize_with(&self.rewards, None)
    }

    /// `max_pi J(pi) - J(policy)`; may be slightly negative from rounding.
    pub fn gap(&self, policy: &Policy) -> f64 {
        self.best_response().1 - self.evaluate(policy)
    }

    /// State distributions `d_0 .. d_{H-1}` under `policy`.
    pub fn state_distributions(&self, policy: &Policy) -> Vec<Array1<f64>> {
        let mut out = Vec::with_capacity(self.shape.horizon);
        let mut d = self.initial.clone();
        for h in 0..self.shape.horizon {
            let next = if h + 1 < self.shape.horizon {
                Some(self.push_forward(h, &d, policy))
            } else {
                None
            };
            out.push(d);
            match next {
                Some(n) => d = n,
                None => break,
            }
        }
        out
    }

    /// `d'(s') = sum_{s,a} d(s) pi_h(a|s) P_h(s'|s,a)`.
    pub fn push_forward(&self, h: usize, d: &Array1<f64>, policy: &Policy) -> Array1<f64> {
        self.kernels[h].push(self.shape.actions, d, policy.step(h))
    }
}

/// Row-wise accumulation; a transposed mat-vec would walk the kernel by column.
pub(crate) fn push(a_n: usize, d: &Array1<f64>, pi: &Array2<f64>, kernel: &Array2<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(kernel.ncols());
    for (i, row) in kernel.rows().into_iter().enumerate() {
        let w = d[i / a_n] * pi[[i / a_n, i % a_n]];
        if w != 0.0 {
            out.scaled_add(w, &row);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> FrozenMdp {
        // Two states, two actions; action 1 moves to state 1 which pays.
        let k = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = Array1::from(vec![0.0, 0.0, 0.5, 0.5]);
        FrozenMdp::new(Array1::from(vec![1.0, 0.0]), vec![k.clone(), k], vec![r.clone(), r])
    }

    #[test]
    fn best_response_moves_to_paying_state() {
        let mdp = chain();
        let (pi, v) = mdp.best_response();
        assert_eq!(v, 0.5);
        assert_eq!(pi.prob(0, 0, 1), 1.0);
        assert!((mdp.evaluate(&pi) - v).abs() < 1e-15);
    }

    #[test]
    fn ties_pick_lowest_action() {
        let mdp = chain();
        let (pi, _) = mdp.best_response();
        // At the last step every action pays the same from state 1.
        assert_eq!(pi.prob(1, 1, 0), 1.0);
    }

    #[test]
    fn distributions_stay_on_simplex() {
        let mdp = chain();
        let pi = Policy::uniform(mdp.shape());
        for d in mdp.state_distributions(&pi) {
            assert!((d.sum() - 1.0).abs() < 1e-12);
        }
    }
}
