//! Multi-type mean-field models, their lift to a single-type model with
//! type-constrained policies, typed NE gaps and a finite-population
//! simulator.

mod gaps;
mod lift;
mod mtsag;
mod tabular;

use std::fmt;

use crate::model::Lipschitz;

pub use gaps::{typed_flow, typed_frozen, typed_ne_gaps, typed_return};
pub use lift::{constrained_best_response, constrained_ne_gap, lift, lift_policy, lower_policy, LiftedModel};
pub use mtsag::{mtsag_simulate, MtsagReport};
pub use tabular::{TabularMultiType, TabularMultiTypeClass, TabularMultiTypeSpec, TypeParams};

/// `W` typed components sharing a horizon and coupled through the tuple of
/// per-type densities. `joint[w]` is the state distribution of type `w`.
pub trait MultiTypeModel: Send + Sync + fmt::Debug {
    fn horizon(&self) -> usize;

    fn type_count(&self) -> usize;

    /// `(S^w, A^w)`.
    fn type_shape(&self, w: usize) -> (usize, usize);

    fn initial(&self, w: usize) -> &[f64];

    fn transition(&self, w: usize, h: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> Vec<f64>;

    fn reward(&self, w: usize, h: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> f64;

    fn lipschitz(&self) -> Lipschitz;
}
