//! Model-based learning for finite-horizon mean-field games.
//!
//! The crate covers exact evaluation of mean-field models ([`engine`]),
//! synthetic environments ([`env`]), a trajectory oracle ([`sampler`]),
//! NE computation by damped best response ([`ne`]), likelihood-based model
//! elimination ([`elim`]), bridge policies ([`bridge`]), eluder-dimension
//! lower bounds ([`pmbed`]) and multi-type lifting ([`multitype`]).
//!
//! Steps are zero-based everywhere: a horizon-`H` model has steps `0..H`.

pub mod bridge;
pub mod cli;
pub mod elim;
pub mod engine;
pub mod env;
pub mod error;
pub mod frozen;
pub mod model;
pub mod multitype;
pub mod ne;
pub mod pam;
pub mod pmbed;
pub mod policy;
pub mod rng;
pub mod sampler;

pub use engine::{
    best_response, central_model, conditional_model_distance, conditional_return, evolve_density, ne_gap,
    neighborhood,
};
pub use error::{Error, Result};
pub use frozen::FrozenMdp;
pub use model::{DensityFlow, Lipschitz, LowRankKernel, MeanFieldModel, ModelClass, Shape, SharedModel};
pub use policy::{policy_distance, Policy};
