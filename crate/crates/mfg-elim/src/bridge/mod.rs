//! Policy covers, the bridge model built from central models of cover
//! members, and the bridge policy. Everything here is exponential in
//! `S * H` and meant for toy instances.

mod cover;
mod model;

pub use cover::{policy_cover, PolicyCover, COVER_LIMIT};
pub use model::{bridge_model, bridge_policy, BridgeDiagnostics, BridgeEntry, BridgeModel};
