//! Likelihood-based model elimination and the two drivers built on it: the
//! heuristic that only uses members' NE policies, and the exact toy-scale
//! version with bridge policies.

mod delta;
mod exact;
mod heuristic;
mod model_elim;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::policy::Policy;

pub use delta::{discrepancy_value, DeltaTable};
pub use exact::{mebp_exact, EXACT_LIMITS};
pub use heuristic::{lower_bound_distances, mebp_heuristic, DriverOutcome, DriverStatus};
pub use model_elim::{model_elim, Candidate, ElimCall, ElimOutcome, LOG_ZERO};
pub use trace::{Branch, ElimTrace, GapMonitor, RoundRecord, TraceRow, NORM_GAP_FLOOR};

/// How the adversarial policy of each elimination step is searched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateMode {
    /// NE policies of the current survivors plus the reference policy.
    NeSet,
    /// Members of a policy cover with the given radius.
    EpsCover { eps_bar: f64 },
    /// A fixed list (the reference policy is always added).
    Explicit(Vec<Policy>),
    /// All policies, maximized exactly by dynamic programming.
    AllPolicies,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElimConfig {
    /// Neighborhood radius.
    pub eps0: f64,
    /// Elimination accuracy.
    pub eps_tilde: f64,
    /// Overall confidence.
    pub delta: f64,
    /// Maximum elimination iterations per call.
    pub max_iter: usize,
    /// Target NE accuracy.
    pub eps: f64,
    pub mode: CandidateMode,
}

impl ElimConfig {
    /// Defaults tied to the target accuracy:
    /// `eps0 = eps / (8 (1 + L_r H) (H + 4))` and `eps_tilde = eps0 / 6`.
    pub fn from_target(eps: f64, reward_lipschitz: f64, horizon: usize, delta: f64, max_iter: usize) -> Self {
        let h = horizon as f64;
        let eps0 = eps / (8.0 * (1.0 + reward_lipschitz * h) * (h + 4.0));
        ElimConfig {
            eps0,
            eps_tilde: eps0 / 6.0,
            delta,
            max_iter,
            eps,
            mode: CandidateMode::NeSet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tilde > 0.0 && self.eps_tilde < self.eps0) {
            return config("need 0 < eps_tilde < eps0");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return config("delta must lie in (0, 1)");
        }
        if self.max_iter == 0 {
            return config("max_iter must be at least 1");
        }
        if !(self.eps > 0.0) {
            return config("eps must be positive");
        }
        Ok(())
    }

    /// `delta / (log2 |M| + 1)`, the per-call confidence of the drivers.
    pub fn per_call_delta(&self, class_size: usize) -> f64 {
        self.delta / ((class_size as f64).log2() + 1.0)
    }

    /// `ceil(log2 |M|) + 8`.
    pub fn round_cap(class_size: usize) -> usize {
        (class_size as f64).log2().ceil() as usize + 8
    }
}
