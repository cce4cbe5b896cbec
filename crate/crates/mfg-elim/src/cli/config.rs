use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Every tunable of the command-line runs. Unset fields fall back to the
/// preset, then to the built-in defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: Option<usize>,
    pub states: Option<usize>,
    pub actions: Option<usize>,
    pub d_phi: Option<usize>,
    pub d_psi: Option<usize>,
    pub class_size: Option<usize>,
    pub beta_max: Option<f64>,
    pub density_sensitivity: Option<f64>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub ne_max_iter: Option<usize>,
    pub eps: Option<f64>,
    pub eps0: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub delta: Option<f64>,
    pub elim_iter: Option<usize>,
    pub eps_bar: Option<f64>,
    pub hard_d: Option<usize>,
    pub hard_eps: Option<f64>,
    pub hard_lipschitz: Option<f64>,
    pub hard_models: Option<usize>,
    pub type_states: Option<Vec<usize>>,
    pub type_actions: Option<Vec<usize>>,
    pub populations: Option<Vec<usize>>,
    pub episodes: Option<usize>,
    pub policy_samples: Option<usize>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub d_phi: usize,
    pub d_psi: usize,
    pub class_size: usize,
    pub beta_max: f64,
    pub density_sensitivity: f64,
    pub alpha: f64,
    pub tol: f64,
    pub ne_max_iter: usize,
    pub eps: f64,
    pub eps0: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub delta: f64,
    pub elim_iter: usize,
    pub eps_bar: f64,
    pub hard_d: usize,
    pub hard_eps: f64,
    pub hard_lipschitz: f64,
    pub hard_models: usize,
    pub type_states: Vec<usize>,
    pub type_actions: Vec<usize>,
    pub populations: Vec<usize>,
    pub episodes: usize,
    pub policy_samples: usize,
}

impl Default for Resolved {
    fn default() -> Self {
        Resolved {
            horizon: 3,
            states: 10,
            actions: 5,
            d_phi: 5,
            d_psi: 5,
            class_size: 20,
            beta_max: 0.1,
            density_sensitivity: 0.5,
            alpha: 0.02,
            tol: 5e-4,
            ne_max_iter: 5000,
            eps: 1e-2,
            eps0: None,
            eps_tilde: None,
            delta: 1e-3,
            elim_iter: 50,
            eps_bar: 1.0,
            hard_d: 3,
            hard_eps: 0.04,
            hard_lipschitz: 1.0,
            hard_models: 20,
            type_states: vec![3, 2],
            type_actions: vec![2, 2],
            populations: vec![50, 100, 200],
            episodes: 2000,
            policy_samples: 8,
        }
    }
}

macro_rules! overlay {
    ($dst:expr, $src:expr, [$($f:ident),*], [$($o:ident),*]) => {
        $(if let Some(v) = $src.$f.clone() { $dst.$f = v; })*
        $(if $src.$o.is_some() { $dst.$o = $src.$o; })*
    };
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "appxJ" | "appxj" => Ok(RunConfig {
                horizon: Some(3),
                states: Some(100),
                actions: Some(50),
                d_phi: Some(5),
                d_psi: Some(5),
                class_size: Some(200),
                beta_max: Some(0.1),
                alpha: Some(0.02),
                tol: Some(5e-4),
                eps: Some(1e-3),
                elim_iter: Some(50),
                delta: Some(1e-3),
                ..RunConfig::default()
            }),
            "toy" => Ok(RunConfig {
                horizon: Some(2),
                states: Some(3),
                actions: Some(2),
                class_size: Some(6),
                ..RunConfig::default()
            }),
            other => config(format!("unknown preset '{other}' (known: appxJ, toy)")),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn apply(&self, base: &mut Resolved) {
        overlay!(
            base,
            self,
            [
                horizon,
                states,
                actions,
                d_phi,
                d_psi,
                class_size,
                beta_max,
                density_sensitivity,
                alpha,
                tol,
                ne_max_iter,
                eps,
                delta,
                elim_iter,
                eps_bar,
                hard_d,
                hard_eps,
                hard_lipschitz,
                hard_models,
                type_states,
                type_actions,
                populations,
                episodes,
                policy_samples
            ],
            [eps0, eps_tilde]
        );
    }
}

impl Resolved {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.states == 0 || self.actions == 0 || self.class_size == 0 {
            return config("H, S, A and the class size must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return config("alpha must lie in (0, 1]");
        }
        if !(self.tol > 0.0 && self.eps > 0.0) {
            return config("tol and eps must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return config("delta must lie in (0, 1)");
        }
        if self.elim_iter == 0 {
            return config("elim_iter must be at least 1");
        }
        if self.type_states.len() != self.type_actions.len() || self.type_states.is_empty() {
            return config("type_states and type_actions must be nonempty and of equal length");
        }
        if self.episodes == 0 {
            return config("episodes must be positive");
        }
        Ok(())
    }
}
