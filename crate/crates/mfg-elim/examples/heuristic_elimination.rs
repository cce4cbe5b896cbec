//! Model elimination on a small linear class, logging the per-round trace.

use std::sync::Arc;

use mfg_elim::elim::{mebp_heuristic, ElimConfig, GapMonitor};
use mfg_elim::env::{LinearClass, LinearMfgSpec};
use mfg_elim::ne::{ne_policy_table, NeConfig};
use mfg_elim::sampler::Sampler;
use mfg_elim::{ne_gap, Policy};

fn main() -> mfg_elim::Result<()> {
    let spec = LinearMfgSpec {
        horizon: 2,
        states: 10,
        actions: 4,
        d_phi: 3,
        d_psi: 3,
        class_size: 20,
        beta_max: 0.1,
        seed: 3,
    };
    let class = LinearClass::generate(&spec)?.build()?;
    let truth = Arc::clone(class.true_model().expect("generated classes mark the true model"));
    let ne = NeConfig {
        alpha: 0.05,
        tol: 5e-4,
        max_iter: 5000,
    };
    let policies: Vec<Policy> = ne_policy_table(&class, &ne)?.into_iter().map(|r| r.policy).collect();
    let gaps = policies.iter().map(|p| ne_gap(truth.as_ref(), p)).collect::<Result<Vec<_>, _>>()?;
    let monitor = GapMonitor::new(gaps);
    let cfg = ElimConfig::from_target(5e-3, class.lipschitz().reward, spec.horizon, 1e-3, 50);
    let mut sampler = Sampler::new(Arc::clone(&truth), 11);
    let out = mebp_heuristic(&class, &cfg, &mut sampler, &policies, Some(&monitor))?;
    for row in &out.trace.rows {
        println!(
            "round {:2} {:?} iter {:3} models {:3} trajectories {:5} norm gap {:.3}",
            row.round, row.branch, row.inner_iter, row.models_remaining, row.trajectories_total, row.norm_max_ne_gap
        );
    }
    let gap = out.policy.as_ref().map(|p| ne_gap(truth.as_ref(), p)).transpose()?;
    println!(
        "{:?}: returned model {:?} (true {:?}), gap {:?}, {} trajectories",
        out.status,
        out.returned_model,
        class.true_index(),
        gap,
        out.trajectories
    );
    Ok(())
}
