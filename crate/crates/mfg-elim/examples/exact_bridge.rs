//! The exact driver on a toy class: policy cover, central models and the
//! bridge policy when no single cover member splits the survivors.

use std::sync::Arc;

use mfg_elim::elim::{mebp_exact, ElimConfig};
use mfg_elim::env::gen_tabular_class;
use mfg_elim::ne::NeConfig;
use mfg_elim::ne_gap;
use mfg_elim::sampler::Sampler;

fn main() -> mfg_elim::Result<()> {
    let class = gen_tabular_class(2, 2, 2, 5, 0.5, 7)?;
    let truth = Arc::clone(class.true_model().expect("generated classes mark the true model"));
    let cfg = ElimConfig::from_target(0.2, class.lipschitz().reward, 2, 0.05, 20);
    let ne = NeConfig {
        alpha: 0.05,
        tol: 1e-4,
        max_iter: 5000,
    };
    let mut sampler = Sampler::new(Arc::clone(&truth), 5);
    let out = mebp_exact(&class, &cfg, 0.5, &mut sampler, &ne)?;
    for row in &out.trace.rows {
        println!("round {} {:?}: {} models left", row.round, row.branch, row.models_remaining);
    }
    if let Some(p) = &out.policy {
        println!("{:?}: gap in the true model {:.4e}", out.status, ne_gap(truth.as_ref(), p)?);
    }
    println!("survivors {:?}, {} trajectories", out.survivors, out.trajectories);
    Ok(())
}
