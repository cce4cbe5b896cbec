//! Paired Monte Carlo estimate of what one agent of a finite two-type
//! population gains by leaving the equilibrium for the uniform policy.

use mfg_elim::multitype::{
    lift, lift_policy, lower_policy, mtsag_simulate, MultiTypeModel, TabularMultiTypeClass, TabularMultiTypeSpec,
};
use mfg_elim::ne::{solve_constrained_ne, NeConfig};
use mfg_elim::{Policy, Shape};
use std::sync::Arc;

fn main() -> mfg_elim::Result<()> {
    let spec = TabularMultiTypeSpec {
        horizon: 2,
        states: vec![2, 2],
        actions: vec![2, 2],
        density_sensitivity: 0.8,
        seed: 6,
    };
    let mt: Arc<dyn MultiTypeModel> = Arc::new(TabularMultiTypeClass::generate(&spec)?.model());
    let lifted = lift(Arc::clone(&mt));
    let cfg = NeConfig {
        alpha: 0.05,
        tol: 1e-5,
        max_iter: 5000,
    };
    let uniform: Vec<Policy> = (0..mt.type_count())
        .map(|w| {
            let (s, a) = mt.type_shape(w);
            Policy::uniform(Shape::new(spec.horizon, s, a))
        })
        .collect();
    let start = lift_policy(&lifted, &uniform)?;
    let joint = lower_policy(&lifted, &solve_constrained_ne(&lifted, &cfg, &start)?.policy)?;
    let (s, a) = mt.type_shape(0);
    let deviation = Policy::uniform(Shape::new(spec.horizon, s, a));
    for n in [5, 20, 80] {
        let r = mtsag_simulate(mt.as_ref(), &[n, n], &joint, 0, &deviation, 2000, 9)?;
        println!("N = {:4}: gain {:+.4} +/- {:.4}", r.n_total, r.mean_gain, r.stderr);
    }
    Ok(())
}
