//! Lift a two-type game into one population, solve the constrained
//! equilibrium and read the per-type gaps back.

use std::sync::Arc;

use mfg_elim::multitype::{
    constrained_ne_gap, lift, lift_policy, lower_policy, typed_ne_gaps, MultiTypeModel, TabularMultiTypeClass,
    TabularMultiTypeSpec,
};
use mfg_elim::ne::{solve_constrained_ne, NeConfig};
use mfg_elim::{MeanFieldModel, Policy, Shape};

fn main() -> mfg_elim::Result<()> {
    let spec = TabularMultiTypeSpec {
        horizon: 2,
        states: vec![2, 3],
        actions: vec![2, 2],
        density_sensitivity: 0.5,
        seed: 4,
    };
    let mt: Arc<dyn MultiTypeModel> = Arc::new(TabularMultiTypeClass::generate(&spec)?.model());
    let lifted = lift(Arc::clone(&mt));
    println!("lifted shape {:?}", lifted.shape());
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
    let report = solve_constrained_ne(&lifted, &cfg, &start)?;
    let joint = lower_policy(&lifted, &report.policy)?;
    println!("constrained gap {:.3e}", constrained_ne_gap(&lifted, &report.policy)?);
    for (w, g) in typed_ne_gaps(mt.as_ref(), &joint)?.iter().enumerate() {
        println!("type {w} gap {g:.3e}");
    }
    Ok(())
}
