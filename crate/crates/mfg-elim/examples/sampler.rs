//! Draw trajectories from the true model and compare first-step next-state
//! frequencies with the exact kernel.

use std::sync::Arc;

use mfg_elim::env::gen_tabular_class;
use mfg_elim::sampler::Sampler;
use mfg_elim::Policy;

fn main() -> mfg_elim::Result<()> {
    let class = gen_tabular_class(2, 2, 2, 1, 0.5, 8)?;
    let model = Arc::clone(class.get(0));
    let shape = class.shape();
    let eval = Policy::uniform(shape);
    let mut sampler = Sampler::new(Arc::clone(&model), 42);
    let n = 50_000;
    let mut counts = vec![[0u64; 2]; shape.pairs()];
    for _ in 0..n {
        let t = sampler.query(&eval, &eval)?;
        let first = &t.steps[0];
        counts[first.s * shape.actions + first.a][first.s_next] += 1;
    }
    let kernel = model.kernel(0, model.initial_density());
    for (row, c) in counts.iter().enumerate() {
        let total = (c[0] + c[1]) as f64;
        println!(
            "(s={}, a={}): empirical {:.4} exact {:.4} over {} draws",
            row / shape.actions,
            row % shape.actions,
            c[0] as f64 / total,
            kernel[[row, 0]],
            total
        );
    }
    println!("{} trajectories drawn", sampler.trajectories());
    Ok(())
}
