//! Generate one class of each family, write it to disk and read it back.

use mfg_elim::env::{load_class, save_class, GeneratedClass, HardClass, HardInstanceSpec, LinearClass, LinearMfgSpec};
use mfg_elim::env::{TabularClass, TabularSpec};

fn main() -> mfg_elim::Result<()> {
    let linear = LinearClass::generate(&LinearMfgSpec {
        horizon: 3,
        states: 20,
        actions: 5,
        d_phi: 4,
        d_psi: 4,
        class_size: 10,
        beta_max: 0.1,
        seed: 1,
    })?;
    let tabular = TabularClass::generate(&TabularSpec {
        horizon: 2,
        states: 3,
        actions: 2,
        class_size: 6,
        density_sensitivity: 0.5,
        seed: 2,
    })?;
    let hard = HardClass::generate(&HardInstanceSpec {
        d: 3,
        eps: 0.04,
        lipschitz: 1.0,
        zeta: None,
        n_models: 20,
    })?;
    let dir = std::env::temp_dir().join("mfg-elim-example");
    std::fs::create_dir_all(&dir)?;
    for (name, g) in [
        ("linear", GeneratedClass::Linear(linear)),
        ("tabular", GeneratedClass::Tabular(tabular)),
        ("hard", GeneratedClass::Hard(hard)),
    ] {
        let path = dir.join(format!("{name}.mfgclass.json"));
        save_class(&path, &g)?;
        let class = load_class(&path)?.build()?;
        let shape = class.shape();
        println!(
            "{name:8} H={} S={} A={} models={} true={:?} -> {}",
            shape.horizon,
            shape.states,
            shape.actions,
            class.len(),
            class.true_index(),
            path.display()
        );
    }
    Ok(())
}
