//! Standard versus partial eluder lengths on the hard instance.

use mfg_elim::env::{HardClass, HardInstanceSpec};
use mfg_elim::pmbed::{greedy_standard_sequence, pmbed_estimate, reverify, PmbedOptions};

fn main() -> mfg_elim::Result<()> {
    let spec = HardInstanceSpec {
        d: 3,
        eps: 0.04,
        lipschitz: 1.0,
        zeta: None,
        n_models: 20,
    };
    let hard = HardClass::generate(&spec)?;
    let class = hard.build()?;
    let standard = greedy_standard_sequence(&class, 1, spec.eps, &hard.grid())?;
    println!(
        "standard: length {} certified {}",
        standard.length,
        reverify(&class, &standard)?
    );
    for type_two in [false, true] {
        let opts = PmbedOptions {
            policy_samples: 20,
            seed: 1,
            type_two,
            ..PmbedOptions::default()
        };
        let est = pmbed_estimate(&class, spec.eps, &opts)?;
        println!(
            "partial (type {}): {} over {} policies, S*A = {}",
            if type_two { "II" } else { "I" },
            est.value,
            est.policies_tried,
            class.shape().pairs()
        );
    }
    Ok(())
}
