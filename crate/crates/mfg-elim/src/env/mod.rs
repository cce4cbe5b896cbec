//! Environment generators: the linear-feature class used in the scaled
//! experiment, random tabular classes, the hard instance family, plus a
//! Lipschitz probe and the on-disk class container.

mod container;
mod hard;
mod linear;
mod probe;
mod reward;
mod tabular;

pub use container::{load_class, save_class, ClassFile, ClassHeader, GeneratedClass, SCHEMA_VERSION};
pub use hard::{gen_hard_instance, HardClass, HardInstanceSpec, HardModel};
pub use linear::{gen_linear_class, LinearClass, LinearMfgSpec, LinearModel};
pub use probe::{lipschitz_probe, ProbeReport};
pub use reward::{DensityReward, RewardParams};
pub use tabular::{gen_tabular_class, TabularClass, TabularModel, TabularSpec};

/// All vectors `n` of `parts` nonnegative integers with `sum(n) = total`, in
/// lexicographic order (so `(0, .., 0, total)` comes first).
pub fn simplex_grid(parts: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            rec(parts - 1, total - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(parts, total, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Number of points of `simplex_grid(parts, total)`, saturating.
pub fn simplex_grid_len(parts: usize, total: usize) -> u128 {
    // C(total + parts - 1, parts - 1)
    let n = (total + parts - 1) as u128;
    let k = (parts - 1).min(total) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}
