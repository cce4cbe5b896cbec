//! Fixed-point iteration for a mean-field equilibrium on one tabular model.

use mfg_elim::env::gen_tabular_class;
use mfg_elim::ne::solve_ne;
use mfg_elim::{best_response, ne_gap, Policy};

fn main() -> mfg_elim::Result<()> {
    let class = gen_tabular_class(3, 4, 3, 1, 0.8, 5)?;
    let model = class.get(0);
    let start = Policy::uniform(class.shape());
    println!("uniform policy gap: {:.4e}", ne_gap(model.as_ref(), &start)?);
    let report = solve_ne(model.as_ref(), 0.1, 1e-6, 5000, &start)?;
    println!(
        "after {} updates: gap {:.4e}, converged {}",
        report.iterations, report.gap, report.converged
    );
    for (k, g) in report.gap_history.iter().enumerate().step_by(report.iterations.div_ceil(10).max(1)) {
        println!("  iter {k:4}  gap {g:.4e}");
    }
    let (_, value) = best_response(model.as_ref(), &report.policy)?;
    println!("best-response value against the equilibrium: {value:.6}");
    Ok(())
}
