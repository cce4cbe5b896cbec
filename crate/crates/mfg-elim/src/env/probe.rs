use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::model::{Lipschitz, MeanFieldModel};
use crate::rng::stream_rng;

/// Largest observed ratios next to the declared constants.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub transition: f64,
    pub reward: f64,
    pub declared: Lipschitz,
}

fn flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Samples `pairs` density pairs from the flat Dirichlet distribution,
/// each with a random `(h, s, a)`, and reports the largest
/// `||dP||_1 / ||dmu||_1` and `|dr| / ||dmu||_1`.
pub fn lipschitz_probe(model: &dyn MeanFieldModel, pairs: usize, seed: u64) -> ProbeReport {
    let shape = model.shape();
    let mut rng = stream_rng(seed, 0x9b0e);
    let (mut t_max, mut r_max) = (0.0f64, 0.0f64);
    for _ in 0..pairs {
        let mu = flat_dirichlet(shape.states, &mut rng);
        let nu = flat_dirichlet(shape.states, &mut rng);
        let h = rng.random_range(0..shape.horizon);
        let s = rng.random_range(0..shape.states);
        let a = rng.random_range(0..shape.actions);
        let dmu: f64 = mu.iter().zip(&nu).map(|(x, y)| (x - y).abs()).sum();
        if dmu <= 0.0 {
            continue;
        }
        let p = model.transition(h, s, a, &mu);
        let q = model.transition(h, s, a, &nu);
        let dp: f64 = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum();
        let dr = (model.reward(h, s, a, &mu) - model.reward(h, s, a, &nu)).abs();
        t_max = t_max.max(dp / dmu);
        r_max = r_max.max(dr / dmu);
    }
    ProbeReport {
        transition: t_max,
        reward: r_max,
        declared: model.lipschitz(),
    }
}
