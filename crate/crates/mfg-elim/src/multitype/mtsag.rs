use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MultiTypeModel;
use crate::error::{config, Result};
use crate::model::Shape;
use crate::policy::Policy;
use crate::rng::stream_rng;

/// One row of the MT-SAG results CSV.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MtsagReport {
    #[serde(rename = "N_total")]
    pub n_total: usize,
    pub mean_gain: f64,
    pub stderr: f64,
    pub episodes: usize,
}

fn inverse_cdf(probs: impl IntoIterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        acc += p;
        if p > 0.0 {
            last = i;
        }
        if u < acc {
            return i;
        }
    }
    last
}

struct Uniforms {
    /// `init[w][i]`.
    init: Vec<Vec<f64>>,
    /// `steps[h][w][i] = (action draw, next-state draw)`.
    steps: Vec<Vec<Vec<(f64, f64)>>>,
}

fn draw_uniforms<R: Rng>(rng: &mut R, horizon: usize, populations: &[usize]) -> Uniforms {
    let init = populations.iter().map(|&n| (0..n).map(|_| rng.random()).collect()).collect();
    let steps = (0..horizon)
        .map(|_| {
            populations
                .iter()
                .map(|&n| (0..n).map(|_| (rng.random(), rng.random())).collect())
                .collect()
        })
        .collect();
    Uniforms { init, steps }
}

/// Return of agent 0 of type `focal`, which follows `deviation` if given.
fn run_arm(
    mt: &dyn MultiTypeModel,
    populations: &[usize],
    joint: &[Policy],
    focal: usize,
    deviation: Option<&Policy>,
    u: &Uniforms,
) -> f64 {
    let w_n = mt.type_count();
    let mut states: Vec<Vec<usize>> = (0..w_n)
        .map(|w| u.init[w].iter().map(|&x| inverse_cdf(mt.initial(w).iter().copied(), x)).collect())
        .collect();
    let mut total = 0.0;
    for h in 0..mt.horizon() {
        let empirical: Vec<Vec<f64>> = (0..w_n)
            .map(|w| {
                let mut counts = vec![0.0; mt.type_shape(w).0];
                for &s in &states[w] {
                    counts[s] += 1.0;
                }
                counts.iter().map(|c| c / populations[w] as f64).collect()
            })
            .collect();
        let mut cache: Vec<Vec<Option<Vec<f64>>>> = (0..w_n)
            .map(|w| {
                let (s, a) = mt.type_shape(w);
                vec![None; s * a]
            })
            .collect();
        for w in 0..w_n {
            let a_n = mt.type_shape(w).1;
            for i in 0..populations[w] {
                let s = states[w][i];
                let policy = match deviation {
                    Some(d) if w == focal && i == 0 => d,
                    _ => &joint[w],
                };
                let (ua, us) = u.steps[h][w][i];
                let a = inverse_cdf(policy.step(h).row(s).iter().copied(), ua);
                if w == focal && i == 0 {
                    total += mt.reward(w, h, s, a, &empirical);
                }
                let p = cache[w][s * a_n + a].get_or_insert_with(|| mt.transition(w, h, s, a, &empirical));
                states[w][i] = inverse_cdf(p.iter().copied(), us);
            }
        }
    }
    total
}

/// Finite-population estimate of the gain agent 0 of type `w` gets by
/// switching from `joint[w]` to `deviation`, with common random numbers in
/// both arms.
pub fn mtsag_simulate(
    mt: &dyn MultiTypeModel,
    populations: &[usize],
    joint: &[Policy],
    w: usize,
    deviation: &Policy,
    episodes: usize,
    seed: u64,
) -> Result<MtsagReport> {
    if episodes == 0 {
        return config("episodes must be positive");
    }
    let w_n = mt.type_count();
    if populations.len() != w_n || joint.len() != w_n {
        return config("populations and joint policy must have one entry per type");
    }
    if populations.iter().any(|&n| n == 0) {
        return config("every type needs at least one agent");
    }
    if w >= w_n {
        return config(format!("type index {w} out of range"));
    }
    let (s, a) = mt.type_shape(w);
    if deviation.shape() != Shape::new(mt.horizon(), s, a) {
        return config("deviation policy has the wrong shape");
    }
    let gains: Vec<f64> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = stream_rng(seed, e as u64);
            let u = draw_uniforms(&mut rng, mt.horizon(), populations);
            let base = run_arm(mt, populations, joint, w, None, &u);
            let dev = run_arm(mt, populations, joint, w, Some(deviation), &u);
            dev - base
        })
        .collect();
    let n = gains.len() as f64;
    let mean = gains.iter().sum::<f64>() / n;
    let var = if gains.len() > 1 {
        gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(MtsagReport {
        n_total: populations.iter().sum(),
        mean_gain: mean,
        stderr: (var / n).sqrt(),
        episodes,
    })
}
