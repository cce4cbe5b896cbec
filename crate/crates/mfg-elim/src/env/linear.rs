use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::probe::lipschitz_probe;
use super::reward::{DensityReward, RewardParams};
use crate::error::{config, Result};
use crate::model::{Lipschitz, LowRankKernel, MeanFieldModel, ModelClass, Shape, SharedModel};
use crate::rng::stream_rng;

/// Parameters of the linear-feature class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMfgSpec {
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub d_phi: usize,
    pub d_psi: usize,
    pub class_size: usize,
    pub beta_max: f64,
    pub seed: u64,
}

impl LinearMfgSpec {
    /// The 200-model, 100-state, 50-action setting.
    pub fn appx_j(seed: u64) -> Self {
        LinearMfgSpec {
            horizon: 3,
            states: 100,
            actions: 50,
            d_phi: 5,
            d_psi: 5,
            class_size: 200,
            beta_max: 0.1,
            seed,
        }
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.horizon, self.states, self.actions)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.states == 0 || self.actions == 0 {
            return config("linear class needs positive H, S, A");
        }
        if self.d_phi == 0 || self.d_psi == 0 || self.class_size == 0 {
            return config("linear class needs positive feature dimensions and class size");
        }
        if !(0.0..=1.0).contains(&self.beta_max) {
            return config("beta_max must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Generated parameters, all arrays flat row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClass {
    pub spec: LinearMfgSpec,
    /// `H x (S*A) x d_phi`.
    pub phi: Vec<f64>,
    /// `H x S x (d_phi*d_psi)`.
    pub u: Vec<f64>,
    /// `K x H x d_psi x S`, already mixed with the first member.
    pub psi: Vec<f64>,
    /// Mixing weight per member (0 for the first).
    pub beta: Vec<f64>,
    pub reward: RewardParams,
    pub true_index: usize,
    /// Transition Lipschitz ratio measured on the first member.
    pub empirical_lipschitz: f64,
}

fn uniform<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Generates the class described by `spec` (see [`LinearClass::generate`]).
pub fn gen_linear_class(spec: &LinearMfgSpec) -> Result<ModelClass> {
    LinearClass::generate(spec)?.build()
}

impl LinearClass {
    /// Draws all features from a single seeded stream:
    /// `Phi_h`, `U_h`, the reward, then per member `beta` and `Psi_h`,
    /// and finally the true index.
    pub fn generate(spec: &LinearMfgSpec) -> Result<Self> {
        spec.validate()?;
        let shape = spec.shape();
        let (h_n, s_n, sa) = (spec.horizon, spec.states, shape.pairs());
        let mut rng = stream_rng(spec.seed, 0);
        let mut phi = Vec::with_capacity(h_n * sa * spec.d_phi);
        let mut u = Vec::with_capacity(h_n * s_n * spec.d_phi * spec.d_psi);
        for _ in 0..h_n {
            phi.extend(uniform(sa * spec.d_phi, &mut rng));
            u.extend(uniform(s_n * spec.d_phi * spec.d_psi, &mut rng));
        }
        let reward = RewardParams::generate(shape, &mut rng);
        let block = spec.d_psi * s_n;
        let mut psi = Vec::with_capacity(spec.class_size * h_n * block);
        let mut beta = Vec::with_capacity(spec.class_size);
        for i in 0..spec.class_size {
            let b = if i == 0 { 0.0 } else { rng.random::<f64>() * spec.beta_max };
            beta.push(b);
            let raw = uniform(h_n * block, &mut rng);
            if i == 0 {
                psi.extend(raw);
            } else {
                for (j, x) in raw.into_iter().enumerate() {
                    psi.push((1.0 - b) * x + b * psi[j]);
                }
            }
        }
        let true_index = rng.random_range(0..spec.class_size);
        let mut class = LinearClass {
            spec: spec.clone(),
            phi,
            u,
            psi,
            beta,
            reward,
            true_index,
            empirical_lipschitz: 0.0,
        };
        let first = class.model(&class.shared(), 0);
        class.empirical_lipschitz = lipschitz_probe(&first, 200, spec.seed).transition;
        Ok(class)
    }

    fn shared(&self) -> Arc<LinearShared> {
        let spec = &self.spec;
        let shape = spec.shape();
        let (sa, s_n) = (shape.pairs(), spec.states);
        let phi_len = sa * spec.d_phi;
        let u_len = s_n * spec.d_phi * spec.d_psi;
        let phi: Vec<Array2<f64>> = (0..spec.horizon)
            .map(|h| Array2::from_shape_vec((sa, spec.d_phi), self.phi[h * phi_len..(h + 1) * phi_len].to_vec()).unwrap())
            .collect();
        Arc::new(LinearShared {
            shape,
            phi_nonnegative: phi.iter().map(|p| p.iter().all(|&x| x >= 0.0)).collect(),
            phi,
            d_phi: spec.d_phi,
            d_psi: spec.d_psi,
            u: (0..spec.horizon)
                .map(|h| {
                    Array2::from_shape_vec(
                        (s_n, spec.d_phi * spec.d_psi),
                        self.u[h * u_len..(h + 1) * u_len].to_vec(),
                    )
                    .unwrap()
                })
                .collect(),
            reward: DensityReward::new(shape, &self.reward),
            initial: vec![1.0 / s_n as f64; s_n],
            lipschitz_transition: self.empirical_lipschitz,
        })
    }

    fn model(&self, shared: &Arc<LinearShared>, i: usize) -> LinearModel {
        let spec = &self.spec;
        let block = spec.d_psi * spec.states;
        let base = i * spec.horizon * block;
        let psi = (0..spec.horizon)
            .map(|h| {
                let start = base + h * block;
                Array2::from_shape_vec((spec.d_psi, spec.states), self.psi[start..start + block].to_vec()).unwrap()
            })
            .collect();
        LinearModel {
            shared: Arc::clone(shared),
            psi,
            degenerate_rows: AtomicUsize::new(0),
        }
    }

    pub fn models(&self) -> Vec<Arc<LinearModel>> {
        let shared = self.shared();
        (0..self.spec.class_size).map(|i| Arc::new(self.model(&shared, i))).collect()
    }

    pub fn build(&self) -> Result<ModelClass> {
        let models = self.models().into_iter().map(|m| m as SharedModel).collect();
        ModelClass::new(models, Some(self.true_index))
    }
}

#[derive(Debug)]
struct LinearShared {
    shape: Shape,
    d_phi: usize,
    d_psi: usize,
    phi: Vec<Array2<f64>>,
    /// Per step: every entry of `phi` is nonnegative.
    phi_nonnegative: Vec<bool>,
    u: Vec<Array2<f64>>,
    reward: DensityReward,
    initial: Vec<f64>,
    lipschitz_transition: f64,
}

/// `P(s'|s,a,mu) = |phi(s,a)^T G(mu) psi(s')| / sum_x |phi(s,a)^T G(mu) psi(x)|`
/// with `G(mu) = reshape(mu^T U)`.
#[derive(Debug)]
pub struct LinearModel {
    shared: Arc<LinearShared>,
    psi: Vec<Array2<f64>>,
    degenerate_rows: AtomicUsize,
}

impl LinearModel {
    /// Number of all-zero rows replaced by the uniform distribution so far.
    pub fn degenerate_rows(&self) -> usize {
        self.degenerate_rows.load(Ordering::Relaxed)
    }

    /// `G(mu) Psi`, a `d_phi x S` matrix.
    fn g_psi(&self, h: usize, density: &[f64]) -> Array2<f64> {
        let sh = &self.shared;
        let mu = ArrayView2::from_shape((1, density.len()), density).unwrap();
        let g = mu.dot(&sh.u[h]).into_shape_with_order((sh.d_phi, sh.d_psi)).unwrap();
        g.dot(&self.psi[h])
    }

    /// Row `r` of the kernel is `|phi_r G Psi|` normalized; rows that vanish
    /// become uniform. Fused per row so each output is written once.
    fn normalized_rows(&self, phi: ArrayView2<f64>, gp: &Array2<f64>) -> Array2<f64> {
        let (n, s_n) = (phi.nrows(), gp.ncols());
        let gp = gp.as_standard_layout();
        let gp = gp.as_slice().unwrap();
        let mut out = vec![0.0f64; n * s_n];
        for (coef, row) in phi.rows().into_iter().zip(out.chunks_exact_mut(s_n)) {
            for (&c, g) in coef.iter().zip(gp.chunks_exact(s_n)) {
                for (x, &y) in row.iter_mut().zip(g) {
                    *x += c * y;
                }
            }
            row.iter_mut().for_each(|x| *x = x.abs());
            // Independent partial sums let the reduction vectorize.
            let mut acc = [0.0f64; 8];
            let mut chunks = row.chunks_exact(8);
            for c in &mut chunks {
                for l in 0..8 {
                    acc[l] += c[l];
                }
            }
            let total = acc.iter().sum::<f64>() + chunks.remainder().iter().sum::<f64>();
            if total > 0.0 {
                let inv = 1.0 / total;
                row.iter_mut().for_each(|x| *x *= inv);
            } else {
                self.degenerate_rows.fetch_add(1, Ordering::Relaxed);
                row.fill(1.0 / s_n as f64);
            }
        }
        Array2::from_shape_vec((n, s_n), out).unwrap()
    }
}

impl MeanFieldModel for LinearModel {
    fn shape(&self) -> Shape {
        self.shared.shape
    }

    fn initial_density(&self) -> &[f64] {
        &self.shared.initial
    }

    fn transition(&self, h: usize, s: usize, a: usize, density: &[f64]) -> Vec<f64> {
        let row = s * self.shared.shape.actions + a;
        self.kernel_rows(h, density, row..row + 1).into_raw_vec_and_offset().0
    }

    fn reward(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64 {
        self.shared.reward.value(h, s, a, density)
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz {
            transition: self.shared.lipschitz_transition,
            reward: self.shared.reward.lipschitz(),
        }
    }

    fn kernel_rows(&self, h: usize, density: &[f64], rows: Range<usize>) -> Array2<f64> {
        let gp = self.g_psi(h, density);
        self.normalized_rows(self.shared.phi[h].slice(s![rows, ..]), &gp)
    }

    /// With nonnegative features the absolute value is a no-op and row `r`
    /// is `phi_r G Psi / (phi_r G Psi 1)`.
    fn low_rank_kernel(&self, h: usize, density: &[f64]) -> Option<LowRankKernel> {
        if !self.shared.phi_nonnegative[h] {
            return None;
        }
        let right = self.g_psi(h, density);
        if right.iter().any(|&x| x < 0.0) {
            return None;
        }
        let mut left = self.shared.phi[h].clone();
        let sums = left.dot(&right.sum_axis(Axis(1)));
        if sums.iter().any(|&t| !(t > 0.0)) {
            return None;
        }
        for (mut row, t) in left.rows_mut().into_iter().zip(sums) {
            row /= t;
        }
        Some(LowRankKernel { left, right })
    }

    fn reward_table(&self, h: usize, density: &[f64]) -> Array1<f64> {
        self.shared.reward.table(h, density)
    }
}
