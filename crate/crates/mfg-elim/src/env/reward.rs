use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::Shape;

/// Flat parameters of the shared reward
/// `r_h(s,a,mu) = clamp(w_h(s,a) + b_h(s,a) * <c_h, mu>, 0, 1/H)`.
///
/// This is the `w + v^T mu` family with `v_h(s,a) = b_h(s,a) c_h`, which
/// keeps the parameter count linear in `S*A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// `H * S * A`, row-major.
    pub w: Vec<f64>,
    /// `H * S * A`, row-major.
    pub b: Vec<f64>,
    /// `H * S`, row-major.
    pub c: Vec<f64>,
}

impl RewardParams {
    /// `w ~ U(0, 0.7/H)`, `b ~ U(0, 0.3/H)`, `c ~ U(0, 1)`; the clamp is
    /// then never active.
    pub fn generate<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let hf = shape.horizon as f64;
        let n = shape.horizon * shape.pairs();
        let w = (0..n).map(|_| rng.random::<f64>() * 0.7 / hf).collect();
        let b = (0..n).map(|_| rng.random::<f64>() * 0.3 / hf).collect();
        let c = (0..shape.horizon * shape.states).map(|_| rng.random::<f64>()).collect();
        RewardParams { w, b, c }
    }

    pub fn zero(shape: Shape) -> Self {
        let n = shape.horizon * shape.pairs();
        RewardParams {
            w: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; shape.horizon * shape.states],
        }
    }
}

#[derive(Clone, Debug)]
pub struct DensityReward {
    shape: Shape,
    w: Vec<Array1<f64>>,
    b: Vec<Array1<f64>>,
    c: Vec<Array1<f64>>,
}

impl DensityReward {
    pub fn new(shape: Shape, p: &RewardParams) -> Self {
        let pairs = shape.pairs();
        let split = |v: &[f64], len: usize| -> Vec<Array1<f64>> {
            v.chunks(len).map(|c| Array1::from(c.to_vec())).collect()
        };
        assert_eq!(p.w.len(), shape.horizon * pairs);
        assert_eq!(p.b.len(), shape.horizon * pairs);
        assert_eq!(p.c.len(), shape.horizon * shape.states);
        DensityReward {
            shape,
            w: split(&p.w, pairs),
            b: split(&p.b, pairs),
            c: split(&p.c, shape.states),
        }
    }

    fn cap(&self) -> f64 {
        1.0 / self.shape.horizon as f64
    }

    fn tilt(&self, h: usize, density: &[f64]) -> f64 {
        self.c[h].iter().zip(density).map(|(c, m)| c * m).sum()
    }

    pub fn value(&self, h: usize, s: usize, a: usize, density: &[f64]) -> f64 {
        let i = s * self.shape.actions + a;
        (self.w[h][i] + self.b[h][i] * self.tilt(h, density)).clamp(0.0, self.cap())
    }

    pub fn table(&self, h: usize, density: &[f64]) -> Array1<f64> {
        let t = self.tilt(h, density);
        let cap = self.cap();
        (&self.w[h] + &(&self.b[h] * t)).mapv(|x| x.clamp(0.0, cap))
    }

    /// `max |b| * max |c|`, a valid l1 Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        (0..self.shape.horizon)
            .map(|h| {
                let b = self.b[h].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let c = self.c[h].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                b * c
            })
            .fold(0.0, f64::max)
    }
}
