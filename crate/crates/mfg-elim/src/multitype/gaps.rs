use ndarray::{Array1, Array2};

use super::MultiTypeModel;
use crate::error::{config, Result};
use crate::frozen::FrozenMdp;
use crate::model::Shape;
use crate::policy::Policy;

fn check(mt: &dyn MultiTypeModel, joint: &[Policy]) -> Result<()> {
    if joint.len() != mt.type_count() {
        return config(format!("expected {} typed policies, got {}", mt.type_count(), joint.len()));
    }
    for (w, p) in joint.iter().enumerate() {
        let (s, a) = mt.type_shape(w);
        if p.shape() != Shape::new(mt.horizon(), s, a) {
            return config(format!("typed policy {w} has shape {:?}", p.shape()));
        }
    }
    Ok(())
}

/// Joint density tuples `flow[h][w]` induced by the joint policy.
pub fn typed_flow(mt: &dyn MultiTypeModel, joint: &[Policy]) -> Result<Vec<Vec<Vec<f64>>>> {
    check(mt, joint)?;
    let w_n = mt.type_count();
    let mut flow = Vec::with_capacity(mt.horizon());
    let mut cur: Vec<Vec<f64>> = (0..w_n).map(|w| mt.initial(w).to_vec()).collect();
    for h in 0..mt.horizon() {
        let next = if h + 1 < mt.horizon() {
            Some(
                (0..w_n)
                    .map(|w| {
                        let (s_n, a_n) = mt.type_shape(w);
                        let mut out = vec![0.0; s_n];
                        for s in 0..s_n {
                            for a in 0..a_n {
                                let m = cur[w][s] * joint[w].prob(h, s, a);
                                if m == 0.0 {
                                    continue;
                                }
                                for (o, p) in out.iter_mut().zip(mt.transition(w, h, s, a, &cur)) {
                                    *o += m * p;
                                }
                            }
                        }
                        out
                    })
                    .collect::<Vec<_>>(),
            )
        } else {
            None
        };
        flow.push(cur);
        match next {
            Some(n) => cur = n,
            None => break,
        }
    }
    Ok(flow)
}

/// Type `w`'s MDP with every density frozen at `flow`.
pub fn typed_frozen(mt: &dyn MultiTypeModel, w: usize, flow: &[Vec<Vec<f64>>]) -> FrozenMdp {
    let (s_n, a_n) = mt.type_shape(w);
    let mut kernels = Vec::with_capacity(flow.len());
    let mut rewards = Vec::with_capacity(flow.len());
    for (h, joint) in flow.iter().enumerate() {
        let mut k = Array2::zeros((s_n * a_n, s_n));
        let mut r = Array1::zeros(s_n * a_n);
        for s in 0..s_n {
            for a in 0..a_n {
                k.row_mut(s * a_n + a).assign(&Array1::from(mt.transition(w, h, s, a, joint)));
                r[s * a_n + a] = mt.reward(w, h, s, a, joint);
            }
        }
        kernels.push(k);
        rewards.push(r);
    }
    FrozenMdp::new(Array1::from(mt.initial(w).to_vec()), kernels, rewards)
}

/// `J^w(deviation; joint)`: type `w` follows `deviation` while the flow is
/// generated by `joint`.
pub fn typed_return(mt: &dyn MultiTypeModel, w: usize, deviation: &Policy, joint: &[Policy]) -> Result<f64> {
    if w >= mt.type_count() {
        return config(format!("type index {w} out of range"));
    }
    let flow = typed_flow(mt, joint)?;
    let (s, a) = mt.type_shape(w);
    if deviation.shape() != Shape::new(mt.horizon(), s, a) {
        return config("deviation policy has the wrong shape");
    }
    Ok(typed_frozen(mt, w, &flow).evaluate(deviation))
}

/// Per-type NE gaps of the joint policy, others frozen.
pub fn typed_ne_gaps(mt: &dyn MultiTypeModel, joint: &[Policy]) -> Result<Vec<f64>> {
    let flow = typed_flow(mt, joint)?;
    Ok((0..mt.type_count())
        .map(|w| typed_frozen(mt, w, &flow).gap(&joint[w]))
        .collect())
}
