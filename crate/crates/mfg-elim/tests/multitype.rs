mod common;

use std::sync::Arc;

use common::all_deterministic;
use mfg_elim::multitype::{
    constrained_best_response, constrained_ne_gap, lift, lift_policy, lower_policy, mtsag_simulate, typed_flow,
    typed_ne_gaps, typed_return, MultiTypeModel, TabularMultiTypeClass, TabularMultiTypeSpec,
};
use mfg_elim::ne::{solve_constrained_ne, NeConfig};
use mfg_elim::{conditional_return, evolve_density, ne_gap, Lipschitz, MeanFieldModel, Policy, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(states: Vec<usize>, actions: Vec<usize>, seed: u64) -> Arc<dyn MultiTypeModel> {
    let spec = TabularMultiTypeSpec {
        horizon: 2,
        states,
        actions,
        density_sensitivity: 0.8,
        seed,
    };
    Arc::new(TabularMultiTypeClass::generate(&spec).unwrap().model())
}

fn random_joint<R: Rng>(mt: &dyn MultiTypeModel, rng: &mut R) -> Vec<Policy> {
    (0..mt.type_count())
        .map(|w| {
            let (s, a) = mt.type_shape(w);
            Policy::random(Shape::new(mt.horizon(), s, a), rng)
        })
        .collect()
}

#[test]
fn single_type_lift_is_the_model_itself() {
    let mt = toy(vec![3], vec![2], 1);
    let lifted = lift(Arc::clone(&mt));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mu = common::random_simplex(3, &mut rng);
    for h in 0..2 {
        let k = lifted.kernel(h, &mu);
        for s in 0..3 {
            for a in 0..2 {
                let p = mt.transition(0, h, s, a, &[mu.clone()]);
                for (x, y) in k.row(s * 2 + a).iter().zip(&p) {
                    assert_eq!(x, y);
                }
            }
        }
    }
    let pi = lift_policy(&lifted, &random_joint(mt.as_ref(), &mut rng)).unwrap();
    let g = constrained_ne_gap(&lifted, &pi).unwrap();
    assert!((g - ne_gap(&lifted, &pi).unwrap()).abs() < 1e-12);
    let typed = lower_policy(&lifted, &pi).unwrap();
    assert!((g - typed_ne_gaps(mt.as_ref(), &typed).unwrap()[0]).abs() < 1e-12);
}

#[test]
fn cross_type_actions_are_uniform_and_unpaid() {
    let mt = toy(vec![2, 3], vec![2, 2], 3);
    let lifted = lift(Arc::clone(&mt));
    let total = 5;
    let mu = vec![0.2; total];
    let p = lifted.transition(0, 0, 3, &mu);
    assert!(p.iter().all(|&x| (x - 1.0 / total as f64).abs() < 1e-15));
    assert_eq!(lifted.reward(0, 0, 3, &mu), 0.0);
    let q = lifted.transition(0, 1, 1, &mu);
    assert_eq!(q[2..].iter().sum::<f64>(), 0.0);
}

#[test]
fn lift_round_trips_and_rejects_cross_type_mass() {
    let mt = toy(vec![2, 3, 1], vec![3, 2, 2], 4);
    let lifted = lift(Arc::clone(&mt));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let typed = random_joint(mt.as_ref(), &mut rng);
    let pi = lift_policy(&lifted, &typed).unwrap();
    assert!(lifted.is_constrained(&pi));
    assert_eq!(lower_policy(&lifted, &pi).unwrap(), typed);
    let mut steps = pi.steps().to_vec();
    steps[0][[0, 0]] -= 0.01;
    steps[0][[0, 4]] += 0.01;
    let bad = Policy::new(steps).unwrap();
    assert!(lower_policy(&lifted, &bad).is_err());
    assert!(constrained_ne_gap(&lifted, &bad).is_err());
}

#[test]
fn lifted_flow_is_scaled_typed_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..10 {
        let mt = toy(vec![2, 3], vec![2, 3], seed);
        let lifted = lift(Arc::clone(&mt));
        let typed = random_joint(mt.as_ref(), &mut rng);
        let flow = evolve_density(&lifted, &lift_policy(&lifted, &typed).unwrap()).unwrap();
        let tf = typed_flow(mt.as_ref(), &typed).unwrap();
        for h in 0..2 {
            for w in 0..2 {
                for s in 0..mt.type_shape(w).0 {
                    let x = flow.step(h)[lifted.state_offsets[w] + s];
                    assert!((x - tf[h][w][s] / 2.0).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn typed_gaps_match_deviation_enumeration() {
    let mt = toy(vec![2, 2], vec![2, 2], 7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let joint = random_joint(mt.as_ref(), &mut rng);
    let gaps = typed_ne_gaps(mt.as_ref(), &joint).unwrap();
    for w in 0..2 {
        let (s, a) = mt.type_shape(w);
        let on = typed_return(mt.as_ref(), w, &joint[w], &joint).unwrap();
        let best = all_deterministic(Shape::new(2, s, a))
            .iter()
            .map(|d| typed_return(mt.as_ref(), w, d, &joint).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((gaps[w] - (best - on)).abs() < 1e-12);
    }
}

#[derive(Debug)]
struct Unpaid(Arc<dyn MultiTypeModel>);

impl MultiTypeModel for Unpaid {
    fn horizon(&self) -> usize {
        self.0.horizon()
    }
    fn type_count(&self) -> usize {
        self.0.type_count()
    }
    fn type_shape(&self, w: usize) -> (usize, usize) {
        self.0.type_shape(w)
    }
    fn initial(&self, w: usize) -> &[f64] {
        self.0.initial(w)
    }
    fn transition(&self, w: usize, h: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> Vec<f64> {
        self.0.transition(w, h, s, a, joint)
    }
    fn reward(&self, _: usize, _: usize, _: usize, _: usize, _: &[Vec<f64>]) -> f64 {
        0.0
    }
    fn lipschitz(&self) -> Lipschitz {
        self.0.lipschitz()
    }
}

#[test]
fn zero_rewards_give_zero_gaps() {
    let mt = Unpaid(toy(vec![2, 3], vec![2, 2], 9));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let joint = random_joint(&mt, &mut rng);
    assert!(typed_ne_gaps(&mt, &joint).unwrap().iter().all(|&g| g == 0.0));
}

#[test]
fn returns_decompose_and_gaps_relate_both_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..12 {
        let w_n = 2 + (seed as usize % 2);
        let states: Vec<usize> = (0..w_n).map(|_| rng.random_range(1..=3)).collect();
        let actions: Vec<usize> = (0..w_n).map(|_| rng.random_range(1..=3)).collect();
        let mt = toy(states, actions, seed);
        let lifted = lift(Arc::clone(&mt));
        let joint = random_joint(mt.as_ref(), &mut rng);
        let dev = random_joint(mt.as_ref(), &mut rng);
        let (pi, pd) = (lift_policy(&lifted, &joint).unwrap(), lift_policy(&lifted, &dev).unwrap());
        let lhs = conditional_return(&lifted, &pd, &pi).unwrap();
        let rhs: f64 = (0..w_n).map(|w| typed_return(mt.as_ref(), w, &dev[w], &joint).unwrap()).sum::<f64>() / w_n as f64;
        assert!((lhs - rhs).abs() < 1e-9);
        let g = constrained_ne_gap(&lifted, &pi).unwrap();
        let typed = typed_ne_gaps(mt.as_ref(), &joint).unwrap();
        assert!(typed.iter().all(|&t| t <= w_n as f64 * g + 1e-6));
        let worst = typed.iter().cloned().fold(0.0, f64::max);
        assert!(g <= worst + 1e-6);
        let (br, v) = constrained_best_response(&lifted, &pi).unwrap();
        assert!(lifted.is_constrained(&br));
        assert!((v - conditional_return(&lifted, &br, &pi).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn null_deviation_has_exactly_zero_gain() {
    let mt = toy(vec![2, 2], vec![2, 2], 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let joint = random_joint(mt.as_ref(), &mut rng);
    let r = mtsag_simulate(mt.as_ref(), &[5, 7], &joint, 1, &joint[1].clone(), 200, 3).unwrap();
    assert_eq!(r.mean_gain, 0.0);
    assert!(r.stderr < 1e-12);
    assert_eq!(r.n_total, 12);
    assert!(mtsag_simulate(mt.as_ref(), &[5, 7], &joint, 1, &joint[1].clone(), 0, 3).is_err());
}

/// One type, deterministic moves to the state named by the action, reward
/// `mu(s) / H` for standing in `s`.
#[derive(Debug)]
struct Walk {
    initial: Vec<f64>,
}

impl MultiTypeModel for Walk {
    fn horizon(&self) -> usize {
        3
    }
    fn type_count(&self) -> usize {
        1
    }
    fn type_shape(&self, _: usize) -> (usize, usize) {
        (2, 2)
    }
    fn initial(&self, _: usize) -> &[f64] {
        &self.initial
    }
    fn transition(&self, _: usize, _: usize, _: usize, a: usize, _: &[Vec<f64>]) -> Vec<f64> {
        let mut p = vec![0.0; 2];
        p[a] = 1.0;
        p
    }
    fn reward(&self, _: usize, _: usize, s: usize, a: usize, joint: &[Vec<f64>]) -> f64 {
        (joint[0][s] + a as f64) / 6.0
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz {
            transition: 0.0,
            reward: 1.0 / 6.0,
        }
    }
}

#[test]
fn lone_agent_gain_matches_exact_difference() {
    let mt = Walk {
        initial: vec![1.0, 0.0],
    };
    let shape = Shape::new(3, 2, 2);
    let stay = Policy::deterministic(shape, |_, s| s);
    let flip = Policy::deterministic(shape, |_, s| 1 - s);
    // With one agent the empirical density is a point mass on its own state,
    // so each step pays (1 + a) / 6.
    let ret = |p: &Policy| {
        let mut s = 0;
        let mut total = 0.0;
        for h in 0..3 {
            let a = (0..2).find(|&a| p.prob(h, s, a) == 1.0).unwrap();
            total += (1.0 + a as f64) / 6.0;
            s = a;
        }
        total
    };
    let r = mtsag_simulate(&mt, &[1], &[stay.clone()], 0, &flip, 10, 1).unwrap();
    assert!((r.mean_gain - (ret(&flip) - ret(&stay))).abs() < 1e-12);
    assert!(r.stderr < 1e-12);
}

#[test]
fn gains_shrink_with_population() {
    let mt = toy(vec![2, 2], vec![2, 2], 13);
    let lifted = lift(Arc::clone(&mt));
    let uniform: Vec<Policy> = (0..2).map(|_| Policy::uniform(Shape::new(2, 2, 2))).collect();
    let cfg = NeConfig {
        alpha: 0.05,
        tol: 1e-4,
        max_iter: 5000,
    };
    let ne = solve_constrained_ne(&lifted, &cfg, &lift_policy(&lifted, &uniform).unwrap()).unwrap();
    let joint = lower_policy(&lifted, &ne.policy).unwrap();
    let (br, _) = constrained_best_response(&lifted, &ne.policy).unwrap();
    let dev = lower_policy(&lifted, &br).unwrap().swap_remove(0);
    let reports: Vec<_> = [50, 100, 200]
        .iter()
        .map(|&n| mtsag_simulate(mt.as_ref(), &[n, n], &joint, 0, &dev, 4000, 17).unwrap())
        .collect();
    for w in reports.windows(2) {
        let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].mean_gain <= w[0].mean_gain + slack, "{reports:?}");
    }
}
