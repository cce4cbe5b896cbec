mod common;

use common::*;
use mfg_elim::engine::{best_response, conditional_model_distance, conditional_return, evolve_density, ne_gap};
use mfg_elim::ne::{solve_ne, NeConfig};
use mfg_elim::{MeanFieldModel, Policy, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> (TableModel, TableModel, Policy, Policy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::new(rng.random_range(1..=2), rng.random_range(1..=3), rng.random_range(1..=3));
    let m = random_table_model(shape, 0.5, 0.5, &mut rng);
    let n = random_table_model(shape, 0.3, 0.2, &mut rng);
    let p = Policy::random(shape, &mut rng);
    let q = Policy::random(shape, &mut rng);
    (m, n, p, q)
}

#[test]
fn flow_matches_explicit_summation() {
    for seed in 0..20 {
        let (m, _, p, _) = instance(seed);
        let flow = evolve_density(&m, &p).unwrap();
        for (h, mu) in oracle_flow(&m, &p).iter().enumerate() {
            for (x, y) in flow.step(h).iter().zip(mu) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn returns_match_path_enumeration() {
    for seed in 0..40 {
        let (m, _, p, q) = instance(seed);
        let dp = conditional_return(&m, &p, &q).unwrap();
        assert!((dp - oracle_return(&m, &p, &q)).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn best_response_and_gap_match_enumeration() {
    for seed in 100..130 {
        let (m, _, p, _) = instance(seed);
        let (br, v) = best_response(&m, &p).unwrap();
        assert!((v - oracle_best(&m, &p)).abs() < 1e-9, "seed {seed}");
        assert!(br.is_deterministic());
        assert!((ne_gap(&m, &p).unwrap() - oracle_gap(&m, &p)).abs() < 1e-9);
    }
}

#[test]
fn distance_matches_enumeration() {
    for seed in 200..230 {
        let (m, n, p, _) = instance(seed);
        let d = conditional_model_distance(&m, &n, &p).unwrap();
        assert!((d - oracle_distance(&m, &n, &p)).abs() < 1e-9, "seed {seed}");
        assert!(conditional_model_distance(&m, &m, &p).unwrap() == 0.0);
    }
}

#[test]
fn single_action_needs_no_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_table_model(Shape::new(2, 3, 1), 0.5, 0.5, &mut rng);
    let r = solve_ne(&m, 0.1, 1e-9, 100, &Policy::uniform(m.shape())).unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.gap_history.is_empty());
    assert!(r.gap.abs() < 1e-12 && r.converged);
}

#[test]
fn damped_iteration_reaches_tolerance_on_static_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = random_table_model(Shape::new(2, 3, 3), 0.0, 0.0, &mut rng);
    let cfg = NeConfig {
        alpha: 0.1,
        tol: 1e-3,
        max_iter: 5000,
    };
    let r = solve_ne(&m, cfg.alpha, cfg.tol, cfg.max_iter, &Policy::uniform(m.shape())).unwrap();
    assert!(r.converged && r.gap <= 1e-3);
    assert_eq!(r.gap_history.len(), r.iterations);
    assert!((ne_gap(&m, &r.policy).unwrap() - r.gap).abs() < 1e-12);
}

#[test]
fn invalid_alpha_is_a_configuration_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_table_model(Shape::new(1, 2, 2), 0.0, 0.0, &mut rng);
    let e = solve_ne(&m, 0.0, 1e-3, 10, &Policy::uniform(m.shape())).unwrap_err();
    assert!(e.is_config());
}
