//! End-to-end acceptance suite. Runs every criterion in sequence, prints one
//! PASS/FAIL line each and exits non-zero if any failed.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::*;
use mfg_elim::bridge::{bridge_model, bridge_policy, policy_cover};
use mfg_elim::cli::{Resolved, RunConfig};
use mfg_elim::elim::{mebp_heuristic, ElimConfig, GapMonitor, NORM_GAP_FLOOR};
use mfg_elim::engine::central_model_among;
use mfg_elim::env::{gen_tabular_class, HardClass, HardInstanceSpec, LinearClass, LinearMfgSpec};
use mfg_elim::multitype::{
    constrained_ne_gap, lift, lift_policy, typed_ne_gaps, typed_return, MultiTypeModel, TabularMultiTypeClass,
    TabularMultiTypeSpec,
};
use mfg_elim::ne::{ne_policy_table, solve_ne, NeConfig};
use mfg_elim::pmbed::{greedy_partial_sequence, greedy_standard_sequence, pmbed_estimate, reverify, EluderVariant, PmbedOptions};
use mfg_elim::rng::derive_seed;
use mfg_elim::sampler::Sampler;
use mfg_elim::{
    best_response, conditional_model_distance, conditional_return, evolve_density, ne_gap,
    MeanFieldModel, ModelClass, Policy, Shape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_shape<R: Rng>(rng: &mut R, max_h: usize, max_s: usize, max_a: usize) -> Shape {
    Shape::new(rng.random_range(1..=max_h), rng.random_range(1..=max_s), rng.random_range(1..=max_a))
}

fn random_model<R: Rng>(shape: Shape, rng: &mut R) -> TableModel {
    let lambda = rng.random::<f64>();
    let b = rng.random::<f64>();
    random_table_model(shape, lambda, b, rng)
}

/// Elimination on the 200-model linear setting: five classes, five trials
/// each. Returns the outcomes of the reproduction and survival criteria.
fn scaled_experiment() -> (Outcome, Outcome) {
    let mut cfg = Resolved::default();
    RunConfig::preset("appxJ").unwrap().apply(&mut cfg);
    let ne = NeConfig {
        alpha: cfg.alpha,
        tol: cfg.tol,
        max_iter: cfg.ne_max_iter,
    };
    let (mut completed, mut bad_gap, mut non_monotone, mut bad_clamp) = (0, 0, 0, 0);
    let (mut cheap, mut survived, mut runs) = (0, 0, 0);
    for class_seed in 1..=5u64 {
        let started = Instant::now();
        let spec = LinearMfgSpec {
            horizon: cfg.horizon,
            states: cfg.states,
            actions: cfg.actions,
            d_phi: cfg.d_phi,
            d_psi: cfg.d_psi,
            class_size: cfg.class_size,
            beta_max: cfg.beta_max,
            seed: class_seed,
        };
        let class = LinearClass::generate(&spec).unwrap().build().unwrap();
        let truth_index = class.true_index().unwrap();
        let truth = Arc::clone(class.true_model().unwrap());
        let table = ne_policy_table(&class, &ne).unwrap();
        let unconverged = table.iter().filter(|r| !r.converged).count();
        let policies: Vec<Policy> = table.into_iter().map(|r| r.policy).collect();
        let raw: Vec<f64> = policies.iter().map(|p| ne_gap(truth.as_ref(), p).unwrap().max(0.0)).collect();
        let monitor = GapMonitor::new(raw.clone());
        let elim = ElimConfig::from_target(cfg.eps, class.lipschitz().reward, cfg.horizon, cfg.delta, cfg.elim_iter);
        println!(
            "  class {class_seed}: true model {truth_index}, NE table in {:.1}s ({unconverged} unconverged)",
            started.elapsed().as_secs_f64()
        );
        for trial in 0..5u64 {
            let started = Instant::now();
            runs += 1;
            let mut sampler = Sampler::new(Arc::clone(&truth), derive_seed(class_seed, trial));
            let out = match mebp_heuristic(&class, &elim, &mut sampler, &policies, Some(&monitor)) {
                Ok(o) => o,
                Err(e) => {
                    println!("    trial {trial}: error {e}");
                    continue;
                }
            };
            let alive = out.trace.survived(truth_index);
            survived += alive as usize;
            if out.trajectories < (cfg.states * cfg.actions) as u64 {
                cheap += 1;
            }
            if !out.trace.models_remaining_monotone() {
                non_monotone += 1;
            }
            // The normalized curve must be zero exactly when the raw worst
            // survivor gap is below the floor, and the raw ratio otherwise.
            let clamp_ok = out.trace.rounds.iter().all(|r| {
                let worst = r.survivors.iter().map(|&i| raw[i]).fold(0.0, f64::max);
                let expected = if worst < NORM_GAP_FLOOR { 0.0 } else { worst / monitor.initial };
                (r.max_norm_gap - expected).abs() < 1e-12
            }) && out.trace.rows.iter().all(|r| r.norm_max_ne_gap == 0.0 || r.norm_max_ne_gap >= NORM_GAP_FLOOR);
            if !clamp_ok {
                bad_clamp += 1;
            }
            let gap = out.policy.as_ref().map(|p| ne_gap(truth.as_ref(), p).unwrap());
            if out.completed() {
                completed += 1;
                if gap.is_none_or(|g| g > cfg.eps) {
                    bad_gap += 1;
                }
            }
            println!(
                "    trial {trial}: {:?}, model {:?}, gap {}, {} trajectories, true model {}, {:.1}s",
                out.status,
                out.returned_model,
                gap.map_or("-".into(), |g| format!("{g:.3e}")),
                out.trajectories,
                if alive { "kept" } else { "eliminated" },
                started.elapsed().as_secs_f64()
            );
        }
    }
    let reproduction = outcome(
        bad_gap == 0 && non_monotone == 0 && bad_clamp == 0 && cheap >= 20,
        format!(
            "{completed}/{runs} completed, {bad_gap} with gap > 1e-3, {non_monotone} non-monotone, \
             {bad_clamp} clamp violations, {cheap}/{runs} under S*A trajectories"
        ),
    );
    let survival = outcome(survived >= 24, format!("true model kept in {survived}/{runs} runs"));
    (reproduction, survival)
}

fn tabular_ceiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sequences = 0;
    let mut violations = 0;
    for k in 0..50u64 {
        let shape = random_shape(&mut rng, 3, 5, 5);
        let size = rng.random_range(1..=50);
        let class = gen_tabular_class(shape.horizon, shape.states, shape.actions, size, rng.random(), k).unwrap();
        let ceiling = shape.pairs();
        let mut refs = vec![Policy::uniform(shape)];
        refs.extend((0..2).map(|_| Policy::random(shape, &mut rng)));
        for eps in [0.01, 0.05, 0.2] {
            for pi in &refs {
                for h in 0..shape.horizon {
                    for variant in [EluderVariant::PartialI, EluderVariant::PartialII] {
                        let r = greedy_partial_sequence(&class, h, pi, eps, variant).unwrap();
                        sequences += 1;
                        if !reverify(&class, &r).unwrap() || r.length > ceiling {
                            violations += 1;
                        }
                    }
                }
            }
            let est = pmbed_estimate(&class, eps, &PmbedOptions { seed: k, ..PmbedOptions::default() }).unwrap();
            if est.value > ceiling {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{sequences} certified sequences on 50 classes, {violations} over S*A"))
}

fn separation() -> Outcome {
    let spec = HardInstanceSpec {
        d: 3,
        eps: 0.04,
        lipschitz: 1.0,
        zeta: None,
        n_models: 20,
    };
    let hard = HardClass::generate(&spec).unwrap();
    let class = hard.build().unwrap();
    let ceiling = class.shape().pairs();
    let standard = (0..class.shape().horizon)
        .map(|h| greedy_standard_sequence(&class, h, spec.eps, &hard.grid()).unwrap())
        .max_by_key(|r| r.length)
        .unwrap();
    let certified = reverify(&class, &standard).unwrap();
    // Uniform, random, and one reference steering the first step onto each
    // bump center, which is where a single model can be told apart.
    let shape = class.shape();
    let steering: Vec<Policy> = hard
        .centers
        .iter()
        .map(|c| {
            let mut steps = vec![ndarray::Array2::from_elem((shape.states, shape.actions), 1.0 / shape.actions as f64); shape.horizon];
            for s in 0..shape.states {
                for a in 0..shape.actions {
                    steps[0][[s, a]] = c[a];
                }
            }
            Policy::new(steps).unwrap()
        })
        .collect();
    let partial = [false, true]
        .into_iter()
        .map(|type_two| {
            let opts = PmbedOptions {
                policy_samples: 50,
                seed: 4,
                extra_policies: steering.clone(),
                type_two,
            };
            pmbed_estimate(&class, spec.eps, &opts).unwrap()
        })
        .max_by_key(|e| e.value)
        .unwrap();
    outcome(
        certified && standard.length >= 19 && partial.value <= ceiling,
        format!(
            "standard length {} (certified {certified}), partial estimate {} over {} policies, S*A = {ceiling}",
            standard.length, partial.value, partial.policies_tried
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let shape = random_shape(&mut rng, 2, 3, 3);
        let m = random_model(shape, &mut rng);
        let mut n = random_model(shape, &mut rng);
        n.initial = m.initial.clone();
        let eval = Policy::random(shape, &mut rng);
        let reference = Policy::random(shape, &mut rng);
        let diffs = [
            conditional_return(&m, &eval, &reference).unwrap() - oracle_return(&m, &eval, &reference),
            best_response(&m, &reference).unwrap().1 - oracle_best(&m, &reference),
            ne_gap(&m, &reference).unwrap() - oracle_gap(&m, &reference),
            conditional_model_distance(&m, &n, &reference).unwrap() - oracle_distance(&m, &n, &reference),
        ];
        for (w, d) in worst.iter_mut().zip(diffs) {
            *w = w.max(d.abs());
        }
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-9),
        format!(
            "max deviations: return {:.1e}, best response {:.1e}, gap {:.1e}, distance {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn local_alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut slack = f64::INFINITY;
    let mut failures = 0;
    for k in 0..100 {
        let shape = random_shape(&mut rng, 3, 3, 3);
        let m = random_model(shape, &mut rng);
        // Same rewards and initial density; transitions pulled toward fresh
        // random kernels by a random amount.
        let other = random_model(shape, &mut rng);
        let t = rng.random::<f64>() * 0.3;
        let mut n = m.clone();
        for h in 0..shape.horizon {
            n.base[h] = &m.base[h] * (1.0 - t) + &other.base[h] * t;
            n.alt[h] = &m.alt[h] * (1.0 - t) + &other.alt[h] * t;
        }
        let pi = if k % 2 == 0 {
            solve_ne(&m, 0.1, 1e-3, 300, &Policy::uniform(shape)).unwrap().policy
        } else {
            Policy::random(shape, &mut rng)
        };
        let eps1 = ne_gap(&m, &pi).unwrap().max(0.0);
        let eps2 = conditional_model_distance(&m, &n, &pi).unwrap();
        let lr = m.lipschitz().reward;
        let bound = eps1 + 2.0 * (lr * shape.horizon as f64 + 1.0) * eps2 + 1e-6;
        let gap = ne_gap(&n, &pi).unwrap();
        slack = slack.min(bound - gap);
        if gap > bound {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("100 triples, {failures} violations, smallest slack {slack:.3e}"))
}

/// Per-type flows by explicit summation over the joint dynamics.
fn oracle_typed_flow(mt: &dyn MultiTypeModel, joint: &[Policy]) -> Vec<Vec<Vec<f64>>> {
    let types = mt.type_count();
    let mut flow = vec![(0..types).map(|w| mt.initial(w).to_vec()).collect::<Vec<_>>()];
    for h in 0..mt.horizon() - 1 {
        let cur = flow[h].clone();
        let next = (0..types)
            .map(|w| {
                let (s_n, a_n) = mt.type_shape(w);
                let mut out = vec![0.0; s_n];
                for s in 0..s_n {
                    for a in 0..a_n {
                        let p = cur[w][s] * joint[w].prob(h, s, a);
                        for (x, q) in out.iter_mut().zip(mt.transition(w, h, s, a, &cur)) {
                            *x += p * q;
                        }
                    }
                }
                out
            })
            .collect();
        flow.push(next);
    }
    flow
}

fn lifting_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut density, mut decomposition, mut forward, mut backward) = (0.0f64, 0.0f64, 0, 0);
    for k in 0..100u64 {
        let types = 1 + (k % 3) as usize;
        let horizon = rng.random_range(1..=2);
        let spec = TabularMultiTypeSpec {
            horizon,
            states: (0..types).map(|_| rng.random_range(1..=3)).collect(),
            actions: (0..types).map(|_| rng.random_range(1..=3)).collect(),
            density_sensitivity: rng.random(),
            seed: k,
        };
        let mt: Arc<dyn MultiTypeModel> = Arc::new(TabularMultiTypeClass::generate(&spec).unwrap().model());
        let lifted = lift(Arc::clone(&mt));
        let joint_of = |rng: &mut ChaCha8Rng| -> Vec<Policy> {
            (0..types)
                .map(|w| {
                    let (s, a) = mt.type_shape(w);
                    Policy::random(Shape::new(horizon, s, a), rng)
                })
                .collect()
        };
        let joint = joint_of(&mut rng);
        let deviation = joint_of(&mut rng);
        let pi = lift_policy(&lifted, &joint).unwrap();
        let flow = evolve_density(&lifted, &pi).unwrap();
        let oracle = oracle_typed_flow(mt.as_ref(), &joint);
        for h in 0..horizon {
            // Lifted states list the types in order, each holding 1/W of the mass.
            let lifted_mu = flow.step(h);
            assert_eq!(lifted_mu.len(), oracle[h].iter().map(Vec::len).sum::<usize>());
            for (got, want) in lifted_mu.iter().zip(oracle[h].iter().flatten()) {
                density = density.max((got - want / types as f64).abs());
            }
        }
        let lifted_return = conditional_return(&lifted, &lift_policy(&lifted, &deviation).unwrap(), &pi).unwrap();
        let typed: f64 = (0..types).map(|w| typed_return(mt.as_ref(), w, &deviation[w], &joint).unwrap()).sum();
        decomposition = decomposition.max((lifted_return - typed / types as f64).abs());
        let g = constrained_ne_gap(&lifted, &pi).unwrap();
        let per_type = typed_ne_gaps(mt.as_ref(), &joint).unwrap();
        if per_type.iter().any(|&x| x > types as f64 * g + 1e-6) {
            forward += 1;
        }
        let worst = per_type.iter().cloned().fold(0.0, f64::max);
        if g > worst + 1e-6 {
            backward += 1;
        }
    }
    outcome(
        density <= 1e-9 && decomposition <= 1e-9 && forward == 0 && backward == 0,
        format!(
            "density dev {density:.1e}, return dev {decomposition:.1e}, \
             gap relation violations {forward} (per type) / {backward} (constrained)"
        ),
    )
}

fn bridge_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps0 = 0.05;
    let cfg = NeConfig {
        alpha: 0.05,
        tol: 1e-4,
        max_iter: 5000,
    };
    let (mut tested, mut attempts, mut failures) = (0, 0, 0);
    let mut slack = f64::INFINITY;
    while tested < 20 && attempts < 500 {
        attempts += 1;
        let shape = random_shape(&mut rng, 2, 3, 3);
        let Ok(cover) = policy_cover(1.0, shape.states, shape.actions, shape.horizon) else {
            continue;
        };
        if cover.len() > 1000 {
            continue;
        }
        // A base model and a few close perturbations of it.
        let base = random_table_model(shape, 0.1 * rng.random::<f64>(), rng.random(), &mut rng);
        let size = rng.random_range(2..=4);
        let models: Vec<_> = (0..size)
            .map(|_| {
                let other = random_table_model(shape, 0.0, 0.0, &mut rng);
                let t = 0.02 * rng.random::<f64>();
                let mut m = base.clone();
                for h in 0..shape.horizon {
                    m.base[h] = &base.base[h] * (1.0 - t) + &other.base[h] * t;
                }
                shared(m)
            })
            .collect();
        let class = ModelClass::new(models, Some(0)).unwrap();
        let members: Vec<usize> = (0..size).collect();
        let Ok(bridge) = bridge_model(&class, &members, eps0, Arc::new(cover), false) else {
            continue;
        };
        tested += 1;
        let pi = bridge_policy(&bridge, cfg.alpha, cfg.tol, cfg.max_iter).unwrap().policy;
        let (center, _) = central_model_among(&class, &members, &pi, eps0).unwrap();
        let gap = ne_gap(class.get(center).as_ref(), &pi).unwrap();
        let lr = class.lipschitz().reward;
        let h = shape.horizon as f64;
        let bound = 2.0 * (1.0 + lr * h) * (h + 4.0) * eps0 + cfg.tol;
        slack = slack.min(bound - gap);
        if gap > bound {
            failures += 1;
        }
    }
    outcome(
        tested == 20 && failures == 0,
        format!("{tested} toy classes with the precondition, {failures} over the bound, smallest slack {slack:.3e}"),
    )
}

fn sampler_statistics() -> Outcome {
    let samples = 100_000;
    let (mut cells, mut outside) = (0, 0);
    let mut worst_z = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::new(2, 2, 2);
        let m = shared(random_model(shape, &mut rng));
        let eval = Policy::uniform(shape);
        let reference = Policy::random(shape, &mut rng);
        let mut sampler = Sampler::new(Arc::clone(&m), derive_seed(seed, 9));
        let mut counts = vec![[0u64; 2]; shape.pairs()];
        for _ in 0..samples {
            let t = sampler.query(&eval, &reference).unwrap();
            let first = &t.steps[0];
            counts[first.s * shape.actions + first.a][first.s_next] += 1;
        }
        // The first step sees the initial density whatever the reference.
        for (row, c) in counts.iter().enumerate() {
            let n = (c[0] + c[1]) as f64;
            let exact = m.transition(0, row / shape.actions, row % shape.actions, m.initial_density());
            for k in 0..2 {
                let p = exact[k];
                let se = (p * (1.0 - p) / n).sqrt();
                let dev = (c[k] as f64 / n - p).abs();
                cells += 1;
                if se > 0.0 {
                    worst_z = worst_z.max(dev / se);
                }
                if dev > 3.0 * se {
                    outside += 1;
                }
            }
        }
    }
    outcome(outside == 0, format!("{cells} cells on 10 fixtures, {outside} beyond 3 SE, worst {worst_z:.2} SE"))
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Vec<Outcome>>)> = vec![
        ("tabular P-MBED ceiling", Box::new(|| vec![tabular_ceiling()])),
        ("MBED / P-MBED separation", Box::new(|| vec![separation()])),
        ("exact-oracle equivalence", Box::new(|| vec![oracle_equivalence()])),
        ("local alignment", Box::new(|| vec![local_alignment()])),
        ("lifting identities", Box::new(|| vec![lifting_identities()])),
        ("bridge-policy guarantee", Box::new(|| vec![bridge_guarantee()])),
        ("sampler statistics", Box::new(|| vec![sampler_statistics()])),
        ("scaled elimination experiment", Box::new(|| {
            let (a, b) = scaled_experiment();
            vec![a, b]
        })),
    ];
    let names = [
        [3, 0],
        [4, 0],
        [5, 0],
        [6, 0],
        [7, 0],
        [8, 0],
        [9, 0],
        [1, 2],
    ];
    let labels = |n: usize| match n {
        1 => "scaled elimination reproduction",
        2 => "true-model survival",
        3 => "tabular P-MBED ceiling",
        4 => "MBED / P-MBED separation",
        5 => "exact-oracle equivalence",
        6 => "local alignment",
        7 => "lifting identities",
        8 => "bridge-policy guarantee",
        _ => "sampler statistics",
    };
    let mut failed = 0;
    for ((title, run), ids) in criteria.iter().zip(names) {
        println!("-- {title}");
        let started = Instant::now();
        if ids[1] > 0 && std::env::var_os("ACCEPTANCE_SKIP_SCALED").is_some() {
            for id in ids {
                println!("SKIP [{id}] {} (ACCEPTANCE_SKIP_SCALED is set)", labels(id));
            }
            continue;
        }
        let results = run();
        for (id, r) in ids.iter().filter(|&&i| i > 0).zip(results) {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            failed += !r.pass as usize;
            println!("{tag} [{id}] {}: {} ({:.1}s)", labels(*id), r.detail, started.elapsed().as_secs_f64());
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
