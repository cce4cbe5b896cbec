//! Command-line driver. Every run writes `manifest.json` into `--out`.
//! Exit codes: 0 success, 1 reported failure, 2 configuration error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

pub use config::{Resolved, RunConfig};

use crate::elim::{
    mebp_exact, mebp_heuristic, model_elim, Candidate, CandidateMode, DriverOutcome, DriverStatus, ElimCall,
    ElimConfig, ElimTrace, GapMonitor,
};
use crate::engine::ne_gap;
use crate::env::{
    load_class, save_class, GeneratedClass, HardClass, HardInstanceSpec, LinearClass, LinearMfgSpec, TabularClass,
    TabularSpec,
};
use crate::error::{config as config_err, Error, Result};
use crate::model::ModelClass;
use crate::multitype::{
    constrained_best_response, constrained_ne_gap, lift, lift_policy, lower_policy, mtsag_simulate, typed_ne_gaps,
    MultiTypeModel, TabularMultiTypeClass, TabularMultiTypeSpec,
};
use crate::ne::{ne_policy_table, ne_table_entries, solve_constrained_ne, NeConfig, NeReport};
use crate::pmbed::{greedy_standard_sequence, pmbed_estimate, PmbedOptions};
use crate::policy::Policy;
use crate::rng::derive_seed;
use crate::sampler::Sampler;

#[derive(Parser, Debug)]
#[command(name = "mfg-elim", version, about = "Model elimination for mean-field games")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// JSON file with run parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named parameter bundle (appxJ, toy).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Linear,
    Tabular,
    Hard,
    Multitype,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CandidateSet {
    /// Reference plus members' NE policies.
    Ne,
    /// Reference only.
    Reference,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a model class file.
    GenEnv {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Solve every member's NE.
    SolveNe {
        #[arg(long)]
        class: PathBuf,
    },
    /// One elimination call under a fixed reference policy.
    RunElim {
        #[arg(long)]
        class: PathBuf,
        /// `uniform` or `ne:INDEX`.
        #[arg(long, default_value = "uniform")]
        reference: String,
        #[arg(long, value_enum, default_value = "ne")]
        candidates: CandidateSet,
        #[arg(long)]
        ne_policies: Option<PathBuf>,
    },
    /// Heuristic elimination driver using members' NE policies.
    RunMebp {
        /// Class file; a linear class is generated from the seed if absent.
        #[arg(long)]
        class: Option<PathBuf>,
        #[arg(long)]
        ne_policies: Option<PathBuf>,
        /// Trial number; the sampler seed is derived from it.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Exact elimination with bridge policies (toy scale).
    RunMebpExact {
        #[arg(long)]
        class: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Certified lower bounds on the partial eluder dimension.
    EstimatePmbed {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        /// Use the true model's densities for every member.
        #[arg(long)]
        type_two: bool,
        /// Also run the standard estimator (hard classes only).
        #[arg(long)]
        standard: bool,
    },
    /// Lift a multi-type class and report constrained and typed gaps.
    LiftMt {
        #[arg(long)]
        class: PathBuf,
    },
    /// Finite-population deviation gains around the constrained NE.
    MtsagDemo {
        #[arg(long)]
        class: PathBuf,
    },
    /// Summarize a trace CSV.
    Report {
        #[arg(long)]
        trace: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenEnv { .. } => "gen-env",
            Command::SolveNe { .. } => "solve-ne",
            Command::RunElim { .. } => "run-elim",
            Command::RunMebp { .. } => "run-mebp",
            Command::RunMebpExact { .. } => "run-mebp-exact",
            Command::EstimatePmbed { .. } => "estimate-pmbed",
            Command::LiftMt { .. } => "lift-mt",
            Command::MtsagDemo { .. } => "mtsag-demo",
            Command::Report { .. } => "report",
        }
    }
}

/// What a subcommand produced.
struct Done {
    artifacts: Vec<String>,
    failure: Option<String>,
    summary: serde_json::Value,
}

impl Done {
    fn ok(artifacts: Vec<String>, summary: serde_json::Value) -> Self {
        Done {
            artifacts,
            failure: None,
            summary,
        }
    }
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    cfg: Resolved,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        fs::write(self.path(name), serde_json::to_vec_pretty(value)?)?;
        Ok(name.to_string())
    }

    fn ne_config(&self) -> NeConfig {
        NeConfig {
            alpha: self.cfg.alpha,
            tol: self.cfg.tol,
            max_iter: self.cfg.ne_max_iter,
        }
    }

    fn elim_config(&self, class: &ModelClass) -> Result<ElimConfig> {
        let shape = class.shape();
        let mut e = ElimConfig::from_target(
            self.cfg.eps,
            class.lipschitz().reward,
            shape.horizon,
            self.cfg.delta,
            self.cfg.elim_iter,
        );
        if let Some(v) = self.cfg.eps0 {
            e.eps0 = v;
            e.eps_tilde = v / 6.0;
        }
        if let Some(v) = self.cfg.eps_tilde {
            e.eps_tilde = v;
        }
        e.validate()?;
        Ok(e)
    }
}

pub fn run(args: &[String]) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MFG_ELIM_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let name = cli.command.name();
    let mut resolved_cfg = None;
    let result = prepare(&cli).and_then(|ctx| {
        resolved_cfg = Some(ctx.cfg.clone());
        dispatch(&cli.command, &ctx)
    });
    let (code, status, artifacts, summary) = match result {
        Ok(done) => match done.failure {
            None => (0, "ok".to_string(), done.artifacts, done.summary),
            Some(msg) => {
                eprintln!("error: {msg}");
                (1, msg, done.artifacts, done.summary)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_config() { 2 } else { 1 };
            (code, e.to_string(), Vec::new(), serde_json::Value::Null)
        }
    };
    let manifest = json!({
        "command": name,
        "argv": args,
        "seed": cli.seed,
        "threads": cli.threads,
        "preset": cli.preset,
        "config_file": cli.config,
        "config": resolved_cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix": unix,
        "wall_seconds": started.elapsed().as_secs_f64(),
        "exit_code": code,
        "status": status,
        "artifacts": artifacts,
        "summary": summary,
    });
    if fs::create_dir_all(&cli.out).is_ok() {
        if let Ok(bytes) = serde_json::to_vec_pretty(&manifest) {
            if let Err(e) = fs::write(cli.out.join("manifest.json"), bytes) {
                warn!("could not write manifest: {e}");
            }
        }
    }
    code
}

fn prepare(cli: &Cli) -> Result<Ctx> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return config_err("--threads must be positive");
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            warn!("thread pool already initialized");
        }
    }
    let mut cfg = Resolved::default();
    if let Some(p) = &cli.preset {
        RunConfig::preset(p)?.apply(&mut cfg);
    }
    if let Some(path) = &cli.config {
        RunConfig::from_file(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?
            .apply(&mut cfg);
    }
    cfg.validate()?;
    fs::create_dir_all(&cli.out)?;
    Ok(Ctx {
        seed: cli.seed,
        out: cli.out.clone(),
        cfg,
    })
}

fn read_class(path: &Path) -> Result<GeneratedClass> {
    load_class(path).map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => Error::Config(format!("cannot load class {}: {e}", path.display())),
        other => other,
    })
}

fn read_policies(path: &Path) -> Result<Vec<Policy>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn multi_type(generated: &GeneratedClass) -> Result<&TabularMultiTypeClass> {
    match generated {
        GeneratedClass::MultiType(c) => Ok(c),
        other => config_err(format!("expected a multitype class, got {}", other.kind())),
    }
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Done> {
    match cmd {
        Command::GenEnv { kind } => gen_env(ctx, *kind),
        Command::SolveNe { class } => solve_ne_cmd(ctx, class),
        Command::RunElim {
            class,
            reference,
            candidates,
            ne_policies,
        } => run_elim(ctx, class, reference, *candidates, ne_policies.as_deref()),
        Command::RunMebp {
            class,
            ne_policies,
            trial,
        } => run_mebp(ctx, class.as_deref(), ne_policies.as_deref(), *trial),
        Command::RunMebpExact { class, trial } => run_mebp_exact(ctx, class, *trial),
        Command::EstimatePmbed {
            class,
            eps,
            type_two,
            standard,
        } => estimate_pmbed(ctx, class, *eps, *type_two, *standard),
        Command::LiftMt { class } => lift_mt(ctx, class),
        Command::MtsagDemo { class } => mtsag_demo(ctx, class),
        Command::Report { trace } => report(ctx, trace),
    }
}

fn generate(ctx: &Ctx, kind: Kind) -> Result<GeneratedClass> {
    let c = &ctx.cfg;
    Ok(match kind {
        Kind::Linear => GeneratedClass::Linear(LinearClass::generate(&LinearMfgSpec {
            horizon: c.horizon,
            states: c.states,
            actions: c.actions,
            d_phi: c.d_phi,
            d_psi: c.d_psi,
            class_size: c.class_size,
            beta_max: c.beta_max,
            seed: ctx.seed,
        })?),
        Kind::Tabular => GeneratedClass::Tabular(TabularClass::generate(&TabularSpec {
            horizon: c.horizon,
            states: c.states,
            actions: c.actions,
            class_size: c.class_size,
            density_sensitivity: c.density_sensitivity,
            seed: ctx.seed,
        })?),
        Kind::Hard => GeneratedClass::Hard(HardClass::generate(&HardInstanceSpec {
            d: c.hard_d,
            eps: c.hard_eps,
            lipschitz: c.hard_lipschitz,
            zeta: None,
            n_models: c.hard_models,
        })?),
        Kind::Multitype => GeneratedClass::MultiType(TabularMultiTypeClass::generate(&TabularMultiTypeSpec {
            horizon: c.horizon,
            states: c.type_states.clone(),
            actions: c.type_actions.clone(),
            density_sensitivity: c.density_sensitivity,
            seed: ctx.seed,
        })?),
    })
}

fn gen_env(ctx: &Ctx, kind: Kind) -> Result<Done> {
    let generated = generate(ctx, kind)?;
    let name = "class.mfgclass.json";
    save_class(&ctx.path(name), &generated)?;
    let shape = generated.build()?.shape();
    Ok(Done::ok(
        vec![name.into()],
        json!({"kind": kind, "H": shape.horizon, "S": shape.states, "A": shape.actions}),
    ))
}

fn solve_table(ctx: &Ctx, class: &ModelClass) -> Result<(Vec<NeReport>, Vec<String>)> {
    let reports = ne_policy_table(class, &ctx.ne_config())?;
    let a = ctx.write_json("ne_table.json", &ne_table_entries(&reports))?;
    let policies: Vec<&Policy> = reports.iter().map(|r| &r.policy).collect();
    let b = ctx.write_json("ne_policies.json", &policies)?;
    Ok((reports, vec![a, b]))
}

fn solve_ne_cmd(ctx: &Ctx, class_path: &Path) -> Result<Done> {
    let class = read_class(class_path)?.build()?;
    let (reports, artifacts) = solve_table(ctx, &class)?;
    let unconverged: Vec<usize> = (0..reports.len()).filter(|&i| !reports[i].converged).collect();
    let worst = reports.iter().map(|r| r.gap).fold(0.0, f64::max);
    let summary = json!({"models": reports.len(), "worst_gap": worst, "unconverged": unconverged});
    let mut done = Done::ok(artifacts, summary);
    if !unconverged.is_empty() {
        done.failure = Some(format!("{} models did not converge", unconverged.len()));
    }
    Ok(done)
}

fn ne_policies_for(ctx: &Ctx, class: &ModelClass, path: Option<&Path>) -> Result<(Vec<Policy>, Vec<String>)> {
    match path {
        Some(p) => {
            let policies = read_policies(p)?;
            if policies.len() != class.len() || policies.iter().any(|q| q.shape() != class.shape()) {
                return config_err("NE policy file does not match the class");
            }
            Ok((policies, Vec::new()))
        }
        None => {
            let (reports, artifacts) = solve_table(ctx, class)?;
            Ok((reports.into_iter().map(|r| r.policy).collect(), artifacts))
        }
    }
}

fn gap_monitor(class: &ModelClass, policies: &[Policy]) -> Result<Option<GapMonitor>> {
    let Some(truth) = class.true_model() else {
        return Ok(None);
    };
    use rayon::prelude::*;
    let gaps: Vec<f64> = policies
        .par_iter()
        .map(|p| ne_gap(truth.as_ref(), p).map(|g| g.max(0.0)))
        .collect::<Result<_>>()?;
    Ok(Some(GapMonitor::new(gaps)))
}

fn sampler_for(class: &ModelClass, seed: u64) -> Result<Sampler> {
    let Some(truth) = class.true_model() else {
        return config_err("class has no true model to sample from");
    };
    Ok(Sampler::new(Arc::clone(truth), seed))
}

fn run_elim(
    ctx: &Ctx,
    class_path: &Path,
    reference: &str,
    set: CandidateSet,
    ne_path: Option<&Path>,
) -> Result<Done> {
    let class = read_class(class_path)?.build()?;
    let cfg = ctx.elim_config(&class)?;
    let needs_ne = set == CandidateSet::Ne || reference.starts_with("ne:");
    let (table, mut artifacts) = if needs_ne {
        ne_policies_for(ctx, &class, ne_path)?
    } else {
        (Vec::new(), Vec::new())
    };
    let reference = match reference {
        "uniform" => Policy::uniform(class.shape()),
        r => match r.strip_prefix("ne:").and_then(|i| i.parse::<usize>().ok()) {
            Some(i) if i < class.len() => table[i].clone(),
            _ => return config_err(format!("bad reference '{r}' (use uniform or ne:INDEX)")),
        },
    };
    let mut candidates = vec![Candidate {
        policy: reference.clone(),
        owner: None,
    }];
    if set == CandidateSet::Ne {
        candidates.extend(table.iter().enumerate().map(|(i, p)| Candidate {
            policy: p.clone(),
            owner: Some(i),
        }));
    }
    let mut sampler = sampler_for(&class, ctx.seed)?;
    let survivors: Vec<usize> = (0..class.len()).collect();
    let call = ElimCall::standalone(cfg.delta);
    let out = model_elim(&reference, &class, &survivors, &cfg, &mut sampler, &candidates, &call)?;
    let trace = ElimTrace {
        rows: out.rows.clone(),
        rounds: Vec::new(),
    };
    trace.write_csv(&ctx.path("trace.csv"))?;
    artifacts.push("trace.csv".into());
    Ok(Done::ok(
        artifacts,
        json!({
            "survivors": out.survivors,
            "resolved": out.resolved,
            "final_delta": out.final_delta,
            "trajectories": out.trajectories,
        }),
    ))
}

#[derive(Serialize)]
struct DriverResult {
    status: DriverStatus,
    returned_model: Option<usize>,
    true_index: Option<usize>,
    exact_gap_in_true_model: Option<f64>,
    trajectories: u64,
    survivors: Vec<usize>,
    true_model_survived: Option<bool>,
    rounds: usize,
}

fn finish_driver(ctx: &Ctx, class: &ModelClass, out: DriverOutcome, mut artifacts: Vec<String>) -> Result<Done> {
    out.trace.write_csv(&ctx.path("trace.csv"))?;
    artifacts.push("trace.csv".into());
    let gap = match (&out.policy, class.true_model()) {
        (Some(p), Some(t)) => Some(ne_gap(t.as_ref(), p)?.max(0.0)),
        _ => None,
    };
    let result = DriverResult {
        status: out.status,
        returned_model: out.returned_model,
        true_index: class.true_index(),
        exact_gap_in_true_model: gap,
        trajectories: out.trajectories,
        survivors: out.survivors.clone(),
        true_model_survived: class.true_index().map(|t| out.trace.survived(t)),
        rounds: out.trace.rounds.len(),
    };
    artifacts.push(ctx.write_json("result.json", &result)?);
    if let Some(p) = &out.policy {
        artifacts.push(ctx.write_json("policy.json", p)?);
    }
    let summary = serde_json::to_value(&result)?;
    let mut done = Done::ok(artifacts, summary);
    if out.status == DriverStatus::RoundLimit {
        done.failure = Some("round limit reached without returning a policy".into());
    }
    Ok(done)
}

fn run_mebp(ctx: &Ctx, class_path: Option<&Path>, ne_path: Option<&Path>, trial: u64) -> Result<Done> {
    let mut artifacts = Vec::new();
    let generated = match class_path {
        Some(p) => read_class(p)?,
        None => {
            let g = generate(ctx, Kind::Linear)?;
            save_class(&ctx.path("class.mfgclass.json"), &g)?;
            artifacts.push("class.mfgclass.json".into());
            g
        }
    };
    let class = generated.build()?;
    let cfg = ctx.elim_config(&class)?;
    info!("eps0 = {:.3e}, eps_tilde = {:.3e}", cfg.eps0, cfg.eps_tilde);
    let (policies, more) = ne_policies_for(ctx, &class, ne_path)?;
    artifacts.extend(more);
    let monitor = gap_monitor(&class, &policies)?;
    let mut sampler = sampler_for(&class, derive_seed(ctx.seed, trial))?;
    let out = match mebp_heuristic(&class, &cfg, &mut sampler, &policies, monitor.as_ref()) {
        Ok(o) => o,
        Err(Error::AllEliminated(msg)) => {
            let done = Done {
                artifacts,
                failure: Some(format!("all models eliminated: {msg}")),
                summary: serde_json::Value::Null,
            };
            return Ok(done);
        }
        Err(e) => return Err(e),
    };
    finish_driver(ctx, &class, out, artifacts)
}

fn run_mebp_exact(ctx: &Ctx, class_path: &Path, trial: u64) -> Result<Done> {
    let class = read_class(class_path)?.build()?;
    let mut cfg = ctx.elim_config(&class)?;
    cfg.mode = CandidateMode::AllPolicies;
    let mut sampler = sampler_for(&class, derive_seed(ctx.seed, trial))?;
    let out = match mebp_exact(&class, &cfg, ctx.cfg.eps_bar, &mut sampler, &ctx.ne_config()) {
        Ok(o) => o,
        Err(Error::AllEliminated(msg)) => {
            return Ok(Done {
                artifacts: Vec::new(),
                failure: Some(format!("all models eliminated: {msg}")),
                summary: serde_json::Value::Null,
            })
        }
        Err(e) => return Err(e),
    };
    finish_driver(ctx, &class, out, Vec::new())
}

fn estimate_pmbed(ctx: &Ctx, class_path: &Path, eps: Option<f64>, type_two: bool, standard: bool) -> Result<Done> {
    let generated = read_class(class_path)?;
    let class = generated.build()?;
    let eps = eps.unwrap_or(match &generated {
        GeneratedClass::Hard(h) => h.spec.eps,
        _ => ctx.cfg.eps,
    });
    let opts = PmbedOptions {
        policy_samples: ctx.cfg.policy_samples,
        seed: ctx.seed,
        extra_policies: Vec::new(),
        type_two,
    };
    let estimate = pmbed_estimate(&class, eps, &opts)?;
    let shape = class.shape();
    let mut body = json!({
        "eps": eps,
        "partial_estimate": estimate.value,
        "policies_tried": estimate.policies_tried,
        "states_times_actions": shape.states * shape.actions,
        "best": estimate.best,
    });
    if standard {
        let GeneratedClass::Hard(hard) = &generated else {
            return config_err("--standard needs a hard-instance class (it supplies the density grid)");
        };
        let std_report = greedy_standard_sequence(&class, 1, eps, &hard.grid())?;
        body["standard_length"] = json!(std_report.length);
        body["standard"] = serde_json::to_value(&std_report)?;
    }
    let name = ctx.write_json("pmbed.json", &body)?;
    let summary = json!({"partial_estimate": estimate.value, "standard_length": body.get("standard_length")});
    Ok(Done::ok(vec![name], summary))
}

fn typed_uniform(mt: &dyn MultiTypeModel) -> Vec<Policy> {
    (0..mt.type_count())
        .map(|w| {
            let (s, a) = mt.type_shape(w);
            Policy::uniform(crate::model::Shape::new(mt.horizon(), s, a))
        })
        .collect()
}

fn lift_mt(ctx: &Ctx, class_path: &Path) -> Result<Done> {
    let generated = read_class(class_path)?;
    let mt: Arc<dyn MultiTypeModel> = Arc::new(multi_type(&generated)?.model());
    let lifted = lift(Arc::clone(&mt));
    let start = lift_policy(&lifted, &typed_uniform(mt.as_ref()))?;
    let report = solve_constrained_ne(&lifted, &ctx.ne_config(), &start)?;
    let typed = lower_policy(&lifted, &report.policy)?;
    let body = json!({
        "types": mt.type_count(),
        "state_offsets": lifted.state_offsets,
        "action_offsets": lifted.action_offsets,
        "uniform_constrained_gap": constrained_ne_gap(&lifted, &start)?,
        "uniform_typed_gaps": typed_ne_gaps(mt.as_ref(), &typed_uniform(mt.as_ref()))?,
        "ne_constrained_gap": report.gap,
        "ne_typed_gaps": typed_ne_gaps(mt.as_ref(), &typed)?,
        "ne_iterations": report.iterations,
        "ne_converged": report.converged,
    });
    let a = ctx.write_json("lift.json", &body)?;
    let b = ctx.write_json("lifted_ne_policy.json", &report.policy)?;
    Ok(Done::ok(vec![a, b], json!({"ne_constrained_gap": report.gap})))
}

fn mtsag_demo(ctx: &Ctx, class_path: &Path) -> Result<Done> {
    let generated = read_class(class_path)?;
    let mt: Arc<dyn MultiTypeModel> = Arc::new(multi_type(&generated)?.model());
    let lifted = lift(Arc::clone(&mt));
    let start = lift_policy(&lifted, &typed_uniform(mt.as_ref()))?;
    let report = solve_constrained_ne(&lifted, &ctx.ne_config(), &start)?;
    let joint = lower_policy(&lifted, &report.policy)?;
    let (br, _) = constrained_best_response(&lifted, &report.policy)?;
    let deviation = lower_policy(&lifted, &br)?.swap_remove(0);
    let name = "mtsag.csv";
    let mut w = csv::Writer::from_path(ctx.path(name))?;
    let mut rows = Vec::new();
    for &n in &ctx.cfg.populations {
        let pops = vec![n; mt.type_count()];
        let r = mtsag_simulate(mt.as_ref(), &pops, &joint, 0, &deviation, ctx.cfg.episodes, ctx.seed)?;
        w.serialize(r)?;
        rows.push(r);
    }
    w.flush()?;
    Ok(Done::ok(
        vec![name.into()],
        json!({"ne_constrained_gap": report.gap, "rows": rows}),
    ))
}

fn report(ctx: &Ctx, trace_path: &Path) -> Result<Done> {
    let rows = ElimTrace::read_csv(trace_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", trace_path.display())))?;
    let Some(last) = rows.last() else {
        return config_err("trace is empty");
    };
    let monotone = rows.windows(2).all(|w| w[1].models_remaining <= w[0].models_remaining);
    let body = json!({
        "rows": rows.len(),
        "rounds": rows.iter().map(|r| r.round).max(),
        "final_models_remaining": last.models_remaining,
        "final_norm_max_ne_gap": last.norm_max_ne_gap,
        "trajectories_total": last.trajectories_total,
        "models_remaining_monotone": monotone,
        "curve": rows.iter().map(|r| json!([r.trajectories_total, r.models_remaining, r.norm_max_ne_gap])).collect::<Vec<_>>(),
    });
    let name = ctx.write_json("report.json", &body)?;
    println!(
        "rows {} | final models {} | trajectories {} | final normalized gap {:.3e} | monotone {}",
        rows.len(),
        last.models_remaining,
        last.trajectories_total,
        last.norm_max_ne_gap,
        monotone
    );
    Ok(Done::ok(vec![name], body))
}
