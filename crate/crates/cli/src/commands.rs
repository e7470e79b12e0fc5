use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use sessmarl::baselines::{CentralizedScenario, HeuristicPolicy, UserOnlyScenario};
use sessmarl::config::RunConfig;
use sessmarl::env::Environment;
use sessmarl::eval::{compare as compare_summaries, dp_oracle, snapped_policy_cost, EvaluationRecord, OracleInstance};
use sessmarl::exec::Execution;
use sessmarl::maddpg::{evaluate_many, Controller, EvalJob, LearningCurves, MultiAgentScenario, Scenario, Trainer};
use sessmarl::timeseries::{synth_series_with, Case, ColumnMap, SynthProfile};

use crate::runs::{self, RunManifest, CHECKPOINT_DIR};
use crate::{ConfigArgs, TrainMethod, UsageError};

pub fn validate(args: &ConfigArgs) -> Result<()> {
    let cfg = runs::load_config(args)?;
    println!("{}", cfg.to_json()?);
    Ok(())
}

fn progress_every(episodes: usize) -> usize {
    (episodes / 20).max(1)
}

fn run_trainer<S: Scenario>(mut t: Trainer<S>, dir: &Path, label: &str) -> Result<LearningCurves> {
    let every = progress_every(t.config().episodes);
    let total = t.config().episodes;
    let r = t.train_with(Some(dir), |ep, returns| {
        if ep % every == 0 || ep == total {
            let r: Vec<String> = returns.iter().map(|x| format!("{x:.3}")).collect();
            eprintln!("[{label}] episode {ep}/{total}: returns [{}]", r.join(", "));
        }
    });
    match r {
        Ok(c) => Ok(c.clone()),
        Err(e) => {
            // keep whatever was finished for inspection
            let _ = t.save_checkpoint(&dir.join("partial"));
            Err(e).with_context(|| format!("{label} training failed"))
        }
    }
}

fn fresh_or_resumed<S: Scenario>(
    scenario: S,
    cfg: &RunConfig,
    data: sessmarl::maddpg::TrainingData,
    seed: u64,
    dir: &Path,
    resume: bool,
) -> Result<Trainer<S>> {
    if resume && dir.join("manifest.json").exists() {
        eprintln!("resuming from {}", dir.display());
        Ok(Trainer::resume(scenario, cfg.train.clone(), data, seed, dir)?)
    } else {
        Ok(Trainer::new(scenario, cfg.train.clone(), data, seed)?)
    }
}

fn train_into(cfg: &RunConfig, method: TrainMethod, case: Case, dir: &Path, resume: bool) -> Result<()> {
    let data = runs::training_data(cfg, case)?;
    let env = Environment::new(cfg.environment.clone())?;
    let ckpt = dir.join(CHECKPOINT_DIR);
    match method {
        TrainMethod::Proposed => {
            let s = MultiAgentScenario::new(env, &cfg.train)?;
            let t = fresh_or_resumed(s, cfg, data, cfg.seed, &ckpt, resume)?;
            run_trainer(t, &ckpt, "proposed")?.write_csv(&dir.join("curves.csv"))?;
        }
        TrainMethod::Centralized => {
            let s = CentralizedScenario::new(env, &cfg.train)?;
            let t = fresh_or_resumed(s, cfg, data, cfg.seed, &ckpt, resume)?;
            run_trainer(t, &ckpt, "centralized")?.write_csv(&dir.join("curves.csv"))?;
        }
        TrainMethod::UserOnly => {
            let mut joined = LearningCurves::new(Vec::new());
            for i in 0..cfg.environment.buildings.len() {
                let s = UserOnlyScenario::new(&cfg.environment, i, &cfg.train)?;
                let sub = ckpt.join(format!("building_{}", i + 1));
                let seed = cfg.seed.wrapping_add(i as u64);
                let t = fresh_or_resumed(s, cfg, data.clone(), seed, &sub, resume)?;
                let c = run_trainer(t, &sub, &format!("user_only building_{}", i + 1))?;
                joined.agents.extend(c.agents.iter().cloned());
                if joined.returns.is_empty() {
                    joined.returns = vec![Vec::new(); c.len()];
                }
                for (row, r) in joined.returns.iter_mut().zip(&c.returns) {
                    row.extend(r);
                }
            }
            joined.write_csv(&dir.join("curves.csv"))?;
        }
    }
    Ok(())
}

fn method_from_str(s: &str) -> Result<TrainMethod> {
    Ok(match s {
        "proposed" => TrainMethod::Proposed,
        "user_only" => TrainMethod::UserOnly,
        "centralized" => TrainMethod::Centralized,
        other => bail!(UsageError(format!("unknown training method `{other}`"))),
    })
}

pub fn train(args: &ConfigArgs, method: Option<TrainMethod>, case: Option<Case>, resume: Option<&Path>) -> Result<()> {
    if let Some(dir) = resume {
        let (manifest, cfg) = runs::read_run(dir)?;
        let m = method_from_str(&manifest.method)?;
        if method.is_some_and(|x| x != m) || case.is_some_and(|c| c != manifest.case) {
            bail!(UsageError(format!(
                "{} holds a {} run on {}",
                dir.display(),
                manifest.method,
                manifest.case
            )));
        }
        train_into(&cfg, m, manifest.case, dir, true)?;
        println!("{}", dir.display());
        return Ok(());
    }
    let (Some(method), Some(case)) = (method, case) else {
        bail!(UsageError("--method and --case are required".into()));
    };
    let cfg = runs::load_config(args)?;
    let (dir, _) = runs::create_run_dir(&cfg, method, case)?;
    eprintln!("run directory: {}", dir.display());
    train_into(&cfg, method, case, &dir, false)?;
    println!("{}", dir.display());
    Ok(())
}

struct EvalTarget {
    method: String,
    case: Case,
    cfg: RunConfig,
    label: String,
    controller: Arc<dyn Controller>,
    without_sess: bool,
}

fn write_evaluation(out_dir: &Path, targets: &[EvalTarget], exec: Execution) -> Result<EvaluationRecord> {
    let jobs = targets
        .iter()
        .map(|t| {
            let mut env = Environment::new(t.cfg.environment.clone())?;
            if t.without_sess {
                env = env.without_sess();
            }
            Ok(EvalJob {
                controller: t.controller.clone(),
                env,
                window: runs::eval_window(&t.cfg, t.case)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let traces = evaluate_many(&jobs, exec)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (t, trace) in targets.iter().zip(&traces) {
        trace.write_csv(&out_dir.join(format!("trace_{}.csv", t.label)))?;
    }
    let record = EvaluationRecord::from_traces(targets[0].method.clone(), targets[0].case.to_string(), &traces)?;
    runs::write_json(&out_dir.join("metrics.json"), &record)?;
    Ok(record)
}

fn print_record(r: &EvaluationRecord) {
    let s = &r.summary;
    println!(
        "{} on {}: runs={} ATD={:.4} TEC={:.3} cost={:.4} (buildings {:?}, storage {:.4}, verbatim {:.4})",
        r.method, r.case, s.runs, s.atd, s.tec, s.cost_total_single, s.cost_buildings, s.cost_sess, s.cost_total_verbatim
    );
}

pub fn evaluate(args: &ConfigArgs, run_dirs: &[PathBuf], method: Option<&str>, case: Option<Case>) -> Result<()> {
    let (targets, out_root) = if run_dirs.is_empty() {
        match method {
            Some("heuristic") => {}
            Some(other) => bail!(UsageError(format!(
                "method `{other}` needs --run directories; only `heuristic` evaluates without training"
            ))),
            None => bail!(UsageError("give --run directories or --method heuristic".into())),
        }
        let Some(case) = case else {
            bail!(UsageError("--case is required for the heuristic".into()));
        };
        let cfg = runs::load_config(args)?;
        let out = cfg.output_dir.clone();
        let t = EvalTarget {
            method: "heuristic".into(),
            case,
            label: "heuristic".into(),
            controller: Arc::new(HeuristicPolicy {
                rules: cfg.heuristic.clone(),
            }),
            cfg,
            without_sess: false,
        };
        (vec![t], out)
    } else {
        let mut targets = Vec::new();
        for dir in run_dirs {
            let (m, cfg) = runs::read_run(dir)?;
            if case.is_some_and(|c| c != m.case) {
                bail!(UsageError(format!("{} was trained on {}", dir.display(), m.case)));
            }
            targets.push(target_from_run(dir, m, cfg)?);
        }
        let first = &targets[0];
        if targets.iter().any(|t| t.method != first.method || t.case != first.case) {
            bail!(UsageError("all --run directories must share one method and case".into()));
        }
        let out = match &args.out {
            Some(o) => o.clone(),
            None => run_dirs[0].parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
        };
        (targets, out)
    };
    let exec = if targets[0].cfg.evaluation.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let out_dir = out_root.join(format!("eval-{}-{}", targets[0].method, targets[0].case));
    let record = write_evaluation(&out_dir, &targets, exec)?;
    print_record(&record);
    println!("{}", out_dir.display());
    Ok(())
}

fn target_from_run(dir: &Path, m: RunManifest, cfg: RunConfig) -> Result<EvalTarget> {
    let policy = runs::policy_from_run(dir, &m, cfg.environment.buildings.len())?;
    Ok(EvalTarget {
        without_sess: m.method == "user_only",
        label: format!("seed{}", m.seed),
        method: m.method,
        case: m.case,
        cfg,
        controller: Arc::new(policy),
    })
}

fn read_records(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let file = if path.is_dir() { path.join("metrics.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| UsageError(format!("{}: {e}", file.display())))?;
    if let Ok(list) = serde_json::from_str::<Vec<EvaluationRecord>>(&text) {
        return Ok(list);
    }
    let one: EvaluationRecord =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", file.display())))?;
    Ok(vec![one])
}

pub fn compare(inputs: &[PathBuf], case: Option<Case>, out: Option<&Path>) -> Result<()> {
    let mut records = Vec::new();
    for p in inputs {
        records.extend(read_records(p)?);
    }
    if records.len() < 2 {
        bail!(UsageError("compare needs at least two evaluated methods".into()));
    }
    let label = match case {
        Some(c) => c.to_string(),
        None => records[0].case.clone(),
    };
    if let Some(r) = records.iter().find(|r| r.case != label) {
        bail!(UsageError(format!(
            "case mismatch: `{}` is labelled {}, expected {label}",
            r.method, r.case
        )));
    }
    let report = compare_summaries(label, records.into_iter().map(|r| r.summary).collect())?;
    print!("{}", report.to_text());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("report.txt"), report.to_text())?;
        report.write_csv(&dir.join("report.csv"))?;
        report.write_json(&dir.join("report.json"))?;
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| UsageError(format!("bad grid level `{x}`: {e}")).into())
        })
        .collect()
}

pub fn oracle(
    args: &ConfigArgs,
    case: Case,
    horizon: Option<usize>,
    grid: Option<&str>,
    lambda: Option<f64>,
    buildings: Option<usize>,
) -> Result<()> {
    let mut cfg = runs::load_config(args)?;
    if let Some(n) = buildings {
        if n == 0 || n > cfg.environment.buildings.len() {
            bail!(UsageError(format!(
                "--buildings must lie in 1..={}",
                cfg.environment.buildings.len()
            )));
        }
        cfg.environment.buildings.truncate(n);
        if let Some(t) = &mut cfg.environment.initial.temps {
            t.truncate(n);
        }
    }
    let horizon = horizon.unwrap_or(cfg.oracle.horizon);
    let grid = match grid {
        Some(g) => parse_grid(g)?,
        None => cfg.oracle.grid.clone(),
    };
    let lambda = lambda.unwrap_or(cfg.evaluation.lambda);
    let env = Environment::new(cfg.environment.clone())?;
    let window = runs::eval_window(&cfg, case)?;
    let inst = OracleInstance::new(env, &window, horizon, grid).map_err(|e| match e {
        sessmarl::Error::Invalid(m) => anyhow::Error::new(UsageError(m)),
        other => other.into(),
    })?;
    let exec = if cfg.evaluation.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let sol = dp_oracle(&inst, lambda, exec)?;
    let heuristic = snapped_policy_cost(
        &inst,
        &HeuristicPolicy {
            rules: cfg.heuristic.clone(),
        },
        lambda,
    )?;
    let out = serde_json::json!({
        "case": case,
        "horizon": horizon,
        "grid": inst.grid,
        "lambda": lambda,
        "nodes": inst.nodes().to_string(),
        "optimal_cost": sol.cost,
        "raw_actions": sol.raw_actions,
        "applied_actions": sol.applied_actions,
        "heuristic_snapped_cost": heuristic,
    });
    let text = serde_json::to_string_pretty(&out)?;
    println!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join(format!("oracle-{case}.json")), text + "\n")?;
    }
    Ok(())
}

pub fn synth_data(case: Case, out: &Path, seed: u64, hours: Option<usize>) -> Result<()> {
    let range = *sessmarl::timeseries::CaseRanges::default().get(case);
    let hours = hours.unwrap_or(range.hours() as usize);
    let series = synth_series_with(&SynthProfile::for_case(case), range.start, hours, seed)
        .map_err(|e| UsageError(e.to_string()))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    series.write_csv(out, &ColumnMap::default())?;
    println!("{}", out.display());
    Ok(())
}
