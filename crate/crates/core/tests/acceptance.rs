//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs every criterion by default; pass criterion numbers as arguments to
//! run a subset (`cargo test --test acceptance -- 4 5`). The stochastic
//! criteria share one set of desk-scale training runs whose episode count can
//! be raised with `SESSMARL_DESK_EPISODES`.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessmarl::baselines::{train_user_only, user_only_policy, HeuristicPolicy};
use sessmarl::config::RunConfig;
use sessmarl::env::{
    building_reward, building_step, discretize, objective_cost, project_actions, sess_reward, sess_step,
    BuildingAction, BuildingParams, CostVariant, EnvConfig, Environment, JointAction, RewardConfig, SessParams,
};
use sessmarl::eval::{cheap_charge_fraction, cp, dp_oracle, median, monetary_cost, snapped_policy_cost, OracleInstance};
use sessmarl::exec::Execution;
use sessmarl::maddpg::{
    actor_gradient, build_agents, evaluate, ActionScale, AgentBundle, AgentSpec, Batch, Controller, MultiAgentScenario,
    Scenario, TrainConfig, Trainer, TrainingData, Transition, TransitionSchema,
};
use sessmarl::nn::gradcheck::{relative_error, FD_STEP};
use sessmarl::nn::{grad_check, Activation, Head, LossSpec, MlpParams};
use sessmarl::timeseries::{Case, EpisodeWindow, PriceAverage, WindowSampler};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    let detail = detail.trim_end().to_string();
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn data_for(case: Case, horizon: usize) -> TrainingData {
    let cfg = RunConfig::default();
    TrainingData {
        series: Arc::new(cfg.dataset.series(case, Path::new(".")).unwrap()),
        sampler: WindowSampler::new(cfg.dataset.cases.clone(), horizon),
        case,
    }
}

fn eval_window(case: Case) -> EpisodeWindow {
    let d = data_for(case, 96);
    d.sampler.eval_window(&d.series, case).unwrap()
}

// ---------------------------------------------------------------- 1

/// (case, method, ATD, TEC, CP) reference rows.
const TABLE: [(usize, &str, f64, f64, f64); 18] = [
    (1, "Heuristics", 0.113, 21.260, 0.613),
    (1, "User Only", 0.491, 14.574, 0.833),
    (1, "Centralized", 0.501, 20.277, 0.977),
    (1, "Proposed(10)", 0.256, 14.237, 0.590),
    (1, "Proposed(20)", 0.184, 16.576, 0.573),
    (1, "Proposed(25)", 0.088, 17.746, 0.505),
    (2, "Heuristics", 0.109, 19.793, 0.605),
    (2, "User Only", 0.098, 11.791, 0.392),
    (2, "Centralized", 0.520, 15.531, 0.892),
    (2, "Proposed(10)", 0.117, 9.247, 0.346),
    (2, "Proposed(20)", 0.076, 11.438, 0.362),
    (2, "Proposed(25)", 0.081, 9.752, 0.324),
    (3, "Heuristics", 0.107, 22.200, 0.558),
    (3, "User Only", 0.181, 14.280, 0.420),
    (3, "Centralized", 0.917, 22.045, 0.997),
    (3, "Proposed(10)", 0.377, 12.698, 0.492),
    (3, "Proposed(20)", 0.189, 13.985, 0.418),
    (3, "Proposed(25)", 0.147, 14.645, 0.410),
];

fn c1_cp_reproduction() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for case in 1..=3 {
        let rows: Vec<_> = TABLE.iter().filter(|r| r.0 == case).collect();
        let atd_max = rows.iter().map(|r| r.2).fold(f64::MIN, f64::max);
        let tec_max = rows.iter().map(|r| r.3).fold(f64::MIN, f64::max);
        for r in rows {
            let got = cp(r.2, r.3, atd_max, tec_max).map_err(|e| e.to_string())?;
            let err = (got - r.4).abs();
            worst = worst.max(err);
            if err > 1e-3 {
                bad.push(format!("case {case} {}: {got:.4} vs {}", r.1, r.4));
            }
        }
    }
    within(Duration::from_secs(1), t0.elapsed())?;
    check(bad.is_empty(), format!("18 values, max |error| {worst:.2e} {}", bad.join("; ")))
}

// ---------------------------------------------------------------- 2

fn c2_dynamics() -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut n = 0;
    let mut eq = |name: &str, got: f64, want: f64| {
        n += 1;
        if (got - want).abs() > 1e-9 {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    let d1 = discretize(&BuildingParams::reference_1(), 1.0).unwrap();
    eq("building_step equilibrium", building_step(20.0, 20.0, 0.0, 0.0, &d1), 20.0);
    eq("building_step free drift", building_step(20.0, 10.0, 0.0, 0.0, &d1), 20.0 - 1.0 / 12.0);
    eq("building_step powered", building_step(20.0, 10.0, 1.0, 1.0, &d1), 20.05);

    let sess = SessParams::default();
    let (soc, d) = sess_step(5.0, 2.0, &[1.1], &sess).unwrap();
    eq("sess_step discharge", d[0], 1.0);
    eq("sess_step soc", soc, 5.8);
    eq("sess_step idle", sess_step(3.3, 0.0, &[0.0, 0.0], &sess).unwrap().0, 3.3);
    eq("sess_step charge from empty", sess_step(0.0, 5.0, &[], &sess).unwrap().0, 4.5);

    let two = [BuildingParams::reference_1(), BuildingParams::reference_2()];
    let draw = JointAction {
        buildings: vec![BuildingAction { p_g: 0.0, p_d: 1.1 }; 2],
        charge: 0.0,
    };
    let p = project_actions(&draw, 0.5, &sess, &two);
    eq("projection rationing b1", p.buildings[0].p_d, 0.275);
    eq("projection rationing b2", p.buildings[1].p_d, 0.275);
    let pd: Vec<f64> = p.buildings.iter().map(|b| b.p_d).collect();
    eq("projection rationing soc", sess_step(0.5, p.charge, &pd, &sess).unwrap().0, 0.0);
    let fill = JointAction {
        buildings: vec![BuildingAction { p_g: 0.0, p_d: 0.0 }; 2],
        charge: 5.0,
    };
    eq("projection overflow", project_actions(&fill, 9.5, &sess, &two).charge, 0.5 / 0.9);

    eq("price average", PriceAverage::new(50.0, 0.2).unwrap().update(60.0).p_bar, 52.0);
    eq("price average fixed point", PriceAverage::new(41.0, 0.7).unwrap().update(41.0).p_bar, 41.0);

    let rc = RewardConfig {
        alpha_temp: 10.0,
        alpha_energy: 1.0,
        ..RewardConfig::default()
    };
    eq("building_reward perfect", building_reward(20.0, 20.0, 0.05, 0.0, &rc), 0.0);
    eq("building_reward heating", building_reward(21.0, 20.0, 0.05, 2.0, &rc), -10.1);
    eq("building_reward cooling", building_reward(21.0, 20.0, 0.05, -2.0, &rc), -10.1);
    eq("sess_reward arbitrage", sess_reward(0.052, 0.048, 2.0, false, 0.0, &rc), 0.008);
    eq("sess_reward idle", sess_reward(0.052, 0.048, 0.0, false, 4.0, &rc), 0.0);
    let terminal = RewardConfig { beta: 0.5, ..rc };
    eq("sess_reward terminal", sess_reward(0.05, 0.05, 0.0, true, 3.0, &terminal), -1.5);

    within(Duration::from_secs(1), t0.elapsed())?;
    check(failures.is_empty(), format!("{n} hand values to 1e-9 {}", failures.join("; ")))
}

// ---------------------------------------------------------------- 3

fn random_net(rng: &mut ChaCha8Rng, act: Activation, bounded: bool) -> (MlpParams, Vec<f64>, LossSpec) {
    let n_in = rng.random_range(1..6);
    let n_out = rng.random_range(1..4);
    let mut sizes = vec![n_in];
    for _ in 0..rng.random_range(1..3) {
        sizes.push(rng.random_range(2..9));
    }
    sizes.push(n_out);
    let head = if bounded {
        Head::Bounded {
            lo: vec![-2.0; n_out],
            hi: vec![3.0; n_out],
        }
    } else {
        Head::Linear
    };
    let net = MlpParams::init(&sizes, act, head, 0.5, rng).unwrap();
    let x = (0..n_in).map(|_| rng.random_range(-1.5..1.5)).collect();
    let t: Vec<f64> = (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = if rng.random_bool(0.5) {
        LossSpec::HalfSquared(t)
    } else {
        LossSpec::Linear(t)
    };
    (net, x, loss)
}

fn toy_pair(seed: u64) -> (Vec<AgentBundle>, ActionScale, Batch) {
    let specs = vec![
        AgentSpec {
            name: "a".into(),
            obs_dim: 3,
            action_lo: vec![-5.0, -2.0],
            action_hi: vec![5.0, 2.0],
            reward_scale: 1.0,
        },
        AgentSpec {
            name: "b".into(),
            obs_dim: 2,
            action_lo: vec![0.0],
            action_hi: vec![4.0],
            reward_scale: 1.0,
        },
    ];
    let cfg = TrainConfig {
        hidden: vec![6, 5],
        final_init_scale: 0.5,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = build_agents(&specs, &cfg, &mut rng).unwrap();
    let schema = TransitionSchema {
        state_dim: 5,
        action_dim: 3,
        n_rewards: 2,
    };
    let rows: Vec<Transition> = (0..6)
        .map(|_| Transition {
            state: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: vec![rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..4.0)],
            rewards: vec![0.0, 0.0],
            next_state: vec![0.0; 5],
            terminal: false,
        })
        .collect();
    let refs: Vec<&Transition> = rows.iter().collect();
    (agents, ActionScale::from_specs(&specs), Batch::from_transitions(schema, &refs))
}

fn mean_q(agent: &AgentBundle, theta: &[f64], batch: &Batch, scale: &ActionScale) -> f64 {
    let mut actor = agent.actor.clone();
    actor.theta.copy_from_slice(theta);
    let mut total = 0.0;
    for r in 0..batch.len() {
        let own = actor.predict(&batch.state.row(r)[agent.obs_range.clone()]).unwrap();
        let mut a = batch.action.row(r).to_vec();
        a[agent.act_range.clone()].copy_from_slice(&own);
        let mut input = batch.state.row(r).to_vec();
        input.extend(a.iter().enumerate().map(|(j, &x)| (x - scale.mid[j]) / scale.half[j]));
        total += agent.critic.predict(&input).unwrap()[0];
    }
    total / batch.len() as f64
}

fn c3_gradients() -> Outcome {
    let t0 = Instant::now();
    let mut worst_smooth: f64 = 0.0;
    let mut nets = 0;
    // relu is excluded from the bound: a kink inside the difference stencil
    // is a property of the check, not of the backward pass
    for act in [Activation::Softplus, Activation::Tanh, Activation::Identity] {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (net, x, loss) = random_net(&mut rng, act, seed % 3 == 0);
            worst_smooth = worst_smooth.max(grad_check(&net, &x, &loss).map_err(|e| e.to_string())?);
            nets += 1;
        }
    }
    let mut worst_chain: f64 = 0.0;
    for seed in 0..5 {
        let (agents, scale, batch) = toy_pair(seed);
        for agent in &agents {
            let (grads, _) = actor_gradient(agent, &batch, &scale).map_err(|e| e.to_string())?;
            let mut theta = agent.actor.theta.clone();
            for k in 0..theta.len() {
                let orig = theta[k];
                theta[k] = orig + FD_STEP;
                let up = mean_q(agent, &theta, &batch, &scale);
                theta[k] = orig - FD_STEP;
                let down = mean_q(agent, &theta, &batch, &scale);
                theta[k] = orig;
                worst_chain = worst_chain.max(relative_error(grads[k], -(up - down) / (2.0 * FD_STEP)));
            }
        }
    }
    within(Duration::from_secs(30), t0.elapsed())?;
    check(
        worst_smooth < 1e-4 && worst_chain < 1e-4,
        format!("{nets} networks max rel err {worst_smooth:.2e}; actor chain {worst_chain:.2e}"),
    )
}

// ---------------------------------------------------------------- 4

fn joint(v: &[f64]) -> JointAction {
    let n = (v.len() - 1) / 2;
    JointAction {
        buildings: (0..n)
            .map(|i| BuildingAction {
                p_g: v[2 * i],
                p_d: v[2 * i + 1],
            })
            .collect(),
        charge: v[2 * n],
    }
}

/// Rolls every grid sequence through the environment and scores the trace.
fn brute_force(env: &Environment, w: &EpisodeWindow, grid: &[f64], horizon: usize, lambda: f64) -> f64 {
    let env = env.clone().with_horizon(horizon);
    let w = w.truncated(horizon);
    let dim = 2 * env.n_buildings() + 1;
    let total = dim * horizon;
    let mut digits = vec![0usize; total];
    let mut best = f64::INFINITY;
    loop {
        let seq: Vec<JointAction> = digits
            .chunks(dim)
            .map(|c| joint(&c.iter().map(|&d| grid[d]).collect::<Vec<_>>()))
            .collect();
        let trace = env.rollout(&w, "enum", |_, s, _| Ok(seq[s.k].clone())).unwrap();
        best = best.min(objective_cost(&trace, lambda, CostVariant::SingleCount).unwrap());
        let mut pos = total;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < grid.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn oracle_env(n: usize, soc: f64) -> Environment {
    let mut cfg = EnvConfig::default();
    cfg.buildings.truncate(n);
    cfg.initial.soc = soc;
    Environment::new(cfg).unwrap()
}

fn c4_oracle() -> Outcome {
    let t0 = Instant::now();
    let lambda = RunConfig::default().evaluation.lambda;
    let grid = vec![-1.0, 0.0, 1.0];

    // small trained policies to snap
    let tiny = TrainConfig {
        episodes: 4,
        batch_size: 16,
        hidden: vec![16, 16],
        ..TrainConfig::default()
    };
    let env96 = Environment::new(EnvConfig::default()).unwrap().with_horizon(24);
    let mut t = Trainer::new(
        MultiAgentScenario::new(env96.clone(), &tiny).unwrap(),
        tiny.clone(),
        data_for(Case::Spring, 24),
        3,
    )
    .unwrap();
    t.train(None).map_err(|e| e.to_string())?;
    let mut community = EnvConfig::default();
    community.horizon = 24;
    let uo = train_user_only(&community, &data_for(Case::Spring, 24), &tiny, 3, None).map_err(|e| e.to_string())?;
    let controllers: Vec<Box<dyn Controller>> = vec![
        Box::new(HeuristicPolicy::default()),
        Box::new(t.policy()),
        Box::new(user_only_policy(&uo).map_err(|e| e.to_string())?),
    ];

    let mut instances = 0;
    let mut mismatches = Vec::new();
    let mut beaten = Vec::new();
    for (ci, case) in Case::ALL.into_iter().enumerate() {
        let w = eval_window(case);
        // two buildings: every horizon the enumeration bound admits
        for h in 1..=2 {
            for soc in [0.0, 4.0] {
                let env = oracle_env(2, soc);
                let inst = OracleInstance::new(env.clone(), &w, h, grid.clone()).map_err(|e| e.to_string())?;
                let sol = dp_oracle(&inst, lambda, Execution::Parallel).map_err(|e| e.to_string())?;
                let bf = brute_force(&env, &w, &grid, h, lambda);
                instances += 1;
                if sol.cost != bf {
                    mismatches.push(format!("{case} h={h}: {} vs {bf}", sol.cost));
                }
                for c in &controllers {
                    let snapped = snapped_policy_cost(&inst, c.as_ref(), lambda).map_err(|e| e.to_string())?;
                    if snapped < sol.cost {
                        beaten.push(format!("{} on {case} h={h}: {snapped} < {}", c.method(), sol.cost));
                    }
                }
            }
        }
        // one building: horizons 3 and 4
        for h in 3..=4 {
            let env = oracle_env(1, 2.0 * ci as f64);
            let inst = OracleInstance::new(env.clone(), &w, h, grid.clone()).map_err(|e| e.to_string())?;
            let sol = dp_oracle(&inst, lambda, Execution::Parallel).map_err(|e| e.to_string())?;
            let bf = brute_force(&env, &w, &grid, h, lambda);
            instances += 1;
            if sol.cost != bf {
                mismatches.push(format!("{case} n=1 h={h}: {} vs {bf}", sol.cost));
            }
            let h_cost = snapped_policy_cost(&inst, &HeuristicPolicy::default(), lambda).map_err(|e| e.to_string())?;
            if h_cost < sol.cost {
                beaten.push(format!("heuristic on {case} n=1 h={h}"));
            }
        }
    }
    within(Duration::from_secs(120), t0.elapsed())?;
    check(
        mismatches.is_empty() && beaten.is_empty(),
        format!(
            "{instances} instances exact; 3 snapped policies never below optimum {}{}",
            mismatches.join("; "),
            beaten.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 5

fn c5_fuzz() -> Outcome {
    let t0 = Instant::now();
    let env = Environment::new(EnvConfig::default()).unwrap();
    let cfg = env.config().clone();
    let sess = cfg.sess;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let windows: Vec<EpisodeWindow> = Case::ALL.into_iter().map(eval_window).collect();
    let mut steps = 0usize;
    let mut episodes = 0usize;
    let mut violations = Vec::new();
    let mut worst_identity: f64 = 0.0;
    while steps < 100_000 {
        let w = &windows[episodes % windows.len()];
        let temps: Vec<f64> = cfg.buildings.iter().map(|b| b.t_target + rng.random_range(-3.0..3.0)).collect();
        let soc0 = rng.random_range(0.0..=sess.soc_max);
        let mut state = env.reset_with(w, &temps, soc0).unwrap();
        let (mut charged, mut drawn) = (0.0, 0.0);
        for _ in 0..env.horizon() {
            let raw = JointAction {
                buildings: cfg
                    .buildings
                    .iter()
                    .map(|b| BuildingAction {
                        p_g: rng.random_range(2.0 * b.p_g_min - 1.0..2.0 * b.p_g_max + 1.0),
                        p_d: rng.random_range(-2.0..2.0 * b.p_d_max + 1.0),
                    })
                    .collect(),
                charge: rng.random_range(-2.0..2.0 * sess.c_max),
            };
            let soc = state.soc;
            let out = env.step(&state, &raw, w).unwrap();
            let a = &out.action;
            let d: Vec<f64> = a.buildings.iter().map(|b| sess.discharge_of(b.p_d)).collect();
            for (b, (act, di)) in cfg.buildings.iter().zip(a.buildings.iter().zip(&d)) {
                if !(b.p_g_min..=b.p_g_max).contains(&act.p_g) || !(b.p_d_min..=b.p_d_max).contains(&act.p_d) {
                    violations.push(format!("power bounds at step {steps}"));
                }
                if !(0.0..=sess.d_max_per_building).contains(di) {
                    violations.push(format!("discharge {di} at step {steps}"));
                }
            }
            if !(0.0..=sess.c_max).contains(&a.charge) {
                violations.push(format!("charge {} at step {steps}", a.charge));
            }
            let next = out.next_state.soc;
            if !(0.0..=sess.soc_max).contains(&next) {
                violations.push(format!("soc {next} at step {steps}"));
            }
            let step_identity = (next - (soc + sess.delta_c * a.charge - d.iter().sum::<f64>())).abs();
            if step_identity > 1e-9 {
                violations.push(format!("soc update off by {step_identity:e} at step {steps}"));
            }
            charged += sess.delta_c * a.charge;
            drawn += d.iter().sum::<f64>();
            state = out.next_state;
            steps += 1;
        }
        let identity = ((state.soc - soc0) - (charged - drawn)).abs();
        worst_identity = worst_identity.max(identity);
        if identity > 1e-9 {
            violations.push(format!("episode {episodes} accounting off by {identity:e}"));
        }
        episodes += 1;
        if violations.len() > 20 {
            break;
        }
    }
    within(Duration::from_secs(60), t0.elapsed())?;
    check(
        violations.is_empty(),
        format!(
            "{steps} steps over {episodes} episodes, worst accounting residual {worst_identity:.1e} {}",
            violations.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 6

fn checkpoint_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if p.is_dir() {
            out.extend(checkpoint_bytes(&p).into_iter().map(|(k, v)| (format!("{name}/{k}"), v)));
        } else {
            out.push((name, std::fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

const REPRO_EPISODES: usize = 20;

fn c6_reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let full = RunConfig::default();
    let cfg = TrainConfig {
        episodes: REPRO_EPISODES,
        checkpoint_every: 10,
        ..full.train.clone()
    };
    let env = Environment::new(full.environment.clone()).unwrap();
    let run = |dir: &Path| -> Result<(sessmarl::maddpg::LearningCurves, Duration), String> {
        let t0 = Instant::now();
        let mut t = Trainer::new(
            MultiAgentScenario::new(env.clone(), &cfg).unwrap(),
            cfg.clone(),
            data_for(Case::Winter, env.horizon()),
            7,
        )
        .map_err(|e| e.to_string())?;
        let c = t.train(Some(dir)).map_err(|e| e.to_string())?.clone();
        Ok((c, t0.elapsed()))
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (ca, ta) = run(&a)?;
    let (cb, _) = run(&b)?;
    let same_curves = ca == cb;
    let same_ckpt = checkpoint_bytes(&a) == checkpoint_bytes(&b);

    let smoke = full.clone().smoke();
    let t0 = Instant::now();
    let env_s = Environment::new(smoke.environment.clone()).unwrap();
    let mut s = Trainer::new(
        MultiAgentScenario::new(env_s.clone(), &smoke.train).unwrap(),
        smoke.train.clone(),
        data_for(Case::Winter, env_s.horizon()),
        smoke.seed,
    )
    .map_err(|e| e.to_string())?;
    s.train(Some(&tmp.path().join("smoke"))).map_err(|e| e.to_string())?;
    let smoke_time = t0.elapsed();

    // the full profile is the same loop run for more episodes
    let per_episode = ta.as_secs_f64() / REPRO_EPISODES as f64;
    let projected = per_episode * full.train.episodes as f64;
    check(
        same_curves && same_ckpt && smoke_time < Duration::from_secs(10) && projected < 30.0 * 60.0,
        format!(
            "curves identical {same_curves}, checkpoints identical {same_ckpt}; smoke {smoke_time:.2?}; \
             full profile projected {:.1} min ({per_episode:.3} s/episode)",
            projected / 60.0
        ),
    )
}

// ---------------------------------------------------------------- 7-9

const DESK_SEEDS: [u64; 3] = [0, 1, 2];

fn desk_episodes() -> usize {
    std::env::var("SESSMARL_DESK_EPISODES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(200)
}

struct DeskRun {
    proposed_cost: f64,
    user_only_cost: f64,
    cheap_fraction: Option<f64>,
    returns: Vec<Vec<f64>>,
}

struct Desk {
    episodes: usize,
    runs: Vec<(Case, Vec<DeskRun>)>,
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let episodes = desk_episodes();
        let base = RunConfig::default();
        let cfg = TrainConfig {
            episodes,
            ..base.train.clone()
        };
        let env = Environment::new(base.environment.clone()).unwrap();
        let runs = Case::ALL
            .into_iter()
            .map(|case| {
                let data = data_for(case, env.horizon());
                let w = eval_window(case);
                let per_seed = DESK_SEEDS
                    .iter()
                    .map(|&seed| {
                        let mut t = Trainer::new(
                            MultiAgentScenario::new(env.clone(), &cfg).unwrap(),
                            cfg.clone(),
                            data.clone(),
                            seed,
                        )
                        .unwrap();
                        t.train(None).unwrap();
                        let trace = evaluate(&t.policy(), &env, &w).unwrap();
                        let uo = train_user_only(&base.environment, &data, &cfg, seed, None).unwrap();
                        let uo_trace =
                            evaluate(&user_only_policy(&uo).unwrap(), &env.clone().without_sess(), &w).unwrap();
                        DeskRun {
                            proposed_cost: monetary_cost(&trace).total_single,
                            user_only_cost: monetary_cost(&uo_trace).total_single,
                            cheap_fraction: cheap_charge_fraction(&trace),
                            returns: t.curves().returns.clone(),
                        }
                    })
                    .collect();
                (case, per_seed)
            })
            .collect();
        Desk { episodes, runs }
    })
}

fn c7_cost_saving() -> Outcome {
    let d = desk();
    let mut wins = 0;
    let mut parts = Vec::new();
    for (case, runs) in &d.runs {
        let p = median(&runs.iter().map(|r| r.proposed_cost).collect::<Vec<_>>());
        let u = median(&runs.iter().map(|r| r.user_only_cost).collect::<Vec<_>>());
        let saving = 1.0 - p / u;
        if saving >= 0.02 {
            wins += 1;
        }
        parts.push(format!("{case} {:+.2}% ({p:.2} vs {u:.2})", 100.0 * saving));
    }
    check(
        wins >= 2,
        format!("{} episodes, median saving {}; {wins}/3 cases at >= 2%", d.episodes, parts.join(", ")),
    )
}

fn c8_cheap_charging() -> Outcome {
    let d = desk();
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, runs) in &d.runs {
        // a storage agent that never charges has not learned the behavior
        let m = median(&runs.iter().map(|r| r.cheap_fraction.unwrap_or(0.0)).collect::<Vec<_>>());
        ok &= m >= 0.7;
        parts.push(format!("{case} {:.1}%", 100.0 * m));
    }
    check(ok, format!("median share bought below average price: {}", parts.join(", ")))
}

fn c9_convergence() -> Outcome {
    let d = desk();
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, runs) in &d.runs {
        let n_agents = runs[0].returns[0].len();
        let mut gains = Vec::new();
        for a in 0..n_agents {
            let diffs: Vec<f64> = runs
                .iter()
                .map(|r| {
                    let col: Vec<f64> = r.returns.iter().map(|row| row[a]).collect();
                    let first = col[..10].iter().sum::<f64>() / 10.0;
                    let tail = &col[col.len().saturating_sub(50)..];
                    tail.iter().sum::<f64>() / tail.len() as f64 - first
                })
                .collect();
            let m = median(&diffs);
            ok &= m > 0.0;
            gains.push(format!("{m:+.2}"));
        }
        parts.push(format!("{case} [{}]", gains.join(", ")));
    }
    check(ok, format!("median gain of last-50 over first-10 mean return: {}", parts.join(" ")))
}

// ---------------------------------------------------------------- 10

fn c10_decentralization() -> Outcome {
    let cfg = TrainConfig {
        episodes: 3,
        batch_size: 16,
        hidden: vec![16, 16],
        ..TrainConfig::default()
    };
    let env = Environment::new(EnvConfig::default()).unwrap().with_horizon(24);
    let mut t = Trainer::new(
        MultiAgentScenario::new(env.clone(), &cfg).unwrap(),
        cfg,
        data_for(Case::Summer, 24),
        10,
    )
    .unwrap();
    t.train(None).map_err(|e| e.to_string())?;
    let policy = t.policy();
    let w = eval_window(Case::Summer);
    let s = env.reset_with(&w, &[22.0, 19.5], 4.0).unwrap();
    let base_obs = t.scenario().observe(&s, &w).unwrap();
    let base = policy.local_actions(&base_obs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut changed = 0;
    for _ in 0..100 {
        let i = rng.random_range(0..base_obs.len());
        let mut obs = base_obs.clone();
        for (j, o) in obs.iter_mut().enumerate() {
            if j != i {
                for x in o.iter_mut() {
                    *x += rng.random_range(-5.0..5.0);
                }
            }
        }
        let a = policy.local_actions(&obs).unwrap();
        if a[i] != base[i] {
            changed += 1;
        }
    }
    check(changed == 0, format!("{changed}/100 perturbations changed the agent's own action"))
}

// ----------------------------------------------------------------

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "CP reproduction", c1_cp_reproduction),
    (2, "dynamics correctness", c2_dynamics),
    (3, "gradient fidelity", c3_gradients),
    (4, "oracle consistency", c4_oracle),
    (5, "invariant fuzzing", c5_fuzz),
    (6, "reproducibility", c6_reproducibility),
    (7, "cost saving vs user-only", c7_cost_saving),
    (8, "charging at low prices", c8_cheap_charging),
    (9, "convergence shape", c9_convergence),
    (10, "decentralized execution", c10_decentralization),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, f) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
