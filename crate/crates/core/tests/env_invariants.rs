use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessmarl::env::{project_actions, BuildingAction, EnvConfig, Environment, JointAction, SessParams};
use sessmarl::timeseries::{Case, CaseRanges, WindowMode, WindowSampler};

mod common;
use common::{series, window};

fn random_action(rng: &mut impl Rng, n: usize, wide: f64) -> JointAction {
    JointAction {
        buildings: (0..n)
            .map(|_| BuildingAction {
                p_g: rng.random_range(-wide..wide),
                p_d: rng.random_range(-wide..wide),
            })
            .collect(),
        charge: rng.random_range(-wide..wide),
    }
}

fn action_strategy() -> impl Strategy<Value = JointAction> {
    (prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64), 2), -3.0..8.0f64).prop_map(|(b, c)| JointAction {
        buildings: b.into_iter().map(|(p_g, p_d)| BuildingAction { p_g, p_d }).collect(),
        charge: c,
    })
}

proptest! {
    #[test]
    fn projection_is_idempotent(a in action_strategy(), soc in 0.0..10.0f64) {
        let cfg = EnvConfig::default();
        let once = project_actions(&a, soc, &cfg.sess, &cfg.buildings);
        let twice = project_actions(&once, soc, &cfg.sess, &cfg.buildings);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn projected_step_stays_feasible(a in action_strategy(), soc in 0.0..10.0f64, t in 10.0..30.0f64) {
        let env = Environment::new(EnvConfig::default()).unwrap();
        let w = window(Case::Spring, 1, 0, 96);
        let s = env.reset_with(&w, &[t, t - 1.0], soc).unwrap();
        let out = env.step(&s, &a, &w).unwrap();
        prop_assert!(env.constraint_violations(&out).is_empty(), "{:?}", env.constraint_violations(&out));
        let sess = SessParams::default();
        let d: f64 = out.info.discharge.iter().sum();
        let expect = soc + sess.delta_c * out.action.charge - d;
        prop_assert!((out.next_state.soc - expect).abs() < 1e-9);
    }

    #[test]
    fn already_feasible_actions_pass_through(
        p in prop::collection::vec((-5.0..5.0f64, -0.5..0.5f64), 2),
        c in 0.0..0.5f64,
    ) {
        // at half capacity small requests cannot hit either capacity limit
        let cfg = EnvConfig::default();
        let a = JointAction {
            buildings: p.into_iter().map(|(p_g, p_d)| BuildingAction { p_g, p_d }).collect(),
            charge: c,
        };
        prop_assert_eq!(project_actions(&a, 5.0, &cfg.sess, &cfg.buildings), a);
    }
}

#[test]
fn random_episodes_conserve_energy() {
    let env = Environment::new(EnvConfig::default()).unwrap();
    let series = series(Case::Winter, 9);
    let sampler = WindowSampler::new(CaseRanges::default(), 96);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sess = &env.config().sess;
    for episode in 0..50 {
        let w = sampler.sample(&series, Case::Winter, WindowMode::Train, &mut rng).unwrap();
        let wide = if episode % 2 == 0 { 6.0 } else { 2.0 };
        let trace = env
            .rollout(&w, "fuzz", |e, _, _| Ok(random_action(&mut rng, e.n_buildings(), wide)))
            .unwrap();
        assert_eq!(trace.len(), 96);
        let charged: f64 = trace.steps.iter().map(|s| sess.delta_c * s.charge).sum();
        let drawn: f64 = trace.steps.iter().flat_map(|s| s.discharge.iter()).sum();
        let soc_k = trace.steps.last().unwrap().soc_next;
        assert!((soc_k - trace.steps[0].soc - (charged - drawn)).abs() < 1e-9);
        for s in &trace.steps {
            assert!((0.0..=sess.soc_max).contains(&s.soc_next));
        }
    }
}

#[test]
fn observations_hide_other_state() {
    let env = Environment::new(EnvConfig::default()).unwrap();
    let w = window(Case::Summer, 3, 5, 96);
    let s = env.reset_with(&w, &[21.0, 25.0], 4.0).unwrap();
    let obs = env.observations(&s, &w).unwrap();
    assert_eq!(obs.len(), 3);
    assert!(obs.iter().all(|o| o.len() == 4));
    let mut other = s.clone();
    other.indoor_temps[1] = 10.0;
    other.p_bar *= 3.0;
    let obs2 = env.observations(&other, &w).unwrap();
    assert_eq!(obs[0], obs2[0]);
    assert_ne!(obs[1], obs2[1]);
    assert_ne!(obs[2], obs2[2]);
    assert_eq!(env.central_observation(&s, &w).unwrap().len(), 6);
}

#[test]
fn observing_after_the_horizon_fails() {
    let env = Environment::new(EnvConfig::default()).unwrap().with_horizon(2);
    let w = window(Case::Spring, 3, 0, 2);
    let mut s = env.reset(&w).unwrap();
    for _ in 0..2 {
        s = env.step(&s, &JointAction::zeros(2), &w).unwrap().next_state;
    }
    assert!(env.observations(&s, &w).is_err());
    assert!(env.step(&s, &JointAction::zeros(2), &w).is_err());
}

#[test]
fn disabled_storage_ignores_storage_actions() {
    let env = Environment::new(EnvConfig::default()).unwrap().without_sess();
    let w = window(Case::Winter, 3, 0, 96);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trace = env.rollout(&w, "fuzz", |e, _, _| Ok(random_action(&mut rng, e.n_buildings(), 6.0))).unwrap();
    for s in &trace.steps {
        assert_eq!(s.charge, 0.0);
        assert_eq!(s.soc_next, 0.0);
        assert!(s.p_d.iter().chain(&s.discharge).all(|&x| x == 0.0));
        assert_eq!(s.sess_reward, 0.0);
    }
}
