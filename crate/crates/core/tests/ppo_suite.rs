mod common;

use proptest::prelude::*;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spiking_actor::ctf::{CtfEnv, Scenario};
use spiking_actor::neuron::NeuronParams;
use spiking_actor::ppo::{
    clipped_surrogate, collect_rollout, compute_advantages, gae, init_networks, max_ratio_deviation, ppo_update, train,
    Boundary, Environment, Optimizers, PpoConfig, TrainSettings,
};

#[test]
fn clip_at_unit_ratio_is_the_advantage() {
    for adv in [-2.0, -0.3, 0.0, 0.7, 5.0] {
        assert_eq!(clipped_surrogate(1.0, adv, 0.2), (adv, false));
    }
}

#[test]
fn clip_caps_gains_above_the_band() {
    let (v, clipped) = clipped_surrogate(2.0, 1.0, 0.2);
    assert!((v - 1.2).abs() < 1e-12);
    assert!(clipped);
}

#[test]
fn clip_keeps_pessimistic_branch_below_the_band() {
    let (v, clipped) = clipped_surrogate(0.5, -1.0, 0.2);
    assert!((v + 0.8).abs() < 1e-12);
    assert!(clipped);
}

proptest! {
    #[test]
    fn surrogate_never_exceeds_unclipped(ratio in 0.0f64..5.0, adv in -5.0f64..5.0, eps in 0.01f64..0.9) {
        prop_assert!(clipped_surrogate(ratio, adv, eps).0 <= ratio * adv + 1e-15);
    }
}

#[test]
fn ratio_is_one_at_collection_time() {
    let env = CtfEnv::new(default_map(), Scenario::default()).unwrap();
    let settings = TrainSettings::default();
    let (actor, critic) = init_networks(
        env.observation_dim(),
        env.action_heads(),
        &settings,
        NeuronParams::default(),
        5,
    )
    .unwrap();
    let heads = env.action_heads().to_vec();
    let buffer = collect_rollout(env, &actor, &critic, 600, 5).unwrap();
    assert_eq!(buffer.len(), 600);
    assert_eq!(max_ratio_deviation(&actor, &heads, &buffer).unwrap(), 0.0);

    let mut a = actor.clone();
    let mut c = critic.clone();
    let cfg = PpoConfig::default();
    let mut opt = Optimizers::new(&a, &c, &cfg);
    ppo_update(
        &mut a,
        &mut c,
        &mut opt,
        &heads,
        &buffer,
        &cfg,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    assert!(max_ratio_deviation(&a, &heads, &buffer).unwrap() > 0.0);
}

#[test]
fn gae_matches_hand_oracle() {
    // delta = [0.68, -0.11, 1.9]; A_t = delta_t + 0.72 * A_{t+1}
    let adv = gae(
        &[1.0, 0.0, 2.0],
        &[0.5, 0.2, 0.1],
        &[Boundary::Continue, Boundary::Continue, Boundary::Terminal],
        0.9,
        0.8,
    );
    for (a, want) in adv.iter().zip([1.58576, 1.258, 1.9]) {
        assert!((a - want).abs() < 1e-12, "{adv:?}");
    }
    let one = gae(&[1.0], &[0.0], &[Boundary::Terminal], 1.0, 1.0);
    assert_eq!(one, vec![1.0]);
}

#[test]
fn normalized_advantages_have_unit_moments() {
    let env = CtfEnv::new(default_map(), Scenario::default()).unwrap();
    let settings = TrainSettings::default();
    let (actor, critic) = init_networks(
        env.observation_dim(),
        env.action_heads(),
        &settings,
        NeuronParams::default(),
        1,
    )
    .unwrap();
    let buffer = collect_rollout(env, &actor, &critic, 1000, 1).unwrap();
    let (adv, returns) = compute_advantages(&buffer, 0.99, 0.95).unwrap();
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 1e-6 && (std - 1.0).abs() < 1e-6);
    assert_eq!(returns.len(), 1000);
}

#[test]
fn bandit_converges_to_rewarded_arm() {
    assert_eq!(bandit_greedy_action(0), 0);
}

#[test]
fn zero_budget_returns_initial_networks() {
    let settings = TrainSettings {
        total_steps: 0,
        ..TrainSettings::default()
    };
    let out = train(
        |_| Ok(Bandit),
        &PpoConfig::default(),
        &settings,
        NeuronParams::default(),
        4,
    )
    .unwrap();
    let (actor, critic) = init_networks(1, &[4], &settings, NeuronParams::default(), 4).unwrap();
    assert!(out.curve.is_empty());
    assert_eq!(out.actor, actor);
    assert_eq!(out.critic, critic);
}

#[test]
fn same_seed_gives_identical_runs() {
    let settings = TrainSettings {
        total_steps: 6000,
        eval_interval: 2000,
        eval_episodes: 5,
        ..TrainSettings::default()
    };
    let cfg = PpoConfig {
        steps_per_update: 1000,
        ..PpoConfig::default()
    };
    let map = default_map();
    let run = |n_envs| {
        let s = TrainSettings {
            n_envs,
            ..settings.clone()
        };
        train(
            |_| CtfEnv::new(map.clone(), Scenario::default()),
            &cfg,
            &s,
            NeuronParams::default(),
            11,
        )
        .unwrap()
    };
    for n_envs in [1, 3] {
        let (a, b) = (run(n_envs), run(n_envs));
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.curve.len(), 3);
    }
}
