//! Checks shared by the topical suites and the acceptance gate.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spiking_actor::ctf::red::Patrol;
use spiking_actor::ctf::{Action, CombatTable, CtfState, GameRules, MapSpec, Pos, RedKind, RedPolicy, Team, Terminal};
use spiking_actor::net::DenseNet;
use spiking_actor::neuron::{rate_hard, NeuronParams};
use spiking_actor::ppo::{Environment, Transition};
use spiking_actor::spikesim::empirical_rate;

pub fn default_map() -> Arc<MapSpec> {
    Arc::new(MapSpec::default_map())
}

/// Uniformly random legal blue actions.
pub fn random_blue(state: &CtfState, rng: &mut ChaCha8Rng) -> Vec<Option<Action>> {
    state
        .blue()
        .iter()
        .map(|a| a.alive.then(|| Action::ALL[rng.gen_range(0..Action::COUNT)]))
        .collect()
}

/// Everything observable about one episode under random blue play.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub terminal: Option<Terminal>,
    pub alive: Vec<(usize, usize)>,
}

pub fn random_episode(map: &Arc<MapSpec>, n: usize, red: RedKind, seed: u64) -> Trace {
    let rules = GameRules::default();
    let policy = RedPolicy::new(red, map, 4);
    let mut state = CtfState::reset(map.clone(), n, n, rules, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1);
    let mut trace = Trace {
        observations: vec![state.observe()],
        rewards: Vec::new(),
        terminal: None,
        alive: vec![(state.alive_count(Team::Blue), state.alive_count(Team::Red))],
    };
    while !state.is_terminal() {
        let actions = random_blue(&state, &mut rng);
        let out = state.step(&actions, &policy).unwrap();
        trace.observations.push(state.observe());
        trace.rewards.push(out.reward);
        trace
            .alive
            .push((state.alive_count(Team::Blue), state.alive_count(Team::Red)));
        trace.terminal = out.terminal;
    }
    trace
}

/// Fraction of 1v1 encounters a blue intruder survives: blue stands on red
/// territory next to a red defender on its home side.
pub fn intruder_survival(trials: u32) -> f64 {
    let map = default_map();
    let rules = GameRules::default();
    let (blue, red) = (Pos::new(5, 0), Pos::new(6, 0));
    assert_eq!(map.owner(blue), Some(Team::Red));
    let mut survived = 0u32;
    for seed in 0..trials as u64 {
        let mut s = CtfState::from_positions(map.clone(), &[blue], &[red], rules, seed).unwrap();
        let out = s
            .step_with_red_actions(&[Some(Action::Stay)], &[Some(Action::Stay)])
            .unwrap();
        assert_eq!(out.eliminated.len(), 1, "exactly one roll per adjacent pair");
        if s.blue()[0].alive {
            survived += 1;
        }
    }
    survived as f64 / trials as f64
}

/// The configured survival probability of that intruder.
pub fn intruder_survival_table() -> f64 {
    1.0 - CombatTable::default().reference_win(true, 0, 0)
}

/// Breadth-first distances to the nearest target cell over passable cells.
pub fn bfs_distance(map: &MapSpec, targets: &[Pos], from: Pos) -> Option<u32> {
    let mut seen = vec![false; (map.width() * map.height()) as usize];
    let idx = |p: Pos| (p.y * map.width() + p.x) as usize;
    let mut queue = VecDeque::from([(from, 0u32)]);
    seen[idx(from)] = true;
    while let Some((p, d)) = queue.pop_front() {
        if targets.contains(&p) {
            return Some(d);
        }
        for a in &Action::ALL[..4] {
            let q = a.apply(p);
            if map.in_bounds(q) && map.is_passable(q) && !seen[idx(q)] {
                seen[idx(q)] = true;
                queue.push_back((q, d + 1));
            }
        }
    }
    None
}

pub const CORRIDOR: &str = "bbbbbrrrrr\nbBbbbrrrRr\nbbbbbrrrrr\n";

/// Patrol from every red cell outside the band of an obstacle-free map.
/// Returns, per start, the shortest-path distance to the band after each
/// step until the band is reached (or 30 steps pass).
pub fn patrol_approach_paths() -> Vec<Vec<u32>> {
    let map = Arc::new(MapSpec::parse(CORRIDOR).unwrap().with_border_band(1));
    let patrol = Patrol::new(&map, 9);
    let policy = RedPolicy::Patrol(patrol.clone());
    let band = patrol.band().to_vec();
    let mut paths = Vec::new();
    for (start, _) in map
        .cells()
        .filter(|(p, _)| map.owner(*p) == Some(Team::Red) && !patrol.in_band(*p))
    {
        if start == map.flag(Team::Red) {
            continue;
        }
        let blue = Pos::new(0, 0);
        let mut s = CtfState::from_positions(map.clone(), &[blue], &[start], GameRules::default(), 3).unwrap();
        let mut path = vec![bfs_distance(&map, &band, start).unwrap()];
        for _ in 0..30 {
            if patrol.in_band(s.red()[0].pos) || s.is_terminal() {
                break;
            }
            s.step(&[Some(Action::Stay)], &policy).unwrap();
            path.push(bfs_distance(&map, &band, s.red()[0].pos).unwrap());
        }
        paths.push(path);
    }
    paths
}

/// One-step environment whose reward is 1 for action 0 and 0 otherwise.
#[derive(Debug, Clone, Default)]
pub struct Bandit;

impl Environment for Bandit {
    fn observation_dim(&self) -> usize {
        1
    }
    fn action_heads(&self) -> &[usize] {
        &[4]
    }
    fn reset(&mut self, _seed: u64) -> spiking_actor::Result<Vec<f64>> {
        Ok(vec![1.0])
    }
    fn step(&mut self, actions: &[usize]) -> spiking_actor::Result<Transition> {
        Ok(Transition {
            observation: vec![1.0],
            reward: if actions[0] == 0 { 1.0 } else { 0.0 },
            terminated: true,
            truncated: false,
        })
    }
}

/// Largest relative error between analytic and central-difference gradients
/// of `loss = Σ c_k · out_k` over every parameter of `net` at `obs`, counting
/// only parameters whose absolute error exceeds 1e-7, and the largest
/// absolute error.
pub fn max_gradient_error(net: &DenseNet, obs: &[f64], coeffs: &[f64]) -> (f64, f64) {
    let loss = |n: &DenseNet| -> f64 { n.predict(obs).unwrap().iter().zip(coeffs).map(|(o, c)| o * c).sum() };
    let (_, tape) = net.forward(obs).unwrap();
    let grads = net.backward(&tape, coeffs).unwrap().flatten();
    let (mut worst, mut worst_abs) = (0.0_f64, 0.0_f64);
    let mut k = 0;
    for l in 0..net.layers().len() {
        for which in 0..2 {
            let len = if which == 0 {
                net.layers()[l].weights().len()
            } else {
                net.layers()[l].biases().len()
            };
            for j in 0..len {
                let eps = 1e-6;
                let probe = |delta: f64| {
                    let mut n = net.clone();
                    let layer = &mut n.layers_mut()[l];
                    if which == 0 {
                        layer.weights_mut()[j] += delta;
                    } else {
                        layer.biases_mut()[j] += delta;
                    }
                    loss(&n)
                };
                let fd = (probe(eps) - probe(-eps)) / (2.0 * eps);
                let err = (grads[k] - fd).abs() / grads[k].abs().max(fd.abs()).max(1e-7);
                let abs_err = (grads[k] - fd).abs();
                worst_abs = worst_abs.max(abs_err);
                if abs_err > 1e-7 {
                    worst = worst.max(err);
                }
                k += 1;
            }
        }
    }
    (worst, worst_abs)
}

pub const FIDELITY_CURRENTS: [f64; 5] = [1.1, 1.5, 2.0, 5.0, 10.0];

/// `(i, dt, |empirical − analytic|, bound)` over a 10 time-unit window.
pub fn rate_fidelity_rows() -> Vec<(f64, f64, f64, f64)> {
    let p = NeuronParams::default();
    let mut rows = Vec::new();
    for &i in &FIDELITY_CURRENTS {
        for dt in [1e-3_f64, 5e-4, 2.5e-4] {
            let steps = (10.0 / dt).round() as u32;
            let exact = rate_hard(&p, i);
            let err = (empirical_rate(&p, i, dt, steps) - exact).abs();
            let bound = exact * exact * dt + 1.0 / (steps as f64 * dt);
            rows.push((i, dt, err, bound));
        }
    }
    rows
}

pub fn bandit_settings() -> (spiking_actor::ppo::PpoConfig, spiking_actor::ppo::TrainSettings) {
    let cfg = spiking_actor::ppo::PpoConfig {
        steps_per_update: 512,
        minibatch_size: 64,
        learning_rate: 1e-3,
        ..Default::default()
    };
    let settings = spiking_actor::ppo::TrainSettings {
        total_steps: 20_000,
        n_envs: 1,
        eval_interval: 0,
        eval_episodes: 1,
        ..Default::default()
    };
    (cfg, settings)
}

/// Train on [`Bandit`] for 20k steps and return the greedy action.
pub fn bandit_greedy_action(seed: u64) -> usize {
    let (cfg, settings) = bandit_settings();
    let out = spiking_actor::ppo::train(|_| Ok(Bandit), &cfg, &settings, NeuronParams::default(), seed).unwrap();
    assert_eq!(out.global_step, 20_000);
    spiking_actor::ppo::greedy_action(&out.actor.predict(&[1.0]).unwrap(), &[4])[0]
}

/// ReLU-likeness of the default soft curve over `[i_th + 1, i_th + 100]`:
/// worst `|rate − (i − i_th + 0.5)|`, worst unit-spacing slope error, and the
/// left end of the interval where that slope error occurs.
pub fn relu_shape() -> (f64, f64, f64) {
    use spiking_actor::neuron::{i_threshold, rate_soft};
    let p = NeuronParams::default();
    let ith = i_threshold(&p);
    let mut offset: f64 = 0.0;
    let (mut slope, mut at) = (0.0_f64, 0.0);
    for k in 1..=100 {
        let i = ith + k as f64;
        offset = offset.max((rate_soft(&p, i) - (i - ith + 0.5)).abs());
        if k < 100 {
            let err = (rate_soft(&p, i + 1.0) - rate_soft(&p, i) - 1.0).abs();
            if err > slope {
                (slope, at) = (err, i);
            }
        }
    }
    (offset, slope, at)
}

/// Worst gradient error over `count` random soft-ReLLIF nets with widths up
/// to 16-64-64-8, hidden biases scattered around the threshold. Returns the
/// same pair as [`max_gradient_error`].
pub fn gradient_certification(count: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut worst_abs) = (0.0_f64, 0.0_f64);
    for seed in 0..count {
        let dims = [
            rng.gen_range(2..=16),
            rng.gen_range(4..=64),
            rng.gen_range(4..=64),
            rng.gen_range(2..=8),
        ];
        let mut net = DenseNet::init(&dims, seed, NeuronParams::default()).unwrap();
        let n = net.layers().len();
        for layer in &mut net.layers_mut()[..n - 1] {
            layer.biases_mut().iter_mut().for_each(|b| *b = rng.gen_range(0.0..2.0));
        }
        let obs: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(0.0..1.0)).collect();
        let coeffs: Vec<f64> = (0..dims[3]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (rel, abs) = max_gradient_error(&net, &obs, &coeffs);
        worst = worst.max(rel);
        worst_abs = worst_abs.max(abs);
    }
    (worst, worst_abs)
}
