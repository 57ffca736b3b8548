mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use spiking_actor::ctf::render::parse_agents;
use spiking_actor::ctf::{
    render_text, Action, Agent, CtfEnv, CtfState, GameRules, MapSpec, Pos, RedKind, RedPolicy, Scenario, Team, Terminal,
};
use spiking_actor::ppo::Environment;
use spiking_actor::Error;

#[test]
fn same_seed_same_trajectory() {
    let map = default_map();
    for red in [RedKind::RandomWalk, RedKind::Patrol] {
        for seed in 0..20 {
            assert_eq!(random_episode(&map, 2, red, seed), random_episode(&map, 2, red, seed));
        }
    }
}

#[test]
fn different_seeds_diverge() {
    let map = default_map();
    let a = random_episode(&map, 1, RedKind::RandomWalk, 1);
    let b = random_episode(&map, 1, RedKind::RandomWalk, 2);
    assert_ne!(a, b);
}

#[test]
fn reset_places_agents_on_own_territory() {
    let map = default_map();
    for seed in 0..50 {
        let s = CtfState::reset(map.clone(), 1, 1, GameRules::default(), seed).unwrap();
        assert_eq!(s.alive_count(Team::Blue) + s.alive_count(Team::Red), 2);
        assert_eq!(map.owner(s.blue()[0].pos), Some(Team::Blue));
        assert_eq!(map.owner(s.red()[0].pos), Some(Team::Red));
    }
}

#[test]
fn overfull_spawn_zone_is_rejected() {
    let map = Arc::new(MapSpec::parse("bBsrSRr\n").unwrap());
    let err = CtfState::reset(map, 1, 2, GameRules::default(), 0).unwrap_err();
    assert!(matches!(err, Error::SpawnOverfull { team: "red", .. }), "{err}");
}

#[test]
fn terminal_is_exclusive_and_final() {
    let map = default_map();
    let policy = RedPolicy::new(RedKind::RandomWalk, &map, 4);
    for seed in 0..200 {
        let trace = random_episode(&map, 2, RedKind::RandomWalk, seed);
        let terminal = trace.terminal.expect("episodes always end");
        assert!(trace.rewards.len() <= GameRules::default().max_steps as usize);
        let last = *trace.rewards.last().unwrap();
        let expected = match terminal {
            Terminal::FlagCapture => 1.0,
            Terminal::Defeated | Terminal::LostFlag => -1.0,
            Terminal::TimeUp => 0.0,
        };
        assert_eq!(last, expected);
        assert!(trace.rewards[..trace.rewards.len() - 1].iter().all(|&r| r == -0.001));
    }
    let mut s = CtfState::reset(
        map.clone(),
        1,
        1,
        GameRules {
            max_steps: 1,
            ..GameRules::default()
        },
        0,
    )
    .unwrap();
    s.step(&[Some(Action::Stay)], &policy).unwrap();
    assert!(s.is_terminal());
    assert!(matches!(
        s.step(&[Some(Action::Stay)], &policy),
        Err(Error::EpisodeTerminated)
    ));
}

#[test]
fn alive_counts_never_increase_and_flags_stay() {
    let map = default_map();
    for seed in 0..200 {
        let trace = random_episode(&map, 2, RedKind::Patrol, seed);
        for w in trace.alive.windows(2) {
            assert!(w[1].0 <= w[0].0 && w[1].1 <= w[0].1);
        }
        let flags: Vec<&[f64]> = trace.observations.iter().map(|o| &o[o.len() - 4..]).collect();
        assert!(flags.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn observations_are_normalized() {
    let map = default_map();
    for seed in 0..50 {
        let trace = random_episode(&map, 2, RedKind::RandomWalk, seed);
        for obs in &trace.observations {
            assert_eq!(obs.len(), CtfState::observation_len(2, 2));
            assert!(obs.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn permuting_red_agents_permutes_their_slots() {
    let map = default_map();
    let (b, r1, r2) = (Pos::new(0, 0), Pos::new(9, 0), Pos::new(9, 9));
    let a = CtfState::from_positions(map.clone(), &[b], &[r1, r2], GameRules::default(), 0).unwrap();
    let z = CtfState::from_positions(map, &[b], &[r2, r1], GameRules::default(), 0).unwrap();
    let (oa, oz) = (a.observe(), z.observe());
    assert_eq!(oa[..3], oz[..3]);
    assert_eq!(oa[3..6], oz[6..9]);
    assert_eq!(oa[6..9], oz[3..6]);
    assert_eq!(oa[9..], oz[9..]);
}

#[test]
fn eliminated_agents_keep_last_position() {
    let map = default_map();
    let mut s = CtfState::from_positions(
        map,
        &[Pos::new(0, 0), Pos::new(1, 0)],
        &[Pos::new(9, 9)],
        GameRules::default(),
        0,
    )
    .unwrap();
    s.set_agent(
        Team::Blue,
        1,
        Agent {
            pos: Pos::new(1, 0),
            alive: false,
        },
    );
    let obs = s.observe();
    assert_eq!(&obs[3..6], &[1.0 / 9.0, 0.0, 0.0]);
}

#[test]
fn no_contact_means_no_elimination() {
    let map = default_map();
    for seed in 0..300 {
        let mut s = CtfState::reset(map.clone(), 2, 2, GameRules::default(), seed).unwrap();
        let policy = RedPolicy::new(RedKind::RandomWalk, &map, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while !s.is_terminal() {
            let before: Vec<Agent> = s.blue().iter().chain(s.red()).copied().collect();
            let out = s.step(&random_blue(&s, &mut rng), &policy).unwrap();
            for (team, k) in out.eliminated {
                let me = s.team(team)[k].pos;
                let foes_before = match team {
                    Team::Blue => &before[s.blue().len()..],
                    Team::Red => &before[..s.blue().len()],
                };
                let foes_now = s.team(team.opponent());
                let contact = foes_now
                    .iter()
                    .zip(foes_before)
                    .any(|(now, then)| then.alive && now.pos.is_adjacent(me));
                assert!(contact, "agent eliminated without an adjacent opponent");
            }
        }
    }
}

#[test]
fn scripted_flag_capture() {
    let map = default_map();
    let red_flag = map.flag(Team::Red);
    let start = Pos::new(red_flag.x - 1, red_flag.y);
    let mut s = CtfState::from_positions(map, &[start], &[Pos::new(9, 9)], GameRules::default(), 0).unwrap();
    let out = s
        .step_with_red_actions(&[Some(Action::Right)], &[Some(Action::Stay)])
        .unwrap();
    assert_eq!(out.terminal, Some(Terminal::FlagCapture));
    assert_eq!(out.reward, 1.0);
}

#[test]
fn moves_into_obstacles_or_shared_cells_stay() {
    let map = default_map();
    // (2, 2) is an obstacle on the default map.
    let mut s = CtfState::from_positions(
        map.clone(),
        &[Pos::new(2, 1)],
        &[Pos::new(9, 9)],
        GameRules::default(),
        0,
    )
    .unwrap();
    s.step_with_red_actions(&[Some(Action::Down)], &[Some(Action::Stay)])
        .unwrap();
    assert_eq!(s.blue()[0].pos, Pos::new(2, 1));
    let mut s = CtfState::from_positions(
        map,
        &[Pos::new(3, 5), Pos::new(5, 5)],
        &[Pos::new(9, 9)],
        GameRules::default(),
        0,
    )
    .unwrap();
    s.step_with_red_actions(&[Some(Action::Right), Some(Action::Left)], &[Some(Action::Stay)])
        .unwrap();
    assert_eq!((s.blue()[0].pos, s.blue()[1].pos), (Pos::new(3, 5), Pos::new(5, 5)));
}

#[test]
fn actions_for_dead_or_missing_agents_are_rejected() {
    let map = default_map();
    let mut s = CtfState::from_positions(
        map,
        &[Pos::new(0, 0), Pos::new(1, 0)],
        &[Pos::new(9, 9)],
        GameRules::default(),
        0,
    )
    .unwrap();
    s.set_agent(
        Team::Blue,
        1,
        Agent {
            pos: Pos::new(1, 0),
            alive: false,
        },
    );
    let red = [Some(Action::Stay)];
    assert!(matches!(
        s.step_with_red_actions(&[Some(Action::Stay), Some(Action::Stay)], &red),
        Err(Error::InvalidAction(_))
    ));
    assert!(matches!(
        s.step_with_red_actions(&[Some(Action::Stay)], &red),
        Err(Error::InvalidAction(_))
    ));
    assert!(s.step_with_red_actions(&[Some(Action::Stay), None], &red).is_ok());
}

#[test]
fn combat_matches_configured_table() {
    let measured = intruder_survival(100_000);
    let table = intruder_survival_table();
    assert!((measured - table).abs() <= 0.01, "survival {measured} vs table {table}");
}

#[test]
fn patrol_approaches_band_along_shortest_paths() {
    let paths = patrol_approach_paths();
    assert!(!paths.is_empty());
    for path in paths {
        assert!(path.windows(2).all(|w| w[1] < w[0]), "{path:?}");
        assert_eq!(*path.last().unwrap(), 0, "{path:?}");
    }
}

#[test]
fn patrol_stays_in_band() {
    let map = default_map();
    let patrol = spiking_actor::ctf::red::Patrol::new(&map, 4);
    let policy = RedPolicy::Patrol(patrol.clone());
    let start = patrol.band()[0];
    let mut s = CtfState::from_positions(
        map,
        &[Pos::new(0, 0)],
        &[start],
        GameRules {
            max_steps: 10_000,
            ..GameRules::default()
        },
        9,
    )
    .unwrap();
    for _ in 0..2000 {
        s.step(&[Some(Action::Stay)], &policy).unwrap();
        assert!(patrol.in_band(s.red()[0].pos));
    }
}

#[test]
fn render_is_stable_and_round_trips() {
    let map = default_map();
    for seed in 0..20 {
        let s = CtfState::reset(map.clone(), 2, 2, GameRules::default(), seed).unwrap();
        let text = render_text(&s);
        assert_eq!(
            text,
            render_text(&CtfState::reset(map.clone(), 2, 2, GameRules::default(), seed).unwrap())
        );
        let (blue, red) = parse_agents(&text).unwrap();
        assert_eq!(blue, s.blue().iter().map(|a| a.pos).enumerate().collect::<Vec<_>>());
        assert_eq!(red, s.red().iter().map(|a| a.pos).enumerate().collect::<Vec<_>>());
    }
}

#[test]
fn env_interface_splits_termination_kinds() {
    let map = default_map();
    let mut env = CtfEnv::new(map, Scenario::default()).unwrap();
    let mut ends = [0usize; 2];
    for seed in 0..100 {
        env.reset(seed).unwrap();
        loop {
            let tr = env.step(&[seed as usize % 5]).unwrap();
            if tr.done() {
                assert!(tr.terminated != tr.truncated);
                assert_eq!(tr.truncated, env.terminal() == Some(Terminal::TimeUp));
                ends[usize::from(tr.truncated)] += 1;
                break;
            }
        }
    }
    assert!(ends[1] > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episodes_respect_step_limit(seed in any::<u64>(), n in 1usize..4, max_steps in 1u32..60) {
        let map = default_map();
        let rules = GameRules { max_steps, ..GameRules::default() };
        let policy = RedPolicy::new(RedKind::Patrol, &map, 4);
        let mut s = CtfState::reset(map, n, n, rules, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps = 0;
        while !s.is_terminal() {
            s.step(&random_blue(&s, &mut rng), &policy).unwrap();
            steps += 1;
            for a in s.blue().iter().chain(s.red()).filter(|a| a.alive) {
                prop_assert!(s.map().is_passable(a.pos));
            }
            let cells: Vec<Pos> = s.blue().iter().chain(s.red()).filter(|a| a.alive).map(|a| a.pos).collect();
            for (k, p) in cells.iter().enumerate() {
                prop_assert!(!cells[..k].contains(p));
            }
        }
        prop_assert!(steps <= max_steps);
    }
}
