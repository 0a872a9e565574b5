mod common;

use std::collections::HashSet;

use common::{c, config};
use proptest::prelude::*;
use skylattice_core::collaborative::{negotiation_round, preference_list, CollaborativeResolver};
use skylattice_core::scenarios::sample_configs;
use skylattice_core::sim::Simulation;
use skylattice_core::{AircraftState, HexLattice, TrafficConfiguration};

fn initial_states(lat: &HexLattice, cfg: &TrafficConfiguration) -> Vec<AircraftState> {
    Simulation::new(lat, cfg, CollaborativeResolver::default(), 20).unwrap().aircraft().to_vec()
}

#[test]
fn preferences_rank_progress_then_turn_size_then_right() {
    let lat = HexLattice::new(3);
    let states = initial_states(&lat, &config(3, &[((0, 0), (3, 0))]));
    let prefs = preference_list(&states[0], &lat);
    let targets: Vec<_> = prefs.iter().map(|p| p.target_vertex).collect();
    // Straight on, then the right and left 60° turns (equally close), then
    // 120° right and left, then back.
    assert_eq!(targets, vec![c(1, 0), c(1, -1), c(0, 1), c(0, -1), c(-1, 1), c(-1, 0)]);
    assert!(prefs.iter().enumerate().all(|(k, p)| p.preference_rank == k));
}

#[test]
fn corner_vertex_offers_three_candidates() {
    let lat = HexLattice::new(3);
    let states = initial_states(&lat, &config(3, &[((3, 0), (-3, 0))]));
    assert_eq!(preference_list(&states[0], &lat).len(), 3);
}

#[test]
fn disjoint_targets_settle_in_one_round() {
    let lat = HexLattice::new(3);
    let states = initial_states(&lat, &config(3, &[((-3, 0), (3, 0)), ((-3, 3), (3, -3))]));
    let alloc = negotiation_round(&states, &lat).unwrap();
    assert_eq!(alloc.iterations, 1);
    assert!(alloc.claims.values().all(|k| k.preference_rank == 0));
}

#[test]
fn contested_vertex_goes_to_the_higher_priority() {
    let lat = HexLattice::new(3);
    let states = initial_states(&lat, &config(3, &[((-1, 0), (3, 0)), ((0, -1), (0, 3))]));
    let alloc = negotiation_round(&states, &lat).unwrap();
    assert_eq!(alloc.claims[&1].target_vertex, c(0, 0));
    assert_ne!(alloc.claims[&2].target_vertex, c(0, 0));
    assert_eq!(alloc.iterations, 2);
}

#[test]
fn head_on_neighbors_never_swap() {
    let lat = HexLattice::new(3);
    let states = initial_states(&lat, &config(3, &[((0, 0), (3, 0)), ((1, 0), (-3, 0))]));
    let alloc = negotiation_round(&states, &lat).unwrap();
    assert_eq!(alloc.claims[&1].target_vertex, c(1, 0));
    assert_ne!(alloc.claims[&2].target_vertex, c(0, 0));
}

#[test]
fn four_aircraft_converging_on_the_centre() {
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((-1, 0), (3, 0)), ((1, 0), (-3, 0)), ((0, -1), (0, 3)), ((0, 1), (0, -3))]);
    let states = initial_states(&lat, &cfg);
    let alloc = negotiation_round(&states, &lat).unwrap();
    assert_eq!(alloc.claims[&1].target_vertex, c(0, 0));
    assert!(alloc.iterations <= 6 * states.len());
    let vertices: HashSet<_> = alloc.claims.values().map(|k| k.target_vertex).collect();
    assert_eq!(vertices.len(), 4);
}

/// Airborne states reached by flying a sampled configuration for a few
/// collaborative steps.
fn states_after(seed: u64, n: usize, steps: u32) -> Option<(HexLattice, Vec<AircraftState>)> {
    let lat = HexLattice::new(3);
    let cfg = sample_configs(&lat, n, 1, 4, seed).ok()?.pop()?;
    let states = {
        let mut sim = Simulation::new(&lat, &cfg, CollaborativeResolver::default(), 20).unwrap();
        for _ in 0..steps {
            if sim.termination().is_some() {
                break;
            }
            sim.step().unwrap();
        }
        sim.aircraft().to_vec()
    };
    Some((lat, states))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn allocations_are_exclusive_and_respect_priority(seed in any::<u64>(), n in 2usize..=6, steps in 0u32..4) {
        let Some((lat, states)) = states_after(seed, n, steps) else { return Ok(()) };
        let airborne: Vec<&AircraftState> = states.iter().filter(|a| a.is_airborne()).collect();
        prop_assume!(!airborne.is_empty());
        let alloc = negotiation_round(&states, &lat).unwrap();
        prop_assert_eq!(alloc.claims.len(), airborne.len());
        prop_assert!(alloc.iterations <= 6 * airborne.len());

        let vertices: HashSet<_> = alloc.claims.values().map(|k| k.target_vertex).collect();
        let edges: HashSet<_> = alloc.claims.values().map(|k| k.edge).collect();
        prop_assert_eq!(vertices.len(), airborne.len());
        prop_assert_eq!(edges.len(), airborne.len());

        let top = airborne.iter().min_by_key(|a| a.priority).unwrap();
        prop_assert_eq!(alloc.claims[&top.id].preference_rank, 0);

        let mut shuffled = states.clone();
        shuffled.reverse();
        shuffled.rotate_left(seed as usize % states.len());
        prop_assert_eq!(negotiation_round(&shuffled, &lat).unwrap(), alloc);
    }
}

#[test]
fn top_priority_aircraft_always_flies_its_shortest_route() {
    let lat = HexLattice::new(3);
    for n in [3, 4] {
        for cfg in sample_configs(&lat, n, 1000, 4, 40 + n as u64).unwrap() {
            let out = skylattice_core::sim::simulate(&lat, &cfg, CollaborativeResolver::default(), 20).unwrap();
            let top = cfg.aircraft.iter().position(|a| a.priority == 1).unwrap();
            let plan = &cfg.aircraft[top];
            assert_eq!(out.trajectories[top].len() as u32 - 1, lat.distance(plan.start, plan.dest).unwrap());
        }
    }
}
