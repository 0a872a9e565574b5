mod common;

use std::collections::HashMap;

use common::{c, config, roundabout};
use skylattice_core::collaborative::CollaborativeResolver;
use skylattice_core::implicit::ImplicitResolver;
use skylattice_core::scenarios::sample_configs;
use skylattice_core::sim::{
    audit_trajectories, detect_livelock, simulate, CollectiveState, ResolverFailure, Resource, Simulation, Status,
};
use skylattice_core::{AircraftState, AxialCoord, Error, Heading, HexLattice, MoveCommand, Resolver, Termination};

/// Flies fixed vertex sequences, keyed by aircraft id.
struct Scripted(HashMap<u32, Vec<AxialCoord>>);

impl Scripted {
    fn new(paths: &[&[(i32, i32)]]) -> Self {
        Self(paths.iter().enumerate().map(|(k, p)| (k as u32 + 1, p.iter().map(|&(q, r)| c(q, r)).collect())).collect())
    }
}

impl Resolver for Scripted {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn commands(
        &mut self,
        _: &HexLattice,
        time: u32,
        aircraft: &[AircraftState],
    ) -> Result<Vec<MoveCommand>, ResolverFailure> {
        Ok(aircraft
            .iter()
            .filter(|a| a.is_airborne())
            .map(|a| MoveCommand { aircraft_id: a.id, next_vertex: self.0[&a.id][time as usize + 1] })
            .collect())
    }
}

#[test]
fn rejects_shared_starts_and_zero_fuel() {
    let lat = HexLattice::new(3);
    let shared = config(3, &[((0, 0), (3, 0)), ((0, 0), (-3, 0))]);
    assert!(matches!(Simulation::new(&lat, &shared, ImplicitResolver, 20), Err(Error::InvalidConfiguration(_))));
    let fine = config(3, &[((0, 0), (3, 0))]);
    assert_eq!(Simulation::new(&lat, &fine, ImplicitResolver, 0).err(), Some(Error::ZeroFuel));
    let wrong_radius = config(2, &[((0, 0), (2, 0))]);
    assert!(Simulation::new(&lat, &wrong_radius, ImplicitResolver, 20).is_err());
}

#[test]
fn lone_aircraft_lands_after_its_distance() {
    let lat = HexLattice::new(3);
    let out = simulate(&lat, &config(3, &[((-3, 0), (2, 0))]), ImplicitResolver, 20).unwrap();
    assert_eq!(out.termination, Termination::AllLanded);
    assert_eq!(out.steps_elapsed, 5);
    assert_eq!(out.trajectories[0].len(), 6);
    let a = &out.final_states[0];
    assert_eq!((a.status, a.distance_flown, a.fuel), (Status::Landed, 5, 15));
    assert_eq!(a.heading, Heading::East);
}

#[test]
fn shared_vertex_is_a_loss_of_separation() {
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((-1, 0), (3, 0)), ((0, -1), (0, 3))]);
    let script = Scripted::new(&[&[(-1, 0), (0, 0)], &[(0, -1), (0, 0)]]);
    let out = simulate(&lat, &cfg, script, 20).unwrap();
    assert_eq!(out.termination, Termination::LossOfSeparation);
    assert_eq!(out.steps_elapsed, 1);
    assert_eq!(out.separation_events.len(), 1);
    let e = &out.separation_events[0];
    assert_eq!((e.time, e.resource, e.aircraft_ids.clone()), (1, Resource::Vertex(c(0, 0)), vec![1, 2]));
    assert!(out.final_states.iter().all(|a| a.status == Status::Collided));
}

#[test]
fn swapping_along_an_edge_is_a_loss_of_separation() {
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((0, 0), (3, 0)), ((1, 0), (-3, 0))]);
    let script = Scripted::new(&[&[(0, 0), (1, 0)], &[(1, 0), (0, 0)]]);
    let out = simulate(&lat, &cfg, script, 20).unwrap();
    assert_eq!(out.termination, Termination::LossOfSeparation);
    let e = &out.separation_events[0];
    assert_eq!(e.time, 0);
    assert!(matches!(e.resource, Resource::Edge(_)));
}

#[test]
fn landing_frees_the_vertex_after_the_arrival_step() {
    let lat = HexLattice::new(3);
    // Aircraft 1 lands on (1,0) at t=1; aircraft 2 passes through it at t=2.
    let cfg = config(3, &[((0, 0), (1, 0)), ((2, -1), (0, 1))]);
    let script = Scripted::new(&[&[(0, 0), (1, 0)], &[(2, -1), (2, 0), (1, 0), (0, 1)]]);
    let out = simulate(&lat, &cfg, script, 20).unwrap();
    assert_eq!(out.termination, Termination::AllLanded);
    assert!(out.separation_events.is_empty());
}

#[test]
fn arriving_on_a_vertex_as_another_lands_there_is_a_loss_of_separation() {
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((0, 0), (1, 0)), ((2, 0), (-1, 1))]);
    let script = Scripted::new(&[&[(0, 0), (1, 0)], &[(2, 0), (1, 0), (0, 1), (-1, 1)]]);
    let out = simulate(&lat, &cfg, script, 20).unwrap();
    assert_eq!(out.termination, Termination::LossOfSeparation);
}

#[test]
fn running_dry_is_a_fuel_emergency() {
    let lat = HexLattice::new(3);
    let out = simulate(&lat, &config(3, &[((-3, 0), (3, 0))]), ImplicitResolver, 4).unwrap();
    assert_eq!(out.termination, Termination::FuelEmergency);
    assert_eq!(out.steps_elapsed, 4);
    assert_eq!(out.final_states[0].status, Status::FuelEmergency);
    assert_eq!(out.final_states[0].distance_flown, 4);
}

#[test]
fn roundabout_livelock_ends_in_a_fuel_emergency() {
    let lat = HexLattice::new(3);
    let out = simulate(&lat, &roundabout(), ImplicitResolver, 20).unwrap();
    assert_eq!(out.termination, Termination::FuelEmergency);
    assert_eq!(out.steps_elapsed, 20);
    assert!(out.livelock_detected);
    assert!(out.separation_events.is_empty());
}

#[test]
fn illegal_commands_are_faults() {
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((0, 0), (3, 0))]);
    let mut jump = Simulation::new(&lat, &cfg, Scripted::new(&[&[(0, 0), (2, 0)]]), 20).unwrap();
    assert!(matches!(jump.step(), Err(Error::SimulationFault { time: 0, .. })));

    struct Silent;
    impl Resolver for Silent {
        fn name(&self) -> &'static str {
            "silent"
        }
        fn commands(
            &mut self,
            _: &HexLattice,
            _: u32,
            _: &[AircraftState],
        ) -> Result<Vec<MoveCommand>, ResolverFailure> {
            Ok(Vec::new())
        }
    }
    let mut silent = Simulation::new(&lat, &cfg, Silent, 20).unwrap();
    assert!(matches!(silent.step(), Err(Error::SimulationFault { .. })));
}

#[test]
fn resolver_failure_ends_the_run_as_an_allocation_failure() {
    struct Refuses;
    impl Resolver for Refuses {
        fn name(&self) -> &'static str {
            "refuses"
        }
        fn commands(
            &mut self,
            _: &HexLattice,
            _: u32,
            a: &[AircraftState],
        ) -> Result<Vec<MoveCommand>, ResolverFailure> {
            Err(ResolverFailure::Allocation { aircraft_id: a[0].id })
        }
    }
    let lat = HexLattice::new(3);
    let out = simulate(&lat, &config(3, &[((0, 0), (3, 0))]), Refuses, 20).unwrap();
    assert_eq!(out.termination, Termination::AllocationFailure);
    assert_eq!(out.steps_elapsed, 0);
}

#[test]
fn independent_audit_agrees_with_the_monitor() {
    let lat = HexLattice::new(3);
    let mut with_events = 0;
    for cfg in sample_configs(&lat, 4, 3000, 4, 17).unwrap() {
        let out = simulate(&lat, &cfg, ImplicitResolver, 20).unwrap();
        let ids: Vec<u32> = cfg.aircraft.iter().map(|a| a.id).collect();
        let mut monitor = out.separation_events.clone();
        monitor.iter_mut().for_each(|e| e.aircraft_ids.sort_unstable());
        monitor.sort();
        let mut audit = audit_trajectories(&ids, &out.trajectories);
        audit.iter_mut().for_each(|e| e.aircraft_ids.sort_unstable());
        audit.sort();
        assert_eq!(monitor, audit, "config {}", cfg.config_id);
        assert_eq!(out.termination == Termination::LossOfSeparation, !audit.is_empty());
        with_events += usize::from(!audit.is_empty());
    }
    assert!(with_events > 0, "the batch should contain losses of separation");
}

#[test]
fn livelock_detection_needs_a_repeated_collective_state() {
    let s = |q: i32| -> CollectiveState { vec![Some((c(q, 0), Heading::East)), None] };
    assert!(!detect_livelock(&[]));
    assert!(!detect_livelock(&[s(0), s(1), s(2)]));
    assert!(detect_livelock(&[s(0), s(1), s(0)]));
    let turned: CollectiveState = vec![Some((c(0, 0), Heading::West)), None];
    assert!(!detect_livelock(&[s(0), turned]));
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let lat = HexLattice::new(3);
    for cfg in sample_configs(&lat, 4, 200, 4, 5).unwrap() {
        let mut a = simulate(&lat, &cfg, ImplicitResolver, 20).unwrap();
        let mut b = simulate(&lat, &cfg, ImplicitResolver, 20).unwrap();
        a.resolver_compute_seconds = 0.0;
        b.resolver_compute_seconds = 0.0;
        assert_eq!(a, b);
    }
}

#[test]
fn listing_order_of_aircraft_does_not_matter() {
    let lat = HexLattice::new(3);
    for cfg in sample_configs(&lat, 4, 300, 4, 8).unwrap() {
        let mut reversed = cfg.clone();
        reversed.aircraft.reverse();
        for (fwd, rev) in [
            (simulate(&lat, &cfg, ImplicitResolver, 20), simulate(&lat, &reversed, ImplicitResolver, 20)),
            (
                simulate(&lat, &cfg, CollaborativeResolver::default(), 20),
                simulate(&lat, &reversed, CollaborativeResolver::default(), 20),
            ),
        ] {
            let (fwd, rev) = (fwd.unwrap(), rev.unwrap());
            assert_eq!(fwd.termination, rev.termination);
            let n = fwd.trajectories.len();
            for k in 0..n {
                assert_eq!(fwd.trajectories[k], rev.trajectories[n - 1 - k]);
            }
        }
    }
}
