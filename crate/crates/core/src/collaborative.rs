//! Collaborative airspace allocation.
//!
//! Every step all airborne aircraft take part in one negotiation round for
//! the next-step resources: the edge each will traverse and the vertex it
//! will reach. Each aircraft proposes its best remaining claim; wherever
//! claims collide, everyone but the highest-priority claimant gives that
//! claim up. Rounds repeat until no two claims collide.
//!
//! The round is a pure function of the shared traffic state, so running it
//! centrally or replicated on every aircraft gives the same allocation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::lattice::{heading_between, AxialCoord, EdgeId, HexLattice};
use crate::sim::{AircraftState, MoveCommand, Resolver, ResolverFailure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub aircraft_id: u32,
    /// Resource for `[t, t+1)`.
    pub edge: EdgeId,
    /// Resource at `t+1`.
    pub target_vertex: AxialCoord,
    pub preference_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub claims: BTreeMap<u32, Claim>,
    /// Proposal rounds run, including the final conflict-free one.
    pub iterations: usize,
}

/// Candidate moves out of the current vertex, best first: closest to the
/// destination, then smallest turn, then right before left, then canonical
/// neighbor order.
pub fn preference_list(a: &AircraftState, lat: &HexLattice) -> Vec<Claim> {
    let here = lat.index_of(a.position).expect("airborne aircraft are on the lattice");
    let dest = lat.index_of(a.destination).expect("destinations are on the lattice");
    let mut keyed: Vec<_> = lat
        .neighbor_indices(here)
        .iter()
        .enumerate()
        .map(|(canonical, &n)| {
            let target = lat.coord(n as usize);
            let turn = a.heading.steps_to(heading_between(a.position, target).expect("neighbor"));
            let magnitude = turn.min(6 - turn);
            let left = usize::from(turn > 3);
            ((lat.distance_idx(n as usize, dest), magnitude, left, canonical), target)
        })
        .collect();
    keyed.sort_unstable_by_key(|(key, _)| *key);
    keyed
        .into_iter()
        .enumerate()
        .map(|(rank, (_, target))| Claim {
            aircraft_id: a.id,
            edge: EdgeId::normalized(a.position, target),
            target_vertex: target,
            preference_rank: rank,
        })
        .collect()
}

/// Runs one all-hands negotiation round over the airborne aircraft in
/// `aircraft`. The order of `aircraft` does not matter; priorities decide.
pub fn negotiation_round(aircraft: &[AircraftState], lat: &HexLattice) -> Result<Allocation, ResolverFailure> {
    let mut bidders: Vec<&AircraftState> = aircraft.iter().filter(|a| a.is_airborne()).collect();
    bidders.sort_unstable_by_key(|a| a.priority);
    let prefs: Vec<Vec<Claim>> = bidders.iter().map(|a| preference_list(a, lat)).collect();
    // Exhausted ranks always form a prefix, so a cursor per aircraft suffices.
    let mut cursor = vec![0usize; bidders.len()];
    let mut yields = vec![false; bidders.len()];
    let mut iterations = 0;

    loop {
        iterations += 1;
        // Bidders are in priority order: a claim colliding with any earlier
        // proposal belongs to a conflict group whose winner came first.
        for i in 0..bidders.len() {
            let claim = &prefs[i][cursor[i]];
            yields[i] = (0..i).any(|j| {
                let earlier = &prefs[j][cursor[j]];
                earlier.target_vertex == claim.target_vertex || earlier.edge == claim.edge
            });
        }
        if !yields.contains(&true) {
            break;
        }
        for (i, &y) in yields.iter().enumerate() {
            if y {
                cursor[i] += 1;
                if cursor[i] == prefs[i].len() {
                    return Err(ResolverFailure::Allocation { aircraft_id: bidders[i].id });
                }
            }
        }
    }

    let claims = prefs.iter().zip(&cursor).map(|(p, &c)| (p[c].aircraft_id, p[c])).collect();
    Ok(Allocation { claims, iterations })
}

/// Negotiates the next step and turns the allocation into commands.
pub fn resolve_collaborative(all: &[AircraftState], lat: &HexLattice) -> Result<Vec<MoveCommand>, ResolverFailure> {
    Ok(negotiation_round(all, lat)?
        .claims
        .values()
        .map(|c| MoveCommand { aircraft_id: c.aircraft_id, next_vertex: c.target_vertex })
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct CollaborativeResolver {
    /// Largest iteration count seen in any round so far.
    pub max_iterations: usize,
}

impl Resolver for CollaborativeResolver {
    fn name(&self) -> &'static str {
        "collaborative"
    }

    fn commands(
        &mut self,
        lattice: &HexLattice,
        _time: u32,
        aircraft: &[AircraftState],
    ) -> Result<Vec<MoveCommand>, ResolverFailure> {
        let allocation = negotiation_round(aircraft, lattice)?;
        self.max_iterations = self.max_iterations.max(allocation.iterations);
        Ok(allocation
            .claims
            .values()
            .map(|c| MoveCommand { aircraft_id: c.aircraft_id, next_vertex: c.target_vertex })
            .collect())
    }
}
