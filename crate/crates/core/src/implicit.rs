//! Detect-and-avoid resolution by right-of-way rules.
//!
//! Each aircraft decides alone; nothing is negotiated. It projects every
//! aircraft, itself included, two steps along its intended route (the
//! shortest path to its destination), classifies each predicted encounter by
//! the conflict angle at the disputed resource and applies the rule table.
//! Encounters with several intruders fall back on a fixed-priority
//! candidate search that is not guaranteed to succeed.

use serde::Serialize;

use crate::lattice::{conflict_angle, heading_between, AxialCoord, ConflictAngle, EdgeId, Heading, HexLattice};
use crate::sim::{AircraftState, MoveCommand, Resolver, ResolverFailure, Resource};

pub const LOOKAHEAD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConflictCase {
    /// Intruder track 60° clockwise of ownship.
    Angle60,
    Angle120,
    /// Opposite tracks converging on a vertex.
    HeadOnVertex,
    /// Opposite tracks disputing the same edge.
    HeadOnEdge,
    Angle240,
    Angle300,
}

impl ConflictCase {
    fn at_vertex(angle: ConflictAngle) -> Self {
        match angle {
            ConflictAngle::Deg60 => ConflictCase::Angle60,
            ConflictAngle::Deg120 => ConflictCase::Angle120,
            ConflictAngle::Deg180 => ConflictCase::HeadOnVertex,
            ConflictAngle::Deg240 => ConflictCase::Angle240,
            ConflictAngle::Deg300 => ConflictCase::Angle300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredictedConflict {
    pub intruder_id: u32,
    pub case: ConflictCase,
    /// 1 or 2: the vertex at `t + offset`, or the edge during
    /// `[t + offset − 1, t + offset)`.
    pub time_offset: u8,
    pub resource: Resource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Maneuver {
    TurnRight,
    Continue,
}

/// The two-aircraft right-of-way table.
pub fn pairwise_rule(case: ConflictCase, own_heading: Heading) -> Maneuver {
    match case {
        ConflictCase::Angle60 | ConflictCase::Angle120 => Maneuver::TurnRight,
        ConflictCase::HeadOnVertex | ConflictCase::HeadOnEdge => {
            if own_heading.is_south_or_due_west() {
                Maneuver::TurnRight
            } else {
                Maneuver::Continue
            }
        }
        ConflictCase::Angle240 | ConflictCase::Angle300 => Maneuver::Continue,
    }
}

/// Next vertices along an aircraft's intended route (its current shortest
/// path), up to the lookahead, stopping at the destination.
fn route_ahead(aircraft: &AircraftState, from: AxialCoord, lat: &HexLattice) -> Vec<AxialCoord> {
    let mut path = lat.shortest_path(from, aircraft.destination).unwrap_or_else(|| vec![from]);
    path.truncate(LOOKAHEAD + 1);
    path
}

fn track(path: &[AxialCoord], k: usize) -> Heading {
    heading_between(path[k - 1], path[k]).expect("path edge")
}

/// Encounters between two projected paths, both starting at the current
/// vertices. Tracks are taken at the disputed resource.
fn encounters(own: &[AxialCoord], intruder_id: u32, other: &[AxialCoord]) -> Vec<PredictedConflict> {
    let mut out = Vec::new();
    for k in 1..own.len().min(other.len()) {
        if own[k - 1] == other[k] && own[k] == other[k - 1] {
            out.push(PredictedConflict {
                intruder_id,
                case: ConflictCase::HeadOnEdge,
                time_offset: k as u8,
                resource: Resource::Edge(EdgeId::normalized(own[k - 1], own[k])),
            });
        }
        if own[k] == other[k] {
            // Equal arriving tracks imply an earlier shared vertex, already reported.
            if let Ok(angle) = conflict_angle(track(own, k), track(other, k)) {
                out.push(PredictedConflict {
                    intruder_id,
                    case: ConflictCase::at_vertex(angle),
                    time_offset: k as u8,
                    resource: Resource::Vertex(own[k]),
                });
            }
        }
    }
    out
}

fn conflicts_along(
    own: &AircraftState,
    path: &[AxialCoord],
    others: &[AircraftState],
    lat: &HexLattice,
) -> Vec<PredictedConflict> {
    others
        .iter()
        .filter(|o| o.id != own.id && o.is_airborne())
        .flat_map(|o| encounters(path, o.id, &route_ahead(o, o.position, lat)))
        .collect()
}

/// Every predicted encounter between the ownship's intended route and the
/// intended routes of the other airborne aircraft.
pub fn predict_conflicts(own: &AircraftState, others: &[AircraftState], lat: &HexLattice) -> Vec<PredictedConflict> {
    conflicts_along(own, &route_ahead(own, own.position, lat), others, lat)
}

/// Own track at the disputed resource.
fn track_at(route: &[AxialCoord], conflict: &PredictedConflict) -> Heading {
    track(route, usize::from(conflict.time_offset))
}

/// True if moving to `next` would meet another aircraft's projected first
/// step, on the vertex or head-on along the edge.
fn blocked_next_step(own: &AircraftState, next: AxialCoord, others: &[AircraftState], lat: &HexLattice) -> bool {
    others.iter().filter(|o| o.id != own.id && o.is_airborne()).any(|o| {
        let r = route_ahead(o, o.position, lat);
        r.len() > 1 && (r[1] == next || (r[1] == own.position && o.position == next))
    })
}

/// One step right of the intended track. The turn widens clockwise past
/// neighbors that are off-lattice or taken by another aircraft's next
/// projected step; if every neighbor is taken, the first existing one wins.
fn right_turn(own: &AircraftState, intended: Heading, others: &[AircraftState], lat: &HexLattice) -> AxialCoord {
    let mut turns = (1..6).filter_map(|s| lat.neighbor(own.position, intended.rotate(s)));
    let first = turns.clone().next().expect("lattice vertices have at least three neighbors");
    turns.find(|&n| !blocked_next_step(own, n, others, lat)).unwrap_or(first)
}

fn rule_move(
    own: &AircraftState,
    route: &[AxialCoord],
    conflict: &PredictedConflict,
    others: &[AircraftState],
    lat: &HexLattice,
) -> AxialCoord {
    match pairwise_rule(conflict.case, track_at(route, conflict)) {
        Maneuver::TurnRight => right_turn(own, track(route, 1), others, lat),
        Maneuver::Continue => route[1],
    }
}

/// The earliest encounter, edge disputes before vertex disputes.
fn most_urgent<'c>(conflicts: impl Iterator<Item = &'c PredictedConflict>) -> Option<&'c PredictedConflict> {
    conflicts.min_by_key(|c| (c.time_offset, !matches!(c.resource, Resource::Edge(_))))
}

/// One aircraft's decision for the next step.
pub fn resolve_implicit(own: &AircraftState, all: &[AircraftState], lat: &HexLattice) -> MoveCommand {
    let route = route_ahead(own, own.position, lat);
    let conflicts = conflicts_along(own, &route, all, lat);
    let command = |v| MoveCommand { aircraft_id: own.id, next_vertex: v };

    let mut intruders: Vec<u32> = conflicts.iter().map(|c| c.intruder_id).collect();
    intruders.sort_unstable();
    intruders.dedup();

    match intruders.len() {
        0 => command(route[1]),
        1 => {
            let urgent = most_urgent(conflicts.iter()).expect("nonempty");
            command(rule_move(own, &route, urgent, all, lat))
        }
        _ => {
            let priority_of = |id: u32| all.iter().find(|a| a.id == id).map_or(u32::MAX, |a| a.priority);
            let top = intruders.iter().copied().min_by_key(|&id| priority_of(id)).expect("nonempty");
            let urgent =
                most_urgent(conflicts.iter().filter(|c| c.intruder_id == top)).expect("top intruder conflicts");
            let fallback = rule_move(own, &route, urgent, all, lat);

            let intended = track(&route, 1);
            let candidates = std::iter::once(fallback)
                .chain([1, 2, 0, -1, -2, 3].into_iter().filter_map(|s| lat.neighbor(own.position, intended.rotate(s))));
            for c in candidates {
                let mut path = vec![own.position];
                path.extend(route_ahead(own, c, lat).into_iter().take(LOOKAHEAD));
                if conflicts_along(own, &path, all, lat).is_empty() {
                    return command(c);
                }
            }
            command(fallback)
        }
    }
}

/// Stateless: every aircraft applies [`resolve_implicit`] to the current
/// observed traffic.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImplicitResolver;

impl Resolver for ImplicitResolver {
    fn name(&self) -> &'static str {
        "implicit"
    }

    fn commands(
        &mut self,
        lattice: &HexLattice,
        _time: u32,
        aircraft: &[AircraftState],
    ) -> Result<Vec<MoveCommand>, ResolverFailure> {
        Ok(aircraft.iter().filter(|a| a.is_airborne()).map(|a| resolve_implicit(a, aircraft, lattice)).collect())
    }
}
