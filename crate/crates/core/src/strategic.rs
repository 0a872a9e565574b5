//! Centralized full-horizon optimization.
//!
//! [`TimeExpandedModel`] states the integer program: one occupancy variable
//! `x[i, v, t]` per aircraft, vertex and time, with movement, landing and
//! capacity constraints. [`solve_exact`] finds a provably optimal joint plan
//! by best-first search over joint time-expanded states with the admissible,
//! consistent heuristic "sum of remaining hex distances". The first goal
//! state popped is therefore optimal.
//!
//! Landing is an absorbing transition: once an aircraft reaches its
//! destination it leaves the airspace and stops consuming capacity.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{AxialCoord, EdgeId, HexLattice};
use crate::sim::{AircraftState, MoveCommand, Resolver, ResolverFailure, TrafficConfiguration};

/// The integer model for one configuration over `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct TimeExpandedModel<'a> {
    lattice: &'a HexLattice,
    horizon: u32,
    /// Aircraft ids in configuration order.
    ids: Vec<u32>,
    starts: Vec<usize>,
    dests: Vec<usize>,
}

impl<'a> TimeExpandedModel<'a> {
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn aircraft_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of binary occupancy variables `x[i, v, t]`.
    pub fn variable_count(&self) -> usize {
        self.ids.len() * self.lattice.vertex_count() * (self.horizon as usize + 1)
    }

    /// `Σ_i` shortest distance: no plan can do better.
    pub fn lower_bound(&self) -> u32 {
        self.starts.iter().zip(&self.dests).map(|(&s, &d)| self.lattice.distance_idx(s, d)).sum()
    }

    /// Plain-text constraint listing, one constraint per line. Variable
    /// `x[i,q:r,t]` is aircraft `i` at vertex `(q, r)` at time `t`;
    /// `land[i,t]` is aircraft `i` having landed by time `t`.
    pub fn dump(&self) -> String {
        let v = |c: AxialCoord| format!("{}:{}", c.q, c.r);
        let lat = self.lattice;
        let mut out = String::new();
        let _ =
            writeln!(out, "# horizon {} aircraft {} variables {}", self.horizon, self.ids.len(), self.variable_count());
        let _ = writeln!(out, "minimize: sum_i sum_t (1 - land[i,t]) for t in 0..{}", self.horizon);
        for (k, &id) in self.ids.iter().enumerate() {
            let _ = writeln!(out, "init: x[{id},{},0] = 1", v(lat.coord(self.starts[k])));
            let _ = writeln!(out, "mission: land[{id},{}] = 1", self.horizon);
            for t in 0..self.horizon {
                for (vi, &c) in lat.vertices().iter().enumerate() {
                    if vi == self.dests[k] {
                        let _ = writeln!(out, "land: x[{id},{},{t}] <= land[{id},{}]", v(c), t + 1);
                        continue;
                    }
                    let nbrs: Vec<String> =
                        lat.neighbors(c).iter().map(|&n| format!("x[{id},{},{}]", v(n), t + 1)).collect();
                    let _ = writeln!(out, "move: x[{id},{},{t}] <= {}", v(c), nbrs.join(" + "));
                }
            }
        }
        for t in 0..=self.horizon {
            for &c in lat.vertices() {
                let terms: Vec<String> = self.ids.iter().map(|id| format!("x[{id},{},{t}]", v(c))).collect();
                let _ = writeln!(out, "vertex_cap: {} <= 1", terms.join(" + "));
            }
        }
        for t in 0..self.horizon {
            for (i, &a) in lat.vertices().iter().enumerate() {
                for &b in lat.neighbors(a).iter().filter(|&&b| lat.index_of(b).unwrap() > i) {
                    let mut terms = Vec::new();
                    for id in &self.ids {
                        terms.push(format!("y[{id},{}>{},{t}]", v(a), v(b)));
                        terms.push(format!("y[{id},{}>{},{t}]", v(b), v(a)));
                    }
                    let _ = writeln!(out, "edge_cap: {} <= 1", terms.join(" + "));
                }
            }
        }
        out
    }

    /// Checks every model constraint against a candidate plan.
    pub fn check_plan(&self, plan: &JointPlan) -> std::result::Result<(), String> {
        let lat = self.lattice;
        if plan.trajectories.len() != self.ids.len() {
            return Err("wrong number of trajectories".into());
        }
        for (k, traj) in plan.trajectories.iter().enumerate() {
            let id = self.ids[k];
            if traj.first().and_then(|&c| lat.index_of(c)) != Some(self.starts[k]) {
                return Err(format!("aircraft {id} does not start at its start vertex"));
            }
            if traj.len() as u32 > self.horizon + 1 {
                return Err(format!("aircraft {id} exceeds the horizon"));
            }
            if traj.last().and_then(|&c| lat.index_of(c)) != Some(self.dests[k]) {
                return Err(format!("aircraft {id} never lands"));
            }
            if let Some(t) = traj[..traj.len() - 1].iter().position(|&c| lat.index_of(c) == Some(self.dests[k])) {
                return Err(format!("aircraft {id} passes its destination at t={t} without landing"));
            }
            if let Some(w) = traj.windows(2).find(|w| !lat.is_edge(w[0], w[1])) {
                return Err(format!("aircraft {id} jumps {} -> {}", w[0], w[1]));
            }
        }
        let horizon = plan.trajectories.iter().map(Vec::len).max().unwrap_or(0);
        for t in 0..horizon {
            let mut at: HashMap<AxialCoord, u32> = HashMap::new();
            let mut on: HashMap<EdgeId, u32> = HashMap::new();
            for (k, traj) in plan.trajectories.iter().enumerate() {
                if let Some(&c) = traj.get(t) {
                    if let Some(other) = at.insert(c, self.ids[k]) {
                        return Err(format!("aircraft {other} and {} share {c} at t={t}", self.ids[k]));
                    }
                }
                if let (Some(&a), Some(&b)) = (traj.get(t), traj.get(t + 1)) {
                    if let Some(other) = on.insert(EdgeId::normalized(a, b), self.ids[k]) {
                        return Err(format!("aircraft {other} and {} share edge {a}-{b} at t={t}", self.ids[k]));
                    }
                }
            }
        }
        let objective: u32 = plan.trajectories.iter().map(|t| t.len() as u32 - 1).sum();
        if objective != plan.objective {
            return Err(format!("objective {} does not match trajectories ({objective})", plan.objective));
        }
        Ok(())
    }
}

/// Builds the model; the horizon must cover every aircraft's shortest route.
pub fn build_model<'a>(lat: &'a HexLattice, cfg: &TrafficConfiguration, horizon: u32) -> Result<TimeExpandedModel<'a>> {
    cfg.validate(lat)?;
    let index = |c: AxialCoord| lat.index_of(c).expect("validated");
    let model = TimeExpandedModel {
        lattice: lat,
        horizon,
        ids: cfg.aircraft.iter().map(|a| a.id).collect(),
        starts: cfg.aircraft.iter().map(|a| index(a.start)).collect(),
        dests: cfg.aircraft.iter().map(|a| index(a.dest)).collect(),
    };
    let lower_bound = model.starts.iter().zip(&model.dests).map(|(&s, &d)| lat.distance_idx(s, d)).max().unwrap_or(0);
    if horizon < lower_bound {
        return Err(Error::HorizonTooShort { horizon, lower_bound });
    }
    Ok(model)
}

/// Optimal joint trajectories, in configuration order. Each trajectory
/// ends at its aircraft's arrival time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointPlan {
    pub trajectories: Vec<Vec<AxialCoord>>,
    /// Sum of arrival times.
    pub objective: u32,
    /// Search nodes expanded while certifying optimality.
    pub expanded: usize,
}

const LANDED: u16 = u16::MAX;

struct Node {
    positions: Vec<u16>,
    time: u32,
    cost: u32,
    parent: usize,
}

/// Finds a minimum-objective plan, or reports that none exists within the
/// horizon. Among equally good plans the result is fixed by expansion
/// order: aircraft in configuration order, neighbors in canonical order.
pub fn solve_exact(model: &TimeExpandedModel<'_>) -> std::result::Result<JointPlan, ResolverFailure> {
    let lat = model.lattice;
    let n = model.ids.len();
    let heuristic = |pos: &[u16]| -> u32 {
        pos.iter().zip(&model.dests).filter(|(&p, _)| p != LANDED).map(|(&p, &d)| lat.distance_idx(p as usize, d)).sum()
    };

    let root: Vec<u16> = model.starts.iter().map(|&s| s as u16).collect();
    let mut arena = vec![Node { positions: root.clone(), time: 0, cost: 0, parent: usize::MAX }];
    let mut best: HashMap<(u32, Vec<u16>), u32> = HashMap::new();
    best.insert((0, root.clone()), 0);
    let mut open = BinaryHeap::new();
    open.push((Reverse(heuristic(&root)), Reverse(heuristic(&root)), Reverse(0usize)));
    let mut expanded = 0;

    let mut moves: Vec<u16> = vec![0; n];
    while let Some((_, _, Reverse(id))) = open.pop() {
        let (time, cost) = (arena[id].time, arena[id].cost);
        if best.get(&(time, arena[id].positions.clone())).is_some_and(|&g| g < cost) {
            continue;
        }
        if arena[id].positions.iter().all(|&p| p == LANDED) {
            return Ok(reconstruct(model, &arena, id, expanded));
        }
        expanded += 1;
        let positions = arena[id].positions.clone();
        let airborne = positions.iter().filter(|&&p| p != LANDED).count() as u32;
        let mut children = Vec::new();
        enumerate_joint_moves(model, &positions, time + 1, 0, &mut moves, &mut children);
        for child in children {
            let child_cost = cost + airborne;
            let f = child_cost + heuristic(&child);
            match best.entry((time + 1, child.clone())) {
                Entry::Occupied(e) if *e.get() <= child_cost => continue,
                Entry::Occupied(mut e) => {
                    e.insert(child_cost);
                }
                Entry::Vacant(e) => {
                    e.insert(child_cost);
                }
            }
            let h = f - child_cost;
            arena.push(Node { positions: child, time: time + 1, cost: child_cost, parent: id });
            open.push((Reverse(f), Reverse(h), Reverse(arena.len() - 1)));
        }
    }
    Err(ResolverFailure::Infeasible)
}

/// Depth-first over aircraft in configuration order, pushing every
/// admissible joint successor into `out`.
fn enumerate_joint_moves(
    model: &TimeExpandedModel<'_>,
    from: &[u16],
    next_time: u32,
    k: usize,
    moves: &mut Vec<u16>,
    out: &mut Vec<Vec<u16>>,
) {
    let lat = model.lattice;
    if k == from.len() {
        let child = moves
            .iter()
            .zip(&model.dests)
            .map(|(&m, &d)| if m != LANDED && m as usize == d { LANDED } else { m })
            .collect();
        out.push(child);
        return;
    }
    if from[k] == LANDED {
        moves[k] = LANDED;
        enumerate_joint_moves(model, from, next_time, k + 1, moves, out);
        return;
    }
    let here = from[k] as usize;
    for &next in lat.neighbor_indices(here) {
        let next_u = next as u16;
        let dest = model.dests[k];
        if next_time + lat.distance_idx(next as usize, dest) > model.horizon {
            continue;
        }
        // Earlier aircraft in this joint move: no shared target vertex and
        // no swap along an edge.
        let clash =
            (0..k).any(|j| moves[j] != LANDED && (moves[j] == next_u || (moves[j] == from[k] && from[j] == next_u)));
        if clash {
            continue;
        }
        moves[k] = next_u;
        enumerate_joint_moves(model, from, next_time, k + 1, moves, out);
    }
}

fn reconstruct(model: &TimeExpandedModel<'_>, arena: &[Node], goal: usize, expanded: usize) -> JointPlan {
    let lat = model.lattice;
    let mut chain = Vec::new();
    let mut id = goal;
    while id != usize::MAX {
        chain.push(id);
        id = arena[id].parent;
    }
    chain.reverse();
    let mut trajectories: Vec<Vec<AxialCoord>> = model.starts.iter().map(|&s| vec![lat.coord(s)]).collect();
    for w in chain.windows(2) {
        let (before, after) = (&arena[w[0]].positions, &arena[w[1]].positions);
        for k in 0..trajectories.len() {
            if before[k] == LANDED {
                continue;
            }
            let reached = if after[k] == LANDED { model.dests[k] } else { after[k] as usize };
            trajectories[k].push(lat.coord(reached));
        }
    }
    let objective = trajectories.iter().map(|t| t.len() as u32 - 1).sum();
    JointPlan { trajectories, objective, expanded }
}

/// Solves once at initialization, then replays the plan verbatim.
#[derive(Debug, Clone)]
pub struct StrategicResolver {
    horizon: u32,
    plan: Option<JointPlan>,
    ids: Vec<u32>,
}

impl StrategicResolver {
    pub fn new(horizon: u32) -> Self {
        Self { horizon, plan: None, ids: Vec::new() }
    }

    pub fn plan(&self) -> Option<&JointPlan> {
        self.plan.as_ref()
    }
}

impl Resolver for StrategicResolver {
    fn name(&self) -> &'static str {
        "strategic"
    }

    fn initialize(
        &mut self,
        lattice: &HexLattice,
        aircraft: &[AircraftState],
    ) -> std::result::Result<(), ResolverFailure> {
        let cfg = TrafficConfiguration {
            config_id: 0,
            lattice_radius: lattice.radius(),
            aircraft: aircraft
                .iter()
                .map(|a| crate::sim::FlightPlan {
                    id: a.id,
                    start: a.position,
                    dest: a.destination,
                    priority: a.priority,
                })
                .collect(),
        };
        let model = build_model(lattice, &cfg, self.horizon).map_err(|_| ResolverFailure::Infeasible)?;
        self.ids = cfg.aircraft.iter().map(|a| a.id).collect();
        self.plan = Some(solve_exact(&model)?);
        Ok(())
    }

    fn commands(
        &mut self,
        _lattice: &HexLattice,
        time: u32,
        aircraft: &[AircraftState],
    ) -> std::result::Result<Vec<MoveCommand>, ResolverFailure> {
        let plan = self.plan.as_ref().ok_or(ResolverFailure::Infeasible)?;
        Ok(aircraft
            .iter()
            .filter(|a| a.is_airborne())
            .filter_map(|a| {
                let k = self.ids.iter().position(|&id| id == a.id)?;
                let next = *plan.trajectories[k].get(time as usize + 1)?;
                Some(MoveCommand { aircraft_id: a.id, next_vertex: next })
            })
            .collect())
    }
}
