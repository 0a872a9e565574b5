//! Discrete-time simulation engine.
//!
//! Every airborne aircraft traverses exactly one edge per step. Moves are
//! committed simultaneously, then the separation monitor looks for shared
//! undirected edges during `[t, t+1)` and shared vertices at `t+1`.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{heading_between, AxialCoord, EdgeId, Heading, HexLattice};

pub const DEFAULT_FUEL: u32 = 20;

/// One aircraft's entry in a traffic configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub id: u32,
    pub start: AxialCoord,
    pub dest: AxialCoord,
    pub priority: u32,
}

/// One experiment instance: simultaneous departures on a lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficConfiguration {
    pub config_id: u64,
    pub lattice_radius: u32,
    pub aircraft: Vec<FlightPlan>,
}

impl TrafficConfiguration {
    /// Checks the structural invariants shared by every configuration.
    /// Plan-length filtering is the generators' concern.
    pub fn validate(&self, lattice: &HexLattice) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfiguration(msg));
        if self.lattice_radius != lattice.radius() {
            return bad(format!(
                "configuration radius {} does not match lattice radius {}",
                self.lattice_radius,
                lattice.radius()
            ));
        }
        if self.aircraft.is_empty() {
            return bad("no aircraft".into());
        }
        let n = self.aircraft.len() as u32;
        let mut ids = HashSet::new();
        let mut starts = HashSet::new();
        let mut priorities = HashSet::new();
        for a in &self.aircraft {
            if !lattice.contains(a.start) || !lattice.contains(a.dest) {
                return bad(format!("aircraft {} leaves the lattice", a.id));
            }
            if a.start == a.dest {
                return bad(format!("aircraft {} starts at its destination", a.id));
            }
            if !ids.insert(a.id) {
                return bad(format!("duplicate aircraft id {}", a.id));
            }
            if !starts.insert(a.start) {
                return bad(format!("start vertex {} is shared", a.start));
            }
            if a.priority == 0 || a.priority > n || !priorities.insert(a.priority) {
                return bad("priorities must be a permutation of 1..=N".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Airborne,
    Landed,
    FuelEmergency,
    Collided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AircraftState {
    pub id: u32,
    /// Smaller is higher priority; fixed for the whole scenario.
    pub priority: u32,
    pub position: AxialCoord,
    /// Direction of the last traversed edge (initially the first planned edge).
    pub heading: Heading,
    pub destination: AxialCoord,
    pub fuel: u32,
    pub distance_flown: u32,
    pub status: Status,
}

impl AircraftState {
    pub fn is_airborne(&self) -> bool {
        self.status == Status::Airborne
    }
}

/// An aircraft's committed vertex for the next step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCommand {
    pub aircraft_id: u32,
    pub next_vertex: AxialCoord,
}

/// Why a resolver could not produce commands. Not a separation loss.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolverFailure {
    /// An aircraft ran out of admissible moves.
    Allocation { aircraft_id: u32 },
    /// No plan exists within the horizon.
    Infeasible,
}

/// A conflict-resolution technique plugged into the engine.
pub trait Resolver {
    fn name(&self) -> &'static str;

    /// Called once before the first step.
    fn initialize(
        &mut self,
        _lattice: &HexLattice,
        _aircraft: &[AircraftState],
    ) -> std::result::Result<(), ResolverFailure> {
        Ok(())
    }

    /// One command per airborne aircraft. `aircraft` holds every state,
    /// including landed ones.
    fn commands(
        &mut self,
        lattice: &HexLattice,
        time: u32,
        aircraft: &[AircraftState],
    ) -> std::result::Result<Vec<MoveCommand>, ResolverFailure>;
}

impl<R: Resolver + ?Sized> Resolver for Box<R> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn initialize(
        &mut self,
        lattice: &HexLattice,
        aircraft: &[AircraftState],
    ) -> std::result::Result<(), ResolverFailure> {
        (**self).initialize(lattice, aircraft)
    }

    fn commands(
        &mut self,
        lattice: &HexLattice,
        time: u32,
        aircraft: &[AircraftState],
    ) -> std::result::Result<Vec<MoveCommand>, ResolverFailure> {
        (**self).commands(lattice, time, aircraft)
    }
}

impl<R: Resolver + ?Sized> Resolver for &mut R {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn initialize(
        &mut self,
        lattice: &HexLattice,
        aircraft: &[AircraftState],
    ) -> std::result::Result<(), ResolverFailure> {
        (**self).initialize(lattice, aircraft)
    }

    fn commands(
        &mut self,
        lattice: &HexLattice,
        time: u32,
        aircraft: &[AircraftState],
    ) -> std::result::Result<Vec<MoveCommand>, ResolverFailure> {
        (**self).commands(lattice, time, aircraft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Resource {
    Vertex(AxialCoord),
    Edge(EdgeId),
}

/// Two or more aircraft on one vertex at `time`, or on one edge during
/// `[time, time+1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeparationEvent {
    pub time: u32,
    pub resource: Resource,
    pub aircraft_ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AllLanded,
    LossOfSeparation,
    FuelEmergency,
    AllocationFailure,
    StepLimit,
    /// Harness-level: the run could not be simulated at all.
    Fault,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::AllLanded => "all_landed",
            Termination::LossOfSeparation => "loss_of_separation",
            Termination::FuelEmergency => "fuel_emergency",
            Termination::AllocationFailure => "allocation_failure",
            Termination::StepLimit => "step_limit",
            Termination::Fault => "fault",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Termination::AllLanded,
            Termination::LossOfSeparation,
            Termination::FuelEmergency,
            Termination::AllocationFailure,
            Termination::StepLimit,
            Termination::Fault,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }
}

/// Positions and headings of every airborne aircraft; `None` once it is gone.
pub type CollectiveState = Vec<Option<(AxialCoord, Heading)>>;

/// True iff some collective state occurs twice.
pub fn detect_livelock(history: &[CollectiveState]) -> bool {
    let mut seen = HashSet::with_capacity(history.len());
    history.iter().any(|s| !seen.insert(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub config_id: u64,
    pub algorithm: String,
    pub termination: Termination,
    /// Vertex sequence per aircraft, in configuration order.
    pub trajectories: Vec<Vec<AxialCoord>>,
    pub separation_events: Vec<SeparationEvent>,
    pub steps_elapsed: u32,
    pub resolver_compute_seconds: f64,
    pub final_states: Vec<AircraftState>,
    pub livelock_detected: bool,
}

pub struct Simulation<'a, R> {
    lattice: &'a HexLattice,
    config_id: u64,
    resolver: R,
    aircraft: Vec<AircraftState>,
    time: u32,
    fuel_capacity: u32,
    trajectories: Vec<Vec<AxialCoord>>,
    events: Vec<SeparationEvent>,
    history: Vec<CollectiveState>,
    compute: Duration,
    termination: Option<Termination>,
}

impl<'a, R: Resolver> Simulation<'a, R> {
    /// Places every aircraft at its start with full fuel and initializes
    /// the resolver. A resolver that fails here ends the scenario with
    /// [`Termination::AllocationFailure`] before the first step.
    pub fn new(
        lattice: &'a HexLattice,
        config: &TrafficConfiguration,
        mut resolver: R,
        fuel_capacity: u32,
    ) -> Result<Self> {
        if fuel_capacity == 0 {
            return Err(Error::ZeroFuel);
        }
        config.validate(lattice)?;
        let aircraft: Vec<AircraftState> = config
            .aircraft
            .iter()
            .map(|p| {
                let path = lattice.shortest_path(p.start, p.dest).expect("validated endpoints");
                AircraftState {
                    id: p.id,
                    priority: p.priority,
                    position: p.start,
                    heading: heading_between(path[0], path[1]).expect("path edge"),
                    destination: p.dest,
                    fuel: fuel_capacity,
                    distance_flown: 0,
                    status: Status::Airborne,
                }
            })
            .collect();

        let started = Instant::now();
        let init = resolver.initialize(lattice, &aircraft);
        let compute = started.elapsed();

        let mut sim = Self {
            lattice,
            config_id: config.config_id,
            resolver,
            trajectories: aircraft.iter().map(|a| vec![a.position]).collect(),
            aircraft,
            time: 0,
            fuel_capacity,
            events: Vec::new(),
            history: Vec::new(),
            compute,
            termination: init.err().map(|_| Termination::AllocationFailure),
        };
        sim.history.push(sim.collective_state());
        Ok(sim)
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn aircraft(&self) -> &[AircraftState] {
        &self.aircraft
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn fuel_capacity(&self) -> u32 {
        self.fuel_capacity
    }

    fn collective_state(&self) -> CollectiveState {
        self.aircraft.iter().map(|a| a.is_airborne().then_some((a.position, a.heading))).collect()
    }

    fn fault(&self, reason: String) -> Error {
        Error::SimulationFault { time: self.time, reason }
    }

    /// Advances one time step and returns the separation events it caused.
    pub fn step(&mut self) -> Result<Vec<SeparationEvent>> {
        if self.termination.is_some() {
            return Err(self.fault("scenario already terminated".into()));
        }
        if !self.aircraft.iter().any(AircraftState::is_airborne) {
            return Err(self.fault("no airborne aircraft".into()));
        }

        let started = Instant::now();
        let commands = self.resolver.commands(self.lattice, self.time, &self.aircraft);
        self.compute += started.elapsed();
        let commands = match commands {
            Ok(c) => c,
            Err(_) => {
                self.termination = Some(Termination::AllocationFailure);
                return Ok(Vec::new());
            }
        };

        let mut next: Vec<Option<AxialCoord>> = vec![None; self.aircraft.len()];
        for cmd in &commands {
            let Some(i) = self.aircraft.iter().position(|a| a.id == cmd.aircraft_id) else {
                return Err(self.fault(format!("command for unknown aircraft {}", cmd.aircraft_id)));
            };
            let a = &self.aircraft[i];
            if !a.is_airborne() {
                return Err(self.fault(format!("command for grounded aircraft {}", a.id)));
            }
            if next[i].is_some() {
                return Err(self.fault(format!("duplicate command for aircraft {}", a.id)));
            }
            if !self.lattice.is_edge(a.position, cmd.next_vertex) {
                return Err(self.fault(format!(
                    "aircraft {} commanded from {} to non-adjacent {}",
                    a.id, a.position, cmd.next_vertex
                )));
            }
            next[i] = Some(cmd.next_vertex);
        }
        if let Some(a) =
            self.aircraft.iter().zip(&next).find_map(|(a, n)| (a.is_airborne() && n.is_none()).then_some(a))
        {
            return Err(self.fault(format!("no command for aircraft {}", a.id)));
        }

        let mut on_edge: BTreeMap<EdgeId, Vec<u32>> = BTreeMap::new();
        let mut at_vertex: BTreeMap<AxialCoord, Vec<u32>> = BTreeMap::new();
        for (a, n) in self.aircraft.iter().zip(&next) {
            if let Some(n) = *n {
                on_edge.entry(EdgeId::normalized(a.position, n)).or_default().push(a.id);
                at_vertex.entry(n).or_default().push(a.id);
            }
        }
        let mut events = Vec::new();
        let groups = on_edge
            .into_iter()
            .map(|(e, ids)| (self.time, Resource::Edge(e), ids))
            .chain(at_vertex.into_iter().map(|(v, ids)| (self.time + 1, Resource::Vertex(v), ids)));
        for (time, resource, mut ids) in groups {
            if ids.len() > 1 {
                ids.sort_unstable();
                events.push(SeparationEvent { time, resource, aircraft_ids: ids });
            }
        }

        for ((a, n), traj) in self.aircraft.iter_mut().zip(&next).zip(&mut self.trajectories) {
            let Some(n) = *n else { continue };
            a.heading = heading_between(a.position, n).expect("validated edge");
            a.position = n;
            a.fuel -= 1;
            a.distance_flown += 1;
            traj.push(n);
            if n == a.destination {
                a.status = Status::Landed;
            } else if a.fuel == 0 {
                a.status = Status::FuelEmergency;
            }
        }
        for e in &events {
            for a in self.aircraft.iter_mut().filter(|a| e.aircraft_ids.contains(&a.id)) {
                a.status = Status::Collided;
            }
        }
        self.time += 1;
        self.history.push(self.collective_state());

        if !events.is_empty() {
            self.termination = Some(Termination::LossOfSeparation);
        } else if self.aircraft.iter().any(|a| a.status == Status::FuelEmergency) {
            self.termination = Some(Termination::FuelEmergency);
        } else if !self.aircraft.iter().any(AircraftState::is_airborne) {
            self.termination = Some(Termination::AllLanded);
        }
        self.events.extend(events.iter().cloned());
        Ok(events)
    }

    /// Steps until a terminal condition or `step_limit` steps have elapsed.
    pub fn run_to_completion(mut self, step_limit: u32) -> Result<ScenarioOutcome> {
        while self.termination.is_none() {
            if self.time >= step_limit {
                self.termination = Some(Termination::StepLimit);
                break;
            }
            self.step()?;
        }
        Ok(self.into_outcome())
    }

    pub fn into_outcome(self) -> ScenarioOutcome {
        ScenarioOutcome {
            config_id: self.config_id,
            algorithm: self.resolver.name().to_string(),
            termination: self.termination.unwrap_or(Termination::StepLimit),
            livelock_detected: detect_livelock(&self.history),
            trajectories: self.trajectories,
            separation_events: self.events,
            steps_elapsed: self.time,
            resolver_compute_seconds: self.compute.as_secs_f64(),
            final_states: self.aircraft,
        }
    }
}

/// Builds, runs and returns the outcome of one scenario with
/// `step_limit = fuel_capacity`.
pub fn simulate<R: Resolver>(
    lattice: &HexLattice,
    config: &TrafficConfiguration,
    resolver: R,
    fuel_capacity: u32,
) -> Result<ScenarioOutcome> {
    Simulation::new(lattice, config, resolver, fuel_capacity)?.run_to_completion(fuel_capacity)
}

/// Replays trajectories pairwise and reports every shared vertex or
/// undirected edge. An aircraft is present only while its trajectory lasts,
/// so one that landed early leaves the airspace after its final vertex.
///
/// Shares no code with the engine's monitor.
pub fn audit_trajectories(ids: &[u32], trajectories: &[Vec<AxialCoord>]) -> Vec<SeparationEvent> {
    let mut found: BTreeMap<(u32, Resource), Vec<u32>> = BTreeMap::new();
    let mut note = |time: usize, resource: Resource, i: usize, j: usize| {
        let involved = found.entry((time as u32, resource)).or_default();
        for id in [ids[i], ids[j]] {
            if !involved.contains(&id) {
                involved.push(id);
            }
        }
    };
    for i in 0..trajectories.len() {
        for j in i + 1..trajectories.len() {
            let (a, b) = (&trajectories[i], &trajectories[j]);
            for t in 0..a.len().min(b.len()) {
                if a[t] == b[t] {
                    note(t, Resource::Vertex(a[t]), i, j);
                }
                if t + 1 < a.len().min(b.len()) {
                    let same = (a[t] == b[t] && a[t + 1] == b[t + 1]) || (a[t] == b[t + 1] && a[t + 1] == b[t]);
                    if same {
                        note(t, Resource::Edge(EdgeId::normalized(a[t], a[t + 1])), i, j);
                    }
                }
            }
        }
    }
    found
        .into_iter()
        .map(|((time, resource), mut aircraft_ids)| {
            aircraft_ids.sort_unstable();
            SeparationEvent { time, resource, aircraft_ids }
        })
        .collect()
}
