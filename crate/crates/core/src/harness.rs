//! Batch runs, per-configuration metrics and their file formats.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collaborative::CollaborativeResolver;
use crate::error::{Error, Result};
use crate::implicit::ImplicitResolver;
use crate::lattice::HexLattice;
use crate::sim::{simulate, ScenarioOutcome, Status, Termination, TrafficConfiguration};
use crate::strategic::StrategicResolver;

pub const RESULTS_HEADER: &str =
    "config_id,algorithm,n_aircraft,termination,mean_inefficiency,los_flag,fuel_emergency_flag,steps,compute_seconds";
pub const SUMMARY_HEADER: &str =
    "algorithm,n_aircraft,config_count,mean_inefficiency,p_fuel_emergency,p_los,mean_compute_seconds";
pub const EQUITY_HEADER: &str = "algorithm,n_aircraft,aircraft_id,total_deviation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Implicit,
    Collaborative,
    Strategic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Implicit, Algorithm::Collaborative, Algorithm::Strategic];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Implicit => "implicit",
            Algorithm::Collaborative => "collaborative",
            Algorithm::Strategic => "strategic",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            Error::Parse(format!("unknown algorithm `{s}` (expected implicit, collaborative or strategic)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub fuel_capacity: u32,
    /// Worker threads; 0 means one per available core.
    pub parallelism: usize,
    /// When false, compute seconds are reported as zero so that output
    /// files are byte-reproducible.
    pub timing: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { fuel_capacity: crate::sim::DEFAULT_FUEL, parallelism: 1, timing: true }
    }
}

/// Metrics for one (configuration, algorithm) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub config_id: u64,
    pub algorithm: Algorithm,
    pub n_aircraft: usize,
    /// Unknown when the record was read back from a results CSV.
    pub lattice_radius: Option<u32>,
    pub termination: Termination,
    /// Effective distance over shortest distance, per aircraft in
    /// configuration order. Empty when read back from CSV.
    pub per_aircraft_inefficiency: Vec<f64>,
    /// Effective distance minus shortest distance, per aircraft.
    pub per_aircraft_deviation: Vec<u32>,
    pub mean_inefficiency: f64,
    pub los_flag: bool,
    pub fuel_emergency_flag: bool,
    pub steps: u32,
    pub resolver_compute_seconds: f64,
    pub fault: Option<String>,
}

impl MetricsRecord {
    /// Derives the record from a finished scenario.
    ///
    /// An aircraft that landed or ran dry is charged the distance it flew.
    /// One still airborne when the run stopped early (loss of separation,
    /// allocation failure, step limit) is charged what it flew plus its
    /// remaining shortest distance, the least it could still have needed.
    pub fn from_outcome(
        lat: &HexLattice,
        cfg: &TrafficConfiguration,
        algorithm: Algorithm,
        outcome: &ScenarioOutcome,
    ) -> Self {
        let (per_aircraft_inefficiency, per_aircraft_deviation): (Vec<f64>, Vec<u32>) = cfg
            .aircraft
            .iter()
            .zip(&outcome.final_states)
            .map(|(plan, state)| {
                let shortest = lat.distance(plan.start, plan.dest).expect("validated plan");
                let effective = match state.status {
                    Status::Landed | Status::FuelEmergency => state.distance_flown,
                    Status::Airborne | Status::Collided => {
                        state.distance_flown + lat.distance(state.position, plan.dest).expect("on lattice")
                    }
                };
                (f64::from(effective) / f64::from(shortest), effective.saturating_sub(shortest))
            })
            .unzip();
        let mean_inefficiency = per_aircraft_inefficiency.iter().sum::<f64>() / per_aircraft_inefficiency.len() as f64;
        Self {
            config_id: cfg.config_id,
            algorithm,
            n_aircraft: cfg.aircraft.len(),
            lattice_radius: Some(cfg.lattice_radius),
            termination: outcome.termination,
            per_aircraft_inefficiency,
            per_aircraft_deviation,
            mean_inefficiency,
            los_flag: outcome.termination == Termination::LossOfSeparation,
            fuel_emergency_flag: outcome.termination == Termination::FuelEmergency,
            steps: outcome.steps_elapsed,
            resolver_compute_seconds: outcome.resolver_compute_seconds,
            fault: None,
        }
    }

    fn faulted(cfg: &TrafficConfiguration, algorithm: Algorithm, reason: String) -> Self {
        Self {
            config_id: cfg.config_id,
            algorithm,
            n_aircraft: cfg.aircraft.len(),
            lattice_radius: Some(cfg.lattice_radius),
            termination: Termination::Fault,
            per_aircraft_inefficiency: Vec::new(),
            per_aircraft_deviation: Vec::new(),
            mean_inefficiency: f64::NAN,
            los_flag: false,
            fuel_emergency_flag: false,
            steps: 0,
            resolver_compute_seconds: 0.0,
            fault: Some(reason),
        }
    }
}

/// A record plus the scenario it came from (absent on faults).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDetail {
    pub record: MetricsRecord,
    pub outcome: Option<ScenarioOutcome>,
}

/// Runs one configuration. Faults become records, never errors.
pub fn run_config(
    lat: &HexLattice,
    cfg: &TrafficConfiguration,
    algorithm: Algorithm,
    opts: &BatchOptions,
) -> RunDetail {
    let fuel = opts.fuel_capacity;
    let outcome = match algorithm {
        Algorithm::Implicit => simulate(lat, cfg, ImplicitResolver, fuel),
        Algorithm::Collaborative => simulate(lat, cfg, CollaborativeResolver::default(), fuel),
        Algorithm::Strategic => simulate(lat, cfg, StrategicResolver::new(fuel), fuel),
    };
    match outcome {
        Ok(mut outcome) => {
            if !opts.timing {
                outcome.resolver_compute_seconds = 0.0;
            }
            RunDetail { record: MetricsRecord::from_outcome(lat, cfg, algorithm, &outcome), outcome: Some(outcome) }
        }
        Err(e) => RunDetail { record: MetricsRecord::faulted(cfg, algorithm, e.to_string()), outcome: None },
    }
}

/// Runs every configuration with up to `opts.parallelism` workers and
/// returns the results ordered by config id.
pub fn run_batch_detailed(
    configs: &[TrafficConfiguration],
    algorithm: Algorithm,
    opts: &BatchOptions,
) -> Result<Vec<RunDetail>> {
    let mut lattices = HashMap::new();
    for cfg in configs {
        lattices.entry(cfg.lattice_radius).or_insert_with(|| HexLattice::new(cfg.lattice_radius));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))?;
    let mut details: Vec<RunDetail> = pool.install(|| {
        configs.par_iter().map(|cfg| run_config(&lattices[&cfg.lattice_radius], cfg, algorithm, opts)).collect()
    });
    details.sort_by_key(|d| d.record.config_id);
    Ok(details)
}

pub fn run_batch(
    configs: &[TrafficConfiguration],
    algorithm: Algorithm,
    opts: &BatchOptions,
) -> Result<Vec<MetricsRecord>> {
    Ok(run_batch_detailed(configs, algorithm, opts)?.into_iter().map(|d| d.record).collect())
}

/// Aggregate indicators for one (algorithm, aircraft count) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n_aircraft: usize,
    /// Configurations that ran; faulted ones are counted in `faults` only.
    pub config_count: usize,
    pub mean_inefficiency: f64,
    pub p_fuel_emergency: f64,
    pub p_los: f64,
    pub mean_compute_seconds: f64,
    pub allocation_failures: usize,
    pub faults: usize,
    /// Summed deviation per aircraft slot (aircraft `k+1` at index `k`).
    /// Empty when the records carry no per-aircraft data.
    pub per_aircraft_deviation_totals: Vec<u64>,
}

/// Groups by (algorithm, aircraft count). Every mean weighs configurations
/// equally, fuel emergencies included.
pub fn summarize(records: &[MetricsRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Summary("no records".into()));
    }
    let mut groups: BTreeMap<(Algorithm, usize), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.algorithm, r.n_aircraft)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, n_aircraft), group)| {
            let mut radii: Vec<u32> = group.iter().filter_map(|r| r.lattice_radius).collect();
            radii.sort_unstable();
            radii.dedup();
            if radii.len() > 1 {
                return Err(Error::Summary(format!("group {algorithm}/{n_aircraft} mixes lattice radii {radii:?}")));
            }
            let ran: Vec<&&MetricsRecord> = group.iter().filter(|r| r.termination != Termination::Fault).collect();
            let count = ran.len();
            let mean = |f: &dyn Fn(&MetricsRecord) -> f64| {
                if count == 0 {
                    0.0
                } else {
                    ran.iter().map(|r| f(r)).sum::<f64>() / count as f64
                }
            };
            let mut totals = vec![0u64; n_aircraft];
            let with_detail = ran.iter().filter(|r| r.per_aircraft_deviation.len() == n_aircraft).count();
            for r in &ran {
                for (t, &d) in totals.iter_mut().zip(&r.per_aircraft_deviation) {
                    *t += u64::from(d);
                }
            }
            Ok(SummaryRow {
                algorithm,
                n_aircraft,
                config_count: count,
                mean_inefficiency: mean(&|r| r.mean_inefficiency),
                p_fuel_emergency: mean(&|r| f64::from(u8::from(r.fuel_emergency_flag))),
                p_los: mean(&|r| f64::from(u8::from(r.los_flag))),
                mean_compute_seconds: mean(&|r| r.resolver_compute_seconds),
                allocation_failures: ran.iter().filter(|r| r.termination == Termination::AllocationFailure).count(),
                faults: group.len() - count,
                per_aircraft_deviation_totals: if with_detail == count && count > 0 { totals } else { Vec::new() },
            })
        })
        .collect()
}

pub fn write_results_csv<W: Write>(mut out: W, records: &[MetricsRecord]) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{},{},{:.6}",
            r.config_id,
            r.algorithm,
            r.n_aircraft,
            r.termination.as_str(),
            r.mean_inefficiency,
            u8::from(r.los_flag),
            u8::from(r.fuel_emergency_flag),
            r.steps,
            r.resolver_compute_seconds
        )?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct ResultsRow {
    config_id: u64,
    algorithm: String,
    n_aircraft: usize,
    termination: String,
    mean_inefficiency: f64,
    los_flag: u8,
    fuel_emergency_flag: u8,
    steps: u32,
    compute_seconds: f64,
}

/// Reads a results CSV back. Per-aircraft columns are not part of the
/// format, so those fields come back empty.
pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::Parse(format!("unexpected results header `{}`", header.join(","))));
    }
    let mut records = Vec::new();
    for (line, row) in reader.deserialize::<ResultsRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("results row {}: {e}", line + 1)))?;
        let termination = Termination::parse(&row.termination).ok_or_else(|| {
            Error::Parse(format!("results row {}: unknown termination `{}`", line + 1, row.termination))
        })?;
        let flag = |v: u8, name: &str| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(Error::Parse(format!("results row {}: {name} must be 0 or 1", line + 1))),
        };
        records.push(MetricsRecord {
            config_id: row.config_id,
            algorithm: row.algorithm.parse()?,
            n_aircraft: row.n_aircraft,
            lattice_radius: None,
            termination,
            per_aircraft_inefficiency: Vec::new(),
            per_aircraft_deviation: Vec::new(),
            mean_inefficiency: row.mean_inefficiency,
            los_flag: flag(row.los_flag, "los_flag")?,
            fuel_emergency_flag: flag(row.fuel_emergency_flag, "fuel_emergency_flag")?,
            steps: row.steps,
            resolver_compute_seconds: row.compute_seconds,
            fault: None,
        });
    }
    Ok(records)
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.9}",
            s.algorithm,
            s.n_aircraft,
            s.config_count,
            s.mean_inefficiency,
            s.p_fuel_emergency,
            s.p_los,
            s.mean_compute_seconds
        )?;
    }
    Ok(())
}

/// Per-aircraft deviation totals, one line per (group, aircraft slot).
pub fn write_equity_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{EQUITY_HEADER}")?;
    for s in rows {
        for (k, total) in s.per_aircraft_deviation_totals.iter().enumerate() {
            writeln!(out, "{},{},{},{total}", s.algorithm, s.n_aircraft, k + 1)?;
        }
    }
    Ok(())
}

/// One JSON object per run: the record, trajectories and separation events.
pub fn write_detail_jsonl<W: Write>(mut out: W, details: &[RunDetail]) -> Result<()> {
    for d in details {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads the JSONL lines back as generic JSON values.
pub fn read_detail_jsonl<R: BufRead>(input: R) -> Result<Vec<serde_json::Value>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}
