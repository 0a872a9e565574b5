//! Traffic configuration generators and their JSONL file format.
//!
//! Aircraft tuples are ordered: aircraft `k` has id and priority `k`, so
//! two configurations that differ only by labeling are distinct.

use std::borrow::Borrow;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{AxialCoord, HexLattice};
use crate::sim::{FlightPlan, TrafficConfiguration};

pub const DEFAULT_MIN_PLAN_LENGTH: u32 = 4;

/// Exhaustive enumeration is used up to this many configurations.
pub const ENUMERATION_LIMIT: u64 = 200_000;

/// Every admissible `(start, dest)` pair, ordered by lattice vertex order.
pub fn plan_pairs(lat: &HexLattice, min_plan_length: u32) -> Vec<(AxialCoord, AxialCoord)> {
    let vs = lat.vertices();
    let mut pairs = Vec::new();
    for &s in vs {
        for &d in vs {
            if lat.distance(s, d).is_some_and(|dist| dist >= min_plan_length.max(1)) {
                pairs.push((s, d));
            }
        }
    }
    pairs
}

fn check_request(lat: &HexLattice, n_aircraft: usize, min_plan_length: u32) -> Result<()> {
    if n_aircraft == 0 {
        return Err(Error::InvalidConfiguration("at least one aircraft is required".into()));
    }
    if min_plan_length == 0 {
        return Err(Error::InvalidConfiguration("minimum plan length must be at least 1".into()));
    }
    if n_aircraft > lat.vertex_count() {
        return Err(Error::TooManyAircraft { requested: n_aircraft, available: lat.vertex_count() });
    }
    Ok(())
}

fn build(
    config_id: u64,
    lat: &HexLattice,
    pairs: impl Iterator<Item = (AxialCoord, AxialCoord)>,
) -> TrafficConfiguration {
    TrafficConfiguration {
        config_id,
        lattice_radius: lat.radius(),
        aircraft: pairs
            .enumerate()
            .map(|(k, (start, dest))| FlightPlan { id: k as u32 + 1, start, dest, priority: k as u32 + 1 })
            .collect(),
    }
}

/// Number of configurations [`enumerate_configs`] yields, computed without
/// enumerating.
pub fn count_configs(lat: &HexLattice, n_aircraft: usize, min_plan_length: u32) -> Result<u128> {
    check_request(lat, n_aircraft, min_plan_length)?;
    let pairs = plan_pairs(lat, min_plan_length);
    let per_start: Vec<u128> =
        lat.vertices().iter().map(|&s| pairs.iter().filter(|p| p.0 == s).count() as u128).collect();
    // Elementary symmetric polynomial e_n over per-start counts, times n!
    // for the ordered assignment of the chosen starts to aircraft.
    let mut e = vec![0u128; n_aircraft + 1];
    e[0] = 1;
    for c in per_start {
        for k in (1..=n_aircraft).rev() {
            e[k] += e[k - 1] * c;
        }
    }
    let factorial: u128 = (1..=n_aircraft as u128).product();
    Ok(e[n_aircraft] * factorial)
}

/// Lazily enumerates every configuration in lexicographic order of the
/// aircraft's plan-pair indices, aircraft 1 most significant.
pub struct ConfigEnumerator<'a> {
    lattice: &'a HexLattice,
    pairs: Vec<(AxialCoord, AxialCoord)>,
    cursor: Vec<usize>,
    next_id: u64,
    exhausted: bool,
}

impl ConfigEnumerator<'_> {
    fn advance(&mut self) {
        for k in (0..self.cursor.len()).rev() {
            self.cursor[k] += 1;
            if self.cursor[k] < self.pairs.len() {
                return;
            }
            self.cursor[k] = 0;
        }
        self.exhausted = true;
    }

    fn starts_distinct(&self) -> bool {
        let c = &self.cursor;
        (0..c.len()).all(|i| (i + 1..c.len()).all(|j| self.pairs[c[i]].0 != self.pairs[c[j]].0))
    }
}

impl Iterator for ConfigEnumerator<'_> {
    type Item = TrafficConfiguration;

    fn next(&mut self) -> Option<TrafficConfiguration> {
        while !self.exhausted {
            let valid = self.starts_distinct();
            let cfg = valid.then(|| build(self.next_id, self.lattice, self.cursor.iter().map(|&i| self.pairs[i])));
            self.advance();
            if let Some(cfg) = cfg {
                self.next_id += 1;
                return Some(cfg);
            }
        }
        None
    }
}

pub fn enumerate_configs(lat: &HexLattice, n_aircraft: usize, min_plan_length: u32) -> Result<ConfigEnumerator<'_>> {
    check_request(lat, n_aircraft, min_plan_length)?;
    let pairs = plan_pairs(lat, min_plan_length);
    Ok(ConfigEnumerator { lattice: lat, exhausted: pairs.is_empty(), pairs, cursor: vec![0; n_aircraft], next_id: 0 })
}

/// `count` i.i.d. uniform draws from the enumerable set, by rejection
/// sampling over plan-pair tuples with a ChaCha8 stream seeded from `seed`.
pub fn sample_configs(
    lat: &HexLattice,
    n_aircraft: usize,
    count: usize,
    min_plan_length: u32,
    seed: u64,
) -> Result<Vec<TrafficConfiguration>> {
    if count == 0 {
        return Err(Error::InvalidConfiguration("sample count must be at least 1".into()));
    }
    if count_configs(lat, n_aircraft, min_plan_length)? == 0 {
        return Err(Error::EmptyFeasibleSet);
    }
    let pairs = plan_pairs(lat, min_plan_length);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut draw = Vec::with_capacity(n_aircraft);
    while out.len() < count {
        draw.clear();
        draw.extend((0..n_aircraft).map(|_| pairs[rng.gen_range(0..pairs.len())]));
        let distinct = (0..n_aircraft).all(|i| (i + 1..n_aircraft).all(|j| draw[i].0 != draw[j].0));
        if distinct {
            out.push(build(out.len() as u64, lat, draw.iter().copied()));
        }
    }
    Ok(out)
}

pub fn write_configs_jsonl<W: Write>(
    mut out: W,
    configs: impl IntoIterator<Item = impl Borrow<TrafficConfiguration>>,
) -> Result<()> {
    for cfg in configs {
        serde_json::to_writer(&mut out, cfg.borrow())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_configs_jsonl<R: BufRead>(input: R) -> Result<Vec<TrafficConfiguration>> {
    let mut configs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cfg = serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        configs.push(cfg);
    }
    Ok(configs)
}
