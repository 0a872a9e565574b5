//! Brute-force reference optimum for small instances.
//!
//! Exhaustive enumeration of every joint move sequence up to the horizon,
//! memoized on `(time, positions)`. No heuristic and no distance-based
//! pruning, so it is slow but hard to get wrong. The memo is a dense table
//! over all joint states, which limits it to a handful of aircraft on
//! small lattices.

use crate::lattice::{AxialCoord, HexLattice};
use crate::sim::TrafficConfiguration;

const INFEASIBLE: u32 = u32::MAX;
const UNKNOWN: u32 = u32::MAX - 1;
const MAX_AIRCRAFT: usize = 6;

struct Search {
    /// Neighbor lists by vertex slot; built here from coordinates, not
    /// borrowed from the lattice's own adjacency.
    neighbors: Vec<Vec<u32>>,
    dests: Vec<u32>,
    /// Position code for a landed aircraft.
    gone: u32,
    horizon: u32,
    memo: Vec<u32>,
}

/// Minimum sum of arrival times over all conflict-free joint plans that
/// land every aircraft by `horizon`, or `None` if there is none.
pub fn optimal_objective(lat: &HexLattice, cfg: &TrafficConfiguration, horizon: u32) -> Option<u32> {
    assert!(cfg.aircraft.len() <= MAX_AIRCRAFT, "oracle instance too large");
    let slot = |c: AxialCoord| lat.vertices().iter().position(|&v| v == c).expect("on lattice") as u32;
    let neighbors = lat
        .vertices()
        .iter()
        .map(|&v| {
            lat.vertices()
                .iter()
                .enumerate()
                .filter(|(_, &w)| {
                    let (dq, dr) = (w.q - v.q, w.r - v.r);
                    matches!((dq, dr), (1, 0) | (-1, 0) | (0, 1) | (0, -1) | (1, -1) | (-1, 1))
                })
                .map(|(i, _)| i as u32)
                .collect()
        })
        .collect();
    let mut search = Search {
        neighbors,
        dests: cfg.aircraft.iter().map(|a| slot(a.dest)).collect(),
        gone: lat.vertex_count() as u32,
        horizon,
        memo: Vec::new(),
    };
    let states = (u64::from(search.gone) + 1).pow(cfg.aircraft.len() as u32) * (u64::from(horizon) + 1);
    search.memo = vec![UNKNOWN; usize::try_from(states).expect("oracle instance too large")];
    let start: Vec<u32> = cfg.aircraft.iter().map(|a| slot(a.start)).collect();
    let best = search.cost_to_go(0, &start);
    (best != INFEASIBLE).then_some(best)
}

impl Search {
    fn key(&self, t: u32, positions: &[u32]) -> usize {
        let base = self.gone as usize + 1;
        positions.iter().fold(t as usize, |k, &p| k * base + p as usize)
    }

    fn cost_to_go(&mut self, t: u32, positions: &[u32]) -> u32 {
        let airborne = positions.iter().filter(|&&p| p != self.gone).count() as u32;
        if airborne == 0 {
            return 0;
        }
        if t == self.horizon {
            return INFEASIBLE;
        }
        let key = self.key(t, positions);
        if self.memo[key] != UNKNOWN {
            return self.memo[key];
        }
        let mut next = [0; MAX_AIRCRAFT];
        let rest = self.best_joint_move(t, positions, 0, &mut next[..positions.len()]);
        let best = if rest == INFEASIBLE { INFEASIBLE } else { airborne + rest };
        self.memo[key] = best;
        best
    }

    /// Chooses a move for aircraft `k` onwards, checking each choice
    /// against the choices already made for aircraft `0..k`.
    fn best_joint_move(&mut self, t: u32, from: &[u32], k: usize, next: &mut [u32]) -> u32 {
        if k == from.len() {
            let mut landed = [0; MAX_AIRCRAFT];
            for (k, (&p, &d)) in next.iter().zip(&self.dests).enumerate() {
                landed[k] = if p == d { self.gone } else { p };
            }
            return self.cost_to_go(t + 1, &landed[..from.len()]);
        }
        if from[k] == self.gone {
            next[k] = self.gone;
            return self.best_joint_move(t, from, k + 1, next);
        }
        let mut best = INFEASIBLE;
        for m in 0..self.neighbors[from[k] as usize].len() {
            let to = self.neighbors[from[k] as usize][m];
            let clash =
                (0..k).any(|j| from[j] != self.gone && (next[j] == to || (next[j] == from[k] && from[j] == to)));
            if clash {
                continue;
            }
            next[k] = to;
            best = best.min(self.best_joint_move(t, from, k + 1, next));
        }
        best
    }
}
