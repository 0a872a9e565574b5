#![allow(dead_code)]

use skylattice_core::sim::FlightPlan;
use skylattice_core::{AxialCoord, TrafficConfiguration};

pub type Plan = ((i32, i32), (i32, i32));

pub fn c(q: i32, r: i32) -> AxialCoord {
    AxialCoord::new(q, r)
}

/// Aircraft `k` gets id and priority `k + 1`.
pub fn config(radius: u32, plans: &[Plan]) -> TrafficConfiguration {
    TrafficConfiguration {
        config_id: 0,
        lattice_radius: radius,
        aircraft: plans
            .iter()
            .enumerate()
            .map(|(k, &((sq, sr), (dq, dr)))| FlightPlan {
                id: k as u32 + 1,
                start: c(sq, sr),
                dest: c(dq, dr),
                priority: k as u32 + 1,
            })
            .collect(),
    }
}

/// Three aircraft converging on one destination; the implicit rules send
/// them round it until the fuel runs out.
pub fn roundabout() -> TrafficConfiguration {
    config(3, &[((-3, 1), (1, 0)), ((-2, -1), (1, 0)), ((-3, 0), (1, 0))])
}
