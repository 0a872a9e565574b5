//! Self-checks behind `skylattice verify`.

use rayon::prelude::*;

use crate::error::Result;
use crate::harness::{run_batch, summarize, write_results_csv, write_summary_csv, Algorithm, BatchOptions};
use crate::implicit::ImplicitResolver;
use crate::lattice::HexLattice;
use crate::oracle::optimal_objective;
use crate::scenarios::{enumerate_configs, sample_configs, DEFAULT_MIN_PLAN_LENGTH};
use crate::sim::{audit_trajectories, simulate, Termination, TrafficConfiguration, DEFAULT_FUEL};
use crate::strategic::{build_model, solve_exact};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every two-aircraft configuration on a lattice of `radius` under the
/// implicit rules must end with both aircraft landed.
pub fn pairwise_sweep(radius: u32) -> Result<VerifyReport> {
    let lat = HexLattice::new(radius);
    let mut report = VerifyReport::default();
    for cfg in enumerate_configs(&lat, 2, DEFAULT_MIN_PLAN_LENGTH)? {
        let outcome = simulate(&lat, &cfg, ImplicitResolver, DEFAULT_FUEL)?;
        report.checked += 1;
        if outcome.termination != Termination::AllLanded {
            report.failures.push(format!("config {}: {}", cfg.config_id, outcome.termination.as_str()));
        }
    }
    Ok(report)
}

/// Exact solver against the brute-force optimum: every two-aircraft
/// configuration at `radius` plus `extra_three` sampled three-aircraft ones.
/// Each plan must also replay without separation events.
pub fn oracle_sweep(radius: u32, extra_three: usize, seed: u64) -> Result<VerifyReport> {
    let lat = HexLattice::new(radius);
    let mut configs: Vec<_> = enumerate_configs(&lat, 2, DEFAULT_MIN_PLAN_LENGTH)?.collect();
    if extra_three > 0 {
        configs.extend(sample_configs(&lat, 3, extra_three, DEFAULT_MIN_PLAN_LENGTH, seed)?);
    }
    let failures: Vec<Vec<String>> =
        configs.par_iter().map(|cfg| check_against_oracle(&lat, cfg)).collect::<Result<_>>()?;
    Ok(VerifyReport { checked: configs.len(), failures: failures.into_iter().flatten().collect() })
}

fn check_against_oracle(lat: &HexLattice, cfg: &TrafficConfiguration) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    let n = cfg.aircraft.len();
    let model = build_model(lat, cfg, DEFAULT_FUEL)?;
    let expected = optimal_objective(lat, cfg, DEFAULT_FUEL);
    match (solve_exact(&model), expected) {
        (Ok(plan), Some(best)) => {
            if plan.objective != best {
                failures
                    .push(format!("{n}-aircraft config {}: solver {} vs oracle {best}", cfg.config_id, plan.objective));
            }
            if let Err(e) = model.check_plan(&plan) {
                failures.push(format!("{n}-aircraft config {}: {e}", cfg.config_id));
            }
            let ids: Vec<u32> = cfg.aircraft.iter().map(|a| a.id).collect();
            if !audit_trajectories(&ids, &plan.trajectories).is_empty() {
                failures.push(format!("{n}-aircraft config {}: plan loses separation", cfg.config_id));
            }
        }
        (Err(_), None) => {}
        (got, want) => failures.push(format!(
            "{n}-aircraft config {}: solver {:?} vs oracle {want:?}",
            cfg.config_id,
            got.map(|p| p.objective)
        )),
    }
    Ok(failures)
}

/// Runs one sampled batch per algorithm at several parallelism degrees and
/// compares the results and summary files byte for byte. Timing is off.
pub fn determinism_check(
    radius: u32,
    n_aircraft: usize,
    count: usize,
    seed: u64,
    degrees: &[usize],
) -> Result<VerifyReport> {
    let lat = HexLattice::new(radius);
    let configs = sample_configs(&lat, n_aircraft, count, DEFAULT_MIN_PLAN_LENGTH, seed)?;
    let mut report = VerifyReport::default();
    for algorithm in Algorithm::ALL {
        let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
        for &parallelism in degrees {
            let opts = BatchOptions { fuel_capacity: DEFAULT_FUEL, parallelism, timing: false };
            let records = run_batch(&configs, algorithm, &opts)?;
            let (mut results, mut summary) = (Vec::new(), Vec::new());
            write_results_csv(&mut results, &records)?;
            write_summary_csv(&mut summary, &summarize(&records)?)?;
            report.checked += 1;
            match &reference {
                None => reference = Some((results, summary)),
                Some((r, s)) => {
                    if *r != results || *s != summary {
                        report.failures.push(format!("{algorithm}: output differs at parallelism {parallelism}"));
                    }
                }
            }
        }
    }
    Ok(report)
}
