mod common;

use std::thread::sleep;
use std::time::Duration;

use common::{config, roundabout};
use skylattice_core::harness::{
    read_detail_jsonl, read_results_csv, run_batch, run_batch_detailed, run_config, summarize, write_detail_jsonl,
    write_equity_csv, write_results_csv, write_summary_csv, Algorithm, BatchOptions, RESULTS_HEADER, SUMMARY_HEADER,
};
use skylattice_core::implicit::ImplicitResolver;
use skylattice_core::scenarios::sample_configs;
use skylattice_core::sim::{audit_trajectories, simulate, ResolverFailure};
use skylattice_core::{AircraftState, Error, HexLattice, MetricsRecord, MoveCommand, Resolver, Termination};

fn untimed(parallelism: usize) -> BatchOptions {
    BatchOptions { fuel_capacity: 20, parallelism, timing: false }
}

fn record(algorithm: Algorithm, ineff: f64, termination: Termination) -> MetricsRecord {
    MetricsRecord {
        config_id: 0,
        algorithm,
        n_aircraft: 3,
        lattice_radius: Some(3),
        termination,
        per_aircraft_inefficiency: vec![ineff; 3],
        per_aircraft_deviation: vec![0; 3],
        mean_inefficiency: ineff,
        los_flag: termination == Termination::LossOfSeparation,
        fuel_emergency_flag: termination == Termination::FuelEmergency,
        steps: 5,
        resolver_compute_seconds: 0.5,
        fault: None,
    }
}

#[test]
fn unimpeded_aircraft_is_perfectly_efficient() {
    let lat = HexLattice::new(3);
    for algorithm in Algorithm::ALL {
        let r = run_config(&lat, &config(3, &[((-3, 0), (3, -2))]), algorithm, &untimed(1)).record;
        assert_eq!(r.mean_inefficiency, 1.0);
        assert!(!r.los_flag && !r.fuel_emergency_flag);
        assert_eq!(r.per_aircraft_deviation, vec![0]);
    }
}

#[test]
fn livelock_is_charged_the_whole_fuel_load() {
    let lat = HexLattice::new(3);
    let r = run_config(&lat, &roundabout(), Algorithm::Implicit, &untimed(1)).record;
    assert_eq!(r.termination, Termination::FuelEmergency);
    assert!(r.fuel_emergency_flag && !r.los_flag);
    // Every aircraft is four edges from the shared destination.
    assert_eq!(r.per_aircraft_inefficiency, vec![5.0; 3]);
    assert_eq!(r.per_aircraft_deviation, vec![16; 3]);
}

#[test]
fn aircraft_cut_short_by_a_loss_of_separation_are_charged_at_least_their_route() {
    let lat = HexLattice::new(3);
    let configs = sample_configs(&lat, 4, 2000, 4, 21).unwrap();
    let records = run_batch(&configs, Algorithm::Implicit, &untimed(1)).unwrap();
    let los: Vec<_> = records.iter().filter(|r| r.los_flag).collect();
    assert!(!los.is_empty());
    for r in records {
        assert!(r.per_aircraft_inefficiency.iter().all(|&x| x >= 1.0));
    }
}

#[test]
fn summary_means_and_probabilities() {
    let ones: Vec<_> = (0..10).map(|_| record(Algorithm::Implicit, 1.0, Termination::AllLanded)).collect();
    let s = summarize(&ones).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!((s[0].mean_inefficiency, s[0].p_los, s[0].p_fuel_emergency), (1.0, 0.0, 0.0));
    assert_eq!(s[0].config_count, 10);

    let mut hundred: Vec<_> = (0..98).map(|_| record(Algorithm::Collaborative, 1.0, Termination::AllLanded)).collect();
    hundred.push(record(Algorithm::Collaborative, 1.5, Termination::LossOfSeparation));
    hundred.push(record(Algorithm::Collaborative, 1.5, Termination::LossOfSeparation));
    let s = summarize(&hundred).unwrap();
    assert!((s[0].p_los - 0.02).abs() < 1e-12);
    assert!((s[0].mean_inefficiency - 1.01).abs() < 1e-12);
    assert_eq!(s[0].mean_compute_seconds, 0.5);
}

#[test]
fn allocation_failures_are_their_own_class() {
    let mut rs = vec![record(Algorithm::Collaborative, 1.0, Termination::AllLanded)];
    rs.push(record(Algorithm::Collaborative, 1.2, Termination::AllocationFailure));
    let s = &summarize(&rs).unwrap()[0];
    assert_eq!((s.allocation_failures, s.p_los, s.p_fuel_emergency), (1, 0.0, 0.0));
}

#[test]
fn summary_rejects_empty_and_mixed_radii() {
    assert!(matches!(summarize(&[]), Err(Error::Summary(_))));
    let a = record(Algorithm::Strategic, 1.0, Termination::AllLanded);
    let mut b = a.clone();
    b.lattice_radius = Some(4);
    assert!(matches!(summarize(&[a.clone(), b]), Err(Error::Summary(_))));
    let mut unknown = a.clone();
    unknown.lattice_radius = None;
    assert!(summarize(&[a, unknown]).is_ok());
}

#[test]
fn results_csv_is_exact_and_round_trips() {
    let lat = HexLattice::new(3);
    let configs = sample_configs(&lat, 3, 50, 4, 3).unwrap();
    let records = run_batch(&configs, Algorithm::Collaborative, &untimed(1)).unwrap();
    let mut bytes = Vec::new();
    write_results_csv(&mut bytes, &records).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(RESULTS_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 9);
    assert_eq!(first[1], "collaborative");
    assert_eq!(first[4].split('.').nth(1).map(str::len), Some(6));
    assert_eq!(first[8], "0.000000");

    let back = read_results_csv(bytes.as_slice()).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in back.iter().zip(&records) {
        assert_eq!(
            (a.config_id, a.termination, a.steps, a.los_flag),
            (b.config_id, b.termination, b.steps, b.los_flag)
        );
        assert!((a.mean_inefficiency - b.mean_inefficiency).abs() < 1e-6);
    }
    assert!(read_results_csv("config_id,algo\n1,x\n".as_bytes()).is_err());
}

#[test]
fn summary_and_equity_csv_layout() {
    let rs: Vec<_> = (0..4).map(|_| record(Algorithm::Implicit, 1.25, Termination::AllLanded)).collect();
    let rows = summarize(&rs).unwrap();
    let mut summary = Vec::new();
    write_summary_csv(&mut summary, &rows).unwrap();
    assert_eq!(
        String::from_utf8(summary).unwrap(),
        format!("{SUMMARY_HEADER}\nimplicit,3,4,1.250000,0.000000,0.000000,0.500000000\n")
    );
    let mut equity = Vec::new();
    write_equity_csv(&mut equity, &rows).unwrap();
    assert_eq!(equity.iter().filter(|&&b| b == b'\n').count(), 4);
}

#[test]
fn faulty_configurations_do_not_abort_the_batch() {
    let lat = HexLattice::new(3);
    let mut configs = sample_configs(&lat, 2, 5, 4, 1).unwrap();
    let mut broken = configs[0].clone();
    broken.config_id = 99;
    broken.aircraft[1].start = broken.aircraft[0].start;
    configs.push(broken);
    let records = run_batch(&configs, Algorithm::Implicit, &untimed(1)).unwrap();
    assert_eq!(records.len(), 6);
    let fault = records.iter().find(|r| r.config_id == 99).unwrap();
    assert_eq!(fault.termination, Termination::Fault);
    assert!(fault.fault.is_some());
    let s = &summarize(&records).unwrap()[0];
    assert_eq!((s.config_count, s.faults), (5, 1));
}

#[test]
fn output_is_independent_of_parallelism() {
    let lat = HexLattice::new(3);
    let configs = sample_configs(&lat, 4, 400, 4, 12).unwrap();
    for algorithm in Algorithm::ALL {
        let csv = |p| {
            let mut out = Vec::new();
            write_results_csv(&mut out, &run_batch(&configs, algorithm, &untimed(p)).unwrap()).unwrap();
            out
        };
        assert_eq!(csv(1), csv(8));
    }
}

#[test]
fn records_are_sorted_by_config_id() {
    let lat = HexLattice::new(3);
    let mut configs = sample_configs(&lat, 3, 30, 4, 2).unwrap();
    configs.reverse();
    let ids: Vec<u64> =
        run_batch(&configs, Algorithm::Implicit, &untimed(4)).unwrap().iter().map(|r| r.config_id).collect();
    assert_eq!(ids, (0..30).collect::<Vec<_>>());
}

#[test]
fn compute_seconds_cover_resolver_calls_only() {
    struct Slow(ImplicitResolver);
    impl Resolver for Slow {
        fn name(&self) -> &'static str {
            "slow"
        }
        fn commands(
            &mut self,
            lat: &HexLattice,
            t: u32,
            a: &[AircraftState],
        ) -> Result<Vec<MoveCommand>, ResolverFailure> {
            sleep(Duration::from_millis(5));
            self.0.commands(lat, t, a)
        }
    }
    let lat = HexLattice::new(3);
    let cfg = config(3, &[((-3, 0), (3, 0))]);
    let slow = simulate(&lat, &cfg, Slow(ImplicitResolver), 20).unwrap();
    assert!(slow.resolver_compute_seconds >= 6.0 * 0.005);
    let fast = simulate(&lat, &cfg, ImplicitResolver, 20).unwrap();
    assert!(fast.resolver_compute_seconds < 0.005);
}

#[test]
fn detail_stream_replays_consistently_with_the_flags() {
    let lat = HexLattice::new(3);
    let configs = sample_configs(&lat, 4, 300, 4, 30).unwrap();
    let details = run_batch_detailed(&configs, Algorithm::Implicit, &untimed(1)).unwrap();
    for d in &details {
        let out = d.outcome.as_ref().unwrap();
        let ids: Vec<u32> = configs[d.record.config_id as usize].aircraft.iter().map(|a| a.id).collect();
        assert_eq!(d.record.los_flag, !audit_trajectories(&ids, &out.trajectories).is_empty());
    }
    let mut jsonl = Vec::new();
    write_detail_jsonl(&mut jsonl, &details).unwrap();
    let back = read_detail_jsonl(jsonl.as_slice()).unwrap();
    assert_eq!(back.len(), details.len());
    assert_eq!(back[0]["record"]["algorithm"], "implicit");
    assert!(back[0]["outcome"]["trajectories"].is_array());
}

#[test]
fn algorithm_names_parse() {
    for a in Algorithm::ALL {
        assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
    }
    assert!("greedy".parse::<Algorithm>().is_err());
}
