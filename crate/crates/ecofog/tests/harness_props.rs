use ecofog::dag::BuiltinDag;
use ecofog::energy::EnergyBreakdown;
use ecofog::harness::{
    aggregate, emit_report, run_solve, run_sweep, run_tracking, ReportFormat, RunReport, Scenario, SweepAxis,
    TimelineEvent, TrialRecord,
};
use ecofog::tap::Strategy;
use ecofog::timing::{ResourceAllocation, TaskAllocation};
use proptest::prelude::*;

fn quick(id: BuiltinDag, base_seed: u64, trials: usize) -> Scenario {
    let mut s = Scenario::builtin(id, 1);
    s.rap.i_max = 80;
    s.ga.ps = 6;
    s.ga.g_max = 2;
    s.trials = trials;
    s.base_seed = base_seed;
    s
}

fn record(value: Option<f64>, strategy: Strategy, trial: usize, e_tot: f64, e_mobile: f64) -> TrialRecord {
    let energy = EnergyBreakdown {
        t_dag: 0.1,
        e_tot,
        e_cmp: e_tot,
        e_net: 0.0,
        e_mobile,
        per_node: Vec::new(),
        per_connection: Vec::new(),
    };
    TrialRecord {
        value,
        trial,
        seed: trial as u64,
        strategy,
        feasible: true,
        x: TaskAllocation::preset(ecofog::timing::Preset::Mobile, 3),
        rs: ResourceAllocation(vec![1.0]),
        energy,
        rap_calls: 1,
        trace: vec![e_tot],
    }
}

fn emitted_bytes(report: &RunReport) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(report, dir.path(), &[ReportFormat::Json, ReportFormat::Csv]).unwrap();
    files
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn same_seed_gives_identical_reports(base_seed in any::<u32>(), trials in 1..4usize, dag in 0..3usize) {
        let id = [BuiltinDag::Dag1, BuiltinDag::Dag2, BuiltinDag::Dag3][dag];
        let s = quick(id, u64::from(base_seed), trials);
        let (a, b) = (run_solve(&s).unwrap(), run_solve(&s).unwrap());
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(emitted_bytes(&a), emitted_bytes(&b));
    }
}

proptest! {
    #[test]
    fn aggregate_mean_is_arithmetic_mean(groups in prop::collection::vec(prop::collection::vec((0.1..1e3f64, 0.1..1e3f64), 1..12), 1..4)) {
        let mut records = Vec::new();
        for (g, values) in groups.iter().enumerate() {
            for (t, &(e, m)) in values.iter().enumerate() {
                records.push(record(Some(g as f64), Strategy::Agtas, t, e, m));
            }
        }
        let aggs = aggregate(&records);
        prop_assert_eq!(aggs.len(), groups.len());
        for (a, values) in aggs.iter().zip(&groups) {
            let n = values.len() as f64;
            let mean = values.iter().map(|v| v.0).sum::<f64>() / n;
            let mean_m = values.iter().map(|v| v.1).sum::<f64>() / n;
            prop_assert_eq!(a.trials, values.len());
            prop_assert!((a.mean_e_tot - mean).abs() <= 1e-12 * mean);
            prop_assert!((a.mean_e_mobile - mean_m).abs() <= 1e-12 * mean_m);
            prop_assert_eq!(a.min_e_tot, values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min));
            prop_assert_eq!(a.max_e_tot, values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max));
        }
    }
}

#[test]
fn report_round_trips_and_csv_has_one_row_per_trial() {
    let s = quick(BuiltinDag::Dag1, 3, 2);
    let report = run_sweep(&s, SweepAxis::TdagMax, &[0.3, 0.6, 1.2]).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.aggregates, report.aggregates);
    assert_eq!(aggregate(&back.records), report.aggregates);
    let files = emitted_bytes(&report);
    let records = &files.iter().find(|f| f.0 == "records.csv").unwrap().1;
    let rows = csv::Reader::from_reader(records.as_slice()).records().count();
    assert_eq!(rows, 2 * 3);
}

fn tracking(tdag_max: f64) -> Scenario {
    let mut s = Scenario::builtin(BuiltinDag::Dag1, 1);
    s.tdag_max = Some(tdag_max);
    s.allocation = Some("mobile".into());
    s.horizon = Some(1200);
    s.timeline = vec![TimelineEvent { at: 600, set_allocation: Some("fog".into()), ..TimelineEvent::default() }];
    s
}

#[test]
fn binding_regime_is_flagged() {
    let report = run_tracking(&tracking(0.2)).unwrap();
    let regimes = &report.tracking.as_ref().unwrap().regimes;
    assert_eq!(regimes.len(), 2);
    assert!(regimes[0].feasible);
    assert!(regimes[0].lambda_final > 1e-3 * regimes[0].lambda_peak);
    assert!(regimes[0].flagged);
    assert!(!regimes[1].flagged);
}

#[test]
fn infeasible_regime_is_flagged() {
    let report = run_tracking(&tracking(1e-3)).unwrap();
    let t = report.tracking.unwrap();
    assert!(t.regimes.iter().all(|r| !r.feasible && r.flagged));
    assert_eq!(t.trace.len(), 1200);
    assert!(t.trace.iter().all(|p| p.e_tot.is_infinite()));
}
