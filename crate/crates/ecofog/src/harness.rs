//! Scenario-driven experiments: repeated solves, strategy benchmarks,
//! parameter sweeps, random WiFi availability and resource tracking under
//! a timeline of environment changes.
//!
//! Every trial `t` uses the seed `base_seed + t`, so parallel and serial
//! execution produce identical reports.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::{builtin_dag, scale_to_ccr, validate_dag, ApplicationDag, BuiltinDag, CCR_SWEEP_TOTAL_BITS};
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::platform::{default_ecosystem, Ecosystem, LinkId, NodeId, ServiceModel};
use crate::rap::{solve_rap, RapConfig, TracePoint, WarmStart};
use crate::tap::{solve_strategy, GaParams, Strategy, TapResult, DEFAULT_ENUMERATION_CAP};
use crate::timing::{ResourceAllocation, TaskAllocation};

/// Where the DAG of a scenario comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DagSource {
    /// Built-in topology with a weight seed.
    Builtin {
        /// Topology identifier.
        builtin: BuiltinDag,
        /// Seed of the weight draw.
        #[serde(default)]
        seed: u64,
    },
    /// DAG file, relative to the scenario file.
    File {
        /// Path of the DAG file.
        file: PathBuf,
    },
}

/// Rescaling of the DAG to a target CCR at a fixed bit budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcrScaling {
    /// Target computing-to-communication ratio.
    pub ccr: f64,
    /// Combined task and edge bits.
    #[serde(default = "default_total_bits")]
    pub total_bits: f64,
}

fn default_total_bits() -> f64 {
    CCR_SWEEP_TOTAL_BITS
}

/// Named service models accepted in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServiceModelName {
    /// Energy of every node counts.
    EcoCentric,
    /// Only the Mobile device's energy counts.
    MobileCentric,
}

impl ServiceModelName {
    /// Weights of the named model.
    pub fn model(self) -> ServiceModel {
        match self {
            ServiceModelName::EcoCentric => ServiceModel::ECO_CENTRIC,
            ServiceModelName::MobileCentric => ServiceModel::MOBILE_CENTRIC,
        }
    }
}

/// Random WiFi availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Availability {
    /// Probability that the WiFi links of a Fog node are usable in a trial.
    pub av_wifi: f64,
}

/// One entry of a tracking timeline, applied before iteration `at`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimelineEvent {
    /// 1-based iteration index at which the change takes effect.
    pub at: usize,
    /// Links to restore to their nominal throughput, as `M->F1` or `M<->F1`.
    pub link_on: Vec<String>,
    /// Links to switch off.
    pub link_off: Vec<String>,
    /// New task allocation: a preset name or a node list.
    pub set_allocation: Option<String>,
    /// New maximum DAG time in s.
    pub set_tdag_max: Option<f64>,
}

/// Experiment description, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Label copied into reports.
    #[serde(default = "default_name")]
    pub name: String,
    /// DAG source.
    pub dag: DagSource,
    /// Optional CCR rescaling of the DAG.
    #[serde(default)]
    pub scaling: Option<CcrScaling>,
    /// Ecosystem file; the embedded defaults with `q` Fog nodes when absent.
    #[serde(default)]
    pub ecosystem: Option<PathBuf>,
    /// Number of Fog nodes of the default ecosystem.
    #[serde(default = "default_q")]
    pub q: usize,
    /// Service model override.
    #[serde(default)]
    pub service_model: Option<ServiceModelName>,
    /// Maximum DAG time override, in s.
    #[serde(default)]
    pub tdag_max: Option<f64>,
    /// Task-allocation strategy.
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Genetic-search parameters; the seed is replaced per trial.
    #[serde(default)]
    pub ga: GaParams,
    /// Resource-allocation parameters.
    #[serde(default)]
    pub rap: RapConfig,
    /// Upper limit on exhaustive enumeration.
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    /// Starting allocation of a tracking run.
    #[serde(default)]
    pub allocation: Option<String>,
    /// Tracking timeline with strictly increasing indices.
    #[serde(default)]
    pub timeline: Vec<TimelineEvent>,
    /// Total iterations of a tracking run.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Number of trials.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Seed of trial 0.
    #[serde(default)]
    pub base_seed: u64,
    /// Random WiFi availability.
    #[serde(default)]
    pub availability: Option<Availability>,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_q() -> usize {
    1
}
fn default_strategy() -> Strategy {
    Strategy::Agtas
}
fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP as u64
}
fn default_trials() -> usize {
    1
}

impl Scenario {
    /// Minimal scenario over a built-in DAG with all defaults.
    pub fn builtin(id: BuiltinDag, seed: u64) -> Scenario {
        serde_json::from_value(serde_json::json!({ "dag": { "builtin": id, "seed": seed } }))
            .expect("minimal scenario is valid")
    }

    /// Reads a scenario and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut s: Scenario =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        if let DagSource::File { file } = &mut s.dag {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        if let Some(e) = &mut s.ecosystem {
            if e.is_relative() {
                *e = dir.join(&*e);
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Checks the scenario invariants.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for w in self.timeline.windows(2) {
            if w[1].at <= w[0].at {
                return Err(Error::Config(format!(
                    "timeline indices must be strictly increasing, got {} after {}",
                    w[1].at, w[0].at
                )));
            }
        }
        if self.timeline.first().is_some_and(|e| e.at == 0) {
            return Err(Error::Config("timeline indices start at 1".into()));
        }
        if let Some(a) = &self.availability {
            if !(0.0..=1.0).contains(&a.av_wifi) {
                return Err(Error::Config(format!("av_wifi must lie in [0, 1], got {}", a.av_wifi)));
            }
        }
        if let Some(t) = self.tdag_max {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tdag_max must be positive, got {t}")));
            }
        }
        self.rap.validate()
    }

    /// Builds the DAG, applying the optional CCR rescaling, and rejects
    /// graphs that violate a structural property.
    pub fn build_dag(&self) -> Result<ApplicationDag> {
        let dag = match &self.dag {
            DagSource::Builtin { builtin, seed } => builtin_dag(*builtin, *seed),
            DagSource::File { file } => ApplicationDag::load(file)?,
        };
        let report = validate_dag(&dag);
        if !report.ok {
            let list: Vec<String> = report.violations.iter().map(|v| format!("{}: {}", v.property, v.detail)).collect();
            return Err(Error::Config(format!("invalid DAG: {}", list.join("; "))));
        }
        match &self.scaling {
            Some(s) => scale_to_ccr(&dag, s.total_bits, s.ccr),
            None => Ok(dag),
        }
    }

    /// Builds the ecosystem with the scenario overrides applied.
    pub fn build_ecosystem(&self) -> Result<Ecosystem> {
        let mut eco = match &self.ecosystem {
            Some(path) => Ecosystem::load(path)?,
            None => default_ecosystem(self.q),
        };
        if let Some(sm) = self.service_model {
            eco.service_model = sm.model();
        }
        if let Some(t) = self.tdag_max {
            eco.set_tdag_max(t);
        }
        eco.validate()?;
        Ok(eco)
    }
}

/// Parses `A->B` (one direction) or `A<->B` (both directions).
pub fn parse_link_group(spec: &str) -> Result<Vec<LinkId>> {
    if let Some((a, b)) = spec.split_once("<->") {
        let (a, b): (NodeId, NodeId) = (a.trim().parse()?, b.trim().parse()?);
        Ok(vec![LinkId { from: a, to: b }, LinkId { from: b, to: a }])
    } else {
        Ok(vec![spec.trim().parse()?])
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Sweep value, absent outside sweeps.
    pub value: Option<f64>,
    /// Trial index.
    pub trial: usize,
    /// Seed of the trial.
    pub seed: u64,
    /// Strategy used.
    pub strategy: Strategy,
    /// Whether a feasible allocation was found.
    pub feasible: bool,
    /// Best allocation.
    pub x: TaskAllocation,
    /// Resource vector of the best allocation.
    pub rs: ResourceAllocation,
    /// Energy decomposition.
    pub energy: EnergyBreakdown,
    /// Pricing requests issued.
    pub rap_calls: usize,
    /// Best energy per generation.
    #[serde(with = "crate::serde_inf::vec")]
    pub trace: Vec<f64>,
}

impl TrialRecord {
    fn from_tap(value: Option<f64>, trial: usize, seed: u64, r: TapResult) -> Self {
        TrialRecord {
            value,
            trial,
            seed,
            strategy: r.strategy,
            feasible: r.feasible(),
            x: r.x_best,
            rs: r.rs_best,
            energy: r.energy,
            rap_calls: r.rap_calls,
            trace: r.trace,
        }
    }
}

/// Statistics over the trials of one sweep value and strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Sweep value, absent outside sweeps.
    pub value: Option<f64>,
    /// Strategy.
    pub strategy: Strategy,
    /// Number of trials.
    pub trials: usize,
    /// Number of feasible trials.
    pub feasible_trials: usize,
    /// Mean objective in J.
    #[serde(with = "crate::serde_inf")]
    pub mean_e_tot: f64,
    /// Smallest objective in J.
    #[serde(with = "crate::serde_inf")]
    pub min_e_tot: f64,
    /// Largest objective in J.
    #[serde(with = "crate::serde_inf")]
    pub max_e_tot: f64,
    /// Standard error of the mean objective in J.
    #[serde(with = "crate::serde_inf")]
    pub se_e_tot: f64,
    /// Mean network energy in J.
    #[serde(with = "crate::serde_inf")]
    pub mean_e_net: f64,
    /// Mean Mobile energy in J.
    #[serde(with = "crate::serde_inf")]
    pub mean_e_mobile: f64,
    /// Standard error of the mean Mobile energy in J.
    #[serde(with = "crate::serde_inf")]
    pub se_e_mobile: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 || !mean.is_finite() {
        return (mean, if mean.is_finite() { 0.0 } else { f64::INFINITY });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Groups records by `(value, strategy)` in first-appearance order and
/// summarizes each group.
pub fn aggregate(records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(Option<f64>, Strategy)> = Vec::new();
    for r in records {
        let key = (r.value, r.strategy);
        if !keys.iter().any(|k| k.0.map(f64::to_bits) == key.0.map(f64::to_bits) && k.1 == key.1) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(value, strategy)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.value.map(f64::to_bits) == value.map(f64::to_bits) && r.strategy == strategy)
                .collect();
            let e: Vec<f64> = group.iter().map(|r| r.energy.e_tot).collect();
            let mob: Vec<f64> = group.iter().map(|r| r.energy.e_mobile).collect();
            let net: Vec<f64> = group.iter().map(|r| r.energy.e_net).collect();
            let (mean_e_tot, se_e_tot) = mean_and_se(&e);
            let (mean_e_mobile, se_e_mobile) = mean_and_se(&mob);
            Aggregate {
                value,
                strategy,
                trials: group.len(),
                feasible_trials: group.iter().filter(|r| r.feasible).count(),
                mean_e_tot,
                min_e_tot: e.iter().copied().fold(f64::INFINITY, f64::min),
                max_e_tot: e.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                se_e_tot,
                mean_e_net: mean_and_se(&net).0,
                mean_e_mobile,
                se_e_mobile,
            }
        })
        .collect()
}

/// Sweepable scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Maximum DAG time in s.
    TdagMax,
    /// CCR at the scenario's bit budget (4.98 Mbit unless set).
    Ccr,
    /// Population size.
    Ps,
    /// Crossover fraction.
    Cf,
    /// WiFi availability probability.
    AvWifi,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tdag_max" => Ok(SweepAxis::TdagMax),
            "ccr" => Ok(SweepAxis::Ccr),
            "ps" => Ok(SweepAxis::Ps),
            "cf" => Ok(SweepAxis::Cf),
            "av_wifi" => Ok(SweepAxis::AvWifi),
            _ => Err(Error::Config(format!("unknown sweep axis '{s}' (tdag_max, ccr, ps, cf, av_wifi)"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::TdagMax => "tdag_max",
            SweepAxis::Ccr => "ccr",
            SweepAxis::Ps => "ps",
            SweepAxis::Cf => "cf",
            SweepAxis::AvWifi => "av_wifi",
        })
    }
}

/// Kind of experiment a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    /// Repeated runs of one strategy.
    Solve,
    /// All strategies side by side.
    Bench,
    /// One scenario parameter varied.
    Sweep,
    /// Random WiFi availability.
    Availability,
    /// Resource tracking under a timeline.
    Track,
}

/// Statistics of one tracking regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    /// First iteration of the regime (1-based, global).
    pub start: usize,
    /// Last iteration of the regime.
    pub end: usize,
    /// Allocation in force.
    pub allocation: TaskAllocation,
    /// Whether the allocation can meet the time limit.
    pub feasible: bool,
    /// Largest multiplier seen in the regime, in J.
    #[serde(with = "crate::serde_inf")]
    pub lambda_peak: f64,
    /// Multiplier at the end of the regime, in J.
    #[serde(with = "crate::serde_inf")]
    pub lambda_final: f64,
    /// Iterations after the regime start until the multiplier stays at or
    /// below `1e-3` of its peak; absent if it never does.
    pub settle_iterations: Option<usize>,
    /// Objective at the last iterate, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_final: f64,
    /// Set when the multiplier does not vanish by the end of the regime.
    pub flagged: bool,
}

/// Output of a tracking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    /// One point per iteration over the whole horizon.
    pub trace: Vec<TracePoint>,
    /// Per-regime statistics.
    pub regimes: Vec<RegimeStats>,
}

/// Complete result of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Experiment kind.
    pub kind: ReportKind,
    /// Scenario label.
    pub scenario: String,
    /// Swept parameter, if any.
    pub axis: Option<SweepAxis>,
    /// Per-trial records.
    pub records: Vec<TrialRecord>,
    /// Statistics per sweep value and strategy.
    pub aggregates: Vec<Aggregate>,
    /// Tracking output.
    pub tracking: Option<TrackingReport>,
    /// Files [`emit_report`] writes for this report.
    pub files: Vec<String>,
}

impl RunReport {
    fn new(kind: ReportKind, scenario: &Scenario, axis: Option<SweepAxis>, records: Vec<TrialRecord>) -> Self {
        let aggregates = aggregate(&records);
        let mut report =
            RunReport { kind, scenario: scenario.name.clone(), axis, records, aggregates, tracking: None, files: vec![] };
        report.files = report_files(&report);
        report
    }

    /// Whether any record or regime is infeasible.
    pub fn any_infeasible(&self) -> bool {
        self.records.iter().any(|r| !r.feasible)
            || self.tracking.as_ref().is_some_and(|t| t.regimes.iter().any(|r| !r.feasible))
    }
}

fn apply_availability(eco: &mut Ecosystem, av: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for pair in eco.wireless.iter_mut().filter(|p| matches!(p.node, NodeId::Fog(_))) {
        let on: f64 = rng.gen();
        let u: f64 = rng.gen();
        let scale = if on < av { u } else { 0.0 };
        pair.uplink.r_max *= scale;
        pair.downlink.r_max *= scale;
    }
}

fn run_trial(
    scenario: &Scenario,
    dag: &ApplicationDag,
    eco: &Ecosystem,
    strategy: Strategy,
    value: Option<f64>,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = scenario.base_seed + trial as u64;
    let mut eco = eco.clone();
    if let Some(a) = &scenario.availability {
        apply_availability(&mut eco, a.av_wifi, seed);
    }
    let ga = GaParams { seed, ..scenario.ga.clone() };
    let r = solve_strategy(dag, &eco, strategy, &ga, &scenario.rap, u128::from(scenario.enumeration_cap))?;
    Ok(TrialRecord::from_tap(value, trial, seed, r))
}

fn run_trials(scenario: &Scenario, strategies: &[Strategy], value: Option<f64>) -> Result<Vec<TrialRecord>> {
    let dag = scenario.build_dag()?;
    let eco = scenario.build_ecosystem()?;
    let jobs: Vec<(Strategy, usize)> =
        strategies.iter().flat_map(|&s| (0..scenario.trials).map(move |t| (s, t))).collect();
    jobs.par_iter().map(|&(s, t)| run_trial(scenario, &dag, &eco, s, value, t)).collect()
}

/// Runs the scenario's strategy once per trial.
pub fn run_solve(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    let kind = if scenario.availability.is_some() { ReportKind::Availability } else { ReportKind::Solve };
    Ok(RunReport::new(kind, scenario, None, run_trials(scenario, &[scenario.strategy], None)?))
}

/// Runs all six strategies once per trial.
pub fn run_bench(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    Ok(RunReport::new(ReportKind::Bench, scenario, None, run_trials(scenario, &Strategy::ALL, None)?))
}

/// Scenario with one parameter set to `value`.
pub fn with_axis_value(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::TdagMax => s.tdag_max = Some(value),
        SweepAxis::Ccr => {
            let total_bits = base.scaling.as_ref().map_or(CCR_SWEEP_TOTAL_BITS, |c| c.total_bits);
            s.scaling = Some(CcrScaling { ccr: value, total_bits });
        }
        SweepAxis::Ps => {
            if value < 2.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!("population size must be an integer >= 2, got {value}")));
            }
            s.ga.ps = value as usize;
        }
        SweepAxis::Cf => s.ga.cf = value,
        SweepAxis::AvWifi => s.availability = Some(Availability { av_wifi: value }),
    }
    s.validate()?;
    Ok(s)
}

/// Runs the base scenario once per value of `axis`.
pub fn run_sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<RunReport> {
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    let mut records = Vec::new();
    for &v in values {
        let s = with_axis_value(base, axis, v)?;
        records.extend(run_trials(&s, &[s.strategy], Some(v))?);
    }
    Ok(RunReport::new(ReportKind::Sweep, base, Some(axis), records))
}

/// Runs the scenario under its availability model.
pub fn run_availability(scenario: &Scenario, trials: usize) -> Result<RunReport> {
    if scenario.availability.is_none() {
        return Err(Error::Config("the scenario has no availability model".into()));
    }
    let s = Scenario { trials, ..scenario.clone() };
    run_solve(&s)
}

fn apply_event(event: &TimelineEvent, eco: &mut Ecosystem, nominal: &Ecosystem, x: &mut TaskAllocation, v: usize) -> Result<()> {
    for (spec, on) in event.link_on.iter().map(|s| (s, true)).chain(event.link_off.iter().map(|s| (s, false))) {
        for link in parse_link_group(spec)? {
            let r = if on { nominal.clone().wireless_link_mut(link)?.r_max } else { 0.0 };
            eco.wireless_link_mut(link)?.r_max = r;
        }
    }
    if let Some(a) = &event.set_allocation {
        *x = TaskAllocation::parse(a, v, eco.q)?;
    }
    if let Some(t) = event.set_tdag_max {
        if !(t > 0.0) {
            return Err(Error::Config(format!("set_tdag_max must be positive, got {t}")));
        }
        eco.set_tdag_max(t);
    }
    Ok(())
}

/// Replays the timeline against a warm-started stream of resource solves.
pub fn run_tracking(scenario: &Scenario) -> Result<RunReport> {
    scenario.validate()?;
    let dag = scenario.build_dag()?;
    let nominal = scenario.build_ecosystem()?;
    let mut eco = nominal.clone();
    let mut x = TaskAllocation::parse(scenario.allocation.as_deref().unwrap_or("fog"), dag.v(), eco.q)?;
    let horizon = scenario
        .horizon
        .unwrap_or_else(|| scenario.timeline.last().map_or(scenario.rap.i_max, |e| e.at + scenario.rap.i_max - 1));

    let mut starts: Vec<usize> = vec![1];
    starts.extend(scenario.timeline.iter().map(|e| e.at).filter(|&a| a > 1));
    starts.retain(|&s| s <= horizon);
    let mut warm: Option<WarmStart> = None;
    let mut trace = Vec::with_capacity(horizon);
    let mut regimes = Vec::new();
    for (k, &start) in starts.iter().enumerate() {
        for e in scenario.timeline.iter().filter(|e| e.at == start || (start == 1 && e.at <= 1)) {
            apply_event(e, &mut eco, &nominal, &mut x, dag.v())?;
        }
        let end = starts.get(k + 1).map_or(horizon, |&n| n - 1);
        let len = end + 1 - start;
        let config = RapConfig { i_max: len, warm_start: warm.clone(), record_trace: true, grad_tol: None, ..scenario.rap.clone() };
        let r = solve_rap(&dag, &eco, &x, &config)?;
        let points: Vec<TracePoint> = if r.feasible {
            r.traces.iter().map(|p| TracePoint { m: p.m + start - 1, ..*p }).collect()
        } else {
            (start..=end)
                .map(|m| TracePoint { m, e_tot: f64::INFINITY, e_net: f64::INFINITY, lambda: 0.0 })
                .collect()
        };
        let lambdas: Vec<f64> = points.iter().map(|p| p.lambda).collect();
        let lambda_peak = lambdas.iter().copied().fold(0.0, f64::max);
        let settle = settle_iterations(&lambdas, lambda_peak);
        regimes.push(RegimeStats {
            start,
            end,
            allocation: x.clone(),
            feasible: r.feasible,
            lambda_peak,
            lambda_final: *lambdas.last().unwrap_or(&0.0),
            settle_iterations: settle,
            e_final: points.last().map_or(f64::INFINITY, |p| p.e_tot),
            flagged: !r.feasible || settle.is_none(),
        });
        trace.extend(points);
        if r.feasible {
            warm = r.warm_start();
        }
    }
    let mut report = RunReport::new(ReportKind::Track, scenario, None, Vec::new());
    report.tracking = Some(TrackingReport { trace, regimes });
    report.files = report_files(&report);
    Ok(report)
}

/// Number of iterations until `lambdas` stays at or below `1e-3 * peak`;
/// 0 when the multiplier never rises.
pub fn settle_iterations(lambdas: &[f64], peak: f64) -> Option<usize> {
    if peak <= 0.0 {
        return Some(0);
    }
    let tol = 1e-3 * peak;
    match lambdas.iter().rposition(|&l| l > tol) {
        None => Some(0),
        Some(i) if i + 1 < lambdas.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// Output formats of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `report.json` with full precision.
    Json,
    /// Long-format CSV files with energies at 2 decimals.
    Csv,
}

fn report_files(report: &RunReport) -> Vec<String> {
    let mut f = vec!["report.json".to_string()];
    if report.tracking.is_some() {
        f.push("trace.csv".into());
        f.push("regimes.csv".into());
    } else {
        f.push("records.csv".into());
        f.push("aggregates.csv".into());
        f.push("generations.csv".into());
    }
    f
}

fn fmt2(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "inf".into()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes the files of `formats` into `dir` and returns their paths.
pub fn emit_report(report: &RunReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
        written.push(path);
    }
    if !formats.contains(&ReportFormat::Csv) {
        return Ok(written);
    }
    if let Some(t) = &report.tracking {
        let path = dir.join("trace.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["m", "E_TOT", "E_NET", "lambda"])?;
        for p in &t.trace {
            w.write_record([p.m.to_string(), fmt2(p.e_tot), fmt2(p.e_net), format!("{:e}", p.lambda)])?;
        }
        w.flush()?;
        written.push(path);
        let path = dir.join("regimes.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["start", "end", "allocation", "feasible", "lambda_peak", "lambda_final", "settle_iterations", "e_final", "flagged"])?;
        for r in &t.regimes {
            w.write_record([
                r.start.to_string(),
                r.end.to_string(),
                r.allocation.to_string(),
                r.feasible.to_string(),
                format!("{:e}", r.lambda_peak),
                format!("{:e}", r.lambda_final),
                r.settle_iterations.map_or_else(String::new, |s| s.to_string()),
                fmt2(r.e_final),
                r.flagged.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
        return Ok(written);
    }

    let path = dir.join("records.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["value", "trial", "seed", "strategy", "feasible", "e_tot", "e_cmp", "e_net", "e_mobile", "t_dag", "rap_calls", "x"])?;
    for r in &report.records {
        w.write_record([
            fmt_opt(r.value),
            r.trial.to_string(),
            r.seed.to_string(),
            r.strategy.label().to_string(),
            r.feasible.to_string(),
            fmt2(r.energy.e_tot),
            fmt2(r.energy.e_cmp),
            fmt2(r.energy.e_net),
            fmt2(r.energy.e_mobile),
            if r.energy.t_dag.is_finite() { format!("{:.4}", r.energy.t_dag) } else { "inf".into() },
            r.rap_calls.to_string(),
            r.x.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("aggregates.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["value", "strategy", "trials", "feasible_trials", "mean_e_tot", "min_e_tot", "max_e_tot", "se_e_tot", "mean_e_net", "mean_e_mobile", "ratio_to_agtas"])?;
    for a in &report.aggregates {
        let reference = report
            .aggregates
            .iter()
            .find(|b| b.strategy == Strategy::Agtas && b.value.map(f64::to_bits) == a.value.map(f64::to_bits))
            .map(|b| b.mean_e_tot);
        let ratio = reference.map_or_else(String::new, |r| fmt2(a.mean_e_tot / r));
        w.write_record([
            fmt_opt(a.value),
            a.strategy.label().to_string(),
            a.trials.to_string(),
            a.feasible_trials.to_string(),
            fmt2(a.mean_e_tot),
            fmt2(a.min_e_tot),
            fmt2(a.max_e_tot),
            fmt2(a.se_e_tot),
            fmt2(a.mean_e_net),
            fmt2(a.mean_e_mobile),
            ratio,
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("generations.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["value", "trial", "strategy", "generation", "best_e_tot"])?;
    for r in &report.records {
        for (g, e) in r.trace.iter().enumerate() {
            w.write_record([fmt_opt(r.value), r.trial.to_string(), r.strategy.label().to_string(), g.to_string(), fmt2(*e)])?;
        }
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}
