//! `ecofog` command-line front end.
//!
//! Exit codes: 0 on success, 2 when the requested problem is infeasible,
//! 1 on configuration or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ecofog::dag::{validate_dag, ApplicationDag, BuiltinDag};
use ecofog::harness::{
    emit_report, run_bench, run_sweep, run_tracking, DagSource, ReportFormat, RunReport, Scenario, ServiceModelName,
    SweepAxis,
};
use ecofog::platform::Ecosystem;
use ecofog::rap::solve_rap;
use ecofog::tap::{solve_strategy, GaParams, Strategy};
use ecofog::timing::TaskAllocation;

#[derive(Parser)]
#[command(name = "ecofog", version, about = "Energy-minimizing task placement and resource allocation over Mobile-Fog-Cloud ecosystems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check DAG, ecosystem and scenario files.
    Validate(ValidateArgs),
    /// Allocate resources for a fixed task allocation.
    SolveRap(SolveRapArgs),
    /// Search task allocations with one strategy.
    Solve(SolveArgs),
    /// Run all six strategies side by side.
    Bench(RunArgs),
    /// Replay a scenario timeline against warm-started resource solves.
    Track(TrackArgs),
    /// Vary one scenario parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// DAG file.
    #[arg(long)]
    dag: Option<PathBuf>,
    /// Ecosystem file.
    #[arg(long)]
    ecosystem: Option<PathBuf>,
    /// Scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Scenario file; the flags below override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// DAG file or built-in id (DAG1..DAG4).
    #[arg(long)]
    dag: Option<String>,
    /// Weight seed of a built-in DAG.
    #[arg(long, default_value_t = 1)]
    dag_seed: u64,
    /// Ecosystem file; the embedded defaults when absent.
    #[arg(long)]
    ecosystem: Option<PathBuf>,
    /// Number of Fog nodes of the default ecosystem.
    #[arg(long)]
    q: Option<usize>,
    /// Maximum DAG execution time in s.
    #[arg(long)]
    tdag_max: Option<f64>,
    /// Count the energy of every node.
    #[arg(long, conflicts_with = "mobile_centric")]
    eco_centric: bool,
    /// Count only the Mobile device's energy.
    #[arg(long)]
    mobile_centric: bool,
    /// Primal-dual iterations per resource solve.
    #[arg(long)]
    i_max: Option<usize>,
    /// Clipping factor of the step law.
    #[arg(long)]
    a_max: Option<f64>,
    /// Directory for reports.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl ProblemArgs {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.scenario {
            Some(path) => Scenario::load(path)?,
            None => {
                let spec = self.dag.as_deref().context("either --scenario or --dag is required")?;
                let mut s = Scenario::builtin(BuiltinDag::Dag1, self.dag_seed);
                s.dag = dag_source(spec, self.dag_seed);
                s
            }
        };
        if self.scenario.is_some() {
            if let Some(spec) = &self.dag {
                s.dag = dag_source(spec, self.dag_seed);
            }
        }
        if let Some(e) = &self.ecosystem {
            s.ecosystem = Some(e.clone());
        }
        if let Some(q) = self.q {
            s.q = q;
        }
        if let Some(t) = self.tdag_max {
            s.tdag_max = Some(t);
        }
        if self.eco_centric {
            s.service_model = Some(ServiceModelName::EcoCentric);
        }
        if self.mobile_centric {
            s.service_model = Some(ServiceModelName::MobileCentric);
        }
        if let Some(i) = self.i_max {
            s.rap.i_max = i;
        }
        if let Some(a) = self.a_max {
            s.rap.a_max = a;
        }
        s.validate()?;
        Ok(s)
    }
}

fn dag_source(spec: &str, seed: u64) -> DagSource {
    match spec.parse::<BuiltinDag>() {
        Ok(builtin) => DagSource::Builtin { builtin, seed },
        Err(_) => DagSource::File { file: PathBuf::from(spec) },
    }
}

#[derive(Args)]
struct SolveRapArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Task allocation: fog, cloud, mobile or a node list such as M,F1,C,M.
    #[arg(long)]
    alloc: String,
}

#[derive(Args)]
struct GaArgs {
    /// Population size.
    #[arg(long)]
    ps: Option<usize>,
    /// Crossover fraction.
    #[arg(long)]
    cf: Option<f64>,
    /// Number of generations.
    #[arg(long)]
    g_max: Option<usize>,
    /// Positions per mutation.
    #[arg(long)]
    mn: Option<usize>,
}

impl GaArgs {
    fn apply(&self, ga: &mut GaParams) {
        if let Some(v) = self.ps {
            ga.ps = v;
        }
        if let Some(v) = self.cf {
            ga.cf = v;
        }
        if let Some(v) = self.g_max {
            ga.g_max = v;
        }
        if self.mn.is_some() {
            ga.mn = self.mn;
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    ga: GaArgs,
    /// Strategy: agtas, otas, fog, cloud, mobile or ess.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Seed of the genetic search.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    ga: GaArgs,
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Seed of trial 0; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = self.problem.scenario()?;
        self.ga.apply(&mut s.ga);
        if let Some(t) = self.trials {
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.base_seed = seed;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Strategy used at every sweep value.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Parameter to vary: tdag_max, ccr, ps, cf or av_wifi.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

enum Outcome {
    Feasible,
    Infeasible,
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn validate(args: &ValidateArgs) -> Result<Outcome> {
    if args.dag.is_none() && args.ecosystem.is_none() && args.scenario.is_none() {
        bail!("nothing to validate: pass --dag, --ecosystem or --scenario");
    }
    let mut ok = true;
    if let Some(path) = &args.dag {
        let dag = ApplicationDag::load(path).with_context(|| format!("reading {}", path.display()))?;
        let report = validate_dag(&dag);
        if report.ok {
            println!("{}: valid DAG with {} tasks and {} edges", path.display(), dag.v(), dag.edge_count());
        } else {
            ok = false;
            for v in &report.violations {
                println!("{}: {}: {}", path.display(), v.property, v.detail);
            }
        }
    }
    if let Some(path) = &args.ecosystem {
        let eco = Ecosystem::load(path).with_context(|| format!("reading {}", path.display()))?;
        eco.validate()?;
        println!("{}: valid ecosystem with Q = {}", path.display(), eco.q);
    }
    if let Some(path) = &args.scenario {
        let s = Scenario::load(path)?;
        let dag = s.build_dag()?;
        s.build_ecosystem()?;
        println!("{}: valid scenario '{}' over {} tasks", path.display(), s.name, dag.v());
    }
    if !ok {
        bail!("validation failed");
    }
    Ok(Outcome::Feasible)
}

fn solve_rap_cmd(args: &SolveRapArgs) -> Result<Outcome> {
    let s = args.problem.scenario()?;
    let dag = s.build_dag()?;
    let eco = s.build_ecosystem()?;
    let x = TaskAllocation::parse(&args.alloc, dag.v(), eco.q)?;
    let config = ecofog::rap::RapConfig { record_trace: true, ..s.rap.clone() };
    let r = solve_rap(&dag, &eco, &x, &config)?;
    let dir = &args.problem.out_dir;
    fs::create_dir_all(dir)?;
    write_json(&dir.join("rap.json"), &r)?;
    let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
    w.write_record(["m", "E_TOT", "E_NET", "lambda"])?;
    for p in &r.traces {
        w.write_record([p.m.to_string(), p.e_tot.to_string(), p.e_net.to_string(), p.lambda.to_string()])?;
    }
    w.flush()?;
    if r.feasible {
        println!("x = {x}: E_TOT = {:.4} J, T_DAG = {:.4} s, lambda = {:.3e}", r.energy.e_tot, r.energy.t_dag, r.lambda);
        Ok(Outcome::Feasible)
    } else {
        println!("x = {x}: infeasible, the time limit cannot be met at maximal resources");
        Ok(Outcome::Infeasible)
    }
}

fn solve_cmd(args: &SolveArgs) -> Result<Outcome> {
    let mut s = args.problem.scenario()?;
    args.ga.apply(&mut s.ga);
    if let Some(seed) = args.seed {
        s.ga.seed = seed;
    }
    let strategy = args.strategy.unwrap_or(s.strategy);
    let dag = s.build_dag()?;
    let eco = s.build_ecosystem()?;
    let r = solve_strategy(&dag, &eco, strategy, &s.ga, &s.rap, u128::from(s.enumeration_cap))?;
    let dir = &args.problem.out_dir;
    fs::create_dir_all(dir)?;
    write_json(&dir.join("result.json"), &r)?;
    let mut w = csv::Writer::from_path(dir.join("generations.csv"))?;
    w.write_record(["generation", "best_e_tot"])?;
    for (g, e) in r.trace.iter().enumerate() {
        w.write_record([g.to_string(), e.to_string()])?;
    }
    w.flush()?;
    if r.feasible() {
        println!("{}: x = {}, E_TOT = {:.4} J, T_DAG = {:.4} s", strategy.label(), r.x_best, r.e_best, r.energy.t_dag);
        Ok(Outcome::Feasible)
    } else {
        println!("{}: no feasible allocation", strategy.label());
        Ok(Outcome::Infeasible)
    }
}

fn finish(report: &RunReport, out_dir: &Path) -> Result<Outcome> {
    let files = emit_report(report, out_dir, &[ReportFormat::Json, ReportFormat::Csv])?;
    for a in &report.aggregates {
        let value = a.value.map_or_else(String::new, |v| format!("{v} "));
        println!(
            "{value}{}: mean E_TOT = {:.4} J over {} trials ({} feasible)",
            a.strategy.label(),
            a.mean_e_tot,
            a.trials,
            a.feasible_trials
        );
    }
    if let Some(t) = &report.tracking {
        for r in &t.regimes {
            println!(
                "[{}..{}] x = {}: E_TOT = {:.4} J, lambda peak {:.3e}, settled after {}{}",
                r.start,
                r.end,
                r.allocation,
                r.e_final,
                r.lambda_peak,
                r.settle_iterations.map_or_else(|| "never".to_string(), |s| format!("{s} iterations")),
                if r.flagged { " (flagged)" } else { "" }
            );
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(if report.any_infeasible() { Outcome::Infeasible } else { Outcome::Feasible })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Validate(a) => validate(&a),
        Command::SolveRap(a) => solve_rap_cmd(&a),
        Command::Solve(a) => solve_cmd(&a),
        Command::Bench(a) => {
            let s = a.scenario()?;
            finish(&run_bench(&s)?, &a.problem.out_dir)
        }
        Command::Track(a) => {
            let s = a.problem.scenario()?;
            if s.timeline.is_empty() && a.problem.scenario.is_none() {
                bail!("track needs a scenario with a timeline (--scenario)");
            }
            let report = run_tracking(&s)?;
            let flagged = report.tracking.as_ref().is_some_and(|t| t.regimes.iter().any(|r| r.flagged));
            let outcome = finish(&report, &a.problem.out_dir)?;
            Ok(if flagged { Outcome::Infeasible } else { outcome })
        }
        Command::Sweep(a) => {
            let mut s = a.run.scenario()?;
            if let Some(st) = a.strategy {
                s.strategy = st;
            }
            finish(&run_sweep(&s, a.axis, &a.values)?, &a.run.problem.out_dir)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Feasible) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
