//! Task allocation: the elitist genetic search and its benchmark strategies.
//!
//! Every strategy prices a candidate allocation `x` by its minimum energy
//! over resource vectors ([`solve_rap`]), except [`solve_otas`], which
//! prices at maximal resources. Infeasible candidates carry infinite energy
//! and sort last.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::ApplicationDag;
use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::platform::{max_resource_vector, Ecosystem, NodeId};
use crate::rap::{solve_rap, RapConfig};
use crate::timing::{Preset, ResourceAllocation, TaskAllocation};

/// Default upper limit on the number of allocations [`solve_aess`] prices.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Parameters of the genetic search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    /// Population size.
    pub ps: usize,
    /// Fraction of the population used as crossover parents, in `(0, 1]`.
    pub cf: f64,
    /// Number of generations.
    pub g_max: usize,
    /// Positions drawn per mutation; `None` means `round((V - 2) / 2)`.
    pub mn: Option<usize>,
    /// Seed of the random stream.
    pub seed: u64,
    /// Start from random vectors only, without the three single-tier
    /// allocations.
    pub pure_random_init: bool,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams { ps: 20, cf: 0.5, g_max: 10, mn: None, seed: 0, pure_random_init: false }
    }
}

impl GaParams {
    /// Number of crossover parents: `round(cf * ps)`, minus one when odd.
    pub fn cross(&self) -> usize {
        let c = (self.cf * self.ps as f64).round() as usize;
        let c = c.min(self.ps);
        if c % 2 == 1 {
            c - 1
        } else {
            c
        }
    }

    /// Mutated positions per mutation for a DAG of `v` tasks.
    pub fn mutation_count(&self, v: usize) -> usize {
        let interior = v.saturating_sub(2);
        self.mn.unwrap_or_else(|| (interior as f64 / 2.0).round() as usize).min(interior)
    }

    /// Checks the parameter ranges for a DAG of `v` tasks.
    pub fn validate(&self, v: usize) -> Result<()> {
        if self.ps < 2 {
            return Err(Error::Parameter(format!("population size must be at least 2, got {}", self.ps)));
        }
        if !(self.cf > 0.0 && self.cf <= 1.0) {
            return Err(Error::Parameter(format!("crossover fraction must lie in (0, 1], got {}", self.cf)));
        }
        if let Some(mn) = self.mn {
            if v > 2 && !(1..=v - 2).contains(&mn) {
                return Err(Error::Parameter(format!("mutation count must lie in [1, {}], got {mn}", v - 2)));
            }
        }
        Ok(())
    }
}

/// Task-allocation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Genetic search priced by resource optimization.
    Agtas,
    /// Genetic search priced at maximal resources.
    Otas,
    /// All interior tasks on Fog node F1.
    Fog,
    /// All interior tasks on the Cloud.
    Cloud,
    /// All tasks on the Mobile device.
    Mobile,
    /// Exhaustive enumeration.
    Ess,
}

impl Strategy {
    /// All strategies in report order.
    pub const ALL: [Strategy; 6] =
        [Strategy::Agtas, Strategy::Otas, Strategy::Fog, Strategy::Cloud, Strategy::Mobile, Strategy::Ess];

    /// Conventional display label.
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Agtas => "A-GTA-S",
            Strategy::Otas => "OTA-S",
            Strategy::Fog => "A-OF-S",
            Strategy::Cloud => "A-OC-S",
            Strategy::Mobile => "A-OM-S",
            Strategy::Ess => "A-ES-S",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Agtas => "agtas",
            Strategy::Otas => "otas",
            Strategy::Fog => "fog",
            Strategy::Cloud => "cloud",
            Strategy::Mobile => "mobile",
            Strategy::Ess => "ess",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "agtas" | "a-gta-s" => Ok(Strategy::Agtas),
            "otas" | "ota-s" => Ok(Strategy::Otas),
            "fog" | "a-of-s" => Ok(Strategy::Fog),
            "cloud" | "a-oc-s" => Ok(Strategy::Cloud),
            "mobile" | "a-om-s" => Ok(Strategy::Mobile),
            "ess" | "aess" | "a-es-s" => Ok(Strategy::Ess),
            _ => Err(Error::Config(format!("unknown strategy '{s}'"))),
        }
    }
}

/// Outcome of a task-allocation strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapResult {
    /// Strategy that produced the result.
    pub strategy: Strategy,
    /// Best allocation found.
    pub x_best: TaskAllocation,
    /// Resource vector that prices `x_best`.
    pub rs_best: ResourceAllocation,
    /// Energy of the best allocation, in J; infinite when infeasible.
    #[serde(with = "crate::serde_inf")]
    pub e_best: f64,
    /// Energy decomposition at `(x_best, rs_best)`.
    pub energy: EnergyBreakdown,
    /// Best energy after the initial population and after every generation.
    #[serde(with = "crate::serde_inf::vec")]
    pub trace: Vec<f64>,
    /// Number of pricing requests, counting repeated allocations.
    pub rap_calls: usize,
    /// Number of distinct allocations priced.
    pub distinct_priced: usize,
}

impl TapResult {
    /// Whether a feasible allocation was found.
    pub fn feasible(&self) -> bool {
        self.e_best.is_finite()
    }
}

/// Price of one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Priced {
    /// Energy in J, infinite when infeasible.
    pub e_tot: f64,
    /// Resource vector achieving `e_tot`.
    pub rs: ResourceAllocation,
}

/// Random allocation with Mobile endpoints and uniform interior nodes.
pub fn random_allocation<R: Rng + ?Sized>(v: usize, eco: &Ecosystem, rng: &mut R) -> TaskAllocation {
    let mut x = vec![NodeId::Mobile; v];
    for xi in x.iter_mut().take(v.saturating_sub(1)).skip(1) {
        *xi = NodeId::from_index(rng.gen_range(0..eco.node_count()), eco.q);
    }
    TaskAllocation(x)
}

/// Single-point crossover at a uniform cut `I` in `[2, V - 1]`: the first
/// child takes tasks `1..=I` from `p1` and the rest from `p2`.
pub fn crossover<R: Rng + ?Sized>(p1: &TaskAllocation, p2: &TaskAllocation, rng: &mut R) -> (TaskAllocation, TaskAllocation) {
    assert_eq!(p1.len(), p2.len(), "crossover parents must have equal length");
    let v = p1.len();
    if v < 3 {
        return (p1.clone(), p2.clone());
    }
    let cut = rng.gen_range(2..=v - 1);
    crossover_at(p1, p2, cut)
}

/// Crossover at a given cut `I` (1-based, last position kept from `p1`).
pub fn crossover_at(p1: &TaskAllocation, p2: &TaskAllocation, cut: usize) -> (TaskAllocation, TaskAllocation) {
    let mut c1 = p1.0[..cut].to_vec();
    c1.extend_from_slice(&p2.0[cut..]);
    let mut c2 = p2.0[..cut].to_vec();
    c2.extend_from_slice(&p1.0[cut..]);
    (TaskAllocation(c1), TaskAllocation(c2))
}

/// Draws `mn` interior positions independently (with replacement) and
/// assigns each a uniform node.
pub fn mutate<R: Rng + ?Sized>(x: &TaskAllocation, mn: usize, eco: &Ecosystem, rng: &mut R) -> TaskAllocation {
    let mut out = x.clone();
    let v = x.len();
    if v < 3 {
        return out;
    }
    for _ in 0..mn {
        let pos = rng.gen_range(1..=v - 2);
        out.0[pos] = NodeId::from_index(rng.gen_range(0..eco.node_count()), eco.q);
    }
    out
}

/// Price of `x` through resource optimization.
pub fn price_rap(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, rap: &RapConfig) -> Result<Priced> {
    let r = solve_rap(dag, eco, x, rap)?;
    Ok(Priced { e_tot: r.e_tot(), rs: r.rs })
}

/// Price of `x` at maximal resources.
pub fn price_max(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation) -> Priced {
    let rs = max_resource_vector(eco);
    let e = total_energy(dag, eco, x, &rs);
    let feasible = e.t_dag.is_finite() && eco.th_min * e.t_dag - 1.0 <= crate::rap::FEASIBILITY_TOL;
    if feasible {
        Priced { e_tot: e.e_tot, rs }
    } else {
        Priced { e_tot: f64::INFINITY, rs: ResourceAllocation(vec![f64::INFINITY; eco.rs_len()]) }
    }
}

/// Fitness `1 / E`, 0 for infeasible allocations.
pub fn fitness(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, rap: &RapConfig) -> Result<f64> {
    let e = price_rap(dag, eco, x, rap)?.e_tot;
    Ok(if e.is_finite() { 1.0 / e } else { 0.0 })
}

/// Populations visited by a genetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct GaHistory {
    /// Population after initialization and after every generation, sorted.
    pub populations: Vec<Vec<TaskAllocation>>,
}

/// Memoizing pricer shared by the genetic strategies.
struct PriceCache<'a, F> {
    price: &'a F,
    cache: HashMap<TaskAllocation, Priced>,
    requests: usize,
}

impl<'a, F> PriceCache<'a, F>
where
    F: Fn(&TaskAllocation) -> Result<Priced> + Sync,
{
    fn energies(&mut self, batch: &[TaskAllocation]) -> Result<Vec<f64>> {
        self.requests += batch.len();
        let mut fresh: Vec<TaskAllocation> = batch.iter().filter(|x| !self.cache.contains_key(*x)).cloned().collect();
        fresh.sort();
        fresh.dedup();
        let price = self.price;
        let priced: Vec<(TaskAllocation, Result<Priced>)> =
            fresh.into_par_iter().map(|x| { let p = price(&x); (x, p) }).collect();
        for (x, p) in priced {
            self.cache.insert(x, p?);
        }
        Ok(batch.iter().map(|x| self.cache[x].e_tot).collect())
    }
}

fn sort_ranked(pop: &mut [(f64, TaskAllocation)]) {
    pop.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
}

/// Elitist genetic search with an arbitrary pricing function.
///
/// All random draws of a generation happen before its pricing batch, so the
/// visited allocations depend only on the seed and on the ranking the
/// prices induce.
pub fn run_ga<F>(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    params: &GaParams,
    strategy: Strategy,
    price: &F,
) -> Result<(TapResult, GaHistory)>
where
    F: Fn(&TaskAllocation) -> Result<Priced> + Sync,
{
    let v = dag.v();
    params.validate(v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mn = params.mutation_count(v);
    let cross = params.cross();

    let mut init: Vec<TaskAllocation> = Vec::with_capacity(params.ps);
    if !params.pure_random_init {
        for p in [Preset::Fog, Preset::Cloud, Preset::Mobile] {
            if init.len() < params.ps && (p != Preset::Fog || eco.q >= 1) {
                init.push(TaskAllocation::preset(p, v));
            }
        }
    }
    while init.len() < params.ps {
        init.push(random_allocation(v, eco, &mut rng));
    }

    let mut cache = PriceCache { price, cache: HashMap::new(), requests: 0 };
    let energies = cache.energies(&init)?;
    let mut pop: Vec<(f64, TaskAllocation)> = energies.into_iter().zip(init).collect();
    sort_ranked(&mut pop);
    let mut best = pop[0].clone();
    let mut trace = vec![best.0];
    let mut history = GaHistory { populations: vec![pop.iter().map(|p| p.1.clone()).collect()] };

    for _ in 0..params.g_max {
        let mut offspring = Vec::with_capacity(params.ps);
        for pair in pop[..cross].chunks(2) {
            let (c1, c2) = crossover(&pair[0].1, &pair[1].1, &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        for member in &pop[cross..] {
            offspring.push(mutate(&member.1, mn, eco, &mut rng));
        }
        let energies = cache.energies(&offspring)?;
        let mut pool: Vec<(f64, TaskAllocation)> = pop[..cross].to_vec();
        pool.extend(energies.into_iter().zip(offspring));
        sort_ranked(&mut pool);
        pool.truncate(params.ps);
        pop = pool;
        if pop[0].0 < best.0 || (pop[0].0 == best.0 && pop[0].1 < best.1) {
            best = pop[0].clone();
        }
        trace.push(best.0);
        history.populations.push(pop.iter().map(|p| p.1.clone()).collect());
    }

    let rs_best = cache.cache[&best.1].rs.clone();
    let energy = if best.0.is_finite() { total_energy(dag, eco, &best.1, &rs_best) } else { EnergyBreakdown::infinite() };
    let result = TapResult {
        strategy,
        x_best: best.1,
        rs_best,
        e_best: best.0,
        energy,
        trace,
        rap_calls: cache.requests,
        distinct_priced: cache.cache.len(),
    };
    Ok((result, history))
}

/// Genetic search priced by resource optimization.
pub fn solve_agtas(dag: &ApplicationDag, eco: &Ecosystem, params: &GaParams, rap: &RapConfig) -> Result<TapResult> {
    let rap = RapConfig { record_trace: false, warm_start: None, ..rap.clone() };
    let price = |x: &TaskAllocation| price_rap(dag, eco, x, &rap);
    Ok(run_ga(dag, eco, params, Strategy::Agtas, &price)?.0)
}

/// Genetic search priced at maximal resources.
pub fn solve_otas(dag: &ApplicationDag, eco: &Ecosystem, params: &GaParams) -> Result<TapResult> {
    let price = |x: &TaskAllocation| Ok(price_max(dag, eco, x));
    Ok(run_ga(dag, eco, params, Strategy::Otas, &price)?.0)
}

/// One single-tier allocation priced by resource optimization.
pub fn solve_fixed(dag: &ApplicationDag, eco: &Ecosystem, preset: Preset, rap: &RapConfig) -> Result<TapResult> {
    let x = TaskAllocation::preset(preset, dag.v());
    let r = solve_rap(dag, eco, &x, &RapConfig { record_trace: false, ..rap.clone() })?;
    let strategy = match preset {
        Preset::Fog => Strategy::Fog,
        Preset::Cloud => Strategy::Cloud,
        Preset::Mobile => Strategy::Mobile,
    };
    Ok(TapResult {
        strategy,
        e_best: r.e_tot(),
        trace: vec![r.e_tot()],
        x_best: x,
        rs_best: r.rs,
        energy: r.energy,
        rap_calls: 1,
        distinct_priced: 1,
    })
}

/// Number of allocations exhaustive search must price, `(Q + 2)^(V - 2)`.
pub fn enumeration_size(v: usize, q: usize) -> Option<u128> {
    (q as u128 + 2).checked_pow(u32::try_from(v.saturating_sub(2)).ok()?)
}

/// Allocation number `k` of the enumeration order (interior tasks as
/// base-`(Q + 2)` digits, first interior task most significant).
pub fn enumerated_allocation(k: u128, v: usize, q: usize) -> TaskAllocation {
    let base = q as u128 + 2;
    let mut x = vec![NodeId::Mobile; v];
    let mut rest = k;
    for pos in (1..v.saturating_sub(1)).rev() {
        x[pos] = NodeId::from_index((rest % base) as usize, q);
        rest /= base;
    }
    TaskAllocation(x)
}

/// Exhaustive search over all interior assignments, refusing when their
/// number exceeds `cap`.
pub fn solve_aess(dag: &ApplicationDag, eco: &Ecosystem, rap: &RapConfig, cap: u128) -> Result<TapResult> {
    let v = dag.v();
    let required = enumeration_size(v, eco.q).unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    let rap = RapConfig { record_trace: false, warm_start: None, ..rap.clone() };
    let count = usize::try_from(required).map_err(|_| Error::EnumerationCap { required, cap })?;
    let best = (0..count)
        .into_par_iter()
        .map(|k| {
            let x = enumerated_allocation(k as u128, v, eco.q);
            price_rap(dag, eco, &x, &rap).map(|p| (p, x))
        })
        .try_reduce_with(|a, b| {
            let ord = a.0.e_tot.total_cmp(&b.0.e_tot).then_with(|| a.1.cmp(&b.1));
            Ok(if ord.is_le() { a } else { b })
        })
        .expect("at least one allocation is enumerated")?;
    let (priced, x) = best;
    let energy =
        if priced.e_tot.is_finite() { total_energy(dag, eco, &x, &priced.rs) } else { EnergyBreakdown::infinite() };
    Ok(TapResult {
        strategy: Strategy::Ess,
        x_best: x,
        rs_best: priced.rs,
        e_best: priced.e_tot,
        energy,
        trace: vec![priced.e_tot],
        rap_calls: count,
        distinct_priced: count,
    })
}

/// Runs `strategy` with the given parameters.
pub fn solve_strategy(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    strategy: Strategy,
    ga: &GaParams,
    rap: &RapConfig,
    cap: u128,
) -> Result<TapResult> {
    match strategy {
        Strategy::Agtas => solve_agtas(dag, eco, ga, rap),
        Strategy::Otas => solve_otas(dag, eco, ga),
        Strategy::Fog => solve_fixed(dag, eco, Preset::Fog, rap),
        Strategy::Cloud => solve_fixed(dag, eco, Preset::Cloud, rap),
        Strategy::Mobile => solve_fixed(dag, eco, Preset::Mobile, rap),
        Strategy::Ess => solve_aess(dag, eco, rap, cap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{builtin_dag, BuiltinDag};
    use crate::platform::default_ecosystem;

    fn alloc(s: &str) -> TaskAllocation {
        TaskAllocation::parse(s, s.split(',').count(), 1).unwrap()
    }

    #[test]
    fn cross_is_even() {
        let p = GaParams { ps: 20, cf: 0.5, ..GaParams::default() };
        assert_eq!(p.cross(), 10);
        let p = GaParams { ps: 10, cf: 0.3, ..GaParams::default() };
        assert_eq!(p.cross(), 2);
        let p = GaParams { ps: 7, cf: 1.0, ..GaParams::default() };
        assert_eq!(p.cross(), 6);
    }

    #[test]
    fn default_mutation_count() {
        assert_eq!(GaParams::default().mutation_count(9), 4);
        assert_eq!(GaParams::default().mutation_count(6), 2);
    }

    #[test]
    fn two_task_random_allocation() {
        let eco = default_ecosystem(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(random_allocation(2, &eco, &mut rng), alloc("M,M"));
        }
    }

    #[test]
    fn crossover_example() {
        let (c1, c2) = crossover_at(&alloc("M,F1,F1,M"), &alloc("M,C,C,M"), 2);
        assert_eq!(c1, alloc("M,F1,C,M"));
        assert_eq!(c2, alloc("M,C,F1,M"));
        let p = alloc("M,F1,C,M");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(crossover(&p, &p, &mut rng), (p.clone(), p));
    }

    #[test]
    fn saturated_mutation_reaches_all_mobile() {
        let eco = default_ecosystem(0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = TaskAllocation(vec![NodeId::Mobile, NodeId::Cloud, NodeId::Mobile]);
        let mut hit = false;
        for _ in 0..50 {
            hit |= mutate(&x, 1, &eco, &mut rng) == TaskAllocation::preset(Preset::Mobile, 3);
        }
        assert!(hit);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumeration_size(3, 1), Some(3));
        assert_eq!(enumeration_size(9, 1), Some(2187));
        assert_eq!(enumerated_allocation(0, 4, 1), alloc("M,M,M,M"));
        assert_eq!(enumerated_allocation(8, 4, 1), alloc("M,C,C,M"));
    }

    #[test]
    fn aess_respects_cap() {
        let eco = default_ecosystem(1);
        let dag = builtin_dag(BuiltinDag::Dag1, 1);
        match solve_aess(&dag, &eco, &RapConfig::default(), 100) {
            Err(Error::EnumerationCap { required, cap }) => assert_eq!((required, cap), (2187, 100)),
            other => panic!("expected a cap error, got {other:?}"),
        }
    }

    #[test]
    fn zero_generations_gives_best_initial() {
        let eco = default_ecosystem(1);
        let dag = builtin_dag(BuiltinDag::Dag2, 2);
        let params = GaParams { g_max: 0, ps: 6, ..GaParams::default() };
        let rap = RapConfig { i_max: 100, ..RapConfig::default() };
        let r = solve_agtas(&dag, &eco, &params, &rap).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.rap_calls, 6);
    }

    #[test]
    fn pricing_count_is_logical() {
        let eco = default_ecosystem(1);
        let dag = builtin_dag(BuiltinDag::Dag1, 2);
        let params = GaParams { g_max: 4, ps: 8, ..GaParams::default() };
        let rap = RapConfig { i_max: 50, ..RapConfig::default() };
        let r = solve_agtas(&dag, &eco, &params, &rap).unwrap();
        assert_eq!(r.rap_calls, 5 * 8);
        assert!(r.distinct_priced <= r.rap_calls);
    }

    #[test]
    fn infeasible_mobile_preset() {
        let mut eco = default_ecosystem(1);
        let dag = builtin_dag(BuiltinDag::Dag1, 2);
        let t = crate::timing::dag_execution_time(
            &dag,
            &eco,
            &TaskAllocation::preset(Preset::Mobile, 9),
            &max_resource_vector(&eco),
        );
        eco.set_tdag_max(0.5 * t);
        let r = solve_fixed(&dag, &eco, Preset::Mobile, &RapConfig::default()).unwrap();
        assert!(!r.feasible());
        assert_eq!(fitness(&dag, &eco, &r.x_best, &RapConfig::default()).unwrap(), 0.0);
    }
}
