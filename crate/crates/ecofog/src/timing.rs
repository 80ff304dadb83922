//! Service, network and execution times of tasks and of the whole DAG,
//! together with the closed-form feasibility bound.
//!
//! Zero resources never abort: a positive workload over a zero frequency or
//! a positive data volume over a zero throughput yields `f64::INFINITY`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dag::ApplicationDag;
use crate::error::{Error, Result};
use crate::platform::{
    max_resource_vector, Ecosystem, LinkKind, NetworkTimeMode, NodeId, SchedulingDiscipline, ServiceDiscipline,
};

/// Default exponent of the p-norm surrogate of `max`.
pub const DEFAULT_R_EXP: f64 = 20.0;

/// Placement of every task on a node; the first and last task run on the
/// Mobile device.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskAllocation(pub Vec<NodeId>);

/// Named single-tier allocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Every interior task on Fog node F1.
    Fog,
    /// Every interior task on the Cloud.
    Cloud,
    /// Every task on the Mobile device.
    Mobile,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fog" | "x_fog" => Ok(Preset::Fog),
            "cloud" | "cld" | "x_cld" => Ok(Preset::Cloud),
            "mobile" | "mob" | "x_mob" => Ok(Preset::Mobile),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fog => "fog",
            Preset::Cloud => "cloud",
            Preset::Mobile => "mobile",
        })
    }
}

impl TaskAllocation {
    /// Checks the endpoint constraint and node existence.
    pub fn new(x: Vec<NodeId>, q: usize) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Dimension("an allocation needs at least 2 tasks".into()));
        }
        if x[0] != NodeId::Mobile || x[x.len() - 1] != NodeId::Mobile {
            return Err(Error::Config("the first and last task must run on M".into()));
        }
        if let Some(bad) = x.iter().find(|n| !n.exists(q)) {
            return Err(Error::Config(format!("node {bad} does not exist with Q = {q}")));
        }
        Ok(TaskAllocation(x))
    }

    /// Single-tier allocation of `v` tasks.
    pub fn preset(preset: Preset, v: usize) -> Self {
        let interior = match preset {
            Preset::Fog => NodeId::Fog(1),
            Preset::Cloud => NodeId::Cloud,
            Preset::Mobile => NodeId::Mobile,
        };
        let mut x = vec![interior; v];
        x[0] = NodeId::Mobile;
        x[v - 1] = NodeId::Mobile;
        TaskAllocation(x)
    }

    /// Parses a preset name or a comma-separated node list such as `M,F1,C,M`.
    pub fn parse(spec: &str, v: usize, q: usize) -> Result<Self> {
        if let Ok(p) = spec.parse::<Preset>() {
            return Ok(Self::preset(p, v));
        }
        let x = spec.split(',').map(str::parse).collect::<Result<Vec<NodeId>>>()?;
        if x.len() != v {
            return Err(Error::Dimension(format!("allocation has {} entries, DAG has {v} tasks", x.len())));
        }
        Self::new(x, q)
    }

    /// Number of tasks.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Whether the allocation is empty.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Node indices inside `A`.
    pub fn indices(&self, q: usize) -> Vec<usize> {
        self.0.iter().map(|n| n.index(q)).collect()
    }
}

impl fmt::Display for TaskAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Resource vector: per-node frequencies then per-wireless-link throughputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceAllocation(#[serde(with = "crate::serde_inf::vec")] pub Vec<f64>);

impl ResourceAllocation {
    /// Entries as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Soft maximum `(sum b_l^r)^(1/r)`, evaluated with the largest term factored
/// out so that large exponents neither overflow nor underflow.
pub fn smooth_max(values: &[f64], r_exp: f64) -> f64 {
    let m = values.iter().copied().fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let sum: f64 = values.iter().filter(|&&b| b > 0.0).map(|&b| (b / m).powf(r_exp)).sum();
    m * sum.powf(1.0 / r_exp)
}

/// Share of node capacity granted to task `i`: 1 under SEQ, the
/// priority-weighted fraction among co-located tasks under WPS.
pub fn task_share(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, i: usize) -> f64 {
    match eco.service_discipline {
        ServiceDiscipline::Seq => 1.0,
        ServiceDiscipline::Wps => {
            let phi = dag.priorities();
            let total: f64 = (0..dag.v()).filter(|&j| x.0[j] == x.0[i]).map(|j| phi[j]).sum();
            phi[i] / total
        }
    }
}

/// Processing time of task `i` on node `node`.
///
/// # Panics
/// Panics if `x` does not place task `i` on `node`.
pub fn task_service_time(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    i: usize,
    node: NodeId,
) -> f64 {
    assert_eq!(x.0[i], node, "task {} is not placed on {node}", i + 1);
    let idx = node.index(eco.q);
    let capacity = task_share(dag, eco, x, i) * f64::from(eco.nodes[idx].n) * rs.0[idx];
    if capacity > 0.0 {
        dag.sizes()[i] / capacity
    } else {
        f64::INFINITY
    }
}

/// Cumulative service time of all tasks on `node`: their sum under SEQ,
/// the max-form under WPS, zero for an idle node.
pub fn node_total_service_time(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    node: NodeId,
) -> f64 {
    let on_node: Vec<usize> = (0..dag.v()).filter(|&i| x.0[i] == node).collect();
    if on_node.is_empty() {
        return 0.0;
    }
    let times = on_node.iter().map(|&i| task_service_time(dag, eco, x, rs, i, node));
    match eco.service_discipline {
        ServiceDiscipline::Seq => times.sum(),
        ServiceDiscipline::Wps => times.fold(0.0, f64::max),
    }
}

/// Failure-rate overhead `NF` of the connection from node index `from` to `to`.
pub fn link_nf(eco: &Ecosystem, from: usize, to: usize) -> f64 {
    match eco.link_kind(from, to) {
        LinkKind::Wireless { spec, .. } => spec.nf,
        LinkKind::Backhaul(link) => link.nf,
        LinkKind::Absent => 0.0,
    }
}

/// Throughput of the connection from node index `from` to `to` under `rs`.
pub fn link_rate(eco: &Ecosystem, rs: &ResourceAllocation, from: usize, to: usize) -> f64 {
    match eco.link_kind(from, to) {
        LinkKind::Wireless { rs_index, .. } => rs.0[rs_index],
        LinkKind::Backhaul(link) => link.throughput().unwrap_or(0.0),
        LinkKind::Absent => 0.0,
    }
}

/// Data volume task `i` (placed on `node`) receives from parents on `source`,
/// inflated by the link failure rate.
pub fn input_volume(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    i: usize,
    source: NodeId,
    node: NodeId,
) -> f64 {
    assert_ne!(source, node, "input volume needs two distinct nodes");
    let raw: f64 = dag.parents(i).filter(|&j| x.0[j] == source).map(|j| dag.d(j, i)).sum();
    if raw == 0.0 {
        return 0.0;
    }
    (1.0 + link_nf(eco, source.index(eco.q), node.index(eco.q))) * raw
}

fn network_terms(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    i: usize,
) -> Vec<f64> {
    let node = x.0[i];
    let mut terms = Vec::new();
    for s in 0..eco.node_count() {
        let source = NodeId::from_index(s, eco.q);
        if source == node {
            continue;
        }
        let vl = input_volume(dag, eco, x, i, source, node);
        if vl > 0.0 {
            let rate = link_rate(eco, rs, s, node.index(eco.q));
            terms.push(if rate > 0.0 { vl / rate } else { f64::INFINITY });
        }
    }
    terms
}

/// Time task `i` waits for its input data: sum (SUM mode) or maximum (MAX
/// mode) over source nodes of volume over throughput.
pub fn task_network_time(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    i: usize,
) -> f64 {
    let terms = network_terms(dag, eco, x, rs, i);
    match eco.network_time_mode {
        NetworkTimeMode::Sum => terms.iter().sum(),
        NetworkTimeMode::Max => terms.iter().copied().fold(0.0, f64::max),
    }
}

/// Execution time of task `i`: service time plus network time.
pub fn task_execution_time(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    i: usize,
) -> f64 {
    task_service_time(dag, eco, x, rs, i, x.0[i]) + task_network_time(dag, eco, x, rs, i)
}

/// DAG execution time: sum (STS) or maximum (PTS) of task execution times.
pub fn dag_execution_time(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, rs: &ResourceAllocation) -> f64 {
    let times = (0..dag.v()).map(|i| task_execution_time(dag, eco, x, rs, i));
    match eco.scheduling_discipline {
        SchedulingDiscipline::Sts => times.sum(),
        SchedulingDiscipline::Pts => times.fold(0.0, f64::max),
    }
}

/// DAG execution time with every `max` replaced by the p-norm surrogate of
/// exponent `r_exp`. Equal to [`dag_execution_time`] when no `max` occurs
/// and an upper bound of it otherwise.
pub fn smoothed_dag_time(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    r_exp: f64,
) -> f64 {
    let times: Vec<f64> = (0..dag.v())
        .map(|i| {
            let terms = network_terms(dag, eco, x, rs, i);
            let net = match eco.network_time_mode {
                NetworkTimeMode::Sum => terms.iter().sum(),
                NetworkTimeMode::Max => smooth_max(&terms, r_exp),
            };
            task_service_time(dag, eco, x, rs, i, x.0[i]) + net
        })
        .collect();
    match eco.scheduling_discipline {
        SchedulingDiscipline::Sts => times.iter().sum(),
        SchedulingDiscipline::Pts => smooth_max(&times, r_exp),
    }
}

/// Ingredients of the closed-form DAG-time bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBound {
    /// Largest task size in bit.
    pub s_max: f64,
    /// Largest total input volume of a task in bit.
    pub w_in_max: f64,
    /// Smallest capacity share any task can receive.
    pub beta_min: f64,
    /// Worst-case service time of a task in s.
    pub t_ser_max: f64,
    /// Worst-case network time of a task in s.
    pub t_net_max: f64,
    /// Bound on the DAG execution time in s.
    pub t_dag_up: f64,
}

/// Closed-form bound on the DAG time valid for every allocation at maximal
/// resources.
pub fn dag_time_bound(dag: &ApplicationDag, eco: &Ecosystem) -> TimeBound {
    let v = dag.v();
    let s_max = dag.sizes().iter().copied().fold(0.0, f64::max);
    let w_in_max = (0..v).map(|i| dag.parents(i).map(|j| dag.d(j, i)).sum::<f64>()).fold(0.0, f64::max);
    let beta_min = match eco.service_discipline {
        ServiceDiscipline::Seq => 1.0,
        ServiceDiscipline::Wps => {
            let total: f64 = dag.priorities().iter().sum();
            dag.priorities().iter().copied().fold(f64::INFINITY, f64::min) / total
        }
    };
    let min_capacity = eco
        .nodes
        .iter()
        .map(|n| f64::from(n.n) * n.f_max)
        .fold(f64::INFINITY, f64::min);
    let nodes = eco.node_count();
    let mut min_rate = f64::INFINITY;
    let mut max_nf: f64 = 0.0;
    let rs_max = max_resource_vector(eco);
    for a in 0..nodes {
        for b in 0..nodes {
            if a != b {
                min_rate = min_rate.min(link_rate(eco, &rs_max, a, b));
                max_nf = max_nf.max(link_nf(eco, a, b));
            }
        }
    }
    let t_ser_max = if beta_min * min_capacity > 0.0 { s_max / (beta_min * min_capacity) } else { f64::INFINITY };
    let t_net_max = if w_in_max == 0.0 {
        0.0
    } else if min_rate > 0.0 {
        w_in_max * (1.0 + max_nf) / min_rate
    } else {
        f64::INFINITY
    };
    let per_task = t_ser_max + t_net_max;
    let t_dag_up = match eco.scheduling_discipline {
        SchedulingDiscipline::Sts => v as f64 * per_task,
        SchedulingDiscipline::Pts => per_task,
    };
    TimeBound { s_max, w_in_max, beta_min, t_ser_max, t_net_max, t_dag_up }
}

/// Closed-form upper bound on the DAG time over every allocation at maximal
/// resources; infinite when some maximal resource is zero.
pub fn dag_time_upper_bound(dag: &ApplicationDag, eco: &Ecosystem) -> f64 {
    dag_time_bound(dag, eco).t_dag_up
}

/// Sufficient condition for the joint problem to be feasible: the upper
/// bound does not exceed the maximum allowed DAG time.
pub fn jop_feasible_sufficient(dag: &ApplicationDag, eco: &Ecosystem) -> bool {
    eco.th_min == 0.0 || dag_time_upper_bound(dag, eco) <= eco.tdag_max()
}
