//! Computing and networking energy of an allocation pair `(x, rs)`.
//!
//! Per-node computing energies are reported without service-model weights;
//! the weights are applied when they are summed into `e_cmp`. Network
//! energies already carry their weights, so `e_net` is the plain sum of the
//! per-connection entries.

use serde::{Deserialize, Serialize};

use crate::dag::ApplicationDag;
use crate::platform::{backhaul_dynamic_power, Ecosystem, LinkId, LinkKind, NodeId, ServiceModel, WirelessLinkSpec};
use crate::timing::{
    dag_execution_time, link_nf, link_rate, node_total_service_time, ResourceAllocation, TaskAllocation,
};

/// Static and dynamic computing energy of one node, without weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    /// The node.
    pub node: NodeId,
    /// Idle-power share charged for the whole DAG time, in J.
    #[serde(with = "crate::serde_inf")]
    pub static_j: f64,
    /// Frequency-dependent energy, in J.
    #[serde(with = "crate::serde_inf")]
    pub dynamic_j: f64,
}

/// Static and dynamic energy of one directed connection, weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionEnergy {
    /// The connection.
    pub link: LinkId,
    /// Interface idle energy while the connection is in use, in J.
    #[serde(with = "crate::serde_inf")]
    pub static_j: f64,
    /// Transport energy, in J.
    #[serde(with = "crate::serde_inf")]
    pub dynamic_j: f64,
}

/// Decomposition of the objective for one `(x, rs)`.
///
/// An infeasible pair is represented by infinite totals and empty
/// per-node and per-connection lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Exact DAG execution time the static terms were charged for, in s.
    #[serde(with = "crate::serde_inf")]
    pub t_dag: f64,
    /// Objective value `e_cmp + e_net`, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_tot: f64,
    /// Weighted computing energy, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_cmp: f64,
    /// Weighted network energy, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_net: f64,
    /// Energy drawn by the Mobile device, independent of the weights, in J.
    #[serde(with = "crate::serde_inf")]
    pub e_mobile: f64,
    /// Unweighted computing energy of every node, in node order.
    pub per_node: Vec<NodeEnergy>,
    /// Weighted energy of every existing directed connection.
    pub per_connection: Vec<ConnectionEnergy>,
}

impl EnergyBreakdown {
    /// Sentinel for an infeasible pair.
    pub fn infinite() -> Self {
        EnergyBreakdown {
            t_dag: f64::INFINITY,
            e_tot: f64::INFINITY,
            e_cmp: f64::INFINITY,
            e_net: f64::INFINITY,
            e_mobile: f64::INFINITY,
            per_node: Vec::new(),
            per_connection: Vec::new(),
        }
    }

    /// Whether the totals are finite.
    pub fn is_finite(&self) -> bool {
        self.e_tot.is_finite()
    }

    /// CSV header for ecosystem `eco`.
    ///
    /// Columns: `t_dag, e_tot, e_cmp, e_net, e_mobile`, then
    /// `<node>_static, <node>_dynamic` for every node in order, then
    /// `<link>_static, <link>_dynamic` for every connection in the order of
    /// [`connections`].
    pub fn csv_header(eco: &Ecosystem) -> Vec<String> {
        let mut h: Vec<String> = ["t_dag", "e_tot", "e_cmp", "e_net", "e_mobile"].iter().map(|s| s.to_string()).collect();
        for n in eco.node_ids() {
            h.push(format!("{n}_static"));
            h.push(format!("{n}_dynamic"));
        }
        for (link, _) in connections(eco) {
            h.push(format!("{link}_static"));
            h.push(format!("{link}_dynamic"));
        }
        h
    }

    /// CSV row matching [`EnergyBreakdown::csv_header`]. Values use
    /// `decimals` fractional digits, or full precision when `None`.
    pub fn csv_record(&self, eco: &Ecosystem, decimals: Option<usize>) -> Vec<String> {
        let fmt = |v: f64| match decimals {
            Some(d) if v.is_finite() => format!("{v:.d$}"),
            _ if v.is_finite() => format!("{v}"),
            _ => "inf".to_string(),
        };
        let mut row: Vec<String> =
            [self.t_dag, self.e_tot, self.e_cmp, self.e_net, self.e_mobile].iter().map(|&v| fmt(v)).collect();
        let width = 2 * (eco.node_count() + connections(eco).len());
        if self.per_node.is_empty() {
            row.extend(std::iter::repeat(fmt(f64::INFINITY)).take(width));
        } else {
            for e in &self.per_node {
                row.push(fmt(e.static_j));
                row.push(fmt(e.dynamic_j));
            }
            for e in &self.per_connection {
                row.push(fmt(e.static_j));
                row.push(fmt(e.dynamic_j));
            }
        }
        row
    }
}

/// Every existing directed connection as `(link, (from index, to index))`,
/// ordered by source then destination index.
pub fn connections(eco: &Ecosystem) -> Vec<(LinkId, (usize, usize))> {
    let n = eco.node_count();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && !matches!(eco.link_kind(a, b), LinkKind::Absent) {
                let link = LinkId { from: NodeId::from_index(a, eco.q), to: NodeId::from_index(b, eco.q) };
                out.push((link, (a, b)));
            }
        }
    }
    out
}

/// Unweighted computing energy of `node`: idle share
/// `(P_idle / nc) * T_DAG` when the node hosts a task, plus the dynamic
/// term `n (1 - r) k f^gamma * T_SER`.
pub fn computing_energy(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    t_dag: f64,
    node: NodeId,
) -> (f64, f64) {
    if !x.0.contains(&node) {
        return (0.0, 0.0);
    }
    let spec = eco.node(node);
    let f = rs.0[node.index(eco.q)];
    let static_j = spec.p_cpu_idle / f64::from(spec.nc) * t_dag;
    let t_ser = node_total_service_time(dag, eco, x, rs, node);
    if !t_ser.is_finite() {
        return (static_j, f64::INFINITY);
    }
    let dynamic_j = f64::from(spec.n) * (1.0 - spec.r) * spec.k * f.powf(spec.gamma) * t_ser;
    (static_j, dynamic_j)
}

/// Weighted dynamic power of a wireless link carrying `rate` bit/s from
/// `from` to `to`: `theta_from * omega_tx * R^xi_tx + theta_to * omega_rx * R^xi_rx`.
pub fn wireless_dynamic_power(link: &WirelessLinkSpec, rate: f64, sm: ServiceModel, from: NodeId, to: NodeId) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    sm.theta(from) * link.omega_tx * rate.powf(link.xi_tx) + sm.theta(to) * link.omega_rx * rate.powf(link.xi_rx)
}

/// Raw bit count carried from `from` to `to` (no failure overhead).
pub fn raw_connection_volume(dag: &ApplicationDag, x: &TaskAllocation, from: NodeId, to: NodeId) -> f64 {
    dag.edges().filter(|&(i, j, _)| x.0[i] == from && x.0[j] == to).map(|(_, _, w)| w).sum()
}

/// Whether at least one edge of the DAG crosses from `from` to `to`.
pub fn connection_in_use(dag: &ApplicationDag, x: &TaskAllocation, from: NodeId, to: NodeId) -> bool {
    dag.edges().any(|(i, j, _)| x.0[i] == from && x.0[j] == to)
}

/// Data volume carried from `from` to `to`, including failure overhead.
pub fn connection_volume(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, from: NodeId, to: NodeId) -> f64 {
    assert_ne!(from, to, "connection volume needs two distinct nodes");
    let raw = raw_connection_volume(dag, x, from, to);
    if raw == 0.0 {
        return 0.0;
    }
    (1.0 + link_nf(eco, from.index(eco.q), to.index(eco.q))) * raw
}

/// Weighted static and dynamic energy of the one-way connection `from -> to`.
pub fn oneway_network_energy(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    t_dag: f64,
    from: NodeId,
    to: NodeId,
) -> (f64, f64) {
    let sm = eco.service_model;
    let static_j = if connection_in_use(dag, x, from, to) {
        (sm.theta(from) * eco.node(from).p_net_idle + sm.theta(to) * eco.node(to).p_net_idle) * t_dag
    } else {
        0.0
    };
    let vl = connection_volume(dag, eco, x, from, to);
    if vl == 0.0 {
        return (static_j, 0.0);
    }
    let (a, b) = (from.index(eco.q), to.index(eco.q));
    let rate = link_rate(eco, rs, a, b);
    if rate <= 0.0 {
        return (static_j, f64::INFINITY);
    }
    let power = match eco.link_kind(a, b) {
        LinkKind::Wireless { spec, .. } => wireless_dynamic_power(spec, rate, sm, from, to),
        LinkKind::Backhaul(link) => backhaul_dynamic_power(link, sm),
        LinkKind::Absent => return (static_j, f64::INFINITY),
    };
    (static_j, power * vl / rate)
}

/// Full energy decomposition of `(x, rs)` using the exact DAG time.
pub fn total_energy(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, rs: &ResourceAllocation) -> EnergyBreakdown {
    let t_dag = dag_execution_time(dag, eco, x, rs);
    if !t_dag.is_finite() {
        return EnergyBreakdown::infinite();
    }
    let sm = eco.service_model;
    let mut per_node = Vec::with_capacity(eco.node_count());
    let mut e_cmp = 0.0;
    for node in eco.node_ids() {
        let (s, d) = computing_energy(dag, eco, x, rs, t_dag, node);
        e_cmp += sm.theta(node) * (s + d);
        per_node.push(NodeEnergy { node, static_j: s, dynamic_j: d });
    }
    let mut per_connection = Vec::new();
    let mut e_net = 0.0;
    let mut mobile_net = 0.0;
    for (link, (a, b)) in connections(eco) {
        let (s, d) = oneway_network_energy(dag, eco, x, rs, t_dag, link.from, link.to);
        e_net += s + d;
        per_connection.push(ConnectionEnergy { link, static_j: s, dynamic_j: d });
        if a == 0 || b == 0 {
            mobile_net += mobile_network_share(dag, eco, x, rs, t_dag, a, b);
        }
    }
    let e_tot = e_cmp + e_net;
    if !e_tot.is_finite() {
        return EnergyBreakdown::infinite();
    }
    let m = &per_node[0];
    EnergyBreakdown {
        t_dag,
        e_tot,
        e_cmp,
        e_net,
        e_mobile: m.static_j + m.dynamic_j + mobile_net,
        per_node,
        per_connection,
    }
}

/// Unweighted energy the Mobile device spends on a wireless connection:
/// its interface idle share plus its transmit (uplink) or receive
/// (downlink) dynamic energy.
fn mobile_network_share(
    dag: &ApplicationDag,
    eco: &Ecosystem,
    x: &TaskAllocation,
    rs: &ResourceAllocation,
    t_dag: f64,
    a: usize,
    b: usize,
) -> f64 {
    let (from, to) = (NodeId::from_index(a, eco.q), NodeId::from_index(b, eco.q));
    let mut e = 0.0;
    if connection_in_use(dag, x, from, to) {
        e += eco.nodes[0].p_net_idle * t_dag;
    }
    let vl = connection_volume(dag, eco, x, from, to);
    if vl > 0.0 {
        if let LinkKind::Wireless { rs_index, spec, uplink } = eco.link_kind(a, b) {
            let rate = rs.0[rs_index];
            let (omega, xi) = if uplink { (spec.omega_tx, spec.xi_tx) } else { (spec.omega_rx, spec.xi_rx) };
            e += omega * rate.powf(xi) * vl / rate;
        }
    }
    e
}
