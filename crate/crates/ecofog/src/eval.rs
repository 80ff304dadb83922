//! Compiled evaluation of a fixed task allocation.
//!
//! [`CompiledAllocation`] flattens the DAG, the ecosystem and one task
//! allocation `x` into coefficient lists, so that the DAG time, the energy
//! and the Lagrangian gradient at a resource vector can be computed in one
//! linear pass. The reference functions in [`crate::timing`] and
//! [`crate::energy`] define the same quantities term by term.

use crate::dag::ApplicationDag;
use crate::energy::{connections, raw_connection_volume};
use crate::platform::{backhaul_dynamic_power, Ecosystem, LinkKind, NetworkTimeMode, NodeId, SchedulingDiscipline};
use crate::timing::{link_nf, smooth_max, task_share, TaskAllocation};

/// Throughput of a connection: either a resource entry or a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// Index into the resource vector.
    Var(usize),
    /// Fixed throughput in bit/s.
    Fixed(f64),
}

impl Rate {
    fn value(self, y: &[f64]) -> f64 {
        match self {
            Rate::Var(l) => y[l],
            Rate::Fixed(r) => r,
        }
    }
}

#[derive(Debug, Clone)]
struct Input {
    vol: f64,
    rate: Rate,
}

#[derive(Debug, Clone)]
struct TaskTerm {
    node: usize,
    coef: f64,
    inputs: Vec<Input>,
}

#[derive(Debug, Clone)]
struct NodeTerm {
    index: usize,
    dyn_coef: f64,
    gamma: f64,
}

#[derive(Debug, Clone)]
enum ConnPower {
    Wireless { tx: f64, xi_tx: f64, rx: f64, xi_rx: f64 },
    Backhaul { power: f64 },
}

#[derive(Debug, Clone)]
struct ConnTerm {
    vol: f64,
    rate: Rate,
    power: ConnPower,
}

/// Values produced by one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Exact DAG time in s.
    pub t_exact: f64,
    /// DAG time with every `max` replaced by the p-norm surrogate, in s.
    pub t_smooth: f64,
    /// Exact objective `E_TOT` in J.
    pub e_tot: f64,
    /// Exact network energy `E_NET` in J.
    pub e_net: f64,
    /// Lagrangian value with the smoothed DAG time, in J.
    pub lagrangian: f64,
    /// Partial derivative of the Lagrangian with respect to the multiplier.
    pub dl_dlambda: f64,
}

/// One task allocation compiled against a DAG and an ecosystem.
#[derive(Debug, Clone)]
pub struct CompiledAllocation {
    th: f64,
    r_exp: f64,
    sts: bool,
    net_sum: bool,
    tasks: Vec<TaskTerm>,
    nodes: Vec<NodeTerm>,
    conns: Vec<ConnTerm>,
    active: Vec<bool>,
    static_power: f64,
    static_net_power: f64,
    blocked: bool,
}

impl CompiledAllocation {
    /// Compiles `x`. `r_exp` is the exponent of the smooth maximum.
    pub fn new(dag: &ApplicationDag, eco: &Ecosystem, x: &TaskAllocation, r_exp: f64) -> Self {
        let q = eco.q;
        let sm = eco.service_model;
        let idx = x.indices(q);
        let mut active = vec![false; eco.rs_len()];
        let mut blocked = false;

        let mut tasks = Vec::with_capacity(dag.v());
        for i in 0..dag.v() {
            let p = idx[i];
            let spec = &eco.nodes[p];
            let coef = dag.sizes()[i] / (task_share(dag, eco, x, i) * f64::from(spec.n));
            active[p] = true;
            let mut inputs = Vec::new();
            for s in 0..eco.node_count() {
                if s == p {
                    continue;
                }
                let raw: f64 = dag.parents(i).filter(|&j| idx[j] == s).map(|j| dag.d(j, i)).sum();
                if raw == 0.0 {
                    continue;
                }
                let vol = (1.0 + link_nf(eco, s, p)) * raw;
                let rate = match eco.link_kind(s, p) {
                    LinkKind::Wireless { rs_index, .. } => {
                        active[rs_index] = true;
                        Rate::Var(rs_index)
                    }
                    LinkKind::Backhaul(link) => Rate::Fixed(link.throughput().unwrap_or(0.0)),
                    LinkKind::Absent => Rate::Fixed(0.0),
                };
                if rate == Rate::Fixed(0.0) {
                    blocked = true;
                }
                inputs.push(Input { vol, rate });
            }
            tasks.push(TaskTerm { node: p, coef, inputs });
        }

        let mut static_power = 0.0;
        let mut nodes = Vec::new();
        for (p, spec) in eco.nodes.iter().enumerate() {
            let on: Vec<usize> = (0..dag.v()).filter(|&i| idx[i] == p).collect();
            if on.is_empty() {
                continue;
            }
            let theta = sm.theta(spec.id);
            static_power += theta * spec.p_cpu_idle / f64::from(spec.nc);
            let coefs = on.iter().map(|&i| tasks[i].coef);
            let k_node = match eco.service_discipline {
                crate::platform::ServiceDiscipline::Seq => coefs.sum(),
                crate::platform::ServiceDiscipline::Wps => coefs.fold(0.0, f64::max),
            };
            let dyn_coef = theta * f64::from(spec.n) * (1.0 - spec.r) * spec.k * k_node;
            nodes.push(NodeTerm { index: p, dyn_coef, gamma: spec.gamma });
        }

        let mut static_net_power = 0.0;
        let mut conns = Vec::new();
        for (link, (a, b)) in connections(eco) {
            let raw = raw_connection_volume(dag, x, link.from, link.to);
            let in_use = dag.edges().any(|(i, j, _)| idx[i] == a && idx[j] == b);
            if in_use {
                static_net_power +=
                    sm.theta(link.from) * eco.nodes[a].p_net_idle + sm.theta(link.to) * eco.nodes[b].p_net_idle;
            }
            if raw == 0.0 {
                continue;
            }
            let vol = (1.0 + link_nf(eco, a, b)) * raw;
            let (rate, power) = match eco.link_kind(a, b) {
                LinkKind::Wireless { rs_index, spec, .. } => (
                    Rate::Var(rs_index),
                    ConnPower::Wireless {
                        tx: sm.theta(link.from) * spec.omega_tx,
                        xi_tx: spec.xi_tx,
                        rx: sm.theta(link.to) * spec.omega_rx,
                        xi_rx: spec.xi_rx,
                    },
                ),
                LinkKind::Backhaul(bh) => (
                    Rate::Fixed(bh.throughput().unwrap_or(0.0)),
                    ConnPower::Backhaul { power: backhaul_dynamic_power(bh, sm) },
                ),
                LinkKind::Absent => unreachable!("connections() lists existing links only"),
            };
            conns.push(ConnTerm { vol, rate, power });
        }
        static_power += static_net_power;

        CompiledAllocation {
            th: eco.th_min,
            r_exp,
            sts: eco.scheduling_discipline == SchedulingDiscipline::Sts,
            net_sum: eco.network_time_mode == NetworkTimeMode::Sum,
            tasks,
            nodes,
            conns,
            active,
            static_power,
            static_net_power,
            blocked,
        }
    }

    /// Resource entries that `x` actually uses.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Whether some data must cross an absent link or a zero-throughput
    /// backhaul, so that no resource vector gives a finite DAG time.
    pub fn blocked(&self) -> bool {
        self.blocked
    }

    /// Weighted static power charged per second of DAG time, in W.
    pub fn static_power(&self) -> f64 {
        self.static_power
    }

    /// Minimum DAG-time rate `TH` the allocation must sustain, in 1/s.
    pub fn th_min(&self) -> f64 {
        self.th
    }

    /// Exact DAG time in s.
    pub fn time(&self, y: &[f64]) -> f64 {
        let mut total = 0.0f64;
        for t in &self.tasks {
            let mut net = 0.0f64;
            for inp in &t.inputs {
                let term = ratio(inp.vol, inp.rate.value(y));
                net = if self.net_sum { net + term } else { net.max(term) };
            }
            let tau = ratio(t.coef, y[t.node]) + net;
            total = if self.sts { total + tau } else { total.max(tau) };
        }
        total
    }

    /// Evaluates time, energy and Lagrangian at `y` with multiplier
    /// `lambda`. When `grad` is given it receives the partial derivatives of
    /// the Lagrangian with respect to every resource entry; inactive
    /// entries get 0.
    pub fn evaluate(&self, y: &[f64], lambda: f64, grad: Option<&mut [f64]>) -> Evaluation {
        let r = self.r_exp;
        let keep_tau = !self.sts;
        let keep_net = !self.net_sum;
        let mut tau_smooth = Vec::with_capacity(if keep_tau { self.tasks.len() } else { 0 });
        let mut net_smooth = Vec::with_capacity(if keep_net { self.tasks.len() } else { 0 });
        let mut terms = Vec::new();
        let (mut t_exact, mut t_smooth) = (0.0f64, 0.0f64);
        for t in &self.tasks {
            let (ne, ns) = if self.net_sum {
                let s: f64 = t.inputs.iter().map(|inp| ratio(inp.vol, inp.rate.value(y))).sum();
                (s, s)
            } else {
                terms.clear();
                terms.extend(t.inputs.iter().map(|inp| ratio(inp.vol, inp.rate.value(y))));
                (terms.iter().copied().fold(0.0, f64::max), smooth_max(&terms, r))
            };
            let ser = ratio(t.coef, y[t.node]);
            if self.sts {
                t_exact += ser + ne;
                t_smooth += ser + ns;
            } else {
                t_exact = t_exact.max(ser + ne);
                tau_smooth.push(ser + ns);
            }
            if keep_net {
                net_smooth.push(ns);
            }
        }
        if keep_tau {
            t_smooth = smooth_max(&tau_smooth, r);
        }

        let mut e_dyn = 0.0;
        for n in &self.nodes {
            e_dyn += n.dyn_coef * pow(y[n.index], n.gamma - 1.0);
        }
        let mut e_net_dyn = 0.0;
        for c in &self.conns {
            let rate = c.rate.value(y);
            e_net_dyn += match c.power {
                ConnPower::Wireless { tx, xi_tx, rx, xi_rx } => {
                    c.vol * (tx * pow(rate, xi_tx - 1.0) + rx * pow(rate, xi_rx - 1.0))
                }
                ConnPower::Backhaul { power } => power * ratio(c.vol, rate),
            };
        }
        e_dyn += e_net_dyn;

        let finite = t_exact.is_finite();
        let e_tot = if finite { self.static_power * t_exact + e_dyn } else { f64::INFINITY };
        let e_net = if finite { self.static_net_power * t_exact + e_net_dyn } else { f64::INFINITY };
        let dl_dlambda = self.th * t_smooth - 1.0;
        let lagrangian = if t_smooth.is_finite() {
            self.static_power * t_smooth + e_dyn + lambda * dl_dlambda
        } else {
            f64::INFINITY
        };

        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v = 0.0);
            if !t_smooth.is_finite() {
                g.iter_mut().for_each(|v| *v = f64::NAN);
            } else {
                let scale = self.static_power + lambda * self.th;
                for (k, t) in self.tasks.iter().enumerate() {
                    let w = if self.sts { 1.0 } else { smooth_weight(tau_smooth[k], t_smooth, r) };
                    if w == 0.0 {
                        continue;
                    }
                    let yn = y[t.node];
                    g[t.node] -= scale * w * t.coef / (yn * yn);
                    for inp in &t.inputs {
                        if let Rate::Var(l) = inp.rate {
                            let term = inp.vol / y[l];
                            let wi = if self.net_sum { 1.0 } else { smooth_weight(term, net_smooth[k], r) };
                            g[l] -= scale * w * wi * inp.vol / (y[l] * y[l]);
                        }
                    }
                }
                for n in &self.nodes {
                    g[n.index] += n.dyn_coef * (n.gamma - 1.0) * pow(y[n.index], n.gamma - 2.0);
                }
                for c in &self.conns {
                    if let (Rate::Var(l), ConnPower::Wireless { tx, xi_tx, rx, xi_rx }) = (c.rate, &c.power) {
                        let rate = y[l];
                        g[l] += c.vol
                            * (tx * (xi_tx - 1.0) * pow(rate, xi_tx - 2.0) + rx * (xi_rx - 1.0) * pow(rate, xi_rx - 2.0));
                    }
                }
            }
        }

        Evaluation { t_exact, t_smooth, e_tot, e_net, lagrangian, dl_dlambda }
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    if exp == 1.0 {
        base
    } else if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Partial derivative of the smooth maximum with respect to one entry:
/// `(b / S)^(r - 1)`.
fn smooth_weight(b: f64, s: f64, r: f64) -> f64 {
    if s > 0.0 {
        (b / s).powf(r - 1.0)
    } else {
        0.0
    }
}

/// Nodes hosting at least one task, in node order.
pub fn used_nodes(eco: &Ecosystem, x: &TaskAllocation) -> Vec<NodeId> {
    eco.node_ids().into_iter().filter(|n| x.0.contains(n)).collect()
}
