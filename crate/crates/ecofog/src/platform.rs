//! The Mobile-Fog-Cloud ecosystem: nodes, wireless and backhaul links,
//! service model, discipline selectors and the resource-vector layout.
//!
//! The node set is `A = {M, F1, ..., FQ, C}`, indexed `0..Q+2` in that
//! order. The set of back-haul nodes is `BHS = A \ {M}`. Every node of BHS
//! is reachable from the Mobile device through one uplink (`M -> N`) and one
//! downlink (`N -> M`); pairs of BHS nodes are joined by two-way backhaul
//! links.
//!
//! A resource vector has `3Q+4` entries: the `Q+2` per-node frequencies
//! followed, for every `N` in BHS, by the pair `R_{M->N}, R_{N->M}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::timing::ResourceAllocation;

/// A member of the node set `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    /// The Mobile device.
    Mobile,
    /// Fog node `F_l`, `l` counted from 1.
    Fog(usize),
    /// The Cloud data center.
    Cloud,
}

impl NodeId {
    /// Position of the node inside `A` for an ecosystem with `q` Fog nodes.
    pub fn index(self, q: usize) -> usize {
        match self {
            NodeId::Mobile => 0,
            NodeId::Fog(l) => l,
            NodeId::Cloud => q + 1,
        }
    }

    /// Inverse of [`NodeId::index`].
    pub fn from_index(index: usize, q: usize) -> NodeId {
        match index {
            0 => NodeId::Mobile,
            i if i == q + 1 => NodeId::Cloud,
            l => NodeId::Fog(l),
        }
    }

    /// Whether the node identifier is meaningful for `q` Fog nodes.
    pub fn exists(self, q: usize) -> bool {
        match self {
            NodeId::Fog(l) => (1..=q).contains(&l),
            _ => true,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Mobile => f.write_str("M"),
            NodeId::Fog(l) => write!(f, "F{l}"),
            NodeId::Cloud => f.write_str("C"),
        }
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "M" | "m" => Ok(NodeId::Mobile),
            "C" | "c" => Ok(NodeId::Cloud),
            "F" | "f" => Ok(NodeId::Fog(1)),
            _ => {
                let rest = t
                    .strip_prefix('F')
                    .or_else(|| t.strip_prefix('f'))
                    .ok_or_else(|| Error::Config(format!("unknown node '{s}'")))?;
                let l: usize = rest.parse().map_err(|_| Error::Config(format!("unknown node '{s}'")))?;
                if l == 0 {
                    return Err(Error::Config("Fog nodes are numbered from 1".into()));
                }
                Ok(NodeId::Fog(l))
            }
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A directed connection between two distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId {
    /// Transmitting end.
    pub from: NodeId,
    /// Receiving end.
    pub to: NodeId,
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for LinkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once("->")
            .ok_or_else(|| Error::Config(format!("link '{s}' must look like 'M->F1'")))?;
        let link = LinkId { from: a.parse()?, to: b.parse()? };
        if link.from == link.to {
            return Err(Error::Config(format!("link '{s}' joins a node to itself")));
        }
        Ok(link)
    }
}

impl Serialize for LinkId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Computing and idle-power parameters of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// Node identifier; must match the node's position in the ecosystem.
    pub id: NodeId,
    /// Virtual cores per clone.
    pub n: u32,
    /// Maximum per-core processing frequency in bit/s; 0 forbids the node.
    pub f_max: f64,
    /// Dynamic-power coefficient in W/(bit/s)^gamma.
    pub k: f64,
    /// Dynamic-power exponent (at least 2).
    pub gamma: f64,
    /// Fraction of dynamic power shared with co-located clones, in `[0, 1]`.
    pub r: f64,
    /// Containers hosted per physical server (at least 1).
    pub nc: u32,
    /// Idle power of the server CPU in W.
    pub p_cpu_idle: f64,
    /// Idle power of the node's network interface in W.
    pub p_net_idle: f64,
}

/// Raw inputs of a one-way wireless link, as stored in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirelessLinkInput {
    /// Maximum throughput in bit/s; 0 means the link is absent.
    pub r_max: f64,
    /// Average failure (retransmission overhead) rate.
    pub nf: f64,
    /// Round-trip time of the sustained transport connection in s.
    pub rtt: f64,
    /// Exponent applied to the round-trip time.
    pub eta: f64,
    /// Transmit-side power scale.
    pub chi_tx: f64,
    /// Receive-side power scale.
    pub chi_rx: f64,
    /// Link length in m.
    pub length_m: f64,
    /// Path-loss exponent in `(2, 4]`.
    pub alpha: f64,
    /// Transmit-power exponent.
    pub xi_tx: f64,
    /// Receive-power exponent.
    pub xi_rx: f64,
}

/// One-way wireless link with its derived power coefficients.
///
/// The dynamic power drawn at throughput `R` is
/// `theta_src * omega_tx * R^xi_tx + theta_dst * omega_rx * R^xi_rx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WirelessLinkInput", into = "WirelessLinkInput")]
pub struct WirelessLinkSpec {
    /// Maximum throughput in bit/s; 0 means the link is absent.
    pub r_max: f64,
    /// Average failure rate.
    pub nf: f64,
    /// Transmit power coefficient.
    pub omega_tx: f64,
    /// Receive power coefficient.
    pub omega_rx: f64,
    /// Transmit-power exponent.
    pub xi_tx: f64,
    /// Receive-power exponent.
    pub xi_rx: f64,
    /// Round-trip time in s.
    pub rtt: f64,
    /// Exponent applied to the round-trip time.
    pub eta: f64,
    /// Transmit-side power scale.
    pub chi_tx: f64,
    /// Receive-side power scale.
    pub chi_rx: f64,
    /// Link length in m.
    pub length_m: f64,
    /// Path-loss exponent.
    pub alpha: f64,
}

impl TryFrom<WirelessLinkInput> for WirelessLinkSpec {
    type Error = Error;

    fn try_from(input: WirelessLinkInput) -> Result<Self> {
        WirelessLinkSpec::new(input)
    }
}

impl From<WirelessLinkSpec> for WirelessLinkInput {
    fn from(spec: WirelessLinkSpec) -> Self {
        WirelessLinkInput {
            r_max: spec.r_max,
            nf: spec.nf,
            rtt: spec.rtt,
            eta: spec.eta,
            chi_tx: spec.chi_tx,
            chi_rx: spec.chi_rx,
            length_m: spec.length_m,
            alpha: spec.alpha,
            xi_tx: spec.xi_tx,
            xi_rx: spec.xi_rx,
        }
    }
}

impl WirelessLinkSpec {
    /// Derives the power coefficients and checks the link invariants.
    pub fn new(input: WirelessLinkInput) -> Result<Self> {
        let (omega_tx, omega_rx) = omega_coefficients(
            input.rtt,
            input.eta,
            input.chi_tx,
            input.chi_rx,
            input.length_m,
            input.alpha,
        )?;
        if !(input.xi_rx >= 2.0 && input.xi_tx >= input.xi_rx) {
            return Err(Error::Parameter(format!(
                "wireless exponents must satisfy xi_tx >= xi_rx >= 2, got ({}, {})",
                input.xi_tx, input.xi_rx
            )));
        }
        if !(input.r_max >= 0.0 && input.r_max.is_finite()) || !(input.nf >= 0.0) {
            return Err(Error::Parameter(format!(
                "wireless r_max and nf must be non-negative, got ({}, {})",
                input.r_max, input.nf
            )));
        }
        Ok(WirelessLinkSpec {
            r_max: input.r_max,
            nf: input.nf,
            omega_tx,
            omega_rx,
            xi_tx: input.xi_tx,
            xi_rx: input.xi_rx,
            rtt: input.rtt,
            eta: input.eta,
            chi_tx: input.chi_tx,
            chi_rx: input.chi_rx,
            length_m: input.length_m,
            alpha: input.alpha,
        })
    }
}

/// Up- and downlink between the Mobile device and one BHS node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirelessPair {
    /// The BHS end of the pair.
    pub node: NodeId,
    /// `M -> node`.
    pub uplink: WirelessLinkSpec,
    /// `node -> M`.
    pub downlink: WirelessLinkSpec,
}

/// Two-way wired backhaul link between two BHS nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulLinkSpec {
    /// Hop count (at least 1).
    pub hops: u32,
    /// One-way per-hop power in W.
    pub p_hop: f64,
    /// Maximum segment size in bit.
    pub mss: f64,
    /// Round-trip time in s.
    pub rtt: f64,
    /// Segment loss probability in `(0, 1]`.
    pub p_loss: f64,
    /// Average failure rate.
    pub nf: f64,
}

impl BackhaulLinkSpec {
    /// Sustained throughput of the link in bit/s (same in both directions).
    pub fn throughput(&self) -> Result<f64> {
        backhaul_throughput(self.mss, self.rtt, self.p_loss)
    }
}

/// A backhaul link together with its two endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulEntry {
    /// The two BHS endpoints, in any order.
    pub between: (NodeId, NodeId),
    /// Link parameters.
    #[serde(flatten)]
    pub link: BackhaulLinkSpec,
}

/// Which nodes' energies enter the optimization objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceModel {
    /// Weight of the Mobile device (0 or 1).
    pub theta_m: u8,
    /// Weight of the Fog nodes (0 or 1).
    pub theta_f: u8,
    /// Weight of the Cloud (0 or 1).
    pub theta_c: u8,
}

impl ServiceModel {
    /// Every node's energy counts.
    pub const ECO_CENTRIC: ServiceModel = ServiceModel { theta_m: 1, theta_f: 1, theta_c: 1 };
    /// Only the Mobile device's energy counts.
    pub const MOBILE_CENTRIC: ServiceModel = ServiceModel { theta_m: 1, theta_f: 0, theta_c: 0 };

    /// Weight of `node` as a float.
    pub fn theta(&self, node: NodeId) -> f64 {
        f64::from(match node {
            NodeId::Mobile => self.theta_m,
            NodeId::Fog(_) => self.theta_f,
            NodeId::Cloud => self.theta_c,
        })
    }
}

/// Intra-node service discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServiceDiscipline {
    /// Each task runs alone at the full node capacity.
    #[serde(rename = "SEQ")]
    Seq,
    /// Weighted processor sharing by task priority.
    #[serde(rename = "WPS")]
    Wps,
}

/// Inter-node task scheduling discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedulingDiscipline {
    /// DAG time is the sum of task execution times.
    #[serde(rename = "STS")]
    Sts,
    /// DAG time is the maximum task execution time.
    #[serde(rename = "PTS")]
    Pts,
}

/// How a task's incoming transfers from different nodes combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NetworkTimeMode {
    /// Transfers are serialized: times add.
    #[default]
    #[serde(rename = "SUM")]
    Sum,
    /// Transfers overlap: the slowest one dominates.
    #[serde(rename = "MAX")]
    Max,
}

/// The complete ecosystem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecosystem {
    /// Number of Fog nodes.
    pub q: usize,
    /// One spec per member of `A`, in index order.
    pub nodes: Vec<NodeSpec>,
    /// One wireless pair per BHS node, in index order.
    pub wireless: Vec<WirelessPair>,
    /// Backhaul links; BHS pairs without an entry are absent (zero throughput).
    pub backhaul: Vec<BackhaulEntry>,
    /// Objective weights.
    pub service_model: ServiceModel,
    /// Intra-node discipline.
    pub service_discipline: ServiceDiscipline,
    /// Inter-node discipline.
    pub scheduling_discipline: SchedulingDiscipline,
    /// Combination rule for concurrent incoming transfers.
    #[serde(default)]
    pub network_time_mode: NetworkTimeMode,
    /// Minimum throughput in applications per second, the inverse of the
    /// maximum DAG execution time. Zero removes the time constraint.
    pub th_min: f64,
}

/// How data travels between two distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkKind<'a> {
    /// Wireless link whose throughput is entry `rs_index` of the resource vector.
    Wireless {
        /// Position of the throughput inside the resource vector.
        rs_index: usize,
        /// Link parameters.
        spec: &'a WirelessLinkSpec,
        /// True for `M -> N`, false for `N -> M`.
        uplink: bool,
    },
    /// Backhaul link with fixed throughput.
    Backhaul(&'a BackhaulLinkSpec),
    /// No link between the two nodes.
    Absent,
}

impl Ecosystem {
    /// Number of nodes, `Q + 2`.
    pub fn node_count(&self) -> usize {
        self.q + 2
    }

    /// Length of a resource vector, `3Q + 4`.
    pub fn rs_len(&self) -> usize {
        3 * self.q + 4
    }

    /// Node identifiers in index order.
    pub fn node_ids(&self) -> Vec<NodeId> {
        (0..self.node_count()).map(|i| NodeId::from_index(i, self.q)).collect()
    }

    /// Spec of `node`.
    pub fn node(&self, node: NodeId) -> &NodeSpec {
        &self.nodes[node.index(self.q)]
    }

    /// Resource-vector position of the uplink `M -> N`, for `N` at index `n >= 1`.
    pub fn uplink_index(&self, n: usize) -> usize {
        self.q + 2 * n
    }

    /// Resource-vector position of the downlink `N -> M`, for `N` at index `n >= 1`.
    pub fn downlink_index(&self, n: usize) -> usize {
        self.q + 2 * n + 1
    }

    /// Label of every resource-vector entry, e.g. `f_M`, `R_M->F1`.
    pub fn rs_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.node_ids().iter().map(|n| format!("f_{n}")).collect();
        for n in 1..self.node_count() {
            let id = NodeId::from_index(n, self.q);
            labels.push(format!("R_M->{id}"));
            labels.push(format!("R_{id}->M"));
        }
        labels
    }

    /// Maximum allowed time per DAG execution in s (infinite when unconstrained).
    pub fn tdag_max(&self) -> f64 {
        if self.th_min > 0.0 {
            1.0 / self.th_min
        } else {
            f64::INFINITY
        }
    }

    /// Sets the time constraint from a maximum DAG time in s.
    pub fn set_tdag_max(&mut self, tdag_max: f64) {
        self.th_min = if tdag_max.is_finite() { 1.0 / tdag_max } else { 0.0 };
    }

    /// Backhaul link between two BHS nodes given by index, if present.
    pub fn backhaul_between(&self, a: usize, b: usize) -> Option<&BackhaulLinkSpec> {
        self.backhaul.iter().find_map(|e| {
            let (x, y) = (e.between.0.index(self.q), e.between.1.index(self.q));
            ((x, y) == (a, b) || (x, y) == (b, a)).then_some(&e.link)
        })
    }

    /// Connection used to move data from node index `from` to node index `to`.
    pub fn link_kind(&self, from: usize, to: usize) -> LinkKind<'_> {
        debug_assert_ne!(from, to);
        if from == 0 {
            LinkKind::Wireless { rs_index: self.uplink_index(to), spec: &self.wireless[to - 1].uplink, uplink: true }
        } else if to == 0 {
            LinkKind::Wireless {
                rs_index: self.downlink_index(from),
                spec: &self.wireless[from - 1].downlink,
                uplink: false,
            }
        } else {
            self.backhaul_between(from, to).map_or(LinkKind::Absent, LinkKind::Backhaul)
        }
    }

    /// Wireless spec of a Mobile-side link.
    pub fn wireless_link_mut(&mut self, link: LinkId) -> Result<&mut WirelessLinkSpec> {
        let q = self.q;
        if !link.from.exists(q) || !link.to.exists(q) {
            return Err(Error::Config(format!("link {link} references an unknown node")));
        }
        match (link.from, link.to) {
            (NodeId::Mobile, to) if to != NodeId::Mobile => Ok(&mut self.wireless[to.index(q) - 1].uplink),
            (from, NodeId::Mobile) if from != NodeId::Mobile => {
                Ok(&mut self.wireless[from.index(q) - 1].downlink)
            }
            _ => Err(Error::Config(format!("link {link} is not a wireless Mobile link"))),
        }
    }

    /// Checks every structural and parameter invariant.
    pub fn validate(&self) -> Result<()> {
        let q = self.q;
        if self.nodes.len() != q + 2 {
            return Err(Error::Dimension(format!("expected {} node specs, got {}", q + 2, self.nodes.len())));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let expected = NodeId::from_index(i, q);
            if node.id != expected {
                return Err(Error::Config(format!("node {i} must be {expected}, found {}", node.id)));
            }
            let ok = node.n >= 1
                && node.nc >= 1
                && node.f_max >= 0.0
                && node.f_max.is_finite()
                && node.k >= 0.0
                && node.gamma >= 2.0
                && (0.0..=1.0).contains(&node.r)
                && node.p_cpu_idle >= 0.0
                && node.p_net_idle >= 0.0;
            if !ok {
                return Err(Error::Parameter(format!("node {} has out-of-range parameters", node.id)));
            }
        }
        if self.wireless.len() != q + 1 {
            return Err(Error::Dimension(format!(
                "expected {} wireless pairs, got {}",
                q + 1,
                self.wireless.len()
            )));
        }
        for (j, pair) in self.wireless.iter().enumerate() {
            let expected = NodeId::from_index(j + 1, q);
            if pair.node != expected {
                return Err(Error::Config(format!("wireless pair {j} must serve {expected}, found {}", pair.node)));
            }
            for link in [&pair.uplink, &pair.downlink] {
                WirelessLinkSpec::new(WirelessLinkInput::from(link.clone()))?;
            }
        }
        let mut seen = Vec::new();
        for entry in &self.backhaul {
            let (a, b) = entry.between;
            if !a.exists(q) || !b.exists(q) || a == NodeId::Mobile || b == NodeId::Mobile || a == b {
                return Err(Error::Config(format!("backhaul {a}<->{b} must join two distinct BHS nodes")));
            }
            let key = (a.min(b), a.max(b));
            if seen.contains(&key) {
                return Err(Error::Config(format!("duplicate backhaul {a}<->{b}")));
            }
            seen.push(key);
            let l = &entry.link;
            if l.hops < 1 || !(l.p_hop >= 0.0) || !(l.mss > 0.0) || !(l.rtt > 0.0) || !(l.nf >= 0.0) {
                return Err(Error::Parameter(format!("backhaul {a}<->{b} has out-of-range parameters")));
            }
            l.throughput()?;
        }
        let sm = self.service_model;
        if sm.theta_m > 1 || sm.theta_f > 1 || sm.theta_c > 1 {
            return Err(Error::Parameter("service-model weights must be 0 or 1".into()));
        }
        if !(self.th_min >= 0.0 && self.th_min.is_finite()) {
            return Err(Error::Parameter(format!("th_min must be finite and >= 0, got {}", self.th_min)));
        }
        Ok(())
    }

    /// Loads and validates an ecosystem file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let eco: Ecosystem =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        eco.validate()?;
        Ok(eco)
    }

    /// Writes the ecosystem to a JSON file.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Wireless power coefficients `RTT^eta * chi / (1 + length^alpha)` for the
/// transmit and receive sides.
pub fn omega_coefficients(
    rtt: f64,
    eta: f64,
    chi_tx: f64,
    chi_rx: f64,
    length_m: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(rtt > 0.0) || !(alpha > 2.0 && alpha <= 4.0) || !(length_m >= 0.0) || !(chi_tx >= 0.0 && chi_rx >= 0.0) {
        return Err(Error::Parameter(format!(
            "omega needs rtt > 0, alpha in (2, 4], length >= 0, chi >= 0; got rtt={rtt}, alpha={alpha}, length={length_m}"
        )));
    }
    let base = rtt.powf(eta) / (1.0 + length_m.powf(alpha));
    Ok((base * chi_tx, base * chi_rx))
}

/// Sustained TCP throughput `1.22 * MSS / (RTT * sqrt(p_loss))` in bit/s.
pub fn backhaul_throughput(mss: f64, rtt: f64, p_loss: f64) -> Result<f64> {
    if p_loss == 0.0 {
        return Err(Error::Parameter("zero loss probability gives unbounded backhaul throughput".into()));
    }
    if !(mss > 0.0 && rtt > 0.0 && p_loss > 0.0 && p_loss <= 1.0) {
        return Err(Error::Parameter(format!(
            "backhaul needs mss > 0, rtt > 0, p_loss in (0, 1]; got ({mss}, {rtt}, {p_loss})"
        )));
    }
    Ok(1.22 * mss / (rtt * p_loss.sqrt()))
}

/// One-way dynamic power of a backhaul link: `hops * p_hop * max(theta_c, theta_f)`.
pub fn backhaul_dynamic_power(link: &BackhaulLinkSpec, sm: ServiceModel) -> f64 {
    f64::from(link.hops) * link.p_hop * f64::from(sm.theta_c.max(sm.theta_f))
}

/// Vector of maximal resources: per-node `f_max` then per-link `r_max`.
pub fn max_resource_vector(eco: &Ecosystem) -> ResourceAllocation {
    let mut rs: Vec<f64> = eco.nodes.iter().map(|n| n.f_max).collect();
    for pair in &eco.wireless {
        rs.push(pair.uplink.r_max);
        rs.push(pair.downlink.r_max);
    }
    ResourceAllocation(rs)
}

/// Artifact default parameters, shipped as a versioned JSON file.
///
/// These values are engineering defaults chosen for this implementation;
/// they are not measured data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcosystemDefaults {
    /// Version tag of the defaults file.
    pub version: String,
    /// Free-text provenance note.
    pub note: String,
    /// Mobile device.
    pub mobile: NodeSpec,
    /// Template for every Fog node.
    pub fog: NodeSpec,
    /// Cloud.
    pub cloud: NodeSpec,
    /// Mobile-to-Fog short-range uplink.
    pub wifi_uplink: WirelessLinkSpec,
    /// Fog-to-Mobile short-range downlink.
    pub wifi_downlink: WirelessLinkSpec,
    /// Mobile-to-Cloud cellular uplink.
    pub cellular_uplink: WirelessLinkSpec,
    /// Cloud-to-Mobile cellular downlink.
    pub cellular_downlink: WirelessLinkSpec,
    /// Fog-to-Cloud backhaul.
    pub backhaul_fog_cloud: BackhaulLinkSpec,
    /// Fog-to-Fog backhaul.
    pub backhaul_fog_fog: BackhaulLinkSpec,
    /// Default maximum DAG time in s.
    pub tdag_max: f64,
}

/// Text of the embedded defaults file.
pub const DEFAULTS_JSON: &str = include_str!("../defaults/ecosystem_v1.json");

impl EcosystemDefaults {
    /// Parses the embedded defaults file.
    pub fn embedded() -> EcosystemDefaults {
        serde_json::from_str(DEFAULTS_JSON).expect("embedded defaults file is valid")
    }

    /// Instantiates an Eco-centric SEQ/STS/SUM ecosystem with `q` Fog nodes
    /// and a fully meshed backhaul.
    pub fn ecosystem(&self, q: usize) -> Ecosystem {
        let mut nodes = vec![NodeSpec { id: NodeId::Mobile, ..self.mobile.clone() }];
        for l in 1..=q {
            nodes.push(NodeSpec { id: NodeId::Fog(l), ..self.fog.clone() });
        }
        nodes.push(NodeSpec { id: NodeId::Cloud, ..self.cloud.clone() });
        let mut wireless: Vec<WirelessPair> = (1..=q)
            .map(|l| WirelessPair {
                node: NodeId::Fog(l),
                uplink: self.wifi_uplink.clone(),
                downlink: self.wifi_downlink.clone(),
            })
            .collect();
        wireless.push(WirelessPair {
            node: NodeId::Cloud,
            uplink: self.cellular_uplink.clone(),
            downlink: self.cellular_downlink.clone(),
        });
        let mut backhaul = Vec::new();
        for a in 1..=q {
            for b in a + 1..=q {
                backhaul.push(BackhaulEntry { between: (NodeId::Fog(a), NodeId::Fog(b)), link: self.backhaul_fog_fog.clone() });
            }
            backhaul.push(BackhaulEntry { between: (NodeId::Fog(a), NodeId::Cloud), link: self.backhaul_fog_cloud.clone() });
        }
        let mut eco = Ecosystem {
            q,
            nodes,
            wireless,
            backhaul,
            service_model: ServiceModel::ECO_CENTRIC,
            service_discipline: ServiceDiscipline::Seq,
            scheduling_discipline: SchedulingDiscipline::Sts,
            network_time_mode: NetworkTimeMode::Sum,
            th_min: 0.0,
        };
        eco.set_tdag_max(self.tdag_max);
        eco
    }
}

/// Default ecosystem with `q` Fog nodes built from the embedded defaults.
pub fn default_ecosystem(q: usize) -> Ecosystem {
    EcosystemDefaults::embedded().ecosystem(q)
}
