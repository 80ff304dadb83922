//! Application DAGs: representation, validation, built-in topologies and
//! rescaling.
//!
//! Tasks are indexed from `0` to `V-1` in the API. Task `0` is the source
//! (the first task of the application, always pinned to the Mobile device)
//! and task `V-1` is the sink. The on-disk JSON format numbers tasks from
//! `1` to `V`.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted directed acyclic task graph of a streaming application.
///
/// Sizes and edge weights are measured in bit. Priorities are dimensionless
/// weights used only by the weighted-processor-sharing discipline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DagFile", into = "DagFile")]
pub struct ApplicationDag {
    v: usize,
    adjacency: Vec<u8>,
    weights: Vec<f64>,
    sizes: Vec<f64>,
    priorities: Vec<f64>,
}

/// On-disk representation: tasks numbered from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DagFile {
    tasks: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priorities: Option<Vec<f64>>,
}

impl TryFrom<DagFile> for ApplicationDag {
    type Error = Error;

    fn try_from(file: DagFile) -> Result<Self> {
        let mut edges = Vec::with_capacity(file.edges.len());
        for &(i, j, w) in &file.edges {
            if i == 0 || j == 0 {
                return Err(Error::Dimension(format!(
                    "edge ({i}, {j}) uses task 0; tasks are numbered from 1"
                )));
            }
            edges.push((i - 1, j - 1, w));
        }
        ApplicationDag::from_edges(file.tasks, &edges, file.priorities)
    }
}

impl From<ApplicationDag> for DagFile {
    fn from(dag: ApplicationDag) -> Self {
        DagFile {
            edges: dag.edges().map(|(i, j, w)| (i + 1, j + 1, w)).collect(),
            tasks: dag.sizes,
            priorities: Some(dag.priorities),
        }
    }
}

impl ApplicationDag {
    /// Builds a DAG from dense matrices.
    ///
    /// Only dimensions are checked here; graph properties are reported by
    /// [`validate_dag`]. Missing priorities default to all ones.
    pub fn from_matrices(
        adjacency: Vec<Vec<u8>>,
        weights: Vec<Vec<f64>>,
        sizes: Vec<f64>,
        priorities: Option<Vec<f64>>,
    ) -> Result<Self> {
        let v = sizes.len();
        if v < 2 {
            return Err(Error::Dimension(format!("a DAG needs at least 2 tasks, got {v}")));
        }
        if adjacency.len() != v || adjacency.iter().any(|row| row.len() != v) {
            return Err(Error::Dimension(format!("adjacency must be {v}x{v}")));
        }
        if weights.len() != v || weights.iter().any(|row| row.len() != v) {
            return Err(Error::Dimension(format!("edge weights must be {v}x{v}")));
        }
        let priorities = priorities.unwrap_or_else(|| vec![1.0; v]);
        if priorities.len() != v {
            return Err(Error::Dimension(format!(
                "expected {v} priorities, got {}",
                priorities.len()
            )));
        }
        Ok(ApplicationDag {
            v,
            adjacency: adjacency.into_iter().flatten().collect(),
            weights: weights.into_iter().flatten().collect(),
            sizes,
            priorities,
        })
    }

    /// Builds a DAG from task sizes and a `(parent, child, weight)` edge list
    /// with 0-based task indices.
    pub fn from_edges(
        sizes: Vec<f64>,
        edges: &[(usize, usize, f64)],
        priorities: Option<Vec<f64>>,
    ) -> Result<Self> {
        let v = sizes.len();
        let mut adjacency = vec![vec![0u8; v]; v];
        let mut weights = vec![vec![0.0; v]; v];
        for &(i, j, w) in edges {
            if i >= v || j >= v {
                return Err(Error::Dimension(format!(
                    "edge ({}, {}) references a task outside 1..={v}",
                    i + 1,
                    j + 1
                )));
            }
            if adjacency[i][j] != 0 {
                return Err(Error::Config(format!("duplicate edge ({}, {})", i + 1, j + 1)));
            }
            adjacency[i][j] = 1;
            weights[i][j] = w;
        }
        Self::from_matrices(adjacency, weights, sizes, priorities)
    }

    /// Loads a DAG from a JSON file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Writes the DAG to a JSON file.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Number of tasks `V`.
    pub fn v(&self) -> usize {
        self.v
    }

    /// Adjacency entry `a_ij` (0 or 1 for a valid DAG).
    pub fn a(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i * self.v + j]
    }

    /// Whether an edge `i -> j` exists.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.a(i, j) != 0
    }

    /// Edge weight `d_ij` in bit.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.v + j]
    }

    /// Task sizes `s` in bit.
    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// WPS priorities `phi`.
    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    /// Iterator over `(parent, child, weight)` for every edge, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.v).flat_map(move |i| {
            (0..self.v).filter_map(move |j| self.has_edge(i, j).then(|| (i, j, self.d(i, j))))
        })
    }

    /// Number of edges `|E|`.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a != 0).count()
    }

    /// Parents of task `j`.
    pub fn parents(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.v).filter(move |&i| self.has_edge(i, j))
    }

    /// Children of task `i`.
    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.v).filter(move |&j| self.has_edge(i, j))
    }

    /// Sum of task sizes in bit.
    pub fn total_task_bits(&self) -> f64 {
        self.sizes.iter().sum()
    }

    /// Sum of edge weights in bit.
    pub fn total_edge_bits(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Returns a copy with replaced priorities.
    pub fn with_priorities(mut self, priorities: Vec<f64>) -> Result<Self> {
        if priorities.len() != self.v {
            return Err(Error::Dimension(format!(
                "expected {} priorities, got {}",
                self.v,
                priorities.len()
            )));
        }
        self.priorities = priorities;
        Ok(self)
    }
}

/// One of the structural properties every application DAG must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DagProperty {
    /// Adjacency entries are 0 or 1.
    BinaryAdjacency,
    /// Weights are non-negative and vanish where there is no edge.
    EdgeWeightSupport,
    /// Task sizes are strictly positive and finite.
    PositiveTaskSize,
    /// Priorities are strictly positive and finite.
    PositivePriority,
    /// The graph has no directed cycle.
    Acyclicity,
    /// The first task has no parent.
    SourceInDegree,
    /// The last task has no child.
    SinkOutDegree,
    /// Every intermediate task has at least one parent.
    InDegree,
    /// Every intermediate task has at least one child.
    OutDegree,
    /// Every intermediate task is reachable from the first task.
    PathFromSource,
    /// Every intermediate task reaches the last task.
    PathToSink,
}

impl fmt::Display for DagProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DagProperty::BinaryAdjacency => "binary adjacency",
            DagProperty::EdgeWeightSupport => "edge-weight support",
            DagProperty::PositiveTaskSize => "positive task size",
            DagProperty::PositivePriority => "positive priority",
            DagProperty::Acyclicity => "acyclicity",
            DagProperty::SourceInDegree => "source in-degree 0",
            DagProperty::SinkOutDegree => "sink out-degree 0",
            DagProperty::InDegree => "in-degree ≥ 1",
            DagProperty::OutDegree => "out-degree ≥ 1",
            DagProperty::PathFromSource => "path-from-source",
            DagProperty::PathToSink => "path-to-sink",
        };
        f.write_str(name)
    }
}

/// A single violated property with a human-readable explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// The violated property.
    pub property: DagProperty,
    /// Explanation naming the offending tasks (1-based).
    pub detail: String,
}

/// Outcome of [`validate_dag`]. `ok` holds exactly when `violations` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Whether every property holds.
    pub ok: bool,
    /// All violated properties, in a deterministic order.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// Whether `property` is among the violations.
    pub fn violates(&self, property: DagProperty) -> bool {
        self.violations.iter().any(|v| v.property == property)
    }
}

fn reachable(v: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; v];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for w in next(u) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Checks every structural property and reports all violations.
///
/// Never fails on an invalid graph; dimension problems are rejected earlier
/// by the constructors.
pub fn validate_dag(dag: &ApplicationDag) -> ValidationReport {
    let v = dag.v();
    let mut violations = Vec::new();
    let mut push = |property, detail: String| violations.push(Violation { property, detail });

    for i in 0..v {
        for j in 0..v {
            let a = dag.a(i, j);
            let d = dag.d(i, j);
            if a > 1 {
                push(
                    DagProperty::BinaryAdjacency,
                    format!("a[{},{}] = {a}", i + 1, j + 1),
                );
            }
            if !(d >= 0.0 && d.is_finite()) || (a == 0 && d != 0.0) {
                push(
                    DagProperty::EdgeWeightSupport,
                    format!("d[{},{}] = {d} with a = {a}", i + 1, j + 1),
                );
            }
        }
    }
    for (i, &s) in dag.sizes().iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            push(DagProperty::PositiveTaskSize, format!("s[{}] = {s}", i + 1));
        }
    }
    for (i, &p) in dag.priorities().iter().enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            push(DagProperty::PositivePriority, format!("phi[{}] = {p}", i + 1));
        }
    }

    let mut indeg: Vec<usize> = (0..v).map(|j| dag.parents(j).count()).collect();
    let outdeg: Vec<usize> = (0..v).map(|i| dag.children(i).count()).collect();

    let mut queue: VecDeque<usize> = (0..v).filter(|&j| indeg[j] == 0).collect();
    let mut visited = 0;
    while let Some(u) = queue.pop_front() {
        visited += 1;
        for w in dag.children(u) {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if visited < v {
        push(
            DagProperty::Acyclicity,
            format!("{} task(s) lie on or behind a directed cycle", v - visited),
        );
    }

    let indeg: Vec<usize> = (0..v).map(|j| dag.parents(j).count()).collect();
    if indeg[0] != 0 {
        push(DagProperty::SourceInDegree, format!("task 1 has {} parent(s)", indeg[0]));
    }
    if outdeg[v - 1] != 0 {
        push(
            DagProperty::SinkOutDegree,
            format!("task {v} has {} child(ren)", outdeg[v - 1]),
        );
    }
    let from_source = reachable(v, 0, |u| dag.children(u).collect());
    let to_sink = reachable(v, v - 1, |u| dag.parents(u).collect());
    for i in 1..v.saturating_sub(1) {
        if indeg[i] == 0 {
            push(DagProperty::InDegree, format!("task {} has no parent", i + 1));
        }
        if outdeg[i] == 0 {
            push(DagProperty::OutDegree, format!("task {} has no child", i + 1));
        }
        if !from_source[i] {
            push(
                DagProperty::PathFromSource,
                format!("task {} is not reachable from task 1", i + 1),
            );
        }
        if !to_sink[i] {
            push(DagProperty::PathToSink, format!("task {} does not reach task {v}", i + 1));
        }
    }

    ValidationReport { ok: violations.is_empty(), violations }
}

/// CPU workload in cycles: `pd * s_i` for every task, where `pd` is the
/// processing density in cycles per bit.
pub fn cpu_workload(dag: &ApplicationDag, pd: f64) -> Result<Vec<f64>> {
    if !(pd > 0.0 && pd.is_finite()) {
        return Err(Error::Parameter(format!("processing density must be > 0, got {pd}")));
    }
    Ok(dag.sizes().iter().map(|&s| pd * s).collect())
}

/// Computing-to-communication ratio: mean task size over mean edge weight.
pub fn ccr(dag: &ApplicationDag) -> Result<f64> {
    let e = dag.edge_count();
    if e == 0 {
        return Err(Error::Degenerate("CCR is undefined for a DAG without edges".into()));
    }
    let edge_total = dag.total_edge_bits();
    if edge_total <= 0.0 {
        return Err(Error::Degenerate("CCR is undefined when all edge weights vanish".into()));
    }
    Ok((dag.total_task_bits() / dag.v() as f64) / (edge_total / e as f64))
}

/// Rescales task sizes and edge weights separately so that they sum to
/// `task_total` and `edge_total` bit. Topology and priorities are unchanged.
pub fn scale_to_totals(dag: &ApplicationDag, task_total: f64, edge_total: f64) -> Result<ApplicationDag> {
    if !(task_total > 0.0 && edge_total > 0.0) {
        return Err(Error::Parameter(format!(
            "target totals must be positive, got ({task_total}, {edge_total})"
        )));
    }
    let s_sum = dag.total_task_bits();
    let d_sum = dag.total_edge_bits();
    if !(s_sum > 0.0) || !(d_sum > 0.0) {
        return Err(Error::Degenerate(format!(
            "cannot rescale totals ({s_sum}, {d_sum}) bit"
        )));
    }
    let mut out = dag.clone();
    let fs = task_total / s_sum;
    let fd = edge_total / d_sum;
    if fs != 1.0 {
        out.sizes.iter_mut().for_each(|s| *s *= fs);
    }
    if fd != 1.0 {
        out.weights.iter_mut().for_each(|d| *d *= fd);
    }
    Ok(out)
}

/// Splits a combined budget of `total` bit between tasks and edges so that
/// the result has the requested CCR, then rescales.
pub fn scale_to_ccr(dag: &ApplicationDag, total: f64, target_ccr: f64) -> Result<ApplicationDag> {
    if !(target_ccr > 0.0 && total > 0.0) {
        return Err(Error::Parameter(format!(
            "CCR and total must be positive, got ({target_ccr}, {total})"
        )));
    }
    let e = dag.edge_count();
    if e == 0 {
        return Err(Error::Degenerate("CCR is undefined for a DAG without edges".into()));
    }
    let rho = target_ccr * dag.v() as f64 / e as f64;
    scale_to_totals(dag, total * rho / (1.0 + rho), total / (1.0 + rho))
}

/// Identifier of a built-in DAG topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinDag {
    /// 3x3 mesh (grid) of 9 tasks, 12 edges.
    #[serde(rename = "DAG1")]
    Dag1,
    /// Tree of 9 tasks whose leaves join at the sink.
    #[serde(rename = "DAG2")]
    Dag2,
    /// Hybrid mesh/tree of 9 tasks.
    #[serde(rename = "DAG3")]
    Dag3,
    /// 15-task, 21-edge application built from fork, parallel and tree
    /// sub-graphs sharing source and sink.
    #[serde(rename = "DAG4")]
    Dag4,
}

impl std::str::FromStr for BuiltinDag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DAG1" => Ok(BuiltinDag::Dag1),
            "DAG2" => Ok(BuiltinDag::Dag2),
            "DAG3" => Ok(BuiltinDag::Dag3),
            "DAG4" => Ok(BuiltinDag::Dag4),
            _ => Err(Error::Config(format!("unknown built-in DAG '{s}'"))),
        }
    }
}

impl fmt::Display for BuiltinDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BuiltinDag::Dag1 => "DAG1",
            BuiltinDag::Dag2 => "DAG2",
            BuiltinDag::Dag3 => "DAG3",
            BuiltinDag::Dag4 => "DAG4",
        };
        f.write_str(name)
    }
}

/// Task total of the 9-task built-ins, in bit.
pub const SMALL_DAG_TASK_BITS: f64 = 3.32e6;
/// Edge total of the 9-task built-ins, in bit.
pub const SMALL_DAG_EDGE_BITS: f64 = 1.66e6;
/// Combined task plus edge budget used by CCR sweeps and by DAG4, in bit.
pub const CCR_SWEEP_TOTAL_BITS: f64 = 4.98e6;
/// CCR of the built-in DAG4.
pub const DAG4_CCR: f64 = 2.0;

impl BuiltinDag {
    /// All four identifiers.
    pub const ALL: [BuiltinDag; 4] = [BuiltinDag::Dag1, BuiltinDag::Dag2, BuiltinDag::Dag3, BuiltinDag::Dag4];

    /// Task count and 1-based edge list of the topology.
    pub fn topology(self) -> (usize, Vec<(usize, usize)>) {
        match self {
            BuiltinDag::Dag1 => {
                let mut edges = Vec::new();
                for r in 0..3 {
                    for c in 0..3 {
                        let id = 3 * r + c + 1;
                        if c < 2 {
                            edges.push((id, id + 1));
                        }
                        if r < 2 {
                            edges.push((id, id + 3));
                        }
                    }
                }
                (9, edges)
            }
            BuiltinDag::Dag2 => (
                9,
                vec![(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7), (4, 8), (5, 9), (6, 9), (7, 9), (8, 9)],
            ),
            BuiltinDag::Dag3 => (
                9,
                vec![
                    (1, 2),
                    (1, 3),
                    (1, 4),
                    (2, 5),
                    (3, 5),
                    (3, 6),
                    (4, 6),
                    (5, 7),
                    (5, 8),
                    (6, 8),
                    (7, 9),
                    (8, 9),
                ],
            ),
            BuiltinDag::Dag4 => (
                15,
                vec![
                    // fork-join branch
                    (1, 2),
                    (2, 3),
                    (2, 4),
                    (2, 5),
                    (3, 6),
                    (4, 6),
                    (5, 6),
                    (6, 15),
                    // two parallel pipelines
                    (1, 7),
                    (7, 8),
                    (8, 15),
                    (1, 9),
                    (9, 10),
                    (10, 15),
                    // tree branch
                    (1, 11),
                    (11, 12),
                    (11, 13),
                    (11, 14),
                    (12, 15),
                    (13, 15),
                    (14, 15),
                ],
            ),
        }
    }
}

/// Builds a built-in DAG. Raw weights are drawn uniformly from `[0.5, 1.5]`
/// with a ChaCha8 stream seeded by `seed`, then rescaled: the 9-task DAGs to
/// 3.32 Mbit of tasks and 1.66 Mbit of edges, DAG4 to a combined 4.98 Mbit
/// at CCR 2.
pub fn builtin_dag(id: BuiltinDag, seed: u64) -> ApplicationDag {
    let (v, edges) = id.topology();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<f64> = (0..v).map(|_| rng.gen_range(0.5..1.5)).collect();
    let edges: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(i, j)| (i - 1, j - 1, rng.gen_range(0.5..1.5)))
        .collect();
    let raw = ApplicationDag::from_edges(sizes, &edges, None).expect("built-in topology is well formed");
    match id {
        BuiltinDag::Dag4 => scale_to_ccr(&raw, CCR_SWEEP_TOTAL_BITS, DAG4_CCR),
        _ => scale_to_totals(&raw, SMALL_DAG_TASK_BITS, SMALL_DAG_EDGE_BITS),
    }
    .expect("positive built-in totals")
}
