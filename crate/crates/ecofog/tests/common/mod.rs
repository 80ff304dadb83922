#![allow(dead_code)]

use ecofog::dag::{builtin_dag, ApplicationDag, BuiltinDag};
use ecofog::platform::{
    default_ecosystem, max_resource_vector, Ecosystem, NetworkTimeMode, NodeId, SchedulingDiscipline,
    ServiceDiscipline,
};
use ecofog::timing::{ResourceAllocation, TaskAllocation};
use proptest::prelude::*;

pub const BUILTINS: [BuiltinDag; 4] = [BuiltinDag::Dag1, BuiltinDag::Dag2, BuiltinDag::Dag3, BuiltinDag::Dag4];

pub fn arb_builtin() -> impl Strategy<Value = ApplicationDag> {
    (0..4usize, any::<u64>()).prop_map(|(i, seed)| builtin_dag(BUILTINS[i], seed))
}

/// Random DAG with a single source (task 0) and sink (task v-1) in which
/// every other task has at least one parent and one child.
pub fn arb_dag() -> impl Strategy<Value = ApplicationDag> {
    (3usize..9).prop_flat_map(|v| {
        (
            prop::collection::vec(1e4..1e6f64, v),
            prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), v),
            prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..v),
            prop::collection::vec(0.0..2e5f64, 3 * v),
        )
            .prop_map(move |(sizes, links, extra, weights)| {
                let mut edges: Vec<(usize, usize)> = Vec::new();
                let add = |i: usize, j: usize, edges: &mut Vec<(usize, usize)>| {
                    if i < j && !edges.contains(&(i, j)) {
                        edges.push((i, j));
                    }
                };
                for j in 1..v - 1 {
                    let (p, c) = links[j];
                    add(p.index(j), j, &mut edges);
                    add(j, j + 1 + c.index(v - 1 - j), &mut edges);
                }
                for (a, b) in extra {
                    let i = a.index(v - 1);
                    let j = i + 1 + b.index(v - 1 - i);
                    add(i, j, &mut edges);
                }
                let weighted: Vec<(usize, usize, f64)> =
                    edges.iter().enumerate().map(|(k, &(i, j))| (i, j, weights[k % weights.len()])).collect();
                ApplicationDag::from_edges(sizes, &weighted, None).unwrap()
            })
    })
}

/// Endpoint-respecting allocation of `v` tasks over `q + 2` nodes.
pub fn arb_alloc(v: usize, q: usize) -> impl Strategy<Value = TaskAllocation> {
    prop::collection::vec(0..q + 2, v).prop_map(move |idx| {
        let mut x: Vec<NodeId> = idx.into_iter().map(|i| NodeId::from_index(i, q)).collect();
        x[0] = NodeId::Mobile;
        x[v - 1] = NodeId::Mobile;
        TaskAllocation(x)
    })
}

/// Fractions of the maximal resources, bounded away from zero.
pub fn arb_fracs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, len)
}

pub fn rs_from_fracs(eco: &Ecosystem, fracs: &[f64]) -> ResourceAllocation {
    let max = max_resource_vector(eco);
    ResourceAllocation(max.0.iter().zip(fracs).map(|(m, f)| m * f).collect())
}

#[derive(Debug, Clone, Copy)]
pub struct Disciplines(pub ServiceDiscipline, pub SchedulingDiscipline, pub NetworkTimeMode);

pub fn arb_disciplines() -> impl Strategy<Value = Disciplines> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, b, c)| {
        Disciplines(
            if a { ServiceDiscipline::Wps } else { ServiceDiscipline::Seq },
            if b { SchedulingDiscipline::Pts } else { SchedulingDiscipline::Sts },
            if c { NetworkTimeMode::Max } else { NetworkTimeMode::Sum },
        )
    })
}

pub fn ecosystem(q: usize, d: Disciplines) -> Ecosystem {
    let mut eco = default_ecosystem(q);
    eco.service_discipline = d.0;
    eco.scheduling_discipline = d.1;
    eco.network_time_mode = d.2;
    eco
}

pub fn rebuild(dag: &ApplicationDag, sizes: Vec<f64>, edges: Vec<(usize, usize, f64)>) -> ApplicationDag {
    ApplicationDag::from_edges(sizes, &edges, Some(dag.priorities().to_vec())).unwrap()
}
