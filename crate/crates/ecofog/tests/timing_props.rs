mod common;

use common::{arb_alloc, arb_builtin, arb_dag, arb_disciplines, arb_fracs, ecosystem, rebuild, rs_from_fracs, Disciplines};
use ecofog::dag::ApplicationDag;
use ecofog::platform::{max_resource_vector, NetworkTimeMode};
use ecofog::timing::{dag_execution_time, dag_time_upper_bound, smoothed_dag_time, task_network_time, TaskAllocation};
use proptest::prelude::*;

const Q: usize = 2;
const RS_LEN: usize = 3 * Q + 4;

fn instance(dags: impl Strategy<Value = ApplicationDag>) -> impl Strategy<Value = (ApplicationDag, TaskAllocation, Vec<f64>, Disciplines)> {
    dags.prop_flat_map(|dag| {
        let v = dag.v();
        (Just(dag), arb_alloc(v, Q), arb_fracs(RS_LEN), arb_disciplines())
    })
}

fn le(a: f64, b: f64) -> bool {
    a <= b + 1e-12 * b.abs().max(1e-300)
}

proptest! {
    #[test]
    fn time_non_increasing_in_resources(
        (dag, x, fracs, d) in instance(arb_dag()),
        l in 0..RS_LEN,
        grow in 1.0..3.0f64,
    ) {
        let eco = ecosystem(Q, d);
        let rs = rs_from_fracs(&eco, &fracs);
        let mut more = rs.clone();
        more.0[l] *= grow;
        prop_assert!(le(dag_execution_time(&dag, &eco, &x, &more), dag_execution_time(&dag, &eco, &x, &rs)));
    }

    #[test]
    fn time_non_decreasing_in_sizes_and_weights(
        (dag, x, fracs, d) in instance(arb_dag()),
        pick in any::<prop::sample::Index>(),
        grow in 1.0..3.0f64,
    ) {
        let eco = ecosystem(Q, d);
        let rs = rs_from_fracs(&eco, &fracs);
        let t0 = dag_execution_time(&dag, &eco, &x, &rs);
        let edges: Vec<_> = dag.edges().collect();
        let mut sizes = dag.sizes().to_vec();
        sizes[pick.index(dag.v())] *= grow;
        let bigger_task = rebuild(&dag, sizes, edges.clone());
        prop_assert!(le(t0, dag_execution_time(&bigger_task, &eco, &x, &rs)));
        let mut heavier = edges;
        let k = pick.index(heavier.len());
        heavier[k].2 *= grow;
        let bigger_edge = rebuild(&dag, dag.sizes().to_vec(), heavier);
        prop_assert!(le(t0, dag_execution_time(&bigger_edge, &eco, &x, &rs)));
    }

    #[test]
    fn time_is_convex_along_segments(
        (dag, x, a, d) in instance(arb_builtin()),
        b in arb_fracs(RS_LEN),
        t in 0.0..1.0f64,
    ) {
        let eco = ecosystem(Q, d);
        let (ra, rb) = (rs_from_fracs(&eco, &a), rs_from_fracs(&eco, &b));
        let mut mid = ra.clone();
        for (m, (p, r)) in mid.0.iter_mut().zip(ra.0.iter().zip(&rb.0)) {
            *m = t * p + (1.0 - t) * r;
        }
        let chord = t * dag_execution_time(&dag, &eco, &x, &ra) + (1.0 - t) * dag_execution_time(&dag, &eco, &x, &rb);
        prop_assert!(dag_execution_time(&dag, &eco, &x, &mid) <= chord * (1.0 + 1e-9));
    }

    #[test]
    fn sum_mode_dominates_max_mode((dag, x, fracs, d) in instance(arb_dag())) {
        let mut sum = ecosystem(Q, d);
        sum.network_time_mode = NetworkTimeMode::Sum;
        let mut max = sum.clone();
        max.network_time_mode = NetworkTimeMode::Max;
        let rs = rs_from_fracs(&sum, &fracs);
        for i in 0..dag.v() {
            prop_assert!(le(task_network_time(&dag, &max, &x, &rs, i), task_network_time(&dag, &sum, &x, &rs, i)));
        }
    }

    #[test]
    fn smoothing_bounds_the_exact_time((dag, x, fracs, d) in instance(arb_dag())) {
        let eco = ecosystem(Q, d);
        let rs = rs_from_fracs(&eco, &fracs);
        let exact = dag_execution_time(&dag, &eco, &x, &rs);
        let terms = (dag.v() * (Q + 2)) as f64;
        let mut prev_gap = f64::INFINITY;
        for r in [20.0, 100.0, 1000.0] {
            let smooth = smoothed_dag_time(&dag, &eco, &x, &rs, r);
            prop_assert!(le(exact, smooth));
            prop_assert!(le(smooth, exact * terms.powf(1.0 / r)));
            let gap = smooth / exact - 1.0;
            prop_assert!(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
    }

    #[test]
    fn closed_form_bound_covers_every_allocation((dag, x, _fracs, d) in instance(arb_dag())) {
        let eco = ecosystem(Q, d);
        let t = dag_execution_time(&dag, &eco, &x, &max_resource_vector(&eco));
        prop_assert!(le(t, dag_time_upper_bound(&dag, &eco)));
    }
}
