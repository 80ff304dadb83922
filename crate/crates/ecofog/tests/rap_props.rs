mod common;

use std::time::{Duration, Instant};

use common::{arb_alloc, BUILTINS};
use ecofog::dag::{builtin_dag, ApplicationDag, BuiltinDag};
use ecofog::energy::total_energy;
use ecofog::platform::{default_ecosystem, max_resource_vector};
use ecofog::rap::{lagrangian_gradient, solve_rap, RapConfig};
use ecofog::timing::{dag_execution_time, TaskAllocation};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = (ApplicationDag, TaskAllocation)> {
    (0..3usize, 1..50u64).prop_flat_map(|(i, seed)| {
        let dag = builtin_dag(BUILTINS[i], seed);
        let v = dag.v();
        (Just(dag), arb_alloc(v, 1))
    })
}

fn converged() -> RapConfig {
    RapConfig { i_max: 20_000, grad_tol: Some(1e-7), record_trace: false, ..RapConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multiplier_stays_non_negative((dag, x) in small_instance(), tmax in 0.1..0.5f64) {
        let mut eco = default_ecosystem(1);
        eco.set_tdag_max(tmax);
        let r = solve_rap(&dag, &eco, &x, &RapConfig { i_max: 300, ..RapConfig::default() }).unwrap();
        prop_assert!(r.traces.iter().all(|p| p.lambda >= 0.0));
        prop_assert!(r.lambda >= 0.0);
    }

    #[test]
    fn result_is_feasible_and_beats_max_resources((dag, x) in small_instance(), tmax in 0.1..0.5f64) {
        let mut eco = default_ecosystem(1);
        eco.set_tdag_max(tmax);
        let r = solve_rap(&dag, &eco, &x, &RapConfig { i_max: 300, record_trace: false, ..RapConfig::default() }).unwrap();
        let at_max = total_energy(&dag, &eco, &x, &max_resource_vector(&eco));
        let t_max = dag_execution_time(&dag, &eco, &x, &max_resource_vector(&eco));
        prop_assert_eq!(r.feasible, t_max <= tmax * (1.0 + 1e-9));
        if r.feasible {
            prop_assert!(dag_execution_time(&dag, &eco, &x, &r.rs) <= tmax * (1.0 + 1e-9));
            prop_assert!(r.e_tot() <= at_max.e_tot);
            let max = max_resource_vector(&eco);
            for (y, m) in r.rs.0.iter().zip(&max.0) {
                prop_assert!(*y >= 0.0 && *y <= *m);
            }
        }
    }

    #[test]
    fn tighter_deadline_never_lowers_energy((dag, x) in small_instance()) {
        let mut prev = 0.0;
        for tmax in [1.0, 0.5, 0.3, 0.2, 0.15, 0.13, 0.12] {
            let mut eco = default_ecosystem(1);
            eco.set_tdag_max(tmax);
            let e = solve_rap(&dag, &eco, &x, &converged()).unwrap().e_tot();
            prop_assert!(e >= prev * (1.0 - 1e-4), "T_max {}: {} after {}", tmax, e, prev);
            prev = e;
        }
    }

    #[test]
    fn converged_iterate_satisfies_kkt((dag, x) in small_instance(), tmax in prop::sample::select(vec![0.3, 0.2, 0.15])) {
        let mut eco = default_ecosystem(1);
        eco.set_tdag_max(tmax);
        let cfg = converged();
        let r = solve_rap(&dag, &eco, &x, &cfg).unwrap();
        prop_assume!(r.feasible && r.iterations < cfg.i_max);
        let hi = max_resource_vector(&eco).0;
        let g = lagrangian_gradient(&dag, &eco, &x, &r.last_rs, r.lambda);
        let e = r.energy.e_tot;
        for l in 0..hi.len() {
            let y = r.last_rs.0[l];
            if y == 0.0 {
                prop_assert_eq!(g.values[l], 0.0);
                continue;
            }
            let scaled = hi[l] * g.values[l] / e;
            let projected = if y >= hi[l] {
                scaled.max(0.0)
            } else if y <= cfg.floor_eps * hi[l] * (1.0 + 1e-12) {
                scaled.min(0.0)
            } else {
                scaled
            };
            prop_assert!(projected.abs() < 1e-4, "entry {}: {}", l, projected);
        }
        let slack = dag_execution_time(&dag, &eco, &x, &r.last_rs) / tmax - 1.0;
        prop_assert!(slack < 1e-4);
        prop_assert!((r.lambda / e * slack).abs() < 1e-4);
    }
}

fn best_time(dag: &ApplicationDag, q: usize, x: &TaskAllocation, i_max: usize) -> Duration {
    let mut eco = default_ecosystem(q);
    eco.set_tdag_max(1e3);
    let cfg = RapConfig { i_max, record_trace: false, ..RapConfig::default() };
    (0..7)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(solve_rap(dag, &eco, x, &cfg).unwrap());
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn spread(v: usize, q: usize) -> TaskAllocation {
    let eco = default_ecosystem(q);
    let mut x: Vec<_> = (0..v).map(|i| ecofog::platform::NodeId::from_index(i % eco.node_count(), q)).collect();
    x[0] = ecofog::platform::NodeId::Mobile;
    x[v - 1] = ecofog::platform::NodeId::Mobile;
    TaskAllocation(x)
}

#[test]
fn cost_is_linear_in_iterations() {
    let dag = builtin_dag(BuiltinDag::Dag4, 1);
    let x = spread(dag.v(), 2);
    let ratio = best_time(&dag, 2, &x, 8000).as_secs_f64() / best_time(&dag, 2, &x, 4000).as_secs_f64();
    assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn cost_grows_at_most_linearly_in_fog_count() {
    let dag = builtin_dag(BuiltinDag::Dag4, 1);
    let small = best_time(&dag, 1, &spread(dag.v(), 1), 4000).as_secs_f64();
    let large = best_time(&dag, 4, &spread(dag.v(), 4), 4000).as_secs_f64();
    let predicted = (3.0 * 4.0 + 5.0) / (3.0 * 1.0 + 5.0);
    assert!(large / small <= 1.5 * predicted, "ratio {} vs {predicted}", large / small);
}
