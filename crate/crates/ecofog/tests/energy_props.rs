mod common;

use common::{arb_alloc, arb_builtin, arb_dag, arb_disciplines, arb_fracs, ecosystem, rs_from_fracs, Disciplines};
use ecofog::dag::ApplicationDag;
use ecofog::energy::{connection_in_use, total_energy};
use ecofog::platform::{Ecosystem, NetworkTimeMode, SchedulingDiscipline, ServiceDiscipline, ServiceModel};
use ecofog::timing::{dag_execution_time, Preset, ResourceAllocation, TaskAllocation};
use proptest::prelude::*;

const Q: usize = 2;
const RS_LEN: usize = 3 * Q + 4;

fn instance(dags: impl Strategy<Value = ApplicationDag>) -> impl Strategy<Value = (ApplicationDag, TaskAllocation, Vec<f64>, Disciplines)> {
    dags.prop_flat_map(|dag| {
        let v = dag.v();
        (Just(dag), arb_alloc(v, Q), arb_fracs(RS_LEN), arb_disciplines())
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn quadratic_links(eco: &mut Ecosystem) {
    for pair in &mut eco.wireless {
        for link in [&mut pair.uplink, &mut pair.downlink] {
            link.xi_tx = 2.0;
            link.xi_rx = 2.0;
        }
    }
}

fn mix(a: &ResourceAllocation, b: &ResourceAllocation, t: f64) -> ResourceAllocation {
    ResourceAllocation(a.0.iter().zip(&b.0).map(|(p, r)| t * p + (1.0 - t) * r).collect())
}

proptest! {
    #[test]
    fn breakdown_reconciles((dag, x, fracs, d) in instance(arb_dag()), mobile in any::<bool>()) {
        let mut eco = ecosystem(Q, d);
        if mobile {
            eco.service_model = ServiceModel::MOBILE_CENTRIC;
        }
        let e = total_energy(&dag, &eco, &x, &rs_from_fracs(&eco, &fracs));
        let cmp: f64 = e.per_node.iter().map(|n| eco.service_model.theta(n.node) * (n.static_j + n.dynamic_j)).sum();
        let net: f64 = e.per_connection.iter().map(|c| c.static_j + c.dynamic_j).sum();
        prop_assert!(close(e.e_cmp, cmp, 1e-9));
        prop_assert!(close(e.e_net, net, 1e-9));
        prop_assert!(close(e.e_tot, e.e_cmp + e.e_net, 1e-9));
        prop_assert!(e.e_mobile <= e.e_tot * (1.0 + 1e-9) || mobile);
    }

    #[test]
    fn eco_centric_dominates_mobile_centric((dag, x, fracs, d) in instance(arb_dag())) {
        let eco = ecosystem(Q, d);
        let mut mob = eco.clone();
        mob.service_model = ServiceModel::MOBILE_CENTRIC;
        let rs = rs_from_fracs(&eco, &fracs);
        let (a, b) = (total_energy(&dag, &eco, &x, &rs), total_energy(&dag, &mob, &x, &rs));
        prop_assert!(b.e_tot <= a.e_tot * (1.0 + 1e-12));
        prop_assert!(close(a.e_mobile, b.e_mobile, 1e-12));
    }

    #[test]
    fn idle_connections_cost_nothing((dag, x, fracs, d) in instance(arb_dag())) {
        let eco = ecosystem(Q, d);
        let e = total_energy(&dag, &eco, &x, &rs_from_fracs(&eco, &fracs));
        for c in &e.per_connection {
            if !connection_in_use(&dag, &x, c.link.from, c.link.to) {
                prop_assert_eq!(c.static_j, 0.0);
                prop_assert_eq!(c.dynamic_j, 0.0);
            }
        }
    }

    #[test]
    fn energy_is_convex_in_resources(
        (dag, x, a, d) in instance(arb_builtin()),
        b in arb_fracs(RS_LEN),
        t in 0.0..1.0f64,
        quadratic in any::<bool>(),
    ) {
        let mut eco = ecosystem(Q, d);
        if quadratic {
            quadratic_links(&mut eco);
        }
        let (ra, rb) = (rs_from_fracs(&eco, &a), rs_from_fracs(&eco, &b));
        let chord = t * total_energy(&dag, &eco, &x, &ra).e_tot + (1.0 - t) * total_energy(&dag, &eco, &x, &rb).e_tot;
        let mid = total_energy(&dag, &eco, &x, &mix(&ra, &rb, t)).e_tot;
        prop_assert!(mid <= chord * (1.0 + 1e-9));
    }

    #[test]
    fn all_mobile_energy_matches_closed_form(dag in arb_dag(), f_frac in 0.05..1.0f64) {
        let eco = ecosystem(Q, Disciplines(ServiceDiscipline::Seq, SchedulingDiscipline::Sts, NetworkTimeMode::Sum));
        let x = TaskAllocation::preset(Preset::Mobile, dag.v());
        let mut fracs = vec![1.0; RS_LEN];
        fracs[0] = f_frac;
        let rs = rs_from_fracs(&eco, &fracs);
        let m = &eco.nodes[0];
        let f = rs.0[0];
        let n = f64::from(m.n);
        let t_ser: f64 = dag.sizes().iter().map(|s| s / (n * f)).sum();
        let expected = m.p_cpu_idle / f64::from(m.nc) * t_ser + n * (1.0 - m.r) * m.k * f.powf(m.gamma) * t_ser;
        prop_assert!(close(dag_execution_time(&dag, &eco, &x, &rs), t_ser, 1e-12));
        let e = total_energy(&dag, &eco, &x, &rs);
        prop_assert!(close(e.e_tot, expected, 1e-12));
        prop_assert_eq!(e.e_net, 0.0);
        prop_assert!(close(e.e_mobile, expected, 1e-12));
    }
}
