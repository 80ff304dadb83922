mod common;

use std::sync::Mutex;

use common::BUILTINS;
use ecofog::dag::builtin_dag;
use ecofog::platform::{default_ecosystem, Ecosystem, NodeId};
use ecofog::rap::{solve_rap, RapConfig};
use ecofog::tap::{
    crossover, fitness, mutate, price_max, random_allocation, run_ga, solve_aess, solve_agtas, solve_fixed, solve_otas,
    GaParams, Priced, Strategy,
};
use ecofog::timing::{Preset, TaskAllocation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn valid(x: &TaskAllocation, v: usize, eco: &Ecosystem) -> bool {
    x.len() == v
        && x.0[0] == NodeId::Mobile
        && x.0[v - 1] == NodeId::Mobile
        && x.0.iter().all(|n| n.exists(eco.q))
}

fn chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

proptest! {
    #[test]
    fn operators_preserve_validity(v in 2..12usize, q in 0..4usize, mn in 0..6usize, seed in any::<u64>()) {
        let eco = default_ecosystem(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p1 = random_allocation(v, &eco, &mut rng);
        let p2 = random_allocation(v, &eco, &mut rng);
        prop_assert!(valid(&p1, v, &eco) && valid(&p2, v, &eco));
        let (c1, c2) = crossover(&p1, &p2, &mut rng);
        prop_assert!(valid(&c1, v, &eco) && valid(&c2, v, &eco));
        let mn = mn.min(v.saturating_sub(2));
        let m = mutate(&c1, mn, &eco, &mut rng);
        prop_assert!(valid(&m, v, &eco));
        prop_assert!(m.0.iter().zip(&c1.0).filter(|(a, b)| a != b).count() <= mn);
    }

    #[test]
    fn crossover_children_split_at_one_cut(v in 3..12usize, seed in any::<u64>()) {
        let eco = default_ecosystem(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p1 = random_allocation(v, &eco, &mut rng);
        let p2 = random_allocation(v, &eco, &mut rng);
        let (c1, c2) = crossover(&p1, &p2, &mut rng);
        let ok = (2..v).any(|cut| {
            (0..v).all(|i| {
                let (a, b) = if i < cut { (&p1, &p2) } else { (&p2, &p1) };
                c1.0[i] == a.0[i] && c2.0[i] == b.0[i]
            })
        });
        prop_assert!(ok);
    }

    #[test]
    fn elitism_tracks_every_priced_candidate(i in 0..4usize, seed in any::<u64>(), ps in 2..12usize, g_max in 0..8usize, cf in 0.1..1.0f64) {
        let dag = builtin_dag(BUILTINS[i], seed % 16 + 1);
        let mut eco = default_ecosystem(1);
        eco.set_tdag_max(0.2);
        let seen = Mutex::new(Vec::new());
        let price = |x: &TaskAllocation| -> ecofog::Result<Priced> {
            let p = price_max(&dag, &eco, x);
            seen.lock().unwrap().push(p.e_tot);
            Ok(p)
        };
        let params = GaParams { ps, cf, g_max, seed, ..GaParams::default() };
        let (r, history) = run_ga(&dag, &eco, &params, Strategy::Otas, &price).unwrap();
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        let min = seen.lock().unwrap().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.e_best, min);
        prop_assert_eq!(*r.trace.last().unwrap(), min);
        prop_assert_eq!(r.rap_calls, (g_max + 1) * ps);
        prop_assert_eq!(history.populations.len(), g_max + 1);
        prop_assert!(history.populations.iter().all(|p| p.len() == ps && p.iter().all(|x| valid(x, dag.v(), &eco))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dominance_chain(i in 0..3usize, seed in 1..100u64, tmax in prop::sample::select(vec![0.3, 0.2])) {
        let dag = builtin_dag(BUILTINS[i], seed);
        let mut eco = default_ecosystem(1);
        eco.set_tdag_max(tmax);
        let rap = RapConfig { i_max: 200, record_trace: false, ..RapConfig::default() };
        let params = GaParams { seed, ..GaParams::default() };
        let ga = solve_agtas(&dag, &eco, &params, &rap).unwrap();
        prop_assume!(ga.feasible());
        let ess = solve_aess(&dag, &eco, &rap, 1_000_000).unwrap();
        let ota = solve_otas(&dag, &eco, &params).unwrap();
        prop_assert!(ess.e_best <= ga.e_best);
        for p in [Preset::Fog, Preset::Cloud, Preset::Mobile] {
            prop_assert!(ga.e_best <= solve_fixed(&dag, &eco, p, &rap).unwrap().e_best);
        }
        prop_assert!(ga.e_best <= ota.e_best);
        prop_assert_eq!(ga.rap_calls, (params.g_max + 1) * params.ps);
    }
}

#[test]
fn random_interior_is_uniform() {
    let eco = default_ecosystem(1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 3];
    for _ in 0..10_000 {
        let x = random_allocation(3, &eco, &mut rng);
        counts[x.0[1].index(1)] += 1;
    }
    let chi = chi_square(&counts);
    assert!(chi < 13.82, "chi-square {chi} over {counts:?}");
}

#[test]
fn mutated_positions_are_uniform() {
    let eco = default_ecosystem(1);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let v = 9;
    let x = TaskAllocation::preset(Preset::Mobile, v);
    let mut counts = vec![0usize; v - 2];
    for _ in 0..10_000 {
        let m = mutate(&x, 1, &eco, &mut rng);
        for (i, (a, b)) in m.0.iter().zip(&x.0).enumerate() {
            if a != b {
                counts[i - 1] += 1;
            }
        }
    }
    let chi = chi_square(&counts);
    assert!(chi < 22.46, "chi-square {chi} over {counts:?}");
}

#[test]
fn fitness_inverts_energy() {
    let dag = builtin_dag(BUILTINS[0], 1);
    let eco = default_ecosystem(1);
    let rap = RapConfig { i_max: 200, ..RapConfig::default() };
    let x = TaskAllocation::preset(Preset::Mobile, dag.v());
    let e = solve_rap(&dag, &eco, &x, &rap).unwrap().e_tot();
    assert_eq!(fitness(&dag, &eco, &x, &rap).unwrap(), 1.0 / e);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<_> = (0..3).map(|_| random_allocation(dag.v(), &eco, &mut rng)).collect();
    let es: Vec<f64> = xs.iter().map(|x| solve_rap(&dag, &eco, x, &rap).unwrap().e_tot()).collect();
    let fs: Vec<f64> = xs.iter().map(|x| fitness(&dag, &eco, x, &rap).unwrap()).collect();
    for a in 0..3 {
        for b in 0..3 {
            assert_eq!(es[a] < es[b], fs[a] > fs[b]);
        }
    }
}

#[test]
fn same_seed_same_result() {
    let dag = builtin_dag(BUILTINS[1], 3);
    let eco = default_ecosystem(1);
    let rap = RapConfig { i_max: 100, ..RapConfig::default() };
    let params = GaParams { seed: 77, ..GaParams::default() };
    assert_eq!(solve_agtas(&dag, &eco, &params, &rap).unwrap(), solve_agtas(&dag, &eco, &params, &rap).unwrap());
}
