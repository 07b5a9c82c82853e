use std::collections::BTreeSet;
use std::sync::Arc;

use popverif::flows::{
    empirical_blindness, flow_step_feasible, min_tr_of_transition, reachable_via_flows, saturate, saturate_in_order, tf_leq,
    tf_product_member_bruteforce, tf_product_min, Antichain, ExtNat, TransferFlow, DEFAULT_MAX_ROUNDS,
};
use popverif::model::enumerate_configs;
use popverif::product::{build_graph, ProdConfig, ProductSystem, Semantics};
use popverif::random;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: usize = 2_000_000;

fn system(seed: u64, n: usize, m: usize, controls: usize) -> ProductSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Arc::new(random::iopp(&mut rng, n, m));
    let dra = Arc::new(random::control_automaton(&mut rng, p.alphabet(), controls));
    ProductSystem::new(p, dra, Semantics::Accelerated, true).unwrap()
}

fn all_prod_configs(ps: &ProductSystem, size: usize) -> Vec<ProdConfig> {
    let q: Vec<usize> = (0..ps.protocol.num_states()).collect();
    let mut out = Vec::new();
    for g in enumerate_configs(size, &q, q.len()).unwrap() {
        for l in 0..ps.dra.num_states() {
            out.push(ProdConfig { config: g.clone(), control: l });
        }
    }
    out
}

/// Accelerated successors of `c` through `t` only.
fn step_by(ps: &ProductSystem, c: &ProdConfig, t: usize) -> Vec<ProdConfig> {
    ps.successors(c).into_iter().filter(|(u, _)| *u == t).map(|(_, d)| d).collect()
}

/// A random flow with numeric diagonal and a few numeric off-diagonal cells.
fn random_flow(rng: &mut ChaCha8Rng, n: usize, src: usize, dst: usize) -> TransferFlow {
    let f = (0..n * n)
        .map(|k| {
            if k / n == k % n || rng.gen_bool(0.3) {
                ExtNat::Num(rng.gen_range(0..3))
            } else {
                ExtNat::Sharp
            }
        })
        .collect();
    TransferFlow::new(n, f, src, dst)
}

fn bump(tf: &TransferFlow, rng: &mut ChaCha8Rng) -> TransferFlow {
    let mut out = tf.clone();
    for v in out.f.iter_mut() {
        if let ExtNat::Num(x) = v {
            *x += rng.gen_range(0..2);
        }
    }
    out
}

fn shrink(tf: &TransferFlow, rng: &mut ChaCha8Rng) -> TransferFlow {
    let mut out = tf.clone();
    for v in out.f.iter_mut() {
        if let ExtNat::Num(x) = v {
            *x -= rng.gen_range(0..=*x);
        }
    }
    out
}

fn product_set(a: &Antichain, b: &Antichain) -> Antichain {
    let mut out = Antichain::new();
    for x in a {
        for y in b {
            for z in &tf_product_min(x, y) {
                out.insert(z.clone());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_step_soundness(seed in any::<u64>(), n in 2usize..=3, m in 1usize..=3, controls in 1usize..=2) {
        let ps = system(seed, n, m, controls);
        for t in 0..ps.protocol.transitions.len() {
            let tr = min_tr_of_transition(&ps.protocol, t, &ps.dra).unwrap();
            for size in 2..=4 {
                let all = all_prod_configs(&ps, size);
                for c in &all {
                    let succ: BTreeSet<ProdConfig> = step_by(&ps, c, t).into_iter().collect();
                    for d in &all {
                        let via = tr.iter().any(|f| flow_step_feasible(c, f, d).is_some());
                        prop_assert_eq!(via, succ.contains(d), "t={} {:?} -> {:?}", t, c, d);
                    }
                }
            }
        }
    }

    #[test]
    fn sequence_soundness(seed in any::<u64>(), len in 1usize..=4) {
        let ps = system(seed, 3, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..ps.protocol.transitions.len())).collect();
        let mut flows: Antichain = (0..ps.dra.num_states()).map(|l| TransferFlow::identity(3, l)).collect();
        for &t in &word {
            flows = product_set(&flows, &min_tr_of_transition(&ps.protocol, t, &ps.dra).unwrap());
        }
        for size in 2..=4 {
            let all = all_prod_configs(&ps, size);
            for c in &all {
                let mut reach: BTreeSet<ProdConfig> = BTreeSet::from([c.clone()]);
                for &t in &word {
                    reach = reach.iter().flat_map(|x| step_by(&ps, x, t)).collect();
                }
                for d in &all {
                    let via = flows.iter().any(|f| flow_step_feasible(c, f, d).is_some());
                    prop_assert_eq!(via, reach.contains(d));
                }
            }
        }
    }

    #[test]
    fn product_min_agrees_with_bruteforce(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_flow(&mut rng, n, 0, 1);
        let b = random_flow(&mut rng, n, 1, 0);
        let mins = tf_product_min(&a, &b);
        for m in &mins {
            prop_assert!(m.weight() <= a.weight() + b.weight());
            prop_assert!(tf_product_member_bruteforce(&a, &b, m, BUDGET).unwrap());
            // upward closure
            prop_assert!(tf_product_member_bruteforce(&a, &b, &bump(m, &mut rng), BUDGET).unwrap());
            // minimality
            for k in 0..n * n {
                if let ExtNat::Num(v) = m.f[k] {
                    if v > 0 {
                        let mut lower = m.clone();
                        lower.f[k] = ExtNat::Num(v - 1);
                        prop_assert!(!mins.covers(&lower));
                        prop_assert!(!tf_product_member_bruteforce(&a, &b, &lower, BUDGET).unwrap());
                    }
                }
            }
        }
        // completeness on random candidates with the product's pattern
        if let Some(shape) = mins.iter().next() {
            for _ in 0..10 {
                let cand = shrink(&bump(shape, &mut rng), &mut rng);
                prop_assert_eq!(mins.covers(&cand), tf_product_member_bruteforce(&a, &b, &cand, BUDGET).unwrap());
            }
        }
    }

    #[test]
    fn contravariance(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_flow(&mut rng, n, 0, 1);
        let b = random_flow(&mut rng, n, 1, 0);
        let (a2, b2) = (shrink(&a, &mut rng), shrink(&b, &mut rng));
        prop_assert!(tf_leq(&a2, &a) && tf_leq(&b2, &b));
        for m in &tf_product_min(&a, &b) {
            prop_assert!(tf_product_member_bruteforce(&a2, &b2, m, BUDGET).unwrap());
        }
    }

    #[test]
    fn associativity(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Antichain = [random_flow(&mut rng, n, 0, 1)].into_iter().collect();
        let b: Antichain = [random_flow(&mut rng, n, 1, 1)].into_iter().collect();
        let c: Antichain = [random_flow(&mut rng, n, 1, 0)].into_iter().collect();
        let left = product_set(&product_set(&a, &b), &c);
        let right = product_set(&a, &product_set(&b, &c));
        prop_assert!(left.same_closure(&right), "{}\nvs\n{}", left.dump(), right.dump());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn saturation_matches_graph_search(seed in any::<u64>(), n in 2usize..=4, m in 1usize..=3, controls in 1usize..=3) {
        let ps = system(seed, n, m, controls);
        let sat = saturate(&ps, DEFAULT_MAX_ROUNDS).unwrap();
        prop_assert!(sat.antichain.max_weight() <= 2 * sat.rounds as u64);
        let max_size = if n == 4 { 4 } else { 5 };
        for size in 2..=max_size {
            let all = all_prod_configs(&ps, size);
            for c in &all {
                let g = build_graph(&ps, std::slice::from_ref(c), 100_000).unwrap();
                for d in &all {
                    prop_assert_eq!(
                        reachable_via_flows(c, d, &sat.antichain).unwrap(),
                        g.node(d).is_some(),
                        "{:?} -> {:?}", c, d
                    );
                }
            }
        }
    }

    #[test]
    fn saturation_is_order_independent(seed in any::<u64>()) {
        let ps = system(seed, 3, 3, 2);
        let base = saturate(&ps, DEFAULT_MAX_ROUNDS).unwrap();
        let mut order: Vec<usize> = (0..ps.protocol.transitions.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)));
        let shuffled = saturate_in_order(&ps, &order, DEFAULT_MAX_ROUNDS).unwrap();
        prop_assert_eq!(base.antichain.sorted(), shuffled.antichain.sorted());
    }
}

#[test]
fn reachability_sets_are_blind() {
    for seed in 0..6 {
        let ps = system(seed, 3, 3, 2);
        let init = ps.protocol.initial_support();
        let mut reached = BTreeSet::new();
        for size in 2..=7 {
            let roots: Vec<ProdConfig> =
                enumerate_configs(size, &init, 3).unwrap().iter().map(|g| ps.initial(g)).collect();
            reached.extend(build_graph(&ps, &roots, 1_000_000).unwrap().nodes);
        }
        let k = empirical_blindness(|c| reached.contains(c), 3, 2, 2..=6, 6).unwrap();
        assert!(k.is_some(), "seed {seed}: post* not blind within 6");
    }
}
