use std::collections::BTreeSet;

use popverif::model::{enumerate_configs, parse_protocol, Configuration, Protocol};
use popverif::random;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random protocol with arbitrary two-agent transitions.
fn general(seed: u64, n: usize, m: usize) -> Protocol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = |i: usize| ((b'A' + i as u8) as char).to_string();
    let names: Vec<String> = (0..n).map(name).collect();
    let mut src = format!("states {}\ninitial A\n", names.join(" "));
    for t in 0..m {
        let q: Vec<String> = (0..4).map(|_| name(rng.gen_range(0..n))).collect();
        src += &format!("trans t{t}: ({}, {}) -> ({}, {})\n", q[0], q[1], q[2], q[3]);
    }
    parse_protocol(&src).unwrap().complete_totality().unwrap()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #[test]
    fn steps_conserve_agents(seed in any::<u64>(), n in 1usize..=4, m in 0usize..=5, size in 2usize..=5) {
        let p = general(seed, n, m);
        let all: Vec<usize> = (0..n).collect();
        for g in enumerate_configs(size, &all, n).unwrap() {
            for (t, h) in p.successors(&g) {
                prop_assert!(p.enabled(&g, t));
                prop_assert_eq!(h.size(), g.size());
            }
        }
    }

    #[test]
    fn acceleration_is_repeated_firing(seed in any::<u64>(), n in 2usize..=4, m in 1usize..=5, size in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random::iopp(&mut rng, n, m);
        let all: Vec<usize> = (0..n).collect();
        for g in enumerate_configs(size, &all, n).unwrap() {
            for t in 0..p.transitions.len() {
                let got: BTreeSet<(u32, Configuration)> = p.accelerated_successors(&g, t).unwrap().into_iter().collect();
                let mut want = BTreeSet::new();
                let mut cur = g.clone();
                for k in 1..=6u32 {
                    if !p.enabled(&cur, t) {
                        break;
                    }
                    cur = p.step(&cur, t).unwrap();
                    want.insert((k, cur.clone()));
                }
                let got_small: BTreeSet<_> = got.iter().filter(|(k, _)| *k <= 6).cloned().collect();
                let io = p.transitions[t].iopp_form().unwrap();
                if io.mover == io.target {
                    let want: BTreeSet<_> = p.enabled(&g, t).then(|| (1, g.clone())).into_iter().collect();
                    prop_assert_eq!(got, want);
                } else {
                    prop_assert_eq!(got_small, want);
                }
            }
        }
    }

    #[test]
    fn enumeration_count(size in 2usize..=7, s in 1usize..=4) {
        let support: Vec<usize> = (0..s).collect();
        let configs = enumerate_configs(size, &support, 4).unwrap();
        let distinct: BTreeSet<_> = configs.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), configs.len());
        prop_assert_eq!(configs.len() as u64, binomial((size + s - 1) as u64, (s - 1) as u64));
        prop_assert!(configs.iter().all(|g| g.size() == size && g.support().all(|q| q < s)));
    }

    #[test]
    fn reach_set_is_closed(seed in any::<u64>(), n in 1usize..=4, m in 0usize..=5, size in 2usize..=5) {
        let p = general(seed, n, m);
        let mut g = Configuration::zero(n);
        g.counts[0] = size as u32;
        let reach = p.reach_set(&g);
        prop_assert!(reach.contains(&g));
        for h in &reach {
            for (_, k) in p.successors(h) {
                prop_assert!(reach.contains(&k));
            }
        }
    }
}
