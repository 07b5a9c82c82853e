//! Seeded generators for protocols, formulas and words, shared by the test
//! suites and the command line.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::{Formula, LassoWord, LtlFormula};
use crate::model::{Protocol, StateId, Transition};
use crate::rabin::{Dra, RabinPair};

/// Every lasso with `|u| <= max_u` and `1 <= |v| <= max_v` over `k` letters.
pub fn all_lassos(k: usize, max_u: usize, max_v: usize) -> Vec<LassoWord> {
    fn words(k: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..k).map(move |a| {
                        let mut w2 = w.clone();
                        w2.push(a);
                        w2
                    })
                })
                .collect();
        }
        out
    }
    let mut out = Vec::new();
    for lu in 0..=max_u {
        for lv in 1..=max_v {
            for u in words(k, lu) {
                for v in words(k, lv) {
                    out.push(LassoWord { stem: u.clone(), cycle: v });
                }
            }
        }
    }
    out
}

pub fn lasso<R: Rng>(rng: &mut R, k: usize, max_u: usize, max_v: usize) -> LassoWord {
    let lu = rng.gen_range(0..=max_u);
    let lv = rng.gen_range(1..=max_v);
    LassoWord {
        stem: (0..lu).map(|_| rng.gen_range(0..k)).collect(),
        cycle: (0..lv).map(|_| rng.gen_range(0..k)).collect(),
    }
}

/// Random formula with exactly `size` operators over `k` letters.
pub fn formula<R: Rng>(rng: &mut R, k: usize, size: usize, allow_next: bool) -> LtlFormula {
    if size == 0 {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(rng.gen_range(0..k)),
        };
    }
    let unary: &[u8] = if allow_next { &[0, 1, 2, 3] } else { &[0, 2, 3] };
    let binary_ok = size >= 2;
    if !binary_ok || rng.gen_bool(0.45) {
        let sub = Box::new(formula(rng, k, size - 1, allow_next));
        return match unary.choose(rng).unwrap() {
            0 => Formula::Not(sub),
            1 => Formula::Next(sub),
            2 => Formula::Finally(sub),
            _ => Formula::Globally(sub),
        };
    }
    let left = rng.gen_range(0..size);
    let a = Box::new(formula(rng, k, left, allow_next));
    let b = Box::new(formula(rng, k, size - 1 - left, allow_next));
    match rng.gen_range(0..5) {
        0 => Formula::And(a, b),
        1 => Formula::Or(a, b),
        2 => Formula::Implies(a, b),
        3 => Formula::Until(a, b),
        _ => Formula::Release(a, b),
    }
}

/// Random immediate-observation protocol with `n` states and `m` distinct
/// non-idle transitions, completed to totality. At least one state is initial.
pub fn iopp<R: Rng>(rng: &mut R, n: usize, m: usize) -> Protocol {
    let names: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let mut candidates = Vec::new();
    for mover in 0..n {
        for observer in 0..n {
            for target in 0..n {
                if target != mover {
                    candidates.push((mover, observer, target));
                }
            }
        }
    }
    candidates.shuffle(rng);
    let mut transitions: Vec<Transition> = Vec::new();
    for &(mover, observer, target) in candidates.iter().take(m) {
        transitions.push(Transition {
            id: format!("t{}", transitions.len()),
            pre: (mover, observer),
            post: (target, observer),
        });
    }
    let mut initial: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    if initial.is_empty() {
        initial.push(0);
    }
    let states = names.into_iter().enumerate().map(|(index, name)| StateId { index, name }).collect();
    let opinion = Some((0..n).map(|_| rng.gen_range(0..2)).collect());
    Protocol::new(states, transitions, initial.into_iter().collect(), opinion)
        .complete_totality()
        .expect("generated ids never collide with idle ids")
}

/// Random total deterministic automaton with `states` states and a single
/// random pair with empty `fin`.
pub fn control_automaton<R: Rng>(rng: &mut R, alphabet: Vec<String>, states: usize) -> Dra {
    let delta = (0..states).map(|_| (0..alphabet.len()).map(|_| rng.gen_range(0..states)).collect()).collect();
    let pairs = vec![RabinPair { fin: vec![false; states], inf: (0..states).map(|_| rng.gen_bool(0.5)).collect() }];
    Dra { alphabet, initial: 0, delta, pairs }
}
