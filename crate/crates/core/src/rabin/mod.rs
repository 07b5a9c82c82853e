//! LTL to deterministic Rabin automata, and acceptance of lasso words.

mod hoa;
mod safra;
mod tableau;

use std::collections::HashMap;

pub use hoa::{parse_dra, serialize_dra};
pub use safra::nba_to_dra;
pub use tableau::ltl_to_nba;

use crate::error::{Error, Result};
use crate::logic::{LassoWord, LtlFormula};
use crate::scc;

/// Default cap on determinized automaton size.
pub const DEFAULT_DRA_CAP: usize = 20_000;

/// Nondeterministic Büchi automaton over letter indices `0..num_letters`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nba {
    pub num_letters: usize,
    pub initial: Vec<usize>,
    pub accepting: Vec<bool>,
    /// `delta[q][a]`: sorted successor list.
    pub delta: Vec<Vec<Vec<usize>>>,
}

impl Nba {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    fn flat_succ(&self) -> Vec<Vec<usize>> {
        self.delta
            .iter()
            .map(|row| {
                let mut s: Vec<usize> = row.iter().flatten().copied().collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect()
    }

    /// Drops states that are unreachable or cannot reach an accepting cycle.
    pub fn trimmed(self) -> Nba {
        let n = self.num_states();
        let succ = self.flat_succ();
        let (comp, ncomp) = scc::tarjan(n, &succ);
        let mut good_comp = vec![false; ncomp];
        for q in 0..n {
            let cyclic = succ[q].iter().any(|&r| comp[r] == comp[q]);
            if cyclic && self.accepting[q] {
                good_comp[comp[q]] = true;
            }
        }
        // A component is good if it has an accepting cycle or can reach one.
        let mut live = vec![false; n];
        let pred = scc::reverse(&succ);
        let seeds: Vec<usize> = (0..n).filter(|&q| good_comp[comp[q]]).collect();
        let back = scc::forward_closure(&pred, seeds);
        let fwd = scc::forward_closure(&succ, self.initial.iter().copied());
        for q in 0..n {
            live[q] = back[q] && fwd[q];
        }
        let mut map = vec![usize::MAX; n];
        let mut kept = Vec::new();
        for q in 0..n {
            if live[q] {
                map[q] = kept.len();
                kept.push(q);
            }
        }
        let remap = |v: &[usize]| -> Vec<usize> { v.iter().filter(|&&r| live[r]).map(|&r| map[r]).collect() };
        Nba {
            num_letters: self.num_letters,
            initial: remap(&self.initial),
            accepting: kept.iter().map(|&q| self.accepting[q]).collect(),
            delta: kept.iter().map(|&q| self.delta[q].iter().map(|s| remap(s)).collect()).collect(),
        }
    }

    /// Direct emptiness check of the product with the lasso.
    pub fn accepts_lasso(&self, w: &LassoWord) -> bool {
        let len = w.len();
        let n = self.num_states() * len;
        let id = |q: usize, i: usize| q * len + i;
        let mut succ = vec![Vec::new(); n];
        for q in 0..self.num_states() {
            for i in 0..len {
                let j = if i + 1 == len { w.stem.len() } else { i + 1 };
                succ[id(q, i)] = self.delta[q][w.letter(i)].iter().map(|&r| id(r, j)).collect();
            }
        }
        let reach = scc::forward_closure(&succ, self.initial.iter().map(|&q| id(q, 0)));
        let (comp, _) = scc::tarjan(n, &succ);
        (0..n).any(|v| {
            reach[v] && self.accepting[v / len] && succ[v].iter().any(|&u| comp[u] == comp[v])
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RabinPair {
    /// Must be visited only finitely often.
    pub fin: Vec<bool>,
    /// Must be visited infinitely often.
    pub inf: Vec<bool>,
}

/// Deterministic Rabin automaton with a total transition table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dra {
    pub alphabet: Vec<String>,
    pub initial: usize,
    /// `delta[state][letter]`
    pub delta: Vec<Vec<usize>>,
    pub pairs: Vec<RabinPair>,
}

impl Dra {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn step(&self, state: usize, letter: usize) -> usize {
        self.delta[state][letter]
    }

    /// Whether the set of states `inf` (visited infinitely often) is accepting.
    pub fn accepts_inf_set(&self, inf: &[usize]) -> bool {
        self.pairs
            .iter()
            .any(|p| inf.iter().all(|&s| !p.fin[s]) && inf.iter().any(|&s| p.inf[s]))
    }

    /// Single-state automaton accepting (`true`) or rejecting everything.
    pub fn constant(alphabet: Vec<String>, accept: bool) -> Dra {
        let delta = vec![vec![0; alphabet.len()]];
        let pairs = if accept { vec![RabinPair { fin: vec![false], inf: vec![true] }] } else { Vec::new() };
        Dra { alphabet, initial: 0, delta, pairs }
    }
}

/// Runs the stem, then whole loop blocks until a block starts in a state seen
/// at an earlier block start; the states visited since that earlier start are
/// exactly those visited infinitely often.
pub fn dra_accepts_lasso(d: &Dra, w: &LassoWord) -> Result<bool> {
    if let Some(&a) = w.stem.iter().chain(&w.cycle).find(|&&a| a >= d.num_letters()) {
        return Err(Error::invalid(format!("letter {a} is outside the automaton alphabet")));
    }
    let mut s = w.stem.iter().fold(d.initial, |s, &a| d.step(s, a));
    let mut entries: HashMap<usize, usize> = HashMap::new();
    let mut visited: Vec<Vec<usize>> = Vec::new();
    loop {
        if let Some(&first) = entries.get(&s) {
            let mut inf: Vec<usize> = visited[first..].iter().flatten().copied().collect();
            inf.sort_unstable();
            inf.dedup();
            return Ok(d.accepts_inf_set(&inf));
        }
        entries.insert(s, visited.len());
        let mut block = Vec::with_capacity(w.cycle.len());
        for &a in &w.cycle {
            block.push(s);
            s = d.step(s, a);
        }
        visited.push(block);
    }
}

/// Full pipeline: tableau, determinization, reachable part only.
pub fn ltl_to_dra(f: &LtlFormula, alphabet: &[String], cap: usize) -> Result<Dra> {
    let nba = ltl_to_nba(f, alphabet.len());
    nba_to_dra(&nba, alphabet.to_vec(), cap)
}
