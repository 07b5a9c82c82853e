//! Tableau translation from LTL to a Büchi automaton.
//!
//! A tableau state is a set of obligations (formulas in negation normal form
//! that must hold from here on) together with the set of until-formulas whose
//! fulfilment was postponed on the way in. Because every position carries
//! exactly one letter, expanding an obligation set under a given letter
//! decides every atom outright. The resulting generalized Büchi condition
//! (one set per until-formula) is then degeneralized with a counter.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::Nba;
use crate::logic::{Formula, LtlFormula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(usize, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
}

impl Arena {
    fn intern(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, i);
        i
    }

    /// Interns an NNF formula, rewriting F and G into U and R.
    fn add(&mut self, f: &LtlFormula) -> u32 {
        let n = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(a) => Node::Lit(*a, true),
            Formula::Not(x) => match **x {
                Formula::Atom(a) => Node::Lit(a, false),
                _ => unreachable!("input is in negation normal form"),
            },
            Formula::And(x, y) => Node::And(self.add(x), self.add(y)),
            Formula::Or(x, y) => Node::Or(self.add(x), self.add(y)),
            Formula::Next(x) => Node::Next(self.add(x)),
            Formula::Until(x, y) => Node::Until(self.add(x), self.add(y)),
            Formula::Release(x, y) => Node::Release(self.add(x), self.add(y)),
            Formula::Finally(x) => {
                let t = self.intern(Node::True);
                Node::Until(t, self.add(x))
            }
            Formula::Globally(x) => {
                let f = self.intern(Node::False);
                Node::Release(f, self.add(x))
            }
            Formula::Implies(..) => unreachable!("input is in negation normal form"),
        };
        self.intern(n)
    }
}

type Obligations = BTreeSet<u32>;

struct Branch {
    todo: Vec<u32>,
    done: BTreeSet<u32>,
    next: Obligations,
    postponed: BTreeSet<u32>,
}

/// Every way to discharge `now` at a position carrying `letter`, as pairs of
/// (obligations for the next position, untils postponed).
fn expand(arena: &Arena, now: &Obligations, letter: usize) -> BTreeSet<(Obligations, BTreeSet<u32>)> {
    let mut out = BTreeSet::new();
    let mut stack = vec![Branch {
        todo: now.iter().copied().collect(),
        done: BTreeSet::new(),
        next: BTreeSet::new(),
        postponed: BTreeSet::new(),
    }];
    'branches: while let Some(mut b) = stack.pop() {
        while let Some(f) = b.todo.pop() {
            if !b.done.insert(f) {
                continue;
            }
            match arena.nodes[f as usize] {
                Node::True => {}
                Node::False => continue 'branches,
                Node::Lit(a, pos) => {
                    if (a == letter) != pos {
                        continue 'branches;
                    }
                }
                Node::And(x, y) => b.todo.extend([x, y]),
                Node::Next(x) => {
                    b.next.insert(x);
                }
                Node::Or(x, y) => {
                    let mut alt = clone_branch(&b);
                    alt.todo.push(y);
                    stack.push(alt);
                    b.todo.push(x);
                }
                Node::Until(x, y) => {
                    let mut later = clone_branch(&b);
                    later.todo.push(x);
                    later.next.insert(f);
                    later.postponed.insert(f);
                    stack.push(later);
                    b.todo.push(y);
                }
                Node::Release(x, y) => {
                    let mut later = clone_branch(&b);
                    later.todo.push(y);
                    later.next.insert(f);
                    stack.push(later);
                    b.todo.extend([x, y]);
                }
            }
        }
        out.insert((b.next, b.postponed));
    }
    out
}

fn clone_branch(b: &Branch) -> Branch {
    Branch { todo: b.todo.clone(), done: b.done.clone(), next: b.next.clone(), postponed: b.postponed.clone() }
}

/// Translates `f` over an alphabet of `num_letters` mutually exclusive letters.
pub fn ltl_to_nba(f: &LtlFormula, num_letters: usize) -> Nba {
    let mut arena = Arena::default();
    let root = arena.add(&f.nnf());
    let untils: Vec<u32> = (0..arena.nodes.len() as u32)
        .filter(|&i| matches!(arena.nodes[i as usize], Node::Until(..)))
        .collect();

    // Generalized automaton: states are (obligations, postponed untils).
    type Key = (Obligations, BTreeSet<u32>);
    let mut keys: Vec<Key> = Vec::new();
    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut gdelta: Vec<Vec<Vec<usize>>> = Vec::new();
    let start_obligations = match arena.nodes[root as usize] {
        Node::True => BTreeSet::new(),
        _ => BTreeSet::from([root]),
    };
    let start: Key = (start_obligations, BTreeSet::new());
    ids.insert(start.clone(), 0);
    keys.push(start);
    let mut i = 0;
    while i < keys.len() {
        let mut row = Vec::with_capacity(num_letters);
        for a in 0..num_letters {
            let mut succ = Vec::new();
            for key in expand(&arena, &keys[i].0, a) {
                let id = *ids.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                succ.push(id);
            }
            succ.sort_unstable();
            succ.dedup();
            row.push(succ);
        }
        gdelta.push(row);
        i += 1;
    }

    // Acceptance set j holds the states that did not just postpone untils[j].
    let k = untils.len();
    let in_set = |q: usize, j: usize| !keys[q].1.contains(&untils[j]);
    let rounds = k.max(1);
    let mut nid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = vec![(0, 0)];
    nid.insert((0, 0), 0);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut delta: Vec<Vec<Vec<usize>>> = Vec::new();
    while let Some((q, j)) = queue.pop_front() {
        let j2 = if k == 0 || in_set(q, j) { (j + 1) % rounds } else { j };
        let mut row = Vec::with_capacity(num_letters);
        for a in 0..num_letters {
            let mut succ: Vec<usize> = gdelta[q][a]
                .iter()
                .map(|&q2| {
                    *nid.entry((q2, j2)).or_insert_with(|| {
                        order.push((q2, j2));
                        queue.push_back((q2, j2));
                        order.len() - 1
                    })
                })
                .collect();
            succ.sort_unstable();
            row.push(succ);
        }
        delta.push(row);
    }
    let accepting = order.iter().map(|&(q, j)| j == 0 && (k == 0 || in_set(q, 0))).collect();
    Nba { num_letters, initial: vec![0], accepting, delta }.trimmed()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_on_lasso, parse_ltl, LassoWord};

    fn sigma() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn agrees(text: &str) {
        let s = sigma();
        let f = parse_ltl(text, &s).unwrap();
        let nba = ltl_to_nba(&f, 2);
        for w in crate::random::all_lassos(2, 3, 3) {
            assert_eq!(nba.accepts_lasso(&w), eval_on_lasso(&f, &w), "{text} on {w:?}");
        }
    }

    #[test]
    fn small_formulas_match_oracle() {
        for f in ["G a", "F b", "true", "false", "a U b", "FG a", "GF b", "X (a U !a)", "(a U b) R (F a)", "!(G F a -> F b)"] {
            agrees(f);
        }
    }

    #[test]
    fn g_a_is_one_state() {
        let nba = ltl_to_nba(&parse_ltl("G a", &sigma()).unwrap(), 2);
        assert_eq!(nba.delta.len(), 1);
        assert!(nba.accepting[0]);
        assert_eq!(nba.delta[0], vec![vec![0], vec![]]);
        let t = ltl_to_nba(&parse_ltl("true", &sigma()).unwrap(), 2);
        assert_eq!(t.delta.len(), 1);
        let w = LassoWord::new(vec![], vec![1, 0]).unwrap();
        assert!(t.accepts_lasso(&w));
    }
}
