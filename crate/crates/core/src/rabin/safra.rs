//! Safra's determinization of Büchi automata into Rabin automata.
//!
//! A Safra tree is an ordered tree of named nodes, each labelled with a set of
//! Büchi states; children are kept oldest first. For every node name `i` the
//! resulting automaton has a pair whose finite part is the trees lacking `i`
//! and whose infinite part is the trees where `i` is marked.
//!
//! The root label is the plain subset of reachable Büchi states. Once it holds
//! a state with universal language every continuation is accepted, so such
//! trees collapse into one accepting sink named 0.

use std::collections::{HashMap, VecDeque};

use super::{Dra, Nba, RabinPair};
use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::scc;

#[derive(Clone, Debug)]
struct Node {
    name: u16,
    label: BitSet,
    marked: bool,
    children: Vec<Node>,
}

/// Canonical, hashable preorder encoding: (name, label, marked, child count).
type Key = Vec<(u16, BitSet, bool, u16)>;

fn encode(root: &Option<Node>) -> Key {
    fn go(n: &Node, out: &mut Key) {
        out.push((n.name, n.label.clone(), n.marked, n.children.len() as u16));
        for c in &n.children {
            go(c, out);
        }
    }
    let mut out = Vec::new();
    if let Some(r) = root {
        go(r, &mut out);
    }
    out
}

fn top() -> Key {
    vec![(0, BitSet::new(0), true, 0)]
}

fn decode(key: &Key) -> Option<Node> {
    fn go(key: &Key, pos: &mut usize) -> Node {
        let (name, label, marked, nch) = key[*pos].clone();
        *pos += 1;
        let children = (0..nch).map(|_| go(key, pos)).collect();
        Node { name, label, marked, children }
    }
    (!key.is_empty()).then(|| go(key, &mut 0))
}

struct Ctx<'a> {
    nba: &'a Nba,
    accepting: BitSet,
    universal: BitSet,
    max_names: usize,
}

impl Ctx<'_> {
    fn post(&self, set: &BitSet, letter: usize) -> BitSet {
        let mut out = BitSet::new(self.nba.num_states());
        for q in set.iter() {
            for &r in &self.nba.delta[q][letter] {
                out.insert(r);
            }
        }
        out
    }

    fn successor(&self, tree: &Key, letter: usize) -> Key {
        if *tree == top() {
            return top();
        }
        let Some(mut root) = decode(tree) else {
            return Vec::new();
        };
        let mut used = vec![false; self.max_names + 1];
        mark_names(&root, &mut used);

        // 1-2: clear marks, spawn a child holding the accepting part of each label.
        spawn(&mut root, &self.accepting, &mut used);
        // 3: powerset step on every label.
        relabel(&mut root, &|s| self.post(s, letter));
        // 4: a state stays only in the oldest branch that holds it.
        let empty = BitSet::new(self.nba.num_states());
        horizontal(&mut root, &empty);
        // 5: drop empty nodes.
        if root.label.is_empty() {
            return Vec::new();
        }
        if root.label.intersects(&self.universal) {
            return top();
        }
        prune_empty(&mut root);
        // 6: collapse nodes whose children cover their whole label.
        vertical(&mut root, self.nba.num_states());
        encode(&Some(root))
    }
}

fn mark_names(n: &Node, used: &mut [bool]) {
    used[n.name as usize] = true;
    for c in &n.children {
        mark_names(c, used);
    }
}

fn spawn(n: &mut Node, acc: &BitSet, used: &mut [bool]) {
    n.marked = false;
    for c in &mut n.children {
        spawn(c, acc, used);
    }
    let mut part = n.label.clone();
    part.intersect_with(acc);
    if !part.is_empty() {
        let name = (1..used.len()).find(|&i| !used[i]).expect("Safra name pool exhausted");
        used[name] = true;
        n.children.push(Node { name: name as u16, label: part, marked: false, children: Vec::new() });
    }
}

fn relabel(n: &mut Node, post: &impl Fn(&BitSet) -> BitSet) {
    n.label = post(&n.label);
    for c in &mut n.children {
        relabel(c, post);
    }
}

fn horizontal(n: &mut Node, remove: &BitSet) {
    n.label.difference_with(remove);
    let mut claimed = remove.clone();
    for c in &mut n.children {
        horizontal(c, &claimed);
        claimed.union_with(&c.label);
    }
}

fn prune_empty(n: &mut Node) {
    n.children.retain(|c| !c.label.is_empty());
    for c in &mut n.children {
        prune_empty(c);
    }
}

fn vertical(n: &mut Node, universe: usize) {
    if !n.children.is_empty() {
        let mut covered = BitSet::new(universe);
        for c in &n.children {
            covered.union_with(&c.label);
        }
        if covered == n.label {
            n.children.clear();
            n.marked = true;
            return;
        }
    }
    for c in &mut n.children {
        vertical(c, universe);
    }
}

/// States from which every word has an accepting run: each letter has a
/// successor inside the set, and the set has no cycle avoiding accepting
/// states, so any path kept inside it is accepting. Sound, not complete.
fn universal_states(nba: &Nba) -> BitSet {
    let n = nba.num_states();
    let mut inside = vec![true; n];
    loop {
        let mut changed = false;
        for q in 0..n {
            if inside[q] && !nba.delta[q].iter().all(|succ| succ.iter().any(|&r| inside[r])) {
                inside[q] = false;
                changed = true;
            }
        }
        // drop non-accepting states on cycles that stay non-accepting
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|q| {
                let keep = |r: &usize| inside[*r] && !nba.accepting[*r];
                if keep(&q) { nba.delta[q].iter().flatten().copied().filter(keep).collect() } else { Vec::new() }
            })
            .collect();
        let (comp, _) = scc::tarjan(n, &succ);
        for q in 0..n {
            if inside[q] && !nba.accepting[q] && succ[q].iter().any(|&r| comp[r] == comp[q]) {
                inside[q] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = BitSet::new(n);
    for q in (0..n).filter(|&q| inside[q]) {
        out.insert(q);
    }
    out
}

/// Determinizes `nba`, exploring only reachable trees. Fails once more than
/// `cap` states have been created.
pub fn nba_to_dra(nba: &Nba, alphabet: Vec<String>, cap: usize) -> Result<Dra> {
    let n = nba.num_states();
    let mut accepting = BitSet::new(n);
    for q in 0..n {
        if nba.accepting[q] {
            accepting.insert(q);
        }
    }
    let universal = universal_states(nba);
    let ctx = Ctx { nba, accepting, universal, max_names: 2 * n.max(1) };

    let mut init = BitSet::new(n);
    for &q in &nba.initial {
        init.insert(q);
    }
    // Marks on the start tree matter for one step only, so mark it exactly
    // when a step would (all of it accepting). `true` then needs one state.
    let start: Key = if init.is_empty() {
        Vec::new()
    } else if init.intersects(&ctx.universal) {
        top()
    } else {
        let mut rest = init.clone();
        rest.difference_with(&ctx.accepting);
        encode(&Some(Node { name: 1, label: init, marked: rest.is_empty(), children: Vec::new() }))
    };

    let mut keys: Vec<Key> = vec![start.clone()];
    let mut ids: HashMap<Key, usize> = HashMap::from([(start, 0)]);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let mut row = Vec::with_capacity(nba.num_letters);
        for a in 0..nba.num_letters {
            let next = ctx.successor(&keys[s], a);
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    if keys.len() >= cap {
                        return Err(Error::ResourceCap { what: "deterministic automaton states", limit: cap });
                    }
                    let id = keys.len();
                    ids.insert(next.clone(), id);
                    keys.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        // BFS pops in id order, so rows line up with state ids.
        debug_assert_eq!(delta.len(), s);
        delta.push(row);
    }

    let mut pairs = Vec::new();
    for name in 0..=ctx.max_names as u16 {
        let fin: Vec<bool> = keys.iter().map(|k| !k.iter().any(|e| e.0 == name)).collect();
        let inf: Vec<bool> = keys.iter().map(|k| k.iter().any(|e| e.0 == name && e.2)).collect();
        if inf.iter().any(|&b| b) {
            pairs.push(RabinPair { fin, inf });
        }
    }
    Ok(Dra { alphabet, initial: 0, delta, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rabin::dra_accepts_lasso;

    #[test]
    fn deterministic_buchi_becomes_one_pair() {
        // G a over {a, b}
        let nba = Nba { num_letters: 2, initial: vec![0], accepting: vec![true], delta: vec![vec![vec![0], vec![]]] };
        let d = nba_to_dra(&nba, vec!["a".into(), "b".into()], 100).unwrap();
        assert_eq!(d.pairs.len(), 1);
        // states: marked root, empty sink
        assert_eq!(d.pairs[0].fin, vec![false, true]);
        assert_eq!(d.pairs[0].inf, vec![true, false]);
    }

    #[test]
    fn empty_language_rejects_everything() {
        let nba = Nba { num_letters: 2, initial: vec![], accepting: vec![], delta: vec![] };
        let d = nba_to_dra(&nba, vec!["a".into(), "b".into()], 100).unwrap();
        for w in crate::random::all_lassos(2, 3, 3) {
            assert!(!dra_accepts_lasso(&d, &w).unwrap());
        }
    }

    #[test]
    fn guessing_automaton_for_fg_a() {
        // q0 loops on everything and may guess into q1, which loops on a only.
        let nba = Nba {
            num_letters: 2,
            initial: vec![0],
            accepting: vec![false, true],
            delta: vec![vec![vec![0, 1], vec![0]], vec![vec![1], vec![]]],
        };
        assert!(nba.accepts_lasso(&crate::logic::LassoWord::new(vec![1], vec![0]).unwrap()));
        let d = nba_to_dra(&nba, vec!["a".into(), "b".into()], 100).unwrap();
        for w in crate::random::all_lassos(2, 6, 6) {
            let want = w.cycle.iter().all(|&a| a == 0);
            assert_eq!(dra_accepts_lasso(&d, &w).unwrap(), want, "{w:?}");
        }
    }

    #[test]
    fn universal_residue_collapses_to_a_sink() {
        // F b: wait in q0, then q1 accepts everything
        let nba = Nba {
            num_letters: 2,
            initial: vec![0],
            accepting: vec![false, true],
            delta: vec![vec![vec![0], vec![1]], vec![vec![1], vec![1]]],
        };
        assert_eq!(universal_states(&nba).iter().collect::<Vec<_>>(), vec![1]);
        let d = nba_to_dra(&nba, vec!["a".into(), "b".into()], 100).unwrap();
        assert_eq!(d.delta, vec![vec![0, 1], vec![1, 1]]);
        assert_eq!(d.pairs, vec![RabinPair { fin: vec![true, false], inf: vec![false, true] }]);
    }

    #[test]
    fn accepting_cycle_without_self_loops_is_universal() {
        // two accepting states alternating on every letter, plus a
        // non-accepting one that may stall forever
        let nba = Nba {
            num_letters: 1,
            initial: vec![0],
            accepting: vec![true, true, false],
            delta: vec![vec![vec![1]], vec![vec![0]], vec![vec![2]]],
        };
        assert_eq!(universal_states(&nba).iter().collect::<Vec<_>>(), vec![0, 1]);
    }
}
