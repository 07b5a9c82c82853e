//! Transfer flows: an unbounded-population abstraction of finite runs of a
//! product system built on an immediate-observation protocol.
//!
//! A flow `(f, l, l')` says "at least `f(q,q')` agents travel from `q` to
//! `q'`" while the automaton moves from `l` to `l'`; `#` forbids the move.
//! Smaller flows allow more, so upward-closed sets of flows are represented by
//! antichains of their minimal elements.

mod product;
mod saturate;

use std::cmp::Ordering;
use std::fmt;

pub use product::{tf_product_member_bruteforce, tf_product_min};
pub use saturate::{
    empirical_blindness, flow_step_feasible, reachable_via_flows, saturate, saturate_in_order, Saturation,
    DEFAULT_MAX_ROUNDS,
};

use crate::error::{Error, Result};
use crate::model::Protocol;
use crate::rabin::Dra;

/// A natural number or `#`, which is comparable only with itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Num(u32),
    Sharp,
}

impl ExtNat {
    pub fn num(self) -> Option<u32> {
        match self {
            ExtNat::Num(v) => Some(v),
            ExtNat::Sharp => None,
        }
    }

    pub fn is_sharp(self) -> bool {
        self == ExtNat::Sharp
    }

    fn sort_key(self) -> u64 {
        match self {
            ExtNat::Num(v) => v as u64,
            ExtNat::Sharp => u64::MAX,
        }
    }
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtNat::Num(a), ExtNat::Num(b)) => Some(a.cmp(b)),
            (ExtNat::Sharp, ExtNat::Sharp) => Some(Ordering::Equal),
            _ => None,
        }
    }
}

/// `# + x = x`.
impl std::ops::Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Num(a), ExtNat::Num(b)) => ExtNat::Num(a + b),
            (ExtNat::Sharp, x) | (x, ExtNat::Sharp) => x,
        }
    }
}

impl std::iter::Sum for ExtNat {
    fn sum<I: Iterator<Item = ExtNat>>(iter: I) -> ExtNat {
        iter.fold(ExtNat::Sharp, |a, b| a + b)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Num(v) => write!(f, "{v}"),
            ExtNat::Sharp => f.write_str("#"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransferFlow {
    /// Number of protocol states; `f` is row-major `n x n`.
    pub n: usize,
    pub f: Vec<ExtNat>,
    pub src: usize,
    pub dst: usize,
}

impl TransferFlow {
    pub fn new(n: usize, f: Vec<ExtNat>, src: usize, dst: usize) -> Self {
        assert_eq!(f.len(), n * n, "flow matrix must be n x n");
        TransferFlow { n, f, src, dst }
    }

    /// The neutral flow at control state `l`: zero on the diagonal, `#` off it.
    pub fn identity(n: usize, l: usize) -> Self {
        let f = (0..n * n).map(|i| if i / n == i % n { ExtNat::Num(0) } else { ExtNat::Sharp }).collect();
        TransferFlow { n, f, src: l, dst: l }
    }

    pub fn get(&self, q: usize, r: usize) -> ExtNat {
        self.f[q * self.n + r]
    }

    pub fn set(&mut self, q: usize, r: usize, v: ExtNat) {
        self.f[q * self.n + r] = v;
    }

    pub fn weight(&self) -> u64 {
        self.f.iter().filter_map(|v| v.num()).map(u64::from).sum()
    }

    fn sort_key(&self) -> (usize, usize, Vec<u64>) {
        (self.src, self.dst, self.f.iter().map(|v| v.sort_key()).collect())
    }
}

impl fmt::Display for TransferFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} [", self.src, self.dst)?;
        for q in 0..self.n {
            if q > 0 {
                f.write_str(";")?;
            }
            for r in 0..self.n {
                write!(f, " {}", self.get(q, r))?;
            }
        }
        f.write_str(" ]")
    }
}

/// `a` is at most `b`: equal control endpoints, equal `#` pattern, and
/// pointwise `<=` elsewhere.
pub fn tf_leq(a: &TransferFlow, b: &TransferFlow) -> bool {
    a.src == b.src && a.dst == b.dst && a.n == b.n && a.f.iter().zip(&b.f).all(|(x, y)| x <= y)
}

/// Finite set of pairwise incomparable flows, standing for its upward closure.
#[derive(Clone, Debug, Default)]
pub struct Antichain {
    elems: Vec<TransferFlow>,
}

impl Antichain {
    pub fn new() -> Self {
        Antichain::default()
    }

    /// Adds `tf` unless something already below it is present, and evicts
    /// everything above it. Returns whether it was added.
    pub fn insert(&mut self, tf: TransferFlow) -> bool {
        if self.covers(&tf) {
            return false;
        }
        self.elems.retain(|e| !tf_leq(&tf, e));
        self.elems.push(tf);
        true
    }

    /// `tf` lies in the upward closure.
    pub fn covers(&self, tf: &TransferFlow) -> bool {
        self.elems.iter().any(|e| tf_leq(e, tf))
    }

    pub fn contains(&self, tf: &TransferFlow) -> bool {
        self.elems.contains(tf)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TransferFlow> {
        self.elems.iter()
    }

    /// Elements in a fixed order, so equal antichains compare equal.
    pub fn sorted(&self) -> Vec<TransferFlow> {
        let mut v = self.elems.clone();
        v.sort_by_key(TransferFlow::sort_key);
        v
    }

    /// Same upward closure as `other`.
    pub fn same_closure(&self, other: &Antichain) -> bool {
        self.elems.iter().all(|e| other.covers(e)) && other.elems.iter().all(|e| self.covers(e))
    }

    pub fn max_weight(&self) -> u64 {
        self.elems.iter().map(TransferFlow::weight).max().unwrap_or(0)
    }

    /// One flow per line in a stable order, `#` for forbidden cells.
    pub fn dump(&self) -> String {
        self.sorted().iter().map(|tf| format!("{tf}\n")).collect()
    }
}

impl FromIterator<TransferFlow> for Antichain {
    fn from_iter<I: IntoIterator<Item = TransferFlow>>(iter: I) -> Self {
        let mut a = Antichain::new();
        for tf in iter {
            a.insert(tf);
        }
        a
    }
}

impl<'a> IntoIterator for &'a Antichain {
    type Item = &'a TransferFlow;
    type IntoIter = std::slice::Iter<'a, TransferFlow>;

    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

/// Minimal flows of one immediate-observation transition, one per automaton
/// state: the observer keeps at least one agent in place and at least one
/// mover goes to the target.
pub fn min_tr_of_transition(p: &Protocol, t: usize, dra: &Dra) -> Result<Antichain> {
    let tr = &p.transitions[t];
    let io = tr.iopp_form().ok_or_else(|| Error::IoppRequired(format!("transition {} is not immediate-observation", tr.id)))?;
    let n = p.num_states();
    let (obs, mover, target) = (io.observer, io.mover, io.target);
    let mut base = TransferFlow::identity(n, 0);
    if obs == mover && mover == target {
        base.set(obs, obs, ExtNat::Num(2));
    } else {
        base.set(obs, obs, ExtNat::Num(1));
        base.set(mover, target, ExtNat::Num(1));
    }
    Ok((0..dra.num_states())
        .map(|l| TransferFlow { src: l, dst: dra.step(l, t), ..base.clone() })
        .collect())
}
