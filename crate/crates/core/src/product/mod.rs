//! Explicit product of a protocol with a deterministic Rabin automaton at a
//! fixed population size.
//!
//! Fairness is never simulated: a strongly fair run ends up in a bottom SCC
//! of the product graph and visits all of it infinitely often, so it satisfies
//! the formula exactly when that SCC is winning.

mod dot;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

pub use dot::to_dot;

use crate::error::{Error, Result};
use crate::logic::LtlFormula;
use crate::model::{enumerate_configs, Configuration, Protocol, MIN_POPULATION};
use crate::rabin::{ltl_to_dra, Dra};
use crate::scc;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semantics {
    /// One transition firing per step.
    Plain,
    /// A step fires one immediate-observation transition `k >= 1` times in a
    /// row while the automaton reads it once.
    Accelerated,
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_nodes: usize,
    pub max_dra_states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: DEFAULT_NODE_CAP, max_dra_states: crate::rabin::DEFAULT_DRA_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProdConfig {
    pub config: Configuration,
    pub control: usize,
}

#[derive(Clone, Debug)]
pub struct ProductSystem {
    pub protocol: Arc<Protocol>,
    pub dra: Arc<Dra>,
    pub mode: Semantics,
}

impl ProductSystem {
    /// `next_free` states that the automaton's source formula has no X, which
    /// the accelerated semantics requires.
    pub fn new(protocol: Arc<Protocol>, dra: Arc<Dra>, mode: Semantics, next_free: bool) -> Result<Self> {
        if dra.alphabet != protocol.alphabet() {
            return Err(Error::invalid("automaton alphabet differs from the protocol's transition ids"));
        }
        if mode == Semantics::Accelerated {
            if !protocol.is_iopp {
                return Err(Error::IoppRequired("accelerated semantics needs an immediate-observation protocol".into()));
            }
            if !next_free {
                return Err(Error::NextOperator);
            }
        }
        Ok(ProductSystem { protocol, dra, mode })
    }

    /// Compiles `f` and pairs it with `protocol`.
    pub fn for_formula(protocol: Arc<Protocol>, f: &LtlFormula, mode: Semantics, limits: Limits) -> Result<Self> {
        if mode == Semantics::Accelerated && f.contains_next() {
            return Err(Error::NextOperator);
        }
        let dra = ltl_to_dra(f, &protocol.alphabet(), limits.max_dra_states)?;
        ProductSystem::new(protocol, Arc::new(dra), mode, !f.contains_next())
    }

    pub fn initial(&self, g: &Configuration) -> ProdConfig {
        ProdConfig { config: g.clone(), control: self.dra.initial }
    }

    /// Outgoing edges as (transition, successor).
    pub fn successors(&self, c: &ProdConfig) -> Vec<(usize, ProdConfig)> {
        config_successors(&self.protocol, self.mode, &c.config)
            .into_iter()
            .map(|(t, g)| (t, ProdConfig { config: g, control: self.dra.step(c.control, t) }))
            .collect()
    }
}

/// Protocol steps from `g` under `mode`, labelled by transition.
pub fn config_successors(p: &Protocol, mode: Semantics, g: &Configuration) -> Vec<(usize, Configuration)> {
    match mode {
        Semantics::Plain => p.successors(g),
        Semantics::Accelerated => (0..p.transitions.len())
            .filter(|&t| p.enabled(g, t))
            .flat_map(|t| {
                p.accelerated_successors(g, t)
                    .expect("accelerated semantics is only built for immediate-observation protocols")
                    .into_iter()
                    .map(move |(_, h)| (t, h))
            })
            .collect(),
    }
}

/// Reachable part of a product system with its SCC decomposition.
#[derive(Clone, Debug)]
pub struct ConfigGraph {
    pub nodes: Vec<ProdConfig>,
    pub index: HashMap<ProdConfig, usize>,
    /// Labelled edges `(transition, target)`.
    pub edges: Vec<Vec<(usize, usize)>>,
    pub succ: Vec<Vec<usize>>,
    pub comp: Vec<usize>,
    pub sccs: Vec<Vec<usize>>,
    pub bottom: Vec<bool>,
}

impl ConfigGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, c: &ProdConfig) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn bottom_sccs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sccs.len()).filter(|&s| self.bottom[s])
    }
}

/// Closure of `roots` under the product step relation.
pub fn build_graph(ps: &ProductSystem, roots: &[ProdConfig], max_nodes: usize) -> Result<ConfigGraph> {
    let size = roots.first().map(|c| c.config.size());
    if roots.iter().any(|c| Some(c.config.size()) != size) {
        return Err(Error::invalid("graph roots must share one population size"));
    }
    if let Some(n) = size {
        if n < MIN_POPULATION {
            return Err(Error::invalid(format!("population {n} is below the minimum of {MIN_POPULATION}")));
        }
    }
    let mut nodes: Vec<ProdConfig> = Vec::new();
    let mut index: HashMap<ProdConfig, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for r in roots {
        if !index.contains_key(r) {
            index.insert(r.clone(), nodes.len());
            nodes.push(r.clone());
            queue.push_back(nodes.len() - 1);
        }
    }
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
    while let Some(v) = queue.pop_front() {
        let mut out = Vec::new();
        for (t, c) in ps.successors(&nodes[v]) {
            let w = match index.get(&c) {
                Some(&w) => w,
                None => {
                    if nodes.len() >= max_nodes {
                        return Err(Error::ResourceCap { what: "product graph nodes", limit: max_nodes });
                    }
                    index.insert(c.clone(), nodes.len());
                    nodes.push(c);
                    edges.push(Vec::new());
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            out.push((t, w));
        }
        out.sort_unstable();
        out.dedup();
        edges[v] = out;
    }
    let succ: Vec<Vec<usize>> = edges
        .iter()
        .map(|es| {
            let mut s: Vec<usize> = es.iter().map(|&(_, w)| w).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let (comp, ncomp) = scc::tarjan(nodes.len(), &succ);
    let mut sccs = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        sccs[c].push(v);
    }
    let bottom = (0..ncomp).map(|c| sccs[c].iter().all(|&v| succ[v].iter().all(|&w| comp[w] == c))).collect();
    Ok(ConfigGraph { nodes, index, edges, succ, comp, sccs, bottom })
}

/// Some pair misses `fin` entirely and meets `inf`.
pub fn scc_winning(scc: &[usize], g: &ConfigGraph, dra: &Dra) -> bool {
    let mut controls: Vec<usize> = scc.iter().map(|&v| g.nodes[v].control).collect();
    controls.sort_unstable();
    controls.dedup();
    dra.accepts_inf_set(&controls)
}

/// Some fair run from `g0` satisfies the automaton's formula.
pub fn sat_exists(ps: &ProductSystem, g0: &Configuration, max_nodes: usize) -> Result<bool> {
    let g = build_graph(ps, &[ps.initial(g0)], max_nodes)?;
    let ok = g.bottom_sccs().any(|s| scc_winning(&g.sccs[s], &g, &ps.dra));
    Ok(ok)
}

/// Every fair run from `g0` satisfies the automaton's formula.
pub fn sat_forall(ps: &ProductSystem, g0: &Configuration, max_nodes: usize) -> Result<bool> {
    let g = build_graph(ps, &[ps.initial(g0)], max_nodes)?;
    let ok = g.bottom_sccs().all(|s| scc_winning(&g.sccs[s], &g, &ps.dra));
    Ok(ok)
}

/// Nodes of `g` that can reach some node of `set`.
pub fn pre_star(set: &[bool], g: &ConfigGraph) -> Vec<bool> {
    let pred = scc::reverse(&g.succ);
    scc::forward_closure(&pred, (0..g.len()).filter(|&v| set[v]))
}

/// Nodes of `g` reachable from some node of `set`.
pub fn post_star(set: &[bool], g: &ConfigGraph) -> Vec<bool> {
    scc::forward_closure(&g.succ, (0..g.len()).filter(|&v| set[v]))
}

fn complement(set: &[bool]) -> Vec<bool> {
    set.iter().map(|b| !b).collect()
}

/// The winning set evaluated literally from reachability closures:
/// `pre*( U_(F,G) co(pre*(C[F])) & co(pre*(co(pre*(C[G])))) )`.
/// Complements are taken inside `g`, which should be a whole size slice.
pub fn winning_set_cwin(g: &ConfigGraph, dra: &Dra) -> Vec<bool> {
    let mut union = vec![false; g.len()];
    for pair in &dra.pairs {
        let in_fin: Vec<bool> = g.nodes.iter().map(|c| pair.fin[c.control]).collect();
        let in_inf: Vec<bool> = g.nodes.iter().map(|c| pair.inf[c.control]).collect();
        let avoid_fin = complement(&pre_star(&in_fin, g));
        let always_reach_inf = complement(&pre_star(&complement(&pre_star(&in_inf, g)), g));
        for v in 0..g.len() {
            union[v] |= avoid_fin[v] && always_reach_inf[v];
        }
    }
    pre_star(&union, g)
}

/// Graph over every configuration of exactly `n` agents, paired with every
/// automaton state.
pub fn full_slice_graph(ps: &ProductSystem, n: usize, max_nodes: usize) -> Result<ConfigGraph> {
    let all: Vec<usize> = (0..ps.protocol.num_states()).collect();
    let mut roots = Vec::new();
    for g in enumerate_configs(n, &all, ps.protocol.num_states())? {
        for l in 0..ps.dra.num_states() {
            roots.push(ProdConfig { config: g.clone(), control: l });
        }
    }
    if roots.len() > max_nodes {
        return Err(Error::ResourceCap { what: "product graph nodes", limit: max_nodes });
    }
    build_graph(ps, &roots, max_nodes)
}
