//! Model checking monadic hyperproperties of population protocols.
//!
//! Every temporal block talks about one run, and all runs range over the
//! same fair runs of one initial configuration. For one run variable the
//! only thing that matters is which truth assignments to its blocks some
//! fair run can realise. Those achievable valuations are found with one
//! existential product check per assignment; the quantifier prefix then
//! becomes a finite game over them.

pub mod bounds;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::logic::{negate, Formula, HyperFormula, LtlFormula, Quantifier};
use crate::model::{enumerate_configs, Configuration, Protocol, MIN_POPULATION};
use crate::product::{config_successors, sat_exists, sat_forall, Limits, ProductSystem, Semantics};
use crate::rabin::{ltl_to_dra, Dra};
use crate::scc;

/// Truth values of one run variable's blocks, in block order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Valuation(pub Vec<bool>);

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("()");
        }
        for &b in &self.0 {
            f.write_str(if b { "T" } else { "F" })?;
        }
        Ok(())
    }
}

/// The conjunction that pins every block to its value under `nu`.
pub fn valuation_formula(blocks: &[LtlFormula], nu: &Valuation) -> LtlFormula {
    Formula::all(blocks.iter().zip(&nu.0).map(|(f, &b)| if b { f.clone() } else { negate(f) }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Every initial configuration satisfies the property.
    Forall,
    /// Some initial configuration satisfies it.
    Exists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Holds,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    UpToCutoff,
    Complete,
}

#[derive(Clone, Debug)]
pub struct AchievabilityRow {
    pub config: Configuration,
    pub var: String,
    pub achievable: Vec<Valuation>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub answer: Answer,
    pub scope: Scope,
    pub mode: CheckMode,
    pub semantics: Semantics,
    pub cutoff: u32,
    /// Least counterexample (forall) or witness (exists), when one exists.
    pub witness: Option<Configuration>,
    pub configs_checked: usize,
    pub vacuous: bool,
    pub elapsed: Duration,
    pub table: Vec<AchievabilityRow>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.answer == Answer::Holds
    }

    pub fn warning(&self) -> Option<String> {
        self.vacuous.then(|| {
            format!(
                "no initial configuration with at least {MIN_POPULATION} agents and at most {} per state; the verdict is vacuous",
                self.cutoff
            )
        })
    }

    pub fn to_json(&self, p: &Protocol) -> serde_json::Value {
        let table: Vec<serde_json::Value> = self
            .table
            .iter()
            .map(|r| {
                json!({
                    "config": p.config_map(&r.config),
                    "var": r.var,
                    "achievable": r.achievable.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "answer": self.answer,
            "mode": self.mode,
            "scope": self.scope,
            "semantics": match self.semantics { Semantics::Plain => "plain", Semantics::Accelerated => "accelerated" },
            "cutoff": self.cutoff,
            "witness": self.witness.as_ref().map(|w| p.config_map(w)),
            "configs_checked": self.configs_checked,
            "vacuous": self.vacuous,
            "warning": self.warning(),
            "valuations": table,
            "elapsed_ms": self.elapsed.as_secs_f64() * 1e3,
        })
    }

    pub fn to_text(&self, p: &Protocol) -> String {
        let mut out = format!(
            "{} ({}, {} initial configurations, cutoff {})\n",
            match self.answer {
                Answer::Holds => "holds",
                Answer::Violated => "violated",
            },
            match self.scope {
                Scope::UpToCutoff => "up to cutoff",
                Scope::Complete => "complete",
            },
            self.configs_checked,
            self.cutoff
        );
        if let Some(w) = &self.witness {
            let label = if self.mode == CheckMode::Forall { "counterexample" } else { "witness" };
            out += &format!("{label}: {}\n", p.config_display(w));
        }
        if let Some(w) = self.warning() {
            out += &format!("warning: {w}\n");
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub limits: Limits,
    /// Worker threads for independent initial configurations.
    pub jobs: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { limits: Limits::default(), jobs: 1 }
    }
}

type ValuationCache = HashMap<(Configuration, Vec<LtlFormula>), Vec<Valuation>>;

/// Decision procedure for one protocol, caching compiled automata and
/// achievable valuations. Safe to share between worker threads.
pub struct Checker {
    protocol: Arc<Protocol>,
    mode: Semantics,
    limits: Limits,
    dras: Mutex<HashMap<LtlFormula, Arc<Dra>>>,
    achievable: Mutex<ValuationCache>,
}

impl Checker {
    /// Accelerated semantics for immediate-observation protocols, plain otherwise.
    pub fn new(protocol: Arc<Protocol>, limits: Limits) -> Self {
        let mode = if protocol.is_iopp { Semantics::Accelerated } else { Semantics::Plain };
        Checker { protocol, mode, limits, dras: Mutex::default(), achievable: Mutex::default() }
    }

    pub fn with_semantics(protocol: Arc<Protocol>, mode: Semantics, limits: Limits) -> Result<Self> {
        if mode == Semantics::Accelerated && !protocol.is_iopp {
            return Err(Error::IoppRequired("accelerated semantics needs an immediate-observation protocol".into()));
        }
        Ok(Checker { mode, ..Checker::new(protocol, limits) })
    }

    pub fn semantics(&self) -> Semantics {
        self.mode
    }

    pub fn protocol(&self) -> &Arc<Protocol> {
        &self.protocol
    }

    /// Largest automaton compiled so far.
    pub fn max_dra_states(&self) -> usize {
        self.dras.lock().unwrap().values().map(|d| d.num_states()).max().unwrap_or(1)
    }

    pub fn dra(&self, f: &LtlFormula) -> Result<Arc<Dra>> {
        if let Some(d) = self.dras.lock().unwrap().get(f) {
            return Ok(d.clone());
        }
        // compiled outside the lock; a racing duplicate is harmless
        let d = Arc::new(ltl_to_dra(f, &self.protocol.alphabet(), self.limits.max_dra_states)?);
        self.dras.lock().unwrap().insert(f.clone(), d.clone());
        Ok(d)
    }

    fn system(&self, f: &LtlFormula) -> Result<ProductSystem> {
        if self.mode == Semantics::Accelerated && f.contains_next() {
            return Err(Error::NextOperator);
        }
        ProductSystem::new(self.protocol.clone(), self.dra(f)?, self.mode, !f.contains_next())
    }

    pub fn sat_exists(&self, g0: &Configuration, f: &LtlFormula) -> Result<bool> {
        sat_exists(&self.system(f)?, g0, self.limits.max_nodes)
    }

    pub fn sat_forall(&self, g0: &Configuration, f: &LtlFormula) -> Result<bool> {
        sat_forall(&self.system(f)?, g0, self.limits.max_nodes)
    }

    /// Valuations of `blocks` realised by some fair run from `g0`, sorted.
    pub fn achievable_valuations(&self, g0: &Configuration, blocks: &[LtlFormula]) -> Result<Vec<Valuation>> {
        if blocks.iter().any(Formula::contains_next) {
            return Err(Error::NextOperator);
        }
        let key = (g0.clone(), blocks.to_vec());
        if let Some(v) = self.achievable.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let k = blocks.len();
        if k >= usize::BITS as usize {
            return Err(Error::ResourceCap { what: "blocks per run variable", limit: usize::BITS as usize - 1 });
        }
        let mut out = Vec::new();
        for bits in 0..1usize << k {
            let nu = Valuation((0..k).map(|i| bits >> (k - 1 - i) & 1 == 1).collect());
            if self.sat_exists(g0, &valuation_formula(blocks, &nu))? {
                out.push(nu);
            }
        }
        out.sort();
        self.achievable.lock().unwrap().insert(key, out.clone());
        Ok(out)
    }

    /// Independent computation of [`Checker::achievable_valuations`]: one
    /// product with every block automaton at once, reading a valuation off
    /// each reachable bottom SCC.
    pub fn achievable_valuations_oracle(&self, g0: &Configuration, blocks: &[LtlFormula]) -> Result<Vec<Valuation>> {
        if self.mode == Semantics::Accelerated && blocks.iter().any(Formula::contains_next) {
            return Err(Error::NextOperator);
        }
        let dras: Vec<Arc<Dra>> = blocks.iter().map(|b| self.dra(b)).collect::<Result<_>>()?;
        type Node = (Configuration, Vec<usize>);
        let start: Node = (g0.clone(), dras.iter().map(|d| d.initial).collect());
        let mut nodes = vec![start.clone()];
        let mut index: HashMap<Node, usize> = HashMap::from([(start, 0)]);
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let (g, ls) = nodes[v].clone();
            let mut out = Vec::new();
            for (t, h) in config_successors(&self.protocol, self.mode, &g) {
                let next: Node = (h, ls.iter().zip(&dras).map(|(&l, d)| d.step(l, t)).collect());
                let w = match index.get(&next) {
                    Some(&w) => w,
                    None => {
                        if nodes.len() >= self.limits.max_nodes {
                            return Err(Error::ResourceCap { what: "joint product nodes", limit: self.limits.max_nodes });
                        }
                        index.insert(next.clone(), nodes.len());
                        nodes.push(next);
                        queue.push_back(nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                out.push(w);
            }
            if succ.len() <= v {
                succ.resize(v + 1, Vec::new());
            }
            succ[v] = out;
        }
        succ.resize(nodes.len(), Vec::new());
        let (comp, ncomp) = scc::tarjan(nodes.len(), &succ);
        let mut bottom = vec![true; ncomp];
        for v in 0..nodes.len() {
            if succ[v].iter().any(|&w| comp[w] != comp[v]) {
                bottom[comp[v]] = false;
            }
        }
        let mut found = BTreeSet::new();
        for c in (0..ncomp).filter(|&c| bottom[c]) {
            let members: Vec<usize> = (0..nodes.len()).filter(|&v| comp[v] == c).collect();
            let bits = dras
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let mut inf: Vec<usize> = members.iter().map(|&v| nodes[v].1[i]).collect();
                    inf.sort_unstable();
                    inf.dedup();
                    d.accepts_inf_set(&inf)
                })
                .collect();
            found.insert(Valuation(bits));
        }
        Ok(found.into_iter().collect())
    }

    fn var_blocks(psi: &HyperFormula, var: usize) -> Vec<LtlFormula> {
        psi.blocks_of(var).into_iter().map(|b| psi.blocks[b].formula.clone()).collect()
    }

    /// `g0` satisfies `psi`.
    pub fn check_config(&self, g0: &Configuration, psi: &HyperFormula) -> Result<bool> {
        Ok(self.check_config_table(g0, psi)?.0)
    }

    /// The verdict together with each variable's achievable valuations.
    pub fn check_config_table(&self, g0: &Configuration, psi: &HyperFormula) -> Result<(bool, Vec<Vec<Valuation>>)> {
        if psi.contains_next() {
            return Err(Error::NextOperator);
        }
        let per_var: Vec<Vec<Valuation>> = (0..psi.prefix.len())
            .map(|v| self.achievable_valuations(g0, &Self::var_blocks(psi, v)))
            .collect::<Result<_>>()?;
        let block_ids: Vec<Vec<usize>> = (0..psi.prefix.len()).map(|v| psi.blocks_of(v)).collect();
        let mut values = vec![false; psi.blocks.len()];
        let ok = game(psi, &per_var, &block_ids, 0, &mut values);
        Ok((ok, per_var))
    }
}

fn game(psi: &HyperFormula, per_var: &[Vec<Valuation>], ids: &[Vec<usize>], var: usize, values: &mut [bool]) -> bool {
    if var == psi.prefix.len() {
        return psi.matrix.eval(&|b| values[b]);
    }
    let mut try_one = |nu: &Valuation| {
        for (&b, &x) in ids[var].iter().zip(&nu.0) {
            values[b] = x;
        }
        game(psi, per_var, ids, var + 1, values)
    };
    match psi.prefix[var].0 {
        Quantifier::Exists => per_var[var].iter().any(&mut try_one),
        Quantifier::Forall => per_var[var].iter().all(&mut try_one),
    }
}

/// Initial configurations with at least two agents and at most `cutoff` per
/// state, least first.
pub fn initial_configs(p: &Protocol, cutoff: u32) -> Vec<Configuration> {
    let support = p.initial_support();
    let max = support.len() * cutoff as usize;
    let mut out: Vec<Configuration> = (MIN_POPULATION..=max)
        .flat_map(|n| enumerate_configs(n, &support, p.num_states()).expect("n is at least the minimum"))
        .filter(|g| g.counts.iter().all(|&c| c <= cutoff))
        .collect();
    out.sort_by(Configuration::witness_cmp);
    out
}

/// Runs `f` on every configuration, on up to `jobs` threads, keeping order.
fn eval_all<T: Send>(
    configs: &[Configuration],
    jobs: usize,
    f: impl Fn(&Configuration) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, configs.len().max(1));
    if jobs == 1 {
        return configs.iter().map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<Result<T>>> = (0..configs.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                s.spawn(move || {
                    (j..configs.len()).step_by(jobs).map(|i| (i, f(&configs[i]))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn scope_for(cutoff: u32, states: usize, controls: usize) -> Scope {
    // initial configurations are 1-blind
    if (cutoff.max(1) as f64).log10() >= bounds::log10_k(states, controls, 1) {
        Scope::Complete
    } else {
        Scope::UpToCutoff
    }
}

fn aggregate(
    configs: Vec<Configuration>,
    results: &[bool],
    mode: CheckMode,
) -> (Answer, Option<Configuration>) {
    // `configs` is sorted, so the first hit is the least one
    match mode {
        CheckMode::Forall => match results.iter().position(|&ok| !ok) {
            Some(i) => (Answer::Violated, Some(configs[i].clone())),
            None => (Answer::Holds, None),
        },
        CheckMode::Exists => match results.iter().position(|&ok| ok) {
            Some(i) => (Answer::Holds, Some(configs[i].clone())),
            None => (Answer::Violated, None),
        },
    }
}

/// Checks `psi` on every initial configuration up to `cutoff` agents per state.
pub fn check_protocol(
    p: Arc<Protocol>,
    psi: &HyperFormula,
    mode: CheckMode,
    cutoff: u32,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let start = Instant::now();
    if cutoff < 1 {
        return Err(Error::invalid("cutoff must be at least 1"));
    }
    if !p.is_iopp {
        return Err(Error::IoppRequired("hyperproperty checking is decided for immediate-observation protocols".into()));
    }
    if psi.contains_next() {
        return Err(Error::NextOperator);
    }
    let checker = Checker::new(p.clone(), opts.limits);
    let configs = initial_configs(&p, cutoff);
    let results = eval_all(&configs, opts.jobs, |g| checker.check_config_table(g, psi))?;
    let mut table = Vec::new();
    for (g, (_, per_var)) in configs.iter().zip(&results) {
        for (v, achievable) in per_var.iter().enumerate() {
            table.push(AchievabilityRow { config: g.clone(), var: psi.prefix[v].1.clone(), achievable: achievable.clone() });
        }
    }
    let oks: Vec<bool> = results.iter().map(|r| r.0).collect();
    let n = configs.len();
    let (answer, witness) = aggregate(configs, &oks, mode);
    Ok(Verdict {
        answer,
        scope: scope_for(cutoff, p.num_states(), checker.max_dra_states()),
        mode,
        semantics: checker.semantics(),
        cutoff,
        witness,
        configs_checked: n,
        vacuous: n == 0,
        elapsed: start.elapsed(),
        table,
    })
}

/// LTL version: forall asks every fair run of every initial configuration to
/// satisfy `phi`, exists asks for one configuration with one such run.
/// Protocols outside the immediate-observation class, and formulas with X,
/// are checked under plain semantics.
pub fn check_protocol_ltl(
    p: Arc<Protocol>,
    phi: &LtlFormula,
    mode: CheckMode,
    cutoff: u32,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let start = Instant::now();
    if cutoff < 1 {
        return Err(Error::invalid("cutoff must be at least 1"));
    }
    let semantics =
        if p.is_iopp && !phi.contains_next() { Semantics::Accelerated } else { Semantics::Plain };
    let checker = Checker::with_semantics(p.clone(), semantics, opts.limits)?;
    let configs = initial_configs(&p, cutoff);
    let oks = eval_all(&configs, opts.jobs, |g| match mode {
        CheckMode::Forall => checker.sat_forall(g, phi),
        CheckMode::Exists => checker.sat_exists(g, phi),
    })?;
    let n = configs.len();
    let (answer, witness) = aggregate(configs, &oks, mode);
    Ok(Verdict {
        answer,
        scope: scope_for(cutoff, p.num_states(), checker.max_dra_states()),
        mode,
        semantics,
        cutoff,
        witness,
        configs_checked: n,
        vacuous: n == 0,
        elapsed: start.elapsed(),
        table: Vec::new(),
    })
}
