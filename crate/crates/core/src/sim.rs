//! Random runs under a uniform memoryless scheduler.
//!
//! Such a scheduler reaches a bottom SCC of the product with probability one
//! and then visits all of it infinitely often, so a run can be stopped at its
//! first bottom SCC and classified by that SCC alone.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::logic::{eval_on_lasso, parse_ltl, LassoWord};
use crate::model::Configuration;
use crate::product::{build_graph, scc_winning, ConfigGraph, ProdConfig, ProductSystem};
use crate::rabin::{ltl_to_dra, DEFAULT_DRA_CAP};
use crate::scc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    WinningScc,
    LosingScc,
    Undetermined,
}

/// Labelled graph with each node's bottom-SCC status: `None` off the bottom,
/// otherwise whether that bottom SCC is winning.
struct Walk<'a> {
    edges: &'a [Vec<(usize, usize)>],
    status: Vec<Option<bool>>,
}

impl Walk<'_> {
    fn run(&self, start: usize, max_steps: usize, rng: &mut ChaCha8Rng) -> (Vec<(usize, usize)>, RunVerdict) {
        let mut path = Vec::new();
        let mut v = start;
        for _ in 0..max_steps {
            let out = &self.edges[v];
            if out.is_empty() {
                // a deadlock has no infinite continuation to classify
                break;
            }
            let (label, w) = out[rng.gen_range(0..out.len())];
            path.push((label, w));
            v = w;
            match self.status[v] {
                Some(true) => return (path, RunVerdict::WinningScc),
                Some(false) => return (path, RunVerdict::LosingScc),
                None => {}
            }
        }
        (path, RunVerdict::Undetermined)
    }
}

/// Per-trial generator: stream `trial` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRun {
    pub seed: u64,
    pub trial: u64,
    /// Fired transition and the product configuration it led to.
    pub steps: Vec<(usize, ProdConfig)>,
    pub verdict: RunVerdict,
}

/// Simulation of one product system from one initial configuration. The
/// reachable product graph is built once up front.
pub struct Simulator<'a> {
    ps: &'a ProductSystem,
    graph: ConfigGraph,
    status: Vec<Option<bool>>,
}

impl<'a> Simulator<'a> {
    pub fn new(ps: &'a ProductSystem, g0: &Configuration, max_nodes: usize) -> Result<Self> {
        let graph = build_graph(ps, &[ps.initial(g0)], max_nodes)?;
        let scc_status: Vec<Option<bool>> = (0..graph.sccs.len())
            .map(|s| graph.bottom[s].then(|| scc_winning(&graph.sccs[s], &graph, &ps.dra)))
            .collect();
        let status = graph.comp.iter().map(|&c| scc_status[c]).collect();
        Ok(Simulator { ps, graph, status })
    }

    pub fn graph(&self) -> &ConfigGraph {
        &self.graph
    }

    pub fn sample_run(&self, max_steps: usize, seed: u64, trial: u64) -> Result<SimRun> {
        if max_steps == 0 {
            return Err(Error::invalid("a run needs at least one step"));
        }
        let walk = Walk { edges: &self.graph.edges, status: self.status.clone() };
        let (path, verdict) = walk.run(0, max_steps, &mut trial_rng(seed, trial));
        let steps = path.into_iter().map(|(t, v)| (t, self.graph.nodes[v].clone())).collect();
        Ok(SimRun { seed, trial, steps, verdict })
    }

    /// Runs `trials` independent trials, spread over `jobs` threads.
    pub fn estimate_probability(&self, trials: u64, seed: u64, max_steps: usize, jobs: usize) -> Result<Estimate> {
        if trials == 0 {
            return Err(Error::invalid("at least one trial is needed"));
        }
        if max_steps == 0 {
            return Err(Error::invalid("a run needs at least one step"));
        }
        let jobs = (jobs.max(1) as u64).min(trials);
        let walk = Walk { edges: &self.graph.edges, status: self.status.clone() };
        let walk = &walk;
        let mut records: Vec<TrialRecord> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    s.spawn(move || {
                        (j..trials)
                            .step_by(jobs as usize)
                            .map(|trial| {
                                let (path, verdict) = walk.run(0, max_steps, &mut trial_rng(seed, trial));
                                TrialRecord { trial, steps: path.len(), verdict }
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        });
        records.sort_by_key(|r| r.trial);
        Ok(Estimate::from_records(seed, records))
    }

    pub fn system(&self) -> &ProductSystem {
        self.ps
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub steps: usize,
    pub verdict: RunVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub seed: u64,
    pub trials: u64,
    pub winning: u64,
    pub losing: u64,
    pub undetermined: u64,
    /// Winning share of the determined trials; zero when none was determined.
    pub fraction: f64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl Estimate {
    fn from_records(seed: u64, records: Vec<TrialRecord>) -> Self {
        let count = |v: RunVerdict| records.iter().filter(|r| r.verdict == v).count() as u64;
        let (winning, losing, undetermined) =
            (count(RunVerdict::WinningScc), count(RunVerdict::LosingScc), count(RunVerdict::Undetermined));
        let determined = winning + losing;
        let fraction = if determined == 0 { 0.0 } else { winning as f64 / determined as f64 };
        Estimate { seed, trials: records.len() as u64, winning, losing, undetermined, fraction, records }
    }

    /// `seed,trial,steps,verdict` per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,trial,steps,verdict\n");
        for r in &self.records {
            let verdict = match r.verdict {
                RunVerdict::WinningScc => "winning-scc",
                RunVerdict::LosingScc => "losing-scc",
                RunVerdict::Undetermined => "undetermined",
            };
            let _ = writeln!(out, "{},{},{},{}", self.seed, r.trial, r.steps, verdict);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FairnessDemo {
    pub formula: String,
    pub abab_satisfies: bool,
    pub abcd_satisfies: bool,
    pub trials: u64,
    pub satisfied: u64,
    pub undetermined: u64,
    pub fraction: f64,
}

/// Three abstract configurations: `g1 -a-> g2 -b-> g1` and `g1 -c-> g3 -d-> g1`.
/// The run repeating `abcd` is weakly fair and never shows `abab`, but a
/// strongly fair run (and so almost every random run) eventually does.
pub fn fairness_demo(trials: u64, seed: u64, max_steps: usize) -> Result<FairnessDemo> {
    let sigma: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let text = "!F (a & X b & X X a & X X X b)";
    let phi = parse_ltl(text, &sigma)?;
    let abab = LassoWord::new(vec![], vec![0, 1, 0, 1])?;
    let abcd = LassoWord::new(vec![], vec![0, 1, 2, 3])?;
    let dra = ltl_to_dra(&phi, &sigma, DEFAULT_DRA_CAP)?;

    let lts: [Vec<(usize, usize)>; 3] = [vec![(0, 1), (2, 2)], vec![(1, 0)], vec![(3, 0)]];
    let mut nodes = vec![(0usize, dra.initial)];
    let mut index = HashMap::from([(nodes[0], 0usize)]);
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let (s, l) = nodes[v];
        for &(a, s2) in &lts[s] {
            let key = (s2, dra.step(l, a));
            let w = *index.entry(key).or_insert_with(|| {
                nodes.push(key);
                edges.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            edges[v].push((a, w));
        }
    }
    let succ: Vec<Vec<usize>> = edges.iter().map(|es| es.iter().map(|&(_, w)| w).collect()).collect();
    let (comp, ncomp) = scc::tarjan(nodes.len(), &succ);
    let mut status = vec![None; nodes.len()];
    for c in 0..ncomp {
        let members: Vec<usize> = (0..nodes.len()).filter(|&v| comp[v] == c).collect();
        if members.iter().all(|&v| succ[v].iter().all(|&w| comp[w] == c)) {
            let mut inf: Vec<usize> = members.iter().map(|&v| nodes[v].1).collect();
            inf.sort_unstable();
            inf.dedup();
            let win = dra.accepts_inf_set(&inf);
            for &v in &members {
                status[v] = Some(win);
            }
        }
    }
    let walk = Walk { edges: &edges, status };
    let (mut satisfied, mut undetermined) = (0, 0);
    for trial in 0..trials {
        match walk.run(0, max_steps, &mut trial_rng(seed, trial)).1 {
            RunVerdict::WinningScc => satisfied += 1,
            RunVerdict::LosingScc => {}
            RunVerdict::Undetermined => undetermined += 1,
        }
    }
    Ok(FairnessDemo {
        formula: text.to_string(),
        abab_satisfies: eval_on_lasso(&phi, &abab),
        abcd_satisfies: eval_on_lasso(&phi, &abcd),
        trials,
        satisfied,
        undetermined,
        fraction: satisfied as f64 / trials.max(1) as f64,
    })
}

impl FairnessDemo {
    pub fn to_json(&self) -> serde_json::Value {
        json!(self)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{parse_protocol, Protocol};
    use crate::product::{sat_exists, sat_forall, Limits, Semantics};

    fn system(src: &str, f: &str) -> ProductSystem {
        let p = Arc::new(parse_protocol(src).unwrap().complete_totality().unwrap());
        let f = parse_ltl(f, &p.alphabet()).unwrap();
        ProductSystem::for_formula(p, &f, Semantics::Plain, Limits::default()).unwrap()
    }

    fn cfg(p: &Protocol, s: &str) -> Configuration {
        p.parse_config(s).unwrap()
    }

    const CONV: &str = "states N Y\ninitial N Y\ntrans n2y: N --Y--> Y";

    #[test]
    fn idle_only_stops_after_one_step() {
        let ps = system("states A; initial A", "true");
        let sim = Simulator::new(&ps, &cfg(&ps.protocol, "{A:2}"), 100).unwrap();
        let run = sim.sample_run(10, 1, 0).unwrap();
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.verdict, RunVerdict::WinningScc);
    }

    #[test]
    fn convergence_always_wins() {
        let ps = system(CONV, "F n2y");
        let sim = Simulator::new(&ps, &cfg(&ps.protocol, "{N:1,Y:1}"), 1000).unwrap();
        for seed in 0..20 {
            assert_eq!(sim.sample_run(1000, seed, 0).unwrap().verdict, RunVerdict::WinningScc);
        }
        let est = sim.estimate_probability(50, 7, 1000, 1).unwrap();
        assert_eq!((est.fraction, est.undetermined), (1.0, 0));
    }

    #[test]
    fn truncation_is_undetermined() {
        // the chain needs two real steps before it can settle
        let ps = system("states A B; initial A B; trans t: A --B--> B", "true");
        let sim = Simulator::new(&ps, &cfg(&ps.protocol, "{A:5,B:1}"), 1000).unwrap();
        assert_eq!(sim.sample_run(1, 3, 0).unwrap().verdict, RunVerdict::Undetermined);
        assert!(sim.sample_run(0, 3, 0).is_err());
    }

    #[test]
    fn seeds_are_reproducible() {
        let ps = system("states A B C; initial A; trans ab: A --A--> B; trans ac: A --A--> C", "F ac");
        let sim = Simulator::new(&ps, &cfg(&ps.protocol, "{A:4}"), 1000).unwrap();
        assert_eq!(sim.sample_run(100, 9, 3).unwrap(), sim.sample_run(100, 9, 3).unwrap());
        let one = sim.estimate_probability(64, 5, 100, 1).unwrap();
        let four = sim.estimate_probability(64, 5, 100, 4).unwrap();
        assert_eq!(one.to_csv(), four.to_csv());
    }

    #[test]
    fn mixed_instance_is_interior() {
        let ps = system("states A B C; initial A; trans ab: A --A--> B; trans ac: A --A--> C", "F ac");
        let g0 = cfg(&ps.protocol, "{A:2}");
        assert!(sat_exists(&ps, &g0, 1000).unwrap() && !sat_forall(&ps, &g0, 1000).unwrap());
        let est = Simulator::new(&ps, &g0, 1000).unwrap().estimate_probability(200, 11, 1000, 2).unwrap();
        assert!(est.fraction > 0.0 && est.fraction < 1.0, "{}", est.fraction);
        assert_eq!(est.undetermined, 0);
        assert!(est.to_csv().starts_with("seed,trial,steps,verdict\n11,0,"));
        assert_eq!(est.to_json()["trials"], 200);
    }

    #[test]
    fn fairness_demo_matches_example() {
        let d = fairness_demo(1000, 2024, 10_000).unwrap();
        assert!(!d.abab_satisfies);
        assert!(d.abcd_satisfies);
        assert_eq!(d.undetermined, 0);
        assert!(d.fraction <= 0.01);
    }
}
