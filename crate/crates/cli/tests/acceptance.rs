//! Acceptance run: one PASS/FAIL line per criterion. Tolerances and sizes are
//! the constants below.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use popverif::flows::{
    empirical_blindness, reachable_via_flows, saturate, tf_leq, tf_product_member_bruteforce, tf_product_min, Antichain,
    ExtNat, TransferFlow, DEFAULT_MAX_ROUNDS,
};
use popverif::hyper::{bounds, Checker};
use popverif::logic::{
    dualize_hyper, eval_on_lasso, negate, parse_ltl, wellspec_formula, Block, HyperFormula, LassoWord, LtlFormula, Matrix,
    Quantifier,
};
use popverif::model::{enumerate_configs, parse_protocol, Configuration, Protocol};
use popverif::product::{
    build_graph, full_slice_graph, sat_exists, sat_forall, winning_set_cwin, Limits, ProdConfig, ProductSystem, Semantics,
};
use popverif::rabin::{dra_accepts_lasso, ltl_to_dra, DEFAULT_DRA_CAP};
use popverif::random;
use popverif::sim::{fairness_demo, Simulator};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = 2_000_000;
const BUDGET: usize = 2_000_000;

const C1_FORMULAS: usize = 1000;
const C1_LASSOS: usize = 50;
const C1_TIME: Duration = Duration::from_secs(120);
const C2_TRIALS: u64 = 1000;
const C2_MAX_FRACTION: f64 = 0.01;
const CORPUS: usize = 12;
const C3_TIME: Duration = Duration::from_secs(300);
const C6_INSTANCES: usize = 10;
const C6_SAMPLES_AT_5: usize = 400;
const C6_TIME: Duration = Duration::from_secs(600);
const C7_TRIPLES: usize = 500;
const C8_INSTANCES: usize = 6;
const C8_MAX_K: usize = 4;
const C9_INSTANCES: usize = 24;
const C9_TRIALS: u64 = 200;
const C11_EXPECTED: f64 = 9975.413255315642;
const C11_TOL: f64 = 1.0;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: popverif::Error) -> String {
    err.to_string()
}

fn alphabet(k: usize) -> Vec<String> {
    (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

struct Instance {
    protocol: Arc<Protocol>,
    phi: LtlFormula,
    seed: u64,
}

impl Instance {
    fn system(&self, f: &LtlFormula, mode: Semantics) -> ProductSystem {
        ProductSystem::for_formula(self.protocol.clone(), f, mode, Limits::default()).unwrap()
    }
}

/// Random immediate-observation protocols with 2 to 4 states and random
/// X-free formulas of size at most 5.
fn corpus() -> Vec<Instance> {
    (0..CORPUS)
        .map(|i| {
            let seed = 1000 + i as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2 + i % 3;
            let m = rng.gen_range(1..=4);
            let protocol = Arc::new(random::iopp(&mut rng, n, m));
            let size = rng.gen_range(1..=5);
            let phi = random::formula(&mut rng, protocol.alphabet().len(), size, false);
            Instance { protocol, phi, seed }
        })
        .collect()
}

fn all_configs(p: &Protocol, sizes: std::ops::RangeInclusive<usize>) -> Vec<Configuration> {
    let q: Vec<usize> = (0..p.num_states()).collect();
    sizes.flat_map(|n| enumerate_configs(n, &q, q.len()).unwrap()).collect()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for _ in 0..C1_FORMULAS {
        let k = rng.gen_range(1..=3);
        let size = rng.gen_range(0..=6);
        let f = random::formula(&mut rng, k, size, true);
        let sigma = alphabet(k);
        let d = ltl_to_dra(&f, &sigma, DEFAULT_DRA_CAP).map_err(|x| format!("{x} for {}", f.display(&sigma)))?;
        for _ in 0..C1_LASSOS {
            let w = random::lasso(&mut rng, k, 6, 6);
            let got = dra_accepts_lasso(&d, &w).map_err(e)?;
            ensure(got == eval_on_lasso(&f, &w), || format!("{} on {:?}", f.display(&sigma), w))?;
            cases += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < C1_TIME, || format!("took {t:.1?}"))?;
    Ok(format!("{cases} formula/lasso pairs agree in {t:.1?}"))
}

fn c2() -> Outcome {
    let sigma = alphabet(4);
    let phi = parse_ltl("!F (a & X b & X X a & X X X b)", &sigma).map_err(e)?;
    let abab = LassoWord::new(vec![], vec![0, 1, 0, 1]).map_err(e)?;
    let abcd = LassoWord::new(vec![], vec![0, 1, 2, 3]).map_err(e)?;
    ensure(!eval_on_lasso(&phi, &abab), || "abab satisfies".into())?;
    ensure(eval_on_lasso(&phi, &abcd), || "abcd violates".into())?;
    let d = fairness_demo(C2_TRIALS, 2024, 100_000).map_err(e)?;
    ensure(!d.abab_satisfies && d.abcd_satisfies, || "demo lasso verdicts differ".into())?;
    ensure(d.undetermined == 0 && d.fraction <= C2_MAX_FRACTION, || format!("{d:?}"))?;
    Ok(format!("abab false, abcd true, sampled {}/{} satisfied", d.satisfied, d.trials))
}

fn c3(corpus: &[Instance]) -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for inst in corpus {
        let ps = inst.system(&inst.phi, Semantics::Accelerated);
        for n in 3..=5 {
            let g = full_slice_graph(&ps, n, CAP).map_err(e)?;
            let win = winning_set_cwin(&g, &ps.dra);
            for cfg in all_configs(&inst.protocol, n..=n) {
                let v = g.node(&ps.initial(&cfg)).expect("slice graph holds every configuration");
                let direct = sat_exists(&ps, &cfg, CAP).map_err(e)?;
                ensure(win[v] == direct, || format!("seed {} at {:?}", inst.seed, cfg))?;
                checked += 1;
            }
        }
    }
    let t = start.elapsed();
    ensure(t < C3_TIME, || format!("took {t:.1?}"))?;
    Ok(format!("{checked} configurations over {} protocols agree in {t:.1?}", corpus.len()))
}

/// A two-variable hyper formula with random blocks, prefix and matrix.
fn random_hyper(rng: &mut ChaCha8Rng, letters: usize) -> HyperFormula {
    let q = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Quantifier::Forall } else { Quantifier::Exists };
    let prefix = vec![(q(rng), "r1".to_string()), (q(rng), "r2".to_string())];
    let blocks: Vec<Block> = (0..3)
        .map(|i| {
            let var = if i == 2 { rng.gen_range(0..2) } else { i };
            let size = rng.gen_range(1..=3);
            Block { var, formula: random::formula(rng, letters, size, false) }
        })
        .collect();
    fn matrix(rng: &mut ChaCha8Rng, depth: usize) -> Matrix {
        if depth == 0 || rng.gen_bool(0.3) {
            return Matrix::Block(rng.gen_range(0..3));
        }
        let a = Box::new(matrix(rng, depth - 1));
        match rng.gen_range(0..3) {
            0 => Matrix::Not(a),
            1 => Matrix::And(a, Box::new(matrix(rng, depth - 1))),
            _ => Matrix::Or(a, Box::new(matrix(rng, depth - 1))),
        }
    }
    let m = matrix(rng, 3);
    HyperFormula::new(prefix, blocks, m).unwrap()
}

fn c4(corpus: &[Instance]) -> Outcome {
    let (mut ltl, mut hyper) = (0, 0);
    for inst in corpus {
        let ps = inst.system(&inst.phi, Semantics::Accelerated);
        let neg = inst.system(&negate(&inst.phi), Semantics::Accelerated);
        for cfg in all_configs(&inst.protocol, 2..=4) {
            let all = sat_forall(&ps, &cfg, CAP).map_err(e)?;
            let some_neg = sat_exists(&neg, &cfg, CAP).map_err(e)?;
            ensure(all != some_neg, || format!("LTL duality, seed {} at {:?}", inst.seed, cfg))?;
            ltl += 1;
        }
        let checker = Checker::new(inst.protocol.clone(), Limits::default());
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0xd0a1);
        for _ in 0..3 {
            let psi = random_hyper(&mut rng, inst.protocol.alphabet().len());
            let dual = dualize_hyper(&psi);
            for cfg in all_configs(&inst.protocol, 2..=3) {
                let a = checker.check_config(&cfg, &psi).map_err(e)?;
                let b = checker.check_config(&cfg, &dual).map_err(e)?;
                ensure(a != b, || format!("hyper duality, seed {} at {:?}", inst.seed, cfg))?;
                hyper += 1;
            }
        }
    }
    Ok(format!("{ltl} LTL and {hyper} hyper dual pairs agree"))
}

fn c5(corpus: &[Instance]) -> Outcome {
    let mut checked = 0;
    for inst in corpus {
        let plain = inst.system(&inst.phi, Semantics::Plain);
        let acc = inst.system(&inst.phi, Semantics::Accelerated);
        for cfg in all_configs(&inst.protocol, 2..=4) {
            for (name, f) in [("exists", sat_exists as fn(&_, &_, _) -> _), ("forall", sat_forall)] {
                let (a, b) = (f(&plain, &cfg, CAP).map_err(e)?, f(&acc, &cfg, CAP).map_err(e)?);
                ensure(a == b, || format!("sat_{name}, seed {} at {:?}", inst.seed, cfg))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} verdicts identical under both semantics"))
}

fn product_configs(ps: &ProductSystem, size: usize) -> Vec<ProdConfig> {
    let mut out = Vec::new();
    for g in all_configs(&ps.protocol, size..=size) {
        for l in 0..ps.dra.num_states() {
            out.push(ProdConfig { config: g.clone(), control: l });
        }
    }
    out
}

fn c6() -> Outcome {
    let start = Instant::now();
    let (mut pairs, mut max_rounds) = (0usize, 0usize);
    for i in 0..C6_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + i as u64);
        let n = 2 + i % 3;
        let m = rng.gen_range(1..=4);
        let p = Arc::new(random::iopp(&mut rng, n, m));
        let controls = 1 + i % 3;
        let dra = Arc::new(random::control_automaton(&mut rng, p.alphabet(), controls));
        let ps = ProductSystem::new(p, dra, Semantics::Accelerated, true).map_err(e)?;
        let sat = saturate(&ps, DEFAULT_MAX_ROUNDS).map_err(e)?;
        max_rounds = max_rounds.max(sat.rounds);
        ensure(sat.antichain.max_weight() <= 2 * sat.rounds as u64, || format!("instance {i}: weight bound"))?;
        for size in 2..=5 {
            let all = product_configs(&ps, size);
            let sources: Vec<&ProdConfig> = if size < 5 {
                all.iter().collect()
            } else {
                all.choose_multiple(&mut rng, C6_SAMPLES_AT_5.min(all.len()) / 4).collect()
            };
            for c in sources {
                let g = build_graph(&ps, std::slice::from_ref(c), CAP).map_err(e)?;
                let targets: Vec<&ProdConfig> =
                    if size < 5 { all.iter().collect() } else { all.choose_multiple(&mut rng, 4).collect() };
                for d in targets {
                    let via = reachable_via_flows(c, d, &sat.antichain).map_err(e)?;
                    ensure(via == g.node(d).is_some(), || format!("instance {i}: {c:?} -> {d:?}"))?;
                    pairs += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t < C6_TIME, || format!("took {t:.1?}"))?;
    Ok(format!("{pairs} pairs agree, at most {max_rounds} rounds, in {t:.1?}"))
}

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

fn shrink(tf: &TransferFlow, rng: &mut ChaCha8Rng) -> TransferFlow {
    let mut out = tf.clone();
    for v in out.f.iter_mut() {
        if let ExtNat::Num(x) = v {
            *x -= rng.gen_range(0..=*x);
        }
    }
    out
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

fn c7() -> Outcome {
    use ExtNat::{Num, Sharp as S};
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let member = |a: &TransferFlow, b: &TransferFlow, c: &TransferFlow| tf_product_member_bruteforce(a, b, c, BUDGET);
    for i in 0..C7_TRIPLES {
        let n = rng.gen_range(2..=3);
        let a = random_flow(&mut rng, n, 0, 1);
        let b = random_flow(&mut rng, n, 1, 2);
        let c = random_flow(&mut rng, n, 2, 3);
        let ab = tf_product_min(&a, &b);
        for m in &ab {
            ensure(m.weight() <= a.weight() + b.weight(), || format!("triple {i}: weight bound"))?;
            ensure(member(&a, &b, m).map_err(e)?, || format!("triple {i}: minimal element not a member"))?;
            ensure(member(&a, &b, &bump(m, &mut rng)).map_err(e)?, || format!("triple {i}: not upward closed"))?;
            let (a2, b2) = (shrink(&a, &mut rng), shrink(&b, &mut rng));
            ensure(tf_leq(&a2, &a) && member(&a2, &b2, m).map_err(e)?, || format!("triple {i}: contravariance"))?;
        }
        let (sa, sb, sc): (Antichain, Antichain, Antichain) =
            ([a].into_iter().collect(), [b].into_iter().collect(), [c].into_iter().collect());
        let left = product_set(&product_set(&sa, &sb), &sc);
        let right = product_set(&sa, &product_set(&sb, &sc));
        ensure(left.same_closure(&right), || format!("triple {i}: associativity"))?;
    }
    let f1 = TransferFlow::new(3, vec![Num(0), Num(2), S, S, Num(0), S, S, S, Num(0)], 0, 1);
    let f2 = TransferFlow::new(3, vec![Num(0), S, S, Num(0), Num(0), Num(3), S, S, Num(0)], 1, 2);
    let want = TransferFlow::new(3, vec![Num(1), Num(0), Num(1), Num(0), Num(0), Num(2), S, S, Num(0)], 0, 2);
    let mins = tf_product_min(&f1, &f2);
    ensure(mins.contains(&want), || format!("worked example missing from\n{}", mins.dump()))?;
    for k in 0..9 {
        if let Num(v @ 1..) = want.f[k] {
            let mut lower = want.clone();
            lower.f[k] = Num(v - 1);
            ensure(!member(&f1, &f2, &lower).map_err(e)?, || format!("worked example not minimal at cell {k}"))?;
        }
    }
    Ok(format!("{C7_TRIPLES} triples hold; worked example is minimal: {want}"))
}

/// `Sat(exists rho. phi)` over product configurations of sizes 2..=7.
fn sat_set(ps: &ProductSystem) -> Result<BTreeSet<ProdConfig>, String> {
    let mut out = BTreeSet::new();
    for n in 2..=7 {
        let g = full_slice_graph(ps, n, CAP).map_err(e)?;
        let win = winning_set_cwin(&g, &ps.dra);
        out.extend(g.nodes.iter().zip(&win).filter(|(_, &w)| w).map(|(c, _)| c.clone()));
    }
    Ok(out)
}

fn c8(corpus: &[Instance]) -> Outcome {
    let mut ks = Vec::new();
    for inst in corpus.iter().take(C8_INSTANCES) {
        let ps = inst.system(&inst.phi, Semantics::Accelerated);
        let (n, l) = (inst.protocol.num_states(), ps.dra.num_states());
        let sat = sat_set(&ps)?;
        let pred = |c: &ProdConfig| sat.contains(c);
        let k6 = empirical_blindness(pred, n, l, 2..=6, C8_MAX_K).map_err(e)?;
        let k5 = empirical_blindness(pred, n, l, 2..=5, C8_MAX_K).map_err(e)?;
        ensure(k6.is_some() && k5 == k6, || format!("seed {}: K over 2..5 {k5:?}, over 2..6 {k6:?}", inst.seed))?;
        ks.push(k6.unwrap());

        let init: BTreeSet<usize> = inst.protocol.initial_support().into_iter().collect();
        let in_i = |c: &ProdConfig| (0..n).all(|q| (c.config.get(q) > 0) == init.contains(&q));
        let ki = empirical_blindness(in_i, n, l, 2..=6, C8_MAX_K).map_err(e)?;
        ensure(ki == Some(1), || format!("seed {}: initial set measured {ki:?}", inst.seed))?;
        let in_l = |c: &ProdConfig| c.control.is_multiple_of(2);
        let kl = empirical_blindness(in_l, n, l, 2..=6, C8_MAX_K).map_err(e)?;
        ensure(kl == Some(0), || format!("seed {}: control set measured {kl:?}", inst.seed))?;
    }
    Ok(format!("Sat sets blind with K = {ks:?}; initial set 1-blind, control sets 0-blind"))
}

fn c9(corpus: &[Instance]) -> Outcome {
    let (mut ones, mut zeros, mut interior) = (0, 0, 0);
    for i in 0..C9_INSTANCES {
        let inst = &corpus[i % corpus.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + i as u64);
        let configs = all_configs(&inst.protocol, 2..=3);
        let g0 = configs.choose(&mut rng).unwrap();
        let ps = inst.system(&inst.phi, Semantics::Plain);
        let (all, some) = (sat_forall(&ps, g0, CAP).map_err(e)?, sat_exists(&ps, g0, CAP).map_err(e)?);
        let est = Simulator::new(&ps, g0, CAP).map_err(e)?.estimate_probability(C9_TRIALS, i as u64, 1_000_000, 1).map_err(e)?;
        let at = || format!("seed {} at {:?}: forall {all}, exists {some}, estimate {}", inst.seed, g0, est.fraction);
        ensure(est.undetermined == 0, at)?;
        if all {
            ensure(est.fraction == 1.0, at)?;
            ones += 1;
        } else if !some {
            ensure(est.fraction == 0.0, at)?;
            zeros += 1;
        } else {
            ensure(est.fraction > 0.0 && est.fraction < 1.0, at)?;
            interior += 1;
        }
    }
    Ok(format!("{C9_INSTANCES} instances: {ones} certain, {zeros} impossible, {interior} interior"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn c10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_popverif");
    let run = |file: &str| Command::new(bin).args(["wellspec", "--protocol", &data(file), "--cutoff", "3"]).output();
    let ok = run("conv.pp").map_err(|x| x.to_string())?;
    ensure(ok.status.code() == Some(0), || format!("convergence exit {:?}", ok.status.code()))?;
    let bad = run("rigged.pp").map_err(|x| x.to_string())?;
    ensure(bad.status.code() == Some(1), || format!("rigged exit {:?}", bad.status.code()))?;
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).map_err(|x| x.to_string())?;

    // least violating configuration by size, then by sorted agent word
    let p = Arc::new(
        parse_protocol(&std::fs::read_to_string(data("rigged.pp")).unwrap()).map_err(e)?.complete_totality().map_err(e)?,
    );
    let psi = wellspec_formula(&p).map_err(e)?;
    let checker = Checker::new(p.clone(), Limits::default());
    // initial states are N and Y
    let mut violations = Vec::new();
    for n in 0..=3 {
        for y in 0..=3 {
            let g = Configuration::new(vec![n, y, 0]);
            if g.size() >= 2 && !checker.check_config(&g, &psi).map_err(e)? {
                violations.push(g);
            }
        }
    }
    let least = violations.into_iter().min_by_key(|g| (g.size(), g.as_word())).ok_or("no violation found")?;
    let expected = serde_json::Value::Object(p.config_map(&least));
    ensure(v["witness"] == expected, || format!("witness {} but least violation {expected}", v["witness"]))?;
    Ok(format!("convergence exit 0; rigged exit 1 with witness {expected}"))
}

fn c11() -> Outcome {
    let got = bounds::theoretical_bounds(2, &[2], 1).map_err(e)?.rows[0].log10_b;
    ensure((got - C11_EXPECTED).abs() <= C11_TOL, || format!("log10 B = {got}"))?;
    for m in 1..6 {
        for c in 1..6 {
            let b = bounds::log10_b(m, c);
            ensure(bounds::log10_b(m + 1, c) > b && bounds::log10_b(m, c + 1) > b, || format!("not monotone at ({m},{c})"))?;
        }
    }
    Ok(format!("log10 B(2,2) = {got:.4} (log base {}), monotone in both sizes", bounds::LOG_BASE))
}

fn main() {
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        ("automaton translation agrees with lasso semantics", Box::new(c1)),
        ("fairness example", Box::new(c2)),
        ("winning set agrees with satisfiability", Box::new(|| c3(&corpus))),
        ("duality", Box::new(|| c4(&corpus))),
        ("accelerated and plain semantics agree", Box::new(|| c5(&corpus))),
        ("transfer flows agree with explicit reachability", Box::new(c6)),
        ("flow product algebra", Box::new(c7)),
        ("blindness stabilizes", Box::new(|| c8(&corpus))),
        ("sampled probabilities match verdicts", Box::new(|| c9(&corpus))),
        ("well-specification end to end", Box::new(c10)),
        ("bounds report", Box::new(c11)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{t:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{t:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
