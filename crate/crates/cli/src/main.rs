use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use popverif::error::Error;
use popverif::flows::{saturate, DEFAULT_MAX_ROUNDS};
use popverif::hyper::{bounds, check_protocol, check_protocol_ltl, CheckMode, CheckOptions, Verdict};
use popverif::logic::{parse_hyper, parse_ltl, wellspec_formula, Formula};
use popverif::model::{parse_protocol, Configuration, Protocol};
use popverif::product::{build_graph, to_dot, Limits, ProductSystem, Semantics, DEFAULT_NODE_CAP};
use popverif::rabin::{ltl_to_dra, serialize_dra, DEFAULT_DRA_CAP};
use popverif::sim::{fairness_demo, Simulator};
use serde_json::json;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "popverif", version, about = "Verify LTL and HyperLTL properties of population protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a HyperLTL formula on all initial configurations up to a cutoff
    Check(CheckArgs),
    /// Check an LTL formula on all initial configurations up to a cutoff
    CheckLtl(CheckArgs),
    /// Check that every fair run reaches a stable consensus on the majority opinion
    Wellspec(WellspecArgs),
    /// Compile an LTL formula to a deterministic Rabin automaton in HOA format
    Translate(TranslateArgs),
    /// Saturate the minimal transfer flows of a protocol and an LTL formula
    Saturate(SaturateArgs),
    /// Estimate the satisfaction probability under a uniform random scheduler
    Simulate(SimulateArgs),
    /// Report the theoretical cutoff bounds
    Bounds(BoundsArgs),
    /// Print the reachable product graph of one configuration as DOT
    Graph(GraphArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Forall,
    Exists,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Plain,
    Accelerated,
}

#[derive(Args)]
struct Caps {
    /// Maximum number of product nodes explored per graph
    #[arg(long, default_value_t = DEFAULT_NODE_CAP, value_parser = positive)]
    max_nodes: usize,
    /// Maximum number of states of a compiled automaton
    #[arg(long, default_value_t = DEFAULT_DRA_CAP, value_parser = positive)]
    max_dra_states: usize,
}

impl Caps {
    fn limits(&self) -> Limits {
        Limits { max_nodes: self.max_nodes, max_dra_states: self.max_dra_states }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Protocol file
    #[arg(long)]
    protocol: PathBuf,
    /// Formula file, or the formula itself
    #[arg(long)]
    formula: String,
    /// Largest number of agents per state in an initial configuration
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    cutoff: u32,
    #[arg(long, value_enum, default_value = "forall")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads
    #[arg(long, default_value_t = 1, value_parser = positive)]
    jobs: usize,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args)]
struct WellspecArgs {
    #[arg(long)]
    protocol: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    cutoff: u32,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    jobs: usize,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    formula: String,
    /// Comma-separated letters
    #[arg(long, value_delimiter = ',', required = true)]
    alphabet: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_DRA_CAP, value_parser = positive)]
    max_dra_states: usize,
}

#[derive(Args)]
struct SaturateArgs {
    #[arg(long)]
    protocol: PathBuf,
    /// LTL formula whose automaton is the control; `true` when omitted
    #[arg(long)]
    formula: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS, value_parser = positive)]
    max_rounds: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, default_value_t = DEFAULT_DRA_CAP, value_parser = positive)]
    max_dra_states: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run the three-configuration fairness example instead of a protocol
    #[arg(long, conflicts_with_all = ["protocol", "formula", "config"])]
    demo: bool,
    #[arg(long, required_unless_present = "demo")]
    protocol: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    formula: Option<String>,
    /// Initial configuration such as `{N:1,Y:1}`
    #[arg(long, required_unless_present = "demo")]
    config: Option<String>,
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the per-trial log as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    jobs: usize,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args)]
struct BoundsArgs {
    /// Number of protocol states; taken from --protocol when omitted
    #[arg(long, required_unless_present = "protocol")]
    states: Option<usize>,
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Comma-separated automaton sizes
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    dra_sizes: Vec<usize>,
    /// Blindness of the initial set
    #[arg(long, default_value_t = 1)]
    k_prime: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    protocol: PathBuf,
    #[arg(long, default_value = "true")]
    formula: String,
    #[arg(long)]
    config: String,
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    #[command(flatten)]
    caps: Caps,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// A formula argument names a file when one exists at that path.
fn formula_text(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        Ok(read(path)?.trim().to_string())
    } else {
        Ok(arg.to_string())
    }
}

fn load_protocol(path: &Path) -> Result<Arc<Protocol>, Failure> {
    Ok(Arc::new(parse_protocol(&read(path)?)?.complete_totality()?))
}

fn semantics_for(p: &Protocol, arg: Option<SemanticsArg>, next: bool) -> Semantics {
    match arg {
        Some(SemanticsArg::Plain) => Semantics::Plain,
        Some(SemanticsArg::Accelerated) => Semantics::Accelerated,
        None if p.is_iopp && !next => Semantics::Accelerated,
        None => Semantics::Plain,
    }
}

fn parse_config(p: &Protocol, text: &str) -> Result<Configuration, Failure> {
    let g = p.parse_config(text)?;
    if g.size() < popverif::model::MIN_POPULATION {
        return Err(Failure::Usage(format!("configuration needs at least {} agents", popverif::model::MIN_POPULATION)));
    }
    Ok(g)
}

fn mode(m: ModeArg) -> CheckMode {
    match m {
        ModeArg::Forall => CheckMode::Forall,
        ModeArg::Exists => CheckMode::Exists,
    }
}

fn report(v: &Verdict, p: &Protocol, format: Format) -> Outcome {
    if let Some(w) = v.warning() {
        eprintln!("warning: {w}");
    }
    match format {
        Format::Text => print!("{}", v.to_text(p)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&v.to_json(p)).expect("json")),
        Format::Dot => return Err(Failure::Usage("verdicts have no DOT form".into())),
    }
    Ok(v.holds())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check(a) => {
            let p = load_protocol(&a.protocol)?;
            if !p.is_iopp {
                return Err(Error::IoppRequired("the protocol has a transition that is not immediate observation".into()).into());
            }
            let psi = parse_hyper(&formula_text(&a.formula)?, &p.alphabet())?;
            let opts = CheckOptions { limits: a.caps.limits(), jobs: a.jobs };
            let v = check_protocol(p.clone(), &psi, mode(a.mode), a.cutoff, &opts)?;
            report(&v, &p, a.format)
        }
        Command::CheckLtl(a) => {
            let p = load_protocol(&a.protocol)?;
            let phi = parse_ltl(&formula_text(&a.formula)?, &p.alphabet())?;
            let opts = CheckOptions { limits: a.caps.limits(), jobs: a.jobs };
            let v = check_protocol_ltl(p.clone(), &phi, mode(a.mode), a.cutoff, &opts)?;
            report(&v, &p, a.format)
        }
        Command::Wellspec(a) => {
            let p = load_protocol(&a.protocol)?;
            let psi = wellspec_formula(&p)?;
            let opts = CheckOptions { limits: a.caps.limits(), jobs: a.jobs };
            let v = check_protocol(p.clone(), &psi, CheckMode::Forall, a.cutoff, &opts)?;
            report(&v, &p, a.format)
        }
        Command::Translate(a) => {
            let phi = parse_ltl(&formula_text(&a.formula)?, &a.alphabet)?;
            print!("{}", serialize_dra(&ltl_to_dra(&phi, &a.alphabet, a.max_dra_states)?));
            Ok(true)
        }
        Command::Saturate(a) => {
            let p = load_protocol(&a.protocol)?;
            let sigma = p.alphabet();
            let phi = match &a.formula {
                Some(f) => parse_ltl(&formula_text(f)?, &sigma)?,
                None => Formula::True,
            };
            let limits = Limits { max_dra_states: a.max_dra_states, ..Limits::default() };
            let ps = ProductSystem::for_formula(p, &phi, Semantics::Accelerated, limits)?;
            let sat = saturate(&ps, a.max_rounds)?;
            match a.format {
                Format::Json => {
                    let flows: Vec<String> = sat.antichain.sorted().iter().map(|f| f.to_string()).collect();
                    let out = json!({
                        "rounds": sat.rounds,
                        "size": sat.antichain.len(),
                        "max_weight": sat.antichain.max_weight(),
                        "dra_states": ps.dra.num_states(),
                        "flows": flows,
                    });
                    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
                }
                Format::Text => {
                    print!("{}", sat.antichain.dump());
                    println!(
                        "# {} minimal flows, {} rounds, max weight {}",
                        sat.antichain.len(),
                        sat.rounds,
                        sat.antichain.max_weight()
                    );
                }
                Format::Dot => return Err(Failure::Usage("saturation has no DOT form".into())),
            }
            Ok(true)
        }
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => {
            let states = match (a.states, &a.protocol) {
                (Some(m), _) => m,
                (None, Some(path)) => load_protocol(path)?.num_states(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let r = bounds::theoretical_bounds(states, &a.dra_sizes, a.k_prime)?;
            match a.format {
                Format::Text => print!("{}", r.to_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&r).expect("json")),
                Format::Dot => return Err(Failure::Usage("bounds have no DOT form".into())),
            }
            Ok(true)
        }
        Command::Graph(a) => {
            let p = load_protocol(&a.protocol)?;
            let phi = parse_ltl(&formula_text(&a.formula)?, &p.alphabet())?;
            let g0 = parse_config(&p, &a.config)?;
            let sem = semantics_for(&p, a.semantics, phi.contains_next());
            let ps = ProductSystem::for_formula(p.clone(), &phi, sem, a.caps.limits())?;
            let g = build_graph(&ps, &[ps.initial(&g0)], a.caps.max_nodes)?;
            print!("{}", to_dot(&g, &p, &ps.dra));
            Ok(true)
        }
    }
}

fn simulate(a: SimulateArgs) -> Outcome {
    if a.demo {
        let d = fairness_demo(a.trials, a.seed, a.max_steps)?;
        match a.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(&d.to_json()).expect("json")),
            _ => println!(
                "{}\n(e, abab): {}\n(e, abcd): {}\nsampled: {}/{} satisfied, {} undetermined",
                d.formula, d.abab_satisfies, d.abcd_satisfies, d.satisfied, d.trials, d.undetermined
            ),
        }
        return Ok(true);
    }
    let p = load_protocol(a.protocol.as_deref().expect("required by clap"))?;
    let phi = parse_ltl(&formula_text(a.formula.as_deref().expect("required by clap"))?, &p.alphabet())?;
    let g0 = parse_config(&p, a.config.as_deref().expect("required by clap"))?;
    let sem = semantics_for(&p, a.semantics, phi.contains_next());
    let ps = ProductSystem::for_formula(p, &phi, sem, a.caps.limits())?;
    let est = Simulator::new(&ps, &g0, a.caps.max_nodes)?.estimate_probability(a.trials, a.seed, a.max_steps, a.jobs)?;
    if let Some(path) = &a.csv {
        std::fs::write(path, est.to_csv()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&est.to_json()).expect("json")),
        _ => println!(
            "estimate {:.4} ({} winning, {} losing, {} undetermined of {})",
            est.fraction, est.winning, est.losing, est.undetermined, est.trials
        ),
    }
    if est.undetermined > 0 {
        eprintln!("warning: {} runs hit --max-steps before a bottom SCC", est.undetermined);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_resource() { 3 } else { 2 })
        }
    }
}
