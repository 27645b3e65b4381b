use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use starsynth::ctl2ltl::{bounded_reduce, reduce, synth_via_ltl};
use starsynth::guarded::{guarded_cutoff, Fairness, GuardKind, GuardedQuery, Target};
use starsynth::modelcheck::{mc_ctl, mc_ltl, Verdict};
use starsynth::rings::{self, cutoff_for, parse_indexed, parse_ring_spec, RingOptions, Scheduler};
use starsynth::smt::SolverConfig;
use starsynth::synth::{synth_loop, Encoding, Outcome, SynthProblem};
use starsynth::{parse_spec, Machine, Specification};

const EXIT_OK: u8 = 0;
const EXIT_UNREALIZABLE: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_ERROR: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "starsynth", version, about = "Bounded synthesis for LTL and CTL* specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct SolverArgs {
    /// SMT solver binary (default: $STARSYNTH_SOLVER or z3)
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Per-query timeout in seconds
    #[arg(long, global = true)]
    timeout: Option<u64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(p) = &self.solver {
            c.path = p.clone();
        }
        c.timeout = self.timeout.map(Duration::from_secs);
        c
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Ltl,
    CtlDirect,
    CtlAht,
    CtlViaLtl,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Sync,
    Interleaving,
    Async,
}

impl From<SchedulerArg> for Scheduler {
    fn from(s: SchedulerArg) -> Scheduler {
        match s {
            SchedulerArg::Sync => Scheduler::Synchronous,
            SchedulerArg::Interleaving => Scheduler::Interleaving,
            SchedulerArg::Async => Scheduler::Asynchronous,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a machine; prints it in dot format
    Synth {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "ltl")]
        encoding: EncodingArg,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        /// Also search for a counter-strategy of the dual specification (LTL)
        #[arg(long)]
        dual_race: bool,
        /// Witness bound for ctl-via-ltl (default: the witness count)
        #[arg(long)]
        k: Option<usize>,
        /// Return the lexicographically least machine of the minimal size
        #[arg(long)]
        lex_min: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Model check a machine (dot file written by synth) against a specification
    Mc { machine: PathBuf, spec: PathBuf },
    /// Print the LTL specification obtained from a CTL* one
    Ctl2ltl {
        spec: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Synthesize a process template for a parameterized token ring
    RingSynth {
        spec: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long, value_enum, default_value = "interleaving")]
        scheduler: SchedulerArg,
        /// Treat 1-indexed conjuncts as rings of two instead of the single-process abstraction
        #[arg(long)]
        no_hub: bool,
        /// Ring sizes for re-verification
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        verify: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print a cutoff
    Cutoff {
        #[command(subcommand)]
        query: CutoffQuery,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GuardArg {
    Disjunctive,
    Conjunctive,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Property,
    Deadlock,
}

#[derive(Clone, Copy, ValueEnum)]
enum FairnessArg {
    None,
    Unconditional,
    Strong,
}

#[derive(Subcommand)]
enum CutoffQuery {
    /// Token rings: an indexed formula such as "forall i != j . G !(g_i & g_j)"
    Ring { formula: String },
    /// Guarded protocols
    Guarded {
        #[arg(long, value_enum)]
        guards: GuardArg,
        /// Number of states of template B
        #[arg(long)]
        size: usize,
        /// Indexed processes the property talks about
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "property")]
        target: TargetArg,
        #[arg(long, value_enum, default_value = "none")]
        fairness: FairnessArg,
        #[arg(long)]
        one_conjunctive: bool,
        #[arg(long)]
        initializing: bool,
    },
}

struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(EXIT_ERROR, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<Specification, Failure> {
    parse_spec(&read(path)?).map_err(|e| Failure(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure(EXIT_ERROR, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_verdict(v: &Verdict) -> u8 {
    match v {
        Verdict::Holds => {
            println!("holds");
            EXIT_OK
        }
        Verdict::Fails(cex) => {
            println!("fails");
            if let Some(c) = cex {
                println!("{c}");
            }
            EXIT_UNREALIZABLE
        }
    }
}

fn synth(
    spec: &Path,
    encoding: EncodingArg,
    max_size: usize,
    dual_race: bool,
    k: Option<usize>,
    lex_min: bool,
    out: Option<&Path>,
    solver: &SolverArgs,
) -> Result<u8, Failure> {
    let spec = load_spec(spec)?;
    let enc = match encoding {
        EncodingArg::Ltl | EncodingArg::CtlViaLtl => Encoding::Ltl,
        EncodingArg::CtlDirect => Encoding::CtlDirect,
        EncodingArg::CtlAht => Encoding::CtlAht,
    };
    let mut p = SynthProblem::new(spec, enc, max_size);
    p.solver = solver.config();
    p.dual_race = dual_race;
    p.lex_min = lex_min;
    let (report, machine) = if let EncodingArg::CtlViaLtl = encoding {
        let r = synth_via_ltl(&p, k)?;
        if r.bounded {
            eprintln!("note: k is below the witness count; unrealizability is only shown for the reduced specification");
        }
        (r.report, r.machine)
    } else {
        let r = synth_loop(&p)?;
        let m = match &r.outcome {
            Outcome::Realizable { machine, .. } => Some(machine.clone()),
            _ => None,
        };
        (r, m)
    };
    for a in &report.attempts {
        eprintln!(
            "{} size {}: {:?} ({:.2}s)",
            if a.dual { "dual" } else { "system" },
            a.size,
            a.verdict,
            a.elapsed.as_secs_f64()
        );
    }
    match (&report.outcome, machine) {
        (Outcome::Realizable { .. }, Some(m)) => {
            emit(&m.canonical().to_dot(), out)?;
            Ok(EXIT_OK)
        }
        (Outcome::Unrealizable { dual, size }, _) => {
            eprintln!("unrealizable: counter-strategy with {size} states");
            emit(&dual.canonical().to_dot(), out)?;
            Ok(EXIT_UNREALIZABLE)
        }
        _ => {
            eprintln!("no machine up to size {max_size}");
            Ok(EXIT_BOUND)
        }
    }
}

fn model_check(machine: &Path, spec: &Path) -> Result<u8, Failure> {
    let m = Machine::from_dot(&read(machine)?)?;
    let spec = load_spec(spec)?;
    let v = match spec.ltl_body() {
        Some(body) => mc_ltl(&m, body)?,
        None => mc_ctl(&m, &spec.formula)?,
    };
    Ok(print_verdict(&v))
}

fn ctl2ltl(spec: &Path, k: Option<usize>) -> Result<u8, Failure> {
    let spec = load_spec(spec)?;
    let r = match k {
        Some(k) => bounded_reduce(&spec, k),
        None => reduce(&spec)?,
    };
    eprintln!("k = {}", r.layout.k);
    print!("{}", r.spec);
    Ok(EXIT_OK)
}

fn ring_synth(
    spec: &Path,
    max_size: usize,
    scheduler: Scheduler,
    hub: bool,
    verify: Vec<usize>,
    out: Option<&Path>,
    solver: &SolverArgs,
) -> Result<u8, Failure> {
    let spec = parse_ring_spec(&read(spec)?)?;
    eprintln!("cutoff {}", spec.cutoff()?);
    let opts = RingOptions { max_size, hub, verify_sizes: verify, scheduler, solver: solver.config() };
    let r = rings::synth_ring(&spec, &opts)?;
    for (m, sat) in &r.attempts {
        eprintln!("template size {m}: {}", if *sat { "sat" } else { "unsat" });
    }
    for (n, ok) in &r.verified {
        eprintln!("ring of {n}: {}", if *ok { "verified" } else { "FAILED" });
    }
    match r.template {
        Some(t) => {
            emit(&t.machine.to_dot(), out)?;
            if r.verified.iter().all(|(_, ok)| *ok) {
                Ok(EXIT_OK)
            } else {
                Err(Failure(EXIT_ERROR, "template failed ring verification".into()))
            }
        }
        None => {
            eprintln!("no template up to size {max_size}");
            Ok(EXIT_BOUND)
        }
    }
}

fn cutoff(q: CutoffQuery) -> Result<u8, Failure> {
    match q {
        CutoffQuery::Ring { formula } => println!("{}", cutoff_for(&parse_indexed(&formula)?)?),
        CutoffQuery::Guarded { guards, size, k, target, fairness, one_conjunctive, initializing } => {
            let q = GuardedQuery {
                kind: match guards {
                    GuardArg::Disjunctive => GuardKind::Disjunctive,
                    GuardArg::Conjunctive => GuardKind::Conjunctive,
                },
                template_size: size,
                k,
                target: match target {
                    TargetArg::Property => Target::Property,
                    TargetArg::Deadlock => Target::Deadlock,
                },
                fairness: match fairness {
                    FairnessArg::None => Fairness::None,
                    FairnessArg::Unconditional => Fairness::Unconditional,
                    FairnessArg::Strong => Fairness::Strong,
                },
                one_conjunctive,
                initializing_runs: initializing,
            };
            println!("{}", guarded_cutoff(&q)?);
        }
    }
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Synth { spec, encoding, max_size, dual_race, k, lex_min, out, solver } => {
            synth(&spec, encoding, max_size, dual_race, k, lex_min, out.as_deref(), &solver)
        }
        Command::Mc { machine, spec } => model_check(&machine, &spec),
        Command::Ctl2ltl { spec, k } => ctl2ltl(&spec, k),
        Command::RingSynth { spec, max_size, scheduler, no_hub, verify, out, solver } => {
            ring_synth(&spec, max_size, scheduler.into(), !no_hub, verify, out.as_deref(), &solver)
        }
        Command::Cutoff { query } => cutoff(query),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
