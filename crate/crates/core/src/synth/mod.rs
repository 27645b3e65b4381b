//! Bounded synthesis: size-increasing SMT search with an optional dual-specification race.

pub mod encode;
pub mod system;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::aht::AhtError;
use crate::automaton::AutomatonError;
use crate::formula::Formula;
use crate::machine::Machine;
use crate::modelcheck::{mc_ctl, mc_ltl, McError};
use crate::smt::{solve_cancellable, CancelToken, SmtError, SolverConfig, SolverVerdict};
use crate::spec::Specification;

pub use encode::{
    encode_aht_for, encode_ctl_aht_for, encode_ctl_direct_for, encode_ltl_for, encode_ltl_tagged, encode_word,
    encode_word_mode,
};
pub use system::{ConcreteMachine, StartingAt, SymbolicMachine, SysEdge, SystemEncoding};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Aht(#[from] AhtError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    ModelCheck(#[from] McError),
    #[error("automaton mode does not match the requested property kind")]
    ModeMismatch,
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("synthesized machine failed re-verification: {0}")]
    GateFailed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// Universal co-Büchi automaton of an LTL body.
    Ltl,
    /// Bottom-up CTL* encoding.
    CtlDirect,
    /// CTL* via an alternating hesitant tree automaton.
    CtlAht,
}

#[derive(Clone, Debug)]
pub struct SynthProblem {
    pub spec: Specification,
    pub encoding: Encoding,
    /// Machine sizes to try, in order.
    pub sizes: Vec<usize>,
    pub solver: SolverConfig,
    /// Also search for a machine of the dual specification (LTL only).
    pub dual_race: bool,
    /// Replace the first model by the lexicographically least machine of the same size
    /// (successors, then outputs), making the result independent of the solver's choice.
    pub lex_min: bool,
}

impl SynthProblem {
    pub fn new(spec: Specification, encoding: Encoding, max_size: usize) -> SynthProblem {
        SynthProblem { spec, encoding, sizes: (1..=max_size).collect(), solver: SolverConfig::default(), dual_race: false, lex_min: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Realizable { machine: Machine, size: usize },
    /// A machine for the dual specification witnesses unrealizability.
    Unrealizable { dual: Machine, size: usize },
    BoundExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttemptVerdict {
    Sat,
    Unsat,
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub dual: bool,
    pub size: usize,
    pub verdict: AttemptVerdict,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthReport {
    pub outcome: Outcome,
    pub attempts: Vec<Attempt>,
}

impl SynthReport {
    /// Verdict recorded for a given side and size.
    pub fn verdict_at(&self, dual: bool, size: usize) -> Option<&AttemptVerdict> {
        self.attempts.iter().find(|a| a.dual == dual && a.size == size).map(|a| &a.verdict)
    }
}

/// Query asking for an `n`-state machine satisfying `spec` under `encoding`.
pub fn encode(spec: &Specification, encoding: Encoding, n: usize) -> Result<(crate::smt::Query, SymbolicMachine), SynthError> {
    let sys = SymbolicMachine { kind: spec.semantics, inputs: spec.inputs.clone(), outputs: spec.outputs.clone(), size: n };
    let q = match encoding {
        Encoding::Ltl => {
            let body = spec.ltl_body().ok_or_else(|| SynthError::Unsupported("LTL encoding needs an LTL specification".into()))?;
            encode_ltl_for(&sys, body)?
        }
        Encoding::CtlDirect => encode_ctl_direct_for(&sys, &spec.formula)?,
        Encoding::CtlAht => encode_ctl_aht_for(&sys, &spec.formula)?,
    };
    Ok((q, sys))
}

/// Independent model check of a machine against a specification.
pub fn verify(m: &Machine, spec: &Specification) -> Result<bool, SynthError> {
    Ok(match spec.ltl_body() {
        Some(body) => mc_ltl(m, body)?.holds(),
        None => mc_ctl(m, &spec.formula)?.holds(),
    })
}

/// Checks that `m` satisfies the formula by solving the encoding with `m` fixed.
pub fn verify_by_smt(m: &Machine, f: &Formula, encoding: Encoding, cfg: &SolverConfig) -> Result<SolverVerdict, SynthError> {
    let sys = ConcreteMachine(m);
    let q = match encoding {
        Encoding::Ltl => encode_ltl_for(&sys, f)?,
        Encoding::CtlDirect => encode_ctl_direct_for(&sys, f)?,
        Encoding::CtlAht => encode_ctl_aht_for(&sys, f)?,
    };
    Ok(crate::smt::solve(&q, cfg)?)
}

struct Side<'a> {
    spec: &'a Specification,
    encoding: Encoding,
    dual: bool,
    lex_min: bool,
}

/// Greedy lexicographic minimization: each entry is fixed to the least value that keeps `q` satisfiable.
fn lex_minimize(
    q: &crate::smt::Query,
    sys: &SymbolicMachine,
    mut m: Machine,
    cfg: &SolverConfig,
    cancel: &CancelToken,
) -> Result<Option<Machine>, SynthError> {
    let mut q = q.clone();
    let try_pin = |q: &mut crate::smt::Query, pin: crate::smt::Term, m: &mut Machine| -> Result<Option<bool>, SynthError> {
        let mut probe = q.clone();
        probe.asserts.push(pin.clone());
        match solve_cancellable(&probe, cfg, cancel)? {
            SolverVerdict::Sat(model) => {
                *m = sys.extract(&model);
                *q = probe;
                Ok(Some(true))
            }
            SolverVerdict::Unknown(r) if r == "cancelled" => Ok(None),
            _ => Ok(Some(false)),
        }
    };
    for t in 0..m.trans.len() {
        for d in 0..m.trans[t].len() {
            for v in 0..m.trans[t][d] {
                match try_pin(&mut q, sys.pin_succ(t, d as u64, v), &mut m)? {
                    None => return Ok(None),
                    Some(true) => break,
                    Some(false) => {}
                }
            }
            q.asserts.push(sys.pin_succ(t, d as u64, m.trans[t][d]));
        }
    }
    for t in 0..m.out.len() {
        for d in 0..m.out[t].len() {
            for o in 0..sys.outputs.len() {
                if m.out[t][d] >> o & 1 == 1 && try_pin(&mut q, sys.pin_out(o, t, d as u64, false), &mut m)?.is_none() {
                    return Ok(None);
                }
                let v = m.out[t][d] >> o & 1 == 1;
                q.asserts.push(sys.pin_out(o, t, d as u64, v));
            }
        }
    }
    Ok(Some(m))
}

type Found = (bool, Machine, usize);

fn run_side(
    side: &Side<'_>,
    sizes: &[usize],
    cfg: &SolverConfig,
    cancel: &CancelToken,
    log: &Mutex<Vec<Attempt>>,
) -> Result<Option<Found>, SynthError> {
    for &n in sizes {
        if cancel.is_cancelled() {
            return Ok(None);
        }
        let start = Instant::now();
        let (q, sys) = encode(side.spec, side.encoding, n)?;
        let v = solve_cancellable(&q, cfg, cancel)?;
        let verdict = match &v {
            SolverVerdict::Sat(_) => AttemptVerdict::Sat,
            SolverVerdict::Unsat => AttemptVerdict::Unsat,
            SolverVerdict::Unknown(r) => AttemptVerdict::Unknown(r.clone()),
        };
        if verdict == AttemptVerdict::Unknown("cancelled".into()) {
            return Ok(None);
        }
        log.lock().unwrap().push(Attempt { dual: side.dual, size: n, verdict, elapsed: start.elapsed() });
        if let SolverVerdict::Sat(model) = v {
            let mut m = sys.extract(&model);
            if side.lex_min {
                match lex_minimize(&q, &sys, m, cfg, cancel)? {
                    Some(better) => m = better,
                    None => return Ok(None),
                }
            }
            let m = m.canonical();
            if !verify(&m, side.spec)? {
                return Err(SynthError::GateFailed(format!(
                    "{} machine of size {n} violates its specification",
                    if side.dual { "dual" } else { "primal" }
                )));
            }
            return Ok(Some((side.dual, m, n)));
        }
    }
    Ok(None)
}

/// Size-increasing search; with `dual_race` the dual LTL problem runs on a second solver.
pub fn synth_loop(p: &SynthProblem) -> Result<SynthReport, SynthError> {
    let log = Mutex::new(Vec::new());
    let cancel = CancelToken::new();
    let primal = Side { spec: &p.spec, encoding: p.encoding, dual: false, lex_min: p.lex_min };
    let dual_spec = if p.dual_race && p.encoding == Encoding::Ltl { p.spec.dual() } else { None };
    let found = match &dual_spec {
        None => run_side(&primal, &p.sizes, &p.solver, &cancel, &log)?,
        Some(ds) => {
            let dual = Side { spec: ds, encoding: Encoding::Ltl, dual: true, lex_min: p.lex_min };
            let winner: Mutex<Option<Result<Found, SynthError>>> = Mutex::new(None);
            std::thread::scope(|s| {
                for side in [&primal, &dual] {
                    let (cancel, log, winner, sizes, cfg) = (&cancel, &log, &winner, &p.sizes, &p.solver);
                    s.spawn(move || {
                        let r = run_side(side, sizes, cfg, cancel, log);
                        let decisive = !matches!(r, Ok(None));
                        if decisive {
                            let mut w = winner.lock().unwrap();
                            if w.is_none() {
                                *w = Some(r.map(|x| x.unwrap()));
                                cancel.cancel();
                            }
                        }
                    });
                }
            });
            winner.into_inner().unwrap().transpose()?
        }
    };
    let mut attempts = log.into_inner().unwrap();
    attempts.sort_by_key(|a| (a.dual, a.size));
    let outcome = match found {
        Some((false, machine, size)) => Outcome::Realizable { machine, size },
        Some((true, dual, size)) => Outcome::Unrealizable { dual, size },
        None => Outcome::BoundExhausted,
    };
    Ok(SynthReport { outcome, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_spec;

    fn solver_available() -> bool {
        std::process::Command::new(SolverConfig::default().path).arg("-version").output().is_ok()
    }

    fn spec(text: &str) -> Specification {
        parse_spec(text).unwrap()
    }

    #[test]
    fn simple_arbiter_needs_two_states() {
        if !solver_available() {
            return;
        }
        let s = spec("inputs r; outputs g; moore; formula G (r -> F g) && !g;");
        let r = synth_loop(&SynthProblem::new(s.clone(), Encoding::Ltl, 3)).unwrap();
        match r.outcome {
            Outcome::Realizable { machine, size } => {
                assert_eq!(size, 2);
                assert!(verify(&machine, &s).unwrap());
                let dot = machine.to_dot();
                assert_eq!(dot.lines().filter(|l| l.contains("[label=\"t") && !l.contains("->")).count(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contradiction_is_unrealizable_by_dual() {
        if !solver_available() {
            return;
        }
        let s = spec("inputs r; outputs g; moore; formula G !g && F g;");
        let mut p = SynthProblem::new(s, Encoding::Ltl, 3);
        p.dual_race = true;
        let r = synth_loop(&p).unwrap();
        assert!(matches!(r.outcome, Outcome::Unrealizable { size: 1, .. }), "{r:?}");
        assert!((1..=3).all(|n| r.verdict_at(false, n) != Some(&AttemptVerdict::Sat)));
    }

    #[test]
    fn ctl_encodings_on_resettable_arbiter() {
        if !solver_available() {
            return;
        }
        let s = spec("inputs r; outputs g; moore; formula E G !g && A G (r -> F g) && A G E F !g;");
        for enc in [Encoding::CtlDirect, Encoding::CtlAht] {
            let r = synth_loop(&SynthProblem::new(s.clone(), enc, 3)).unwrap();
            assert_eq!(r.verdict_at(false, 1), Some(&AttemptVerdict::Unsat), "{enc:?}");
            match r.outcome {
                Outcome::Realizable { size: 2, machine } => assert!(verify(&machine, &s).unwrap()),
                other => panic!("{enc:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn lex_min_is_encoding_independent() {
        if !solver_available() {
            return;
        }
        let s = spec("inputs r; outputs g; moore; formula E G !g && A G (r -> F g) && A G E F !g;");
        let ms: Vec<Machine> = [Encoding::CtlDirect, Encoding::CtlAht]
            .into_iter()
            .map(|enc| {
                let mut p = SynthProblem::new(s.clone(), enc, 2);
                p.lex_min = true;
                match synth_loop(&p).unwrap().outcome {
                    Outcome::Realizable { machine, .. } => machine,
                    other => panic!("{other:?}"),
                }
            })
            .collect();
        assert_eq!(ms[0], ms[1]);
        assert_eq!(ms[0].trans, vec![vec![0, 1], vec![0, 0]]);
    }

    #[test]
    fn fixed_machine_verification_by_smt() {
        if !solver_available() {
            return;
        }
        let never = Machine {
            kind: crate::spec::Semantics::Moore,
            inputs: vec!["r".into()],
            outputs: vec!["g".into()],
            trans: vec![vec![0, 0]],
            out: vec![vec![0]],
        };
        let f = crate::parser::parse_formula("E G !g & A G (r -> F g) & A G E F !g").unwrap().to_pnf();
        let cfg = SolverConfig::default();
        assert!(verify_by_smt(&never, &f, Encoding::CtlAht, &cfg).unwrap().is_unsat());
        assert!(verify_by_smt(&never, &f, Encoding::CtlDirect, &cfg).unwrap().is_unsat());
        let ag = crate::parser::parse_formula("A G g").unwrap().to_pnf();
        let on = Machine { out: vec![vec![1]], ..never.clone() };
        assert!(verify_by_smt(&on, &ag, Encoding::CtlDirect, &cfg).unwrap().is_sat());
        assert!(verify_by_smt(&on, &ag, Encoding::CtlAht, &cfg).unwrap().is_sat());
    }
}
