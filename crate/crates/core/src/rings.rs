//! Parameterized token rings: indexed formulas, cutoffs, process templates,
//! ring composition and template synthesis through shared SMT symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::formula::Formula;
use crate::guard::Letter;
use crate::machine::Machine;
use crate::modelcheck::{mc_ltl, McError};
use crate::parser::{is_identifier, parse_formula};
use crate::smt::{solve, Query, SolverConfig, SolverVerdict, Term};
use crate::spec::Semantics;
use crate::synth::system::{bool_args, out_symbol, TAU};
use crate::synth::{encode_ltl_tagged, StartingAt, SymbolicMachine, SynthError, SysEdge, SystemEncoding};

pub const RCV: &str = "rcv";
pub const SND: &str = "snd";
pub const TOK: &str = "tok";
pub const SCH: &str = "sch";

/// Default bound on the number of global states of a composed ring.
pub const STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("ring has more than {0} global states")]
    StateExplosion(usize),
    #[error("invalid process template: {0}")]
    InvalidTemplate(String),
    #[error("token invariant violated: {0}")]
    TokenInvariant(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    ModelCheck(#[from] McError),
}

/// Side condition of a bound index variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexCond {
    None,
    /// Differs from an earlier variable.
    NotEq(String),
    /// Successor of an earlier variable on the ring.
    Succ(String),
}

/// Prenex universally indexed formula; atoms are written `name_var`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexedFormula {
    pub vars: Vec<(String, IndexCond)>,
    pub body: Formula,
}

impl fmt::Display for IndexedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .vars
            .iter()
            .map(|(v, c)| match c {
                IndexCond::None => v.clone(),
                IndexCond::NotEq(w) => format!("{v} != {w}"),
                IndexCond::Succ(w) => format!("{v} = {w} + 1"),
            })
            .collect();
        write!(f, "forall {} . {}", items.join(", "), self.body)
    }
}

/// Splits `g_i` into `("g", "i")`.
pub fn split_indexed(atom: &str) -> Option<(&str, &str)> {
    let (base, idx) = atom.rsplit_once('_')?;
    (!base.is_empty() && !idx.is_empty()).then_some((base, idx))
}

/// Parses `forall i != j . body`, `forall i, j = i + 1 . body` and chained `forall` prefixes.
pub fn parse_indexed(text: &str) -> Result<IndexedFormula, RingError> {
    let mut rest = text.trim();
    let mut vars: Vec<(String, IndexCond)> = Vec::new();
    let bound = |vars: &[(String, IndexCond)], v: &str| vars.iter().any(|(x, _)| x == v);
    while let Some(r) = rest.strip_prefix("forall") {
        let (prefix, after) =
            r.split_once('.').ok_or_else(|| RingError::Parse("missing '.' after index prefix".into()))?;
        for item in prefix.split(',') {
            let item = item.trim();
            let ident = |s: &str| -> Result<String, RingError> {
                let s = s.trim();
                if is_identifier(s) {
                    Ok(s.to_string())
                } else {
                    Err(RingError::Parse(format!("bad index variable '{s}'")))
                }
            };
            if let Some((a, b)) = item.split_once("!=") {
                let (a, b) = (ident(a)?, ident(b)?);
                // the fresh side of `a != b` is whichever is not bound yet
                let (old, new) = match (bound(&vars, &a), bound(&vars, &b)) {
                    (true, false) => (a, b),
                    (false, true) => (b, a),
                    (false, false) => {
                        vars.push((a.clone(), IndexCond::None));
                        (a, b)
                    }
                    (true, true) => return Err(RingError::Parse(format!("'{a} != {b}' binds nothing"))),
                };
                vars.push((new, IndexCond::NotEq(old)));
            } else if let Some((a, rhs)) = item.split_once('=') {
                let a = ident(a)?;
                let (b, one) = rhs
                    .split_once('+')
                    .ok_or_else(|| RingError::Parse(format!("expected 'v = w + 1' in '{item}'")))?;
                let b = ident(b)?;
                if one.trim() != "1" || !bound(&vars, &b) {
                    return Err(RingError::Parse(format!("expected 'v = w + 1' over a bound w in '{item}'")));
                }
                vars.push((a, IndexCond::Succ(b)));
            } else {
                let a = ident(item)?;
                if bound(&vars, &a) {
                    return Err(RingError::Parse(format!("index '{a}' bound twice")));
                }
                vars.push((a, IndexCond::None));
            }
        }
        rest = after.trim_start();
    }
    if vars.is_empty() {
        return Err(RingError::Parse("expected 'forall'".into()));
    }
    let body = parse_formula(rest).map_err(|e| RingError::Parse(e.to_string()))?.to_pnf();
    Ok(IndexedFormula { vars, body })
}

impl IndexedFormula {
    pub fn one(var: &str, body: Formula) -> IndexedFormula {
        IndexedFormula { vars: vec![(var.to_string(), IndexCond::None)], body }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    /// Every atom is indexed by a bound variable.
    pub fn check_sentence(&self) -> Result<(), RingError> {
        for a in self.body.atoms() {
            match split_indexed(&a) {
                Some((_, v)) if self.vars.iter().any(|(x, _)| x == v) => {}
                _ => return Err(RingError::UnsupportedShape(format!("atom '{a}' is not indexed by a bound variable"))),
            }
        }
        Ok(())
    }

    /// Index tuples over `1..=n` satisfying the side conditions.
    pub fn assignments(&self, n: usize) -> Vec<BTreeMap<String, usize>> {
        let mut out = vec![BTreeMap::new()];
        for (v, c) in &self.vars {
            let mut next = Vec::new();
            for a in &out {
                for k in 1..=n {
                    let ok = match c {
                        IndexCond::None => true,
                        IndexCond::NotEq(w) => a[w] != k,
                        IndexCond::Succ(w) => a[w] % n + 1 == k,
                    };
                    if ok {
                        let mut b = a.clone();
                        b.insert(v.clone(), k);
                        next.push(b);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Conjunction over all index tuples in a ring of `n` processes.
    pub fn instantiate(&self, n: usize) -> Formula {
        Formula::and(
            self.assignments(n)
                .iter()
                .map(|a| {
                    let map: BTreeMap<String, String> = self
                        .body
                        .atoms()
                        .into_iter()
                        .filter_map(|atom| {
                            let (base, v) = split_indexed(&atom)?;
                            Some((atom.clone(), format!("{base}_{}", a.get(v)?)))
                        })
                        .collect();
                    self.body.rename(&map)
                })
                .collect(),
        )
        .to_pnf()
    }

    /// Body of a 1-indexed formula with the index dropped, for a single process.
    pub fn local_body(&self) -> Result<Formula, RingError> {
        if self.vars.len() != 1 {
            return Err(RingError::UnsupportedShape("expected a 1-indexed formula".into()));
        }
        let map: BTreeMap<String, String> = self
            .body
            .atoms()
            .into_iter()
            .filter_map(|a| split_indexed(&a).map(|(b, _)| (a.clone(), b.to_string())))
            .collect();
        Ok(self.body.rename(&map))
    }
}

fn has_next(f: &Formula) -> bool {
    match f {
        Formula::Next(_) => true,
        Formula::True | Formula::False | Formula::Atom { .. } => false,
        Formula::Not(g) | Formula::PathA(g) | Formula::PathE(g) => has_next(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().any(has_next),
        Formula::Until(a, b) | Formula::Release(a, b) => has_next(a) || has_next(b),
    }
}

/// Cutoff for interleaving rings: 2, 3, 4 or 5 depending on the index prefix.
pub fn cutoff_for(f: &IndexedFormula) -> Result<usize, RingError> {
    f.check_sentence()?;
    if has_next(&f.body) {
        return Err(RingError::UnsupportedShape("next-time operators are not covered by the cutoff results".into()));
    }
    use IndexCond::*;
    let v = &f.vars;
    let first = |c: &IndexCond| matches!(c, NotEq(w) | Succ(w) if *w == v[0].0);
    match v.len() {
        1 => Ok(2),
        2 if matches!(v[1].1, Succ(_)) && first(&v[1].1) => Ok(3),
        2 if matches!(v[1].1, NotEq(_)) && first(&v[1].1) => Ok(4),
        3 if v[1..].iter().all(|(_, c)| first(c))
            && v[1..].iter().any(|(_, c)| matches!(c, NotEq(_)))
            && v[1..].iter().any(|(_, c)| matches!(c, Succ(_))) =>
        {
            Ok(5)
        }
        _ => Err(RingError::UnsupportedShape(format!("no cutoff known for prefix of '{f}'"))),
    }
}

/// `(A_S -> G_S) & (A_L & A_S -> G_L)`; sound but incomplete.
pub fn strengthen(a_l: &Formula, a_s: &Formula, g_l: &Formula, g_s: &Formula) -> Formula {
    Formula::and(vec![
        Formula::implies(a_s.clone(), g_s.clone()),
        Formula::implies(Formula::and(vec![a_l.clone(), a_s.clone()]), g_l.clone()),
    ])
    .to_pnf()
}

fn at(base: &str, v: &str) -> Formula {
    Formula::atom(format!("{base}_{v}"))
}

/// Token discipline of process `v`; `w` is its ring successor.
fn token_discipline(v: &str) -> Vec<Formula> {
    vec![
        Formula::globally(Formula::implies(at(SND, v), at(TOK, v))),
        Formula::globally(Formula::implies(
            at(TOK, v),
            Formula::iff(at(SND, v), Formula::next(Formula::not(at(TOK, v)))),
        )),
        Formula::globally(Formula::implies(
            Formula::not(at(TOK, v)),
            Formula::iff(at(RCV, v), Formula::next(at(TOK, v))),
        )),
    ]
}

fn releases(a_loc: Formula, v: &str) -> Formula {
    Formula::implies(a_loc, Formula::globally(Formula::implies(at(TOK, v), Formula::eventually(at(SND, v)))))
}

/// Localized assume-guarantee formula; sound but incomplete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Localized {
    /// Full formula including the token discipline.
    pub formula: IndexedFormula,
    /// `forall i . A_i & G F tok_i -> G_i`.
    pub guarantee: IndexedFormula,
}

/// Turns `forall i . A_i -> forall j . G_j` into one formula over `i` and its successor.
pub fn localize(a: &IndexedFormula, g: &IndexedFormula) -> Result<Localized, RingError> {
    let (ai, gi) = (a.local_body()?, g.local_body()?);
    let v = "i";
    let w = "i1";
    let index = |f: &Formula| -> Formula {
        let m: BTreeMap<String, String> = f.atoms().into_iter().map(|x| (x.clone(), format!("{x}_{v}"))).collect();
        f.rename(&m)
    };
    let (ai, gi) = (index(&ai), index(&gi));
    let infinitely_often = Formula::globally(Formula::eventually(at(TOK, v)));
    let premise = if ai == Formula::True { infinitely_often } else { Formula::and(vec![ai.clone(), infinitely_often]) };
    let guarantee_body = Formula::implies(premise, gi);
    let mut rhs = token_discipline(v);
    rhs.push(releases(ai, v));
    rhs.push(guarantee_body.clone());
    let assumption = Formula::and(vec![
        Formula::globally(Formula::eventually(at(SCH, v))),
        Formula::globally(Formula::iff(at(SND, v), at(RCV, w))),
    ]);
    let body = Formula::implies(assumption, Formula::and(rhs)).to_pnf();
    Ok(Localized {
        formula: IndexedFormula {
            vars: vec![(v.into(), IndexCond::None), (w.into(), IndexCond::Succ(v.into()))],
            body,
        },
        guarantee: IndexedFormula::one(v, guarantee_body.to_pnf()),
    })
}

/// Single-process formula in which the environment plays the rest of the ring.
///
/// The fairness assumption on scheduling is replaced by true: the process moves at every step.
pub fn hub_abstract(phi: &Formula, a_loc: &Formula) -> Formula {
    let p = |s: &str| Formula::atom(s);
    let assume = Formula::and(vec![
        Formula::globally(Formula::implies(Formula::not(p(TOK)), Formula::eventually(p(RCV)))),
        Formula::globally(Formula::implies(p(TOK), Formula::not(p(RCV)))),
    ]);
    let guarantee = Formula::and(vec![
        phi.clone(),
        Formula::globally(Formula::implies(p(SND), p(TOK))),
        Formula::globally(Formula::implies(p(TOK), Formula::iff(p(SND), Formula::next(Formula::not(p(TOK)))))),
        Formula::globally(Formula::implies(Formula::not(p(TOK)), Formula::iff(p(RCV), Formula::next(p(TOK))))),
        Formula::implies(
            a_loc.clone(),
            Formula::globally(Formula::implies(p(TOK), Formula::eventually(p(SND)))),
        ),
    ]);
    Formula::implies(assume, guarantee).to_pnf()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheduler {
    Synchronous,
    Interleaving,
    /// Any subset of processes moves.
    Asynchronous,
}

/// Process template: a Moore machine with `rcv` among its inputs and `snd`, `tok` among its outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessTemplate {
    pub machine: Machine,
    pub init_tok: usize,
    pub init_ntok: usize,
}

impl ProcessTemplate {
    fn input_index(&self, name: &str) -> Result<usize, RingError> {
        self.machine
            .inputs
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| RingError::InvalidTemplate(format!("missing input '{name}'")))
    }

    fn output_index(&self, name: &str) -> Result<usize, RingError> {
        self.machine
            .outputs
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| RingError::InvalidTemplate(format!("missing output '{name}'")))
    }

    fn has(&self, t: usize, o: usize) -> bool {
        self.machine.output(t, 0) >> o & 1 == 1
    }

    /// Checks the output and transition typing of token-passing processes.
    pub fn validate(&self) -> Result<(), RingError> {
        let m = &self.machine;
        if m.kind != Semantics::Moore {
            return Err(RingError::InvalidTemplate("template must be a Moore machine".into()));
        }
        m.validate().map_err(|e| RingError::InvalidTemplate(e.to_string()))?;
        let (rcv, snd, tok) = (self.input_index(RCV)?, self.output_index(SND)?, self.output_index(TOK)?);
        if !self.has(self.init_tok, tok) || self.has(self.init_ntok, tok) {
            return Err(RingError::InvalidTemplate("initial states disagree with tok".into()));
        }
        for t in 0..m.num_states() {
            let (has_tok, sends) = (self.has(t, tok), self.has(t, snd));
            if sends && !has_tok {
                return Err(RingError::InvalidTemplate(format!("state {t} sends without the token")));
            }
            for i in 0..m.num_letters() as Letter {
                let r = i >> rcv & 1 == 1;
                let next_tok = self.has(m.next(t, i), tok);
                let expect = match (has_tok, sends, r) {
                    (true, _, true) => continue,
                    (true, true, false) => false,
                    (true, false, false) => true,
                    (false, _, r) => r,
                };
                if next_tok != expect {
                    return Err(RingError::InvalidTemplate(format!("transition {t} --{i}--> violates the token typing")));
                }
            }
        }
        Ok(())
    }

    /// Inputs other than `rcv`.
    pub fn local_inputs(&self) -> Vec<String> {
        self.machine.inputs.iter().filter(|x| *x != RCV).cloned().collect()
    }
}

fn indexed(base: &str, k: usize) -> String {
    format!("{base}_{k}")
}

fn sel_width(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

/// Explicit global machine of a ring of `n` copies, token initially at process 1.
///
/// Inputs are scheduler choice bits (`sel*`) and every local input per process; outputs
/// are every template output per process plus `sch_k` and `rcv_k`, which depend on the
/// current input, so the result is a Mealy machine.
pub fn compose_ring(p: &ProcessTemplate, n: usize, sched: Scheduler) -> Result<Machine, RingError> {
    compose_ring_capped(p, n, sched, STATE_CAP)
}

pub fn compose_ring_capped(p: &ProcessTemplate, n: usize, sched: Scheduler, cap: usize) -> Result<Machine, RingError> {
    p.validate()?;
    if n < 2 {
        return Err(RingError::UnsupportedShape("rings need at least two processes".into()));
    }
    if sched == Scheduler::Asynchronous && n > 3 {
        return Err(RingError::UnsupportedShape("asynchronous rings are composed for at most 3 processes".into()));
    }
    let m = &p.machine;
    let local = p.local_inputs();
    let rcv_idx = p.input_index(RCV)?;
    let snd = p.output_index(SND)?;
    let tok = p.output_index(TOK)?;
    let sel_bits = match sched {
        Scheduler::Synchronous => 0,
        Scheduler::Interleaving => sel_width(n),
        Scheduler::Asynchronous => n,
    };
    let mut inputs: Vec<String> = (0..sel_bits).map(|b| format!("sel{b}")).collect();
    for k in 1..=n {
        inputs.extend(local.iter().map(|x| indexed(x, k)));
    }
    let mut outputs = Vec::new();
    for k in 1..=n {
        outputs.extend(m.outputs.iter().map(|o| indexed(o, k)));
    }
    outputs.extend((1..=n).map(|k| indexed(SCH, k)));
    outputs.extend((1..=n).map(|k| indexed(RCV, k)));
    if inputs.len() > crate::guard::MAX_PROPS || outputs.len() > crate::guard::MAX_PROPS {
        return Err(RingError::StateExplosion(cap));
    }
    let letters: Letter = 1 << inputs.len();
    let no = m.outputs.len();

    // template letter for process k with the given rcv
    let local_letter = |g: Letter, k: usize, rcv: bool| -> Letter {
        let base = sel_bits + k * local.len();
        let mut out = 0;
        let mut j = 0;
        for (pos, name) in m.inputs.iter().enumerate() {
            let bit = if name == RCV {
                rcv
            } else {
                let b = g >> (base + j) & 1 == 1;
                j += 1;
                b
            };
            if bit {
                out |= 1 << pos;
            }
        }
        let _ = rcv_idx;
        out
    };

    let init: Vec<usize> = (0..n).map(|k| if k == 0 { p.init_tok } else { p.init_ntok }).collect();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut trans: Vec<Vec<usize>> = Vec::new();
    let mut out: Vec<Vec<Letter>> = Vec::new();
    while let Some(si) = queue.pop_front() {
        let s = states[si].clone();
        let holders = s.iter().filter(|&&q| p.has(q, tok)).count();
        if holders != 1 {
            return Err(RingError::TokenInvariant(format!("{holders} processes hold the token in {s:?}")));
        }
        let mut row_t = Vec::with_capacity(letters as usize);
        let mut row_o = Vec::with_capacity(letters as usize);
        for g in 0..letters {
            let sel = g & ((1 << sel_bits) - 1);
            let sends = |k: usize| p.has(s[k], snd);
            // (moves, rcv) per process
            let mut moves = vec![false; n];
            let mut rcv = vec![false; n];
            match sched {
                Scheduler::Synchronous => {
                    moves = vec![true; n];
                    for k in 0..n {
                        rcv[(k + 1) % n] = sends(k);
                    }
                }
                Scheduler::Interleaving => {
                    let v = sel as usize % n;
                    moves[v] = true;
                    if sends(v) {
                        moves[(v + 1) % n] = true;
                        rcv[(v + 1) % n] = true;
                    }
                }
                Scheduler::Asynchronous => {
                    for k in 0..n {
                        if sel >> k & 1 == 1 {
                            moves[k] = true;
                            if sends(k) {
                                moves[(k + 1) % n] = true;
                                rcv[(k + 1) % n] = true;
                            }
                        }
                    }
                }
            }
            let next: Vec<usize> = (0..n)
                .map(|k| if moves[k] { m.next(s[k], local_letter(g, k, rcv[k])) } else { s[k] })
                .collect();
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if states.len() >= cap {
                        return Err(RingError::StateExplosion(cap));
                    }
                    let id = states.len();
                    index.insert(next.clone(), id);
                    states.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row_t.push(id);
            let mut o: Letter = 0;
            for k in 0..n {
                o |= m.output(s[k], 0) << (k * no);
                if moves[k] {
                    o |= 1 << (n * no + k);
                }
                if rcv[k] {
                    o |= 1 << (n * no + n + k);
                }
            }
            row_o.push(o);
        }
        while trans.len() <= si {
            trans.push(Vec::new());
            out.push(Vec::new());
        }
        trans[si] = row_t;
        out[si] = row_o;
    }
    Ok(Machine { kind: Semantics::Mealy, inputs, outputs, trans, out })
}

/// Fair-scheduling assumption for `n` processes.
pub fn fairness(n: usize) -> Formula {
    Formula::and((1..=n).map(|k| Formula::globally(Formula::eventually(Formula::atom(indexed(SCH, k))))).collect())
}

/// Parameterized specification: template interface, local fairness `A_loc` and indexed conjuncts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingSpec {
    /// Template inputs without `rcv`.
    pub inputs: Vec<String>,
    /// Template outputs without `snd` and `tok`.
    pub outputs: Vec<String>,
    /// Local fairness over unindexed template propositions.
    pub a_loc: Formula,
    pub parts: Vec<IndexedFormula>,
}

impl RingSpec {
    pub fn template_inputs(&self) -> Vec<String> {
        let mut v = self.inputs.clone();
        v.push(RCV.into());
        v
    }

    pub fn template_outputs(&self) -> Vec<String> {
        let mut v = self.outputs.clone();
        v.push(SND.into());
        v.push(TOK.into());
        v
    }

    /// Largest cutoff over the conjuncts.
    pub fn cutoff(&self) -> Result<usize, RingError> {
        self.parts.iter().map(cutoff_for).try_fold(2, |a, c| c.map(|c| a.max(c)))
    }

    fn a_loc_at(&self, k: usize) -> Formula {
        let m: BTreeMap<String, String> =
            self.a_loc.atoms().into_iter().map(|a| (a.clone(), indexed(&a, k))).collect();
        self.a_loc.rename(&m)
    }

    /// The ring formula split per index tuple; their conjunction is equivalent to it.
    ///
    /// Under interleaving every finite run extends to a fair one, so safety instances drop the fairness premise.
    pub fn obligations(&self, n: usize, sched: Scheduler) -> Vec<Formula> {
        let mut g: Vec<Formula> = Vec::new();
        for p in &self.parts {
            for a in p.assignments(n) {
                let single = IndexedFormula { vars: p.vars.clone(), body: p.body.clone() };
                let map: BTreeMap<String, String> = single
                    .body
                    .atoms()
                    .into_iter()
                    .filter_map(|atom| {
                        let (base, v) = split_indexed(&atom)?;
                        Some((atom.clone(), format!("{base}_{}", a.get(v)?)))
                    })
                    .collect();
                g.push(single.body.rename(&map));
            }
        }
        g.extend((1..=n).map(|k| releases(self.a_loc_at(k), &k.to_string())));
        g.into_iter()
            .map(|f| {
                let f = f.to_pnf();
                if sched == Scheduler::Interleaving && f.is_syntactic_safety() {
                    f
                } else {
                    Formula::implies(fairness(n), f).to_pnf()
                }
            })
            .collect()
    }

    /// Conjuncts plus token release, under fair scheduling, for a ring of `n`.
    pub fn ring_formula(&self, n: usize) -> Formula {
        let mut g: Vec<Formula> = self.parts.iter().map(|p| p.instantiate(n)).collect();
        g.extend((1..=n).map(|k| releases(self.a_loc_at(k), &k.to_string())));
        Formula::implies(fairness(n), Formula::and(g)).to_pnf()
    }
}

/// Parses a ring specification:
///
/// ```text
/// inputs r; outputs g; assume true;
/// param formula forall i != j . G !(g_i & g_j);
/// param formula forall i . G (r_i -> F g_i) & !g_i;
/// ```
pub fn parse_ring_spec(text: &str) -> Result<RingSpec, RingError> {
    let mut spec = RingSpec { inputs: Vec::new(), outputs: Vec::new(), a_loc: Formula::True, parts: Vec::new() };
    let names = |s: &str| -> Result<Vec<String>, RingError> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| {
                if is_identifier(x) && !x.contains('_') {
                    Ok(x.to_string())
                } else {
                    Err(RingError::Parse(format!("bad template proposition '{x}' (no underscores)")))
                }
            })
            .collect()
    };
    let text: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n");
    for stmt in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(r) = stmt.strip_prefix("inputs") {
            spec.inputs = names(r)?;
        } else if let Some(r) = stmt.strip_prefix("outputs") {
            spec.outputs = names(r)?;
        } else if let Some(r) = stmt.strip_prefix("assume") {
            spec.a_loc = parse_formula(r).map_err(|e| RingError::Parse(e.to_string()))?.to_pnf();
        } else if let Some(r) = stmt.strip_prefix("param formula") {
            spec.parts.push(parse_indexed(r)?);
        } else {
            return Err(RingError::Parse(format!("unknown statement '{stmt}'")));
        }
    }
    let known: BTreeSet<String> = spec.template_inputs().into_iter().chain(spec.template_outputs()).chain([SCH.to_string()]).collect();
    for p in &spec.parts {
        for a in p.body.atoms() {
            let base = split_indexed(&a).map(|(b, _)| b.to_string()).unwrap_or(a.clone());
            if !known.contains(&base) {
                return Err(RingError::Parse(format!("undeclared proposition '{a}'")));
            }
        }
    }
    for a in spec.a_loc.atoms() {
        if !known.contains(&a) {
            return Err(RingError::Parse(format!("undeclared proposition '{a}' in assumption")));
        }
    }
    if spec.parts.is_empty() {
        return Err(RingError::Parse("no 'param formula' statement".into()));
    }
    Ok(spec)
}

/// Template symbols for a ring: `tau(t, inputs...)` and `out_o(t)` shared by every process.
#[derive(Clone, Debug)]
pub struct SymbolicRing {
    pub template: SymbolicMachine,
    pub n: usize,
    pub scheduler: Scheduler,
    /// Per-process propositions read by the formula; other inputs stay internal.
    pub mentioned: BTreeSet<String>,
}

impl SymbolicRing {
    fn local(&self) -> Vec<String> {
        self.template.inputs.iter().filter(|x| *x != RCV).cloned().collect()
    }

    fn out(&self, o: &str, t: i64) -> Term {
        Term::app(out_symbol(o), vec![Term::Int(t)])
    }

    fn tau(&self, t: i64, vals: &BTreeMap<String, Term>) -> Term {
        if self.template.size == 1 {
            return Term::Int(0);
        }
        let mut args = vec![Term::Int(t)];
        args.extend(self.template.inputs.iter().map(|x| vals[x].clone()));
        Term::app(TAU, args)
    }

    fn input_props(&self) -> Vec<String> {
        let mut v = Vec::new();
        for k in 1..=self.n {
            for x in self.local() {
                let name = indexed(&x, k);
                if self.mentioned.contains(&name) {
                    v.push(name);
                }
            }
        }
        for k in 1..=self.n {
            v.push(indexed(SCH, k));
        }
        for k in 1..=self.n {
            let name = indexed(RCV, k);
            if self.mentioned.contains(&name) {
                v.push(name);
            }
        }
        v
    }
}

impl SystemEncoding for SymbolicRing {
    fn props(&self) -> Vec<String> {
        let mut v = self.input_props();
        for k in 1..=self.n {
            v.extend(self.template.outputs.iter().map(|o| indexed(o, k)));
        }
        v
    }

    fn num_inputs(&self) -> usize {
        self.input_props().len()
    }

    fn arity(&self) -> usize {
        self.n
    }

    fn states(&self) -> Vec<Vec<i64>> {
        let m = self.template.size as i64;
        let mut out = vec![Vec::new()];
        for _ in 0..self.n {
            out = out.into_iter().flat_map(|s: Vec<i64>| (0..m).map(move |t| [s.clone(), vec![t]].concat())).collect();
        }
        out
    }

    fn initial(&self) -> Vec<i64> {
        (0..self.n).map(|k| if k == 0 { INIT_TOK } else { INIT_NTOK }).collect()
    }

    fn edges(&self, s: &[i64]) -> Vec<SysEdge> {
        let n = self.n;
        let local = self.local();
        let snd = |k: usize| self.out(SND, s[k]);
        // groups of processes that may move together, with the symbolic condition of each one moving and receiving
        let choices: Vec<(Vec<Term>, Vec<Term>)> = match self.scheduler {
            Scheduler::Synchronous => {
                let rcv = (0..n).map(|k| snd((k + n - 1) % n)).collect();
                vec![(vec![Term::Bool(true); n], rcv)]
            }
            Scheduler::Interleaving => (0..n)
                .map(|v| {
                    let w = (v + 1) % n;
                    let mut mv = vec![Term::Bool(false); n];
                    let mut rcv = vec![Term::Bool(false); n];
                    mv[v] = Term::Bool(true);
                    mv[w] = snd(v);
                    rcv[w] = snd(v);
                    (mv, rcv)
                })
                .collect(),
            Scheduler::Asynchronous => (0u64..1 << n)
                .map(|set| {
                    let chosen = |k: usize| set >> k & 1 == 1;
                    let mut mv = Vec::new();
                    let mut rcv = Vec::new();
                    for k in 0..n {
                        let p = (k + n - 1) % n;
                        let r = if chosen(p) { snd(p) } else { Term::Bool(false) };
                        mv.push(Term::or([Term::Bool(chosen(k)), r.clone()]));
                        rcv.push(r);
                    }
                    (mv, rcv)
                })
                .collect(),
        };
        let mentioned_local: Vec<(usize, String)> = (0..n)
            .flat_map(|k| local.iter().map(move |x| (k, x.clone())))
            .filter(|(k, x)| self.mentioned.contains(&indexed(x, k + 1)))
            .collect();
        let mut edges = Vec::new();
        for (mv, rcv) in choices {
            // inputs that can influence this step: those of processes that may move, and mentioned ones
            let mut free: Vec<(usize, String)> = mentioned_local.clone();
            for (k, m) in mv.iter().enumerate() {
                if *m != Term::Bool(false) {
                    for x in &local {
                        if !free.contains(&(k, x.clone())) {
                            free.push((k, x.clone()));
                        }
                    }
                }
            }
            for bits in 0u64..1 << free.len() {
                let val = |k: usize, x: &str| -> Term {
                    let pos = free.iter().position(|(kk, xx)| *kk == k && xx == x);
                    Term::Bool(pos.is_some_and(|p| bits >> p & 1 == 1))
                };
                let mut props = Vec::new();
                for name in self.input_props() {
                    let (base, k) = split_indexed(&name).unwrap();
                    let k: usize = k.parse::<usize>().unwrap() - 1;
                    props.push(match base {
                        SCH => mv[k].clone(),
                        RCV => rcv[k].clone(),
                        x => val(k, x),
                    });
                }
                for k in 0..n {
                    props.extend(self.template.outputs.iter().map(|o| self.out(o, s[k])));
                }
                let succ = (0..n)
                    .map(|k| {
                        let mut vals: BTreeMap<String, Term> =
                            local.iter().map(|x| (x.clone(), val(k, x))).collect();
                        vals.insert(RCV.into(), rcv[k].clone());
                        let moved = self.tau(s[k], &vals);
                        Term::ite(mv[k].clone(), moved, Term::Int(s[k]))
                    })
                    .collect();
                edges.push(SysEdge { dir: edges.len() as Letter, props, succ });
            }
        }
        edges
    }

    fn moore(&self) -> bool {
        false
    }

    fn declare(&self, q: &mut Query) {
        self.template.declare(q)
    }
}

/// Template state conventions used by synthesis.
pub const INIT_NTOK: i64 = 0;
pub const INIT_TOK: i64 = 1;

/// Token typing of template transitions and the initial-state convention.
pub fn template_constraints(t: &SymbolicMachine) -> Query {
    let mut q = Query::new();
    t.declare(&mut q);
    let out = |o: &str, s: Term| Term::app(out_symbol(o), vec![s]);
    let ni = t.inputs.len();
    let rcv = t.inputs.iter().position(|x| x == RCV).expect("template without rcv");
    q.assert(Term::not(out(TOK, Term::Int(INIT_NTOK))));
    q.assert(out(TOK, Term::Int(INIT_TOK)));
    for s in 0..t.size as i64 {
        let (tok, snd) = (out(TOK, Term::Int(s)), out(SND, Term::Int(s)));
        q.assert(Term::implies(snd.clone(), tok.clone()));
        for d in 0..1u64 << ni {
            let next = if t.size == 1 {
                Term::Int(0)
            } else {
                let mut args = vec![Term::Int(s)];
                args.extend(bool_args(d, ni));
                Term::app(TAU, args)
            };
            let ntok = out(TOK, next);
            if d >> rcv & 1 == 1 {
                q.assert(Term::implies(Term::not(tok.clone()), ntok));
            } else {
                q.assert(Term::implies(
                    tok.clone(),
                    Term::iff(snd.clone(), Term::not(ntok.clone())),
                ));
                q.assert(Term::implies(Term::not(tok.clone()), Term::not(ntok)));
            }
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingOptions {
    pub max_size: usize,
    /// Handle 1-indexed conjuncts with the single-process hub formula instead of a ring of 2.
    pub hub: bool,
    /// Ring sizes at which the result is re-verified by composition.
    pub verify_sizes: Vec<usize>,
    pub scheduler: Scheduler,
    pub solver: SolverConfig,
}

impl Default for RingOptions {
    fn default() -> Self {
        RingOptions {
            max_size: 4,
            hub: true,
            verify_sizes: vec![2, 3, 4, 5],
            scheduler: Scheduler::Interleaving,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingReport {
    pub template: Option<ProcessTemplate>,
    /// Template size of each query and whether it was satisfiable.
    pub attempts: Vec<(usize, bool)>,
    /// Ring size and whether the composed ring satisfies the ring formula.
    pub verified: Vec<(usize, bool)>,
}

fn mentioned(f: &Formula) -> BTreeSet<String> {
    f.atoms()
}

/// One query for template size `m`: token typing, plus per-conjunct constraints at each conjunct's cutoff.
pub fn modular_query(spec: &RingSpec, m: usize, opts: &RingOptions) -> Result<(Query, SymbolicMachine), RingError> {
    let t = SymbolicMachine {
        kind: Semantics::Moore,
        inputs: spec.template_inputs(),
        outputs: spec.template_outputs(),
        size: m,
    };
    let mut q = template_constraints(&t);
    let mut local_parts = Vec::new();
    let mut by_cutoff: BTreeMap<usize, Vec<IndexedFormula>> = BTreeMap::new();
    for p in &spec.parts {
        let c = cutoff_for(p)?;
        if c == 2 && opts.hub {
            local_parts.push(p.local_body()?);
        } else {
            by_cutoff.entry(c).or_default().push(p.clone());
        }
    }
    if opts.hub {
        let phi = hub_abstract(&Formula::and(local_parts).to_pnf(), &spec.a_loc).merge_globally();
        for (tag, init) in [("hn", INIT_NTOK), ("ht", INIT_TOK)] {
            q.merge(encode_ltl_tagged(&StartingAt(&t, vec![init]), &phi, tag)?);
        }
    }
    for (c, parts) in by_cutoff {
        let body = Formula::and(parts.iter().map(|p| p.instantiate(c)).collect()).to_pnf();
        let mut g = vec![body];
        if !opts.hub {
            g.extend((1..=c).map(|k| releases(spec.a_loc_at(k), &k.to_string())));
        }
        let g = Formula::and(g).to_pnf();
        // fairness cannot matter for safety guarantees: every finite run extends fairly
        let f = if g.is_syntactic_safety() { g } else { Formula::implies(fairness(c), g).to_pnf() };
        let f = f.merge_globally();
        let ring = SymbolicRing { template: t.clone(), n: c, scheduler: opts.scheduler, mentioned: mentioned(&f) };
        q.merge(encode_ltl_tagged(&ring, &f, &format!("r{c}"))?);
    }
    Ok((q, t))
}

/// Searches template sizes from 2 up, then re-verifies on composed rings.
pub fn synth_ring(spec: &RingSpec, opts: &RingOptions) -> Result<RingReport, RingError> {
    let mut report = RingReport { template: None, attempts: Vec::new(), verified: Vec::new() };
    for m in 2..=opts.max_size.max(2) {
        let (q, t) = modular_query(spec, m, opts)?;
        match solve(&q, &opts.solver).map_err(SynthError::from)? {
            SolverVerdict::Sat(model) => {
                report.attempts.push((m, true));
                let p = ProcessTemplate {
                    machine: t.extract(&model),
                    init_tok: INIT_TOK as usize,
                    init_ntok: INIT_NTOK as usize,
                };
                for &n in &opts.verify_sizes {
                    report.verified.push((n, verify_ring(spec, &p, n, opts.scheduler)?));
                }
                report.template = Some(p);
                return Ok(report);
            }
            SolverVerdict::Unsat => report.attempts.push((m, false)),
            SolverVerdict::Unknown(r) => return Err(SynthError::Encoding(format!("solver gave up: {r}")).into()),
        }
    }
    Ok(report)
}

/// Model checks the ring formula on the composed ring of `n` processes, one obligation at a time.
pub fn verify_ring(spec: &RingSpec, p: &ProcessTemplate, n: usize, sched: Scheduler) -> Result<bool, RingError> {
    let g = compose_ring(p, n, sched)?;
    for f in spec.obligations(n, sched) {
        if !mc_ltl(&g, &f)?.holds() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arbiter_template() -> ProcessTemplate {
        // 0: idle, 1: token without grant, 2: token with grant, sends
        let m = Machine {
            kind: Semantics::Moore,
            inputs: vec!["r".into(), RCV.into()],
            outputs: vec!["g".into(), SND.into(), TOK.into()],
            trans: vec![vec![0, 0, 2, 2], vec![2, 2, 2, 2], vec![0, 0, 0, 0]],
            out: vec![vec![0], vec![0b100], vec![0b111]],
        };
        ProcessTemplate { machine: m, init_tok: 1, init_ntok: 0 }
    }

    fn arbiter_spec() -> RingSpec {
        parse_ring_spec(
            "inputs r; outputs g;\n\
             param formula forall i != j . G !(g_i & g_j);\n\
             param formula forall i . G (r_i -> F g_i) & !g_i;",
        )
        .unwrap()
    }

    #[test]
    fn cutoffs() {
        let c = |s: &str| cutoff_for(&parse_indexed(s).unwrap());
        assert_eq!(c("forall i . G (r_i -> F g_i)").unwrap(), 2);
        assert_eq!(c("forall i, j = i + 1 . G (g_i -> F g_j)").unwrap(), 3);
        assert_eq!(c("forall i != j . G !(g_i & g_j)").unwrap(), 4);
        assert_eq!(c("forall i != j, k = i + 1 . G (g_i | g_j | g_k)").unwrap(), 5);
        assert_eq!(c("forall i . forall j = i + 1 . G g_j").unwrap(), 3);
        assert!(matches!(c("forall i . X g_i"), Err(RingError::UnsupportedShape(_))));
        assert!(matches!(c("forall i . G (e -> g_i)"), Err(RingError::UnsupportedShape(_))));
        assert!(matches!(c("forall i, j . G (g_i | g_j)"), Err(RingError::UnsupportedShape(_))));
    }

    #[test]
    fn display_round_trips() {
        let f = parse_indexed("forall i != j, k = i + 1 . G (g_i | g_j | g_k)").unwrap();
        assert_eq!(parse_indexed(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn instantiation_counts() {
        let f = parse_indexed("forall i != j . G !(g_i & g_j)").unwrap();
        assert_eq!(f.assignments(4).len(), 12);
        assert_eq!(f.assignments(1).len(), 0);
        let s = parse_indexed("forall i, j = i + 1 . G g_j").unwrap();
        let a = s.assignments(3);
        assert_eq!(a.len(), 3);
        assert_eq!(a[2]["j"], 1);
        assert_eq!(parse_indexed("forall i . g_i").unwrap().instantiate(2), crate::parse_formula("g_1 & g_2").unwrap());
    }

    #[test]
    fn template_typing() {
        assert!(arbiter_template().validate().is_ok());
        let mut bad = arbiter_template();
        bad.machine.trans[2] = vec![2, 2, 2, 2];
        assert!(matches!(bad.validate(), Err(RingError::InvalidTemplate(_))));
        let mut two = arbiter_template();
        two.init_ntok = 1;
        assert!(two.validate().is_err());
    }

    #[test]
    fn composed_rings_keep_one_token() {
        let p = arbiter_template();
        for sched in [Scheduler::Interleaving, Scheduler::Synchronous, Scheduler::Asynchronous] {
            for n in 2..=3 {
                let g = compose_ring(&p, n, sched).unwrap();
                let tok: Vec<usize> = (1..=n).map(|k| g.outputs.iter().position(|o| *o == indexed(TOK, k)).unwrap()).collect();
                for t in 0..g.num_states() {
                    assert_eq!(tok.iter().filter(|&&i| g.output(t, 0) >> i & 1 == 1).count(), 1);
                }
            }
        }
    }

    #[test]
    fn wiring_sets_successor_rcv() {
        let p = arbiter_template();
        let g = compose_ring(&p, 3, Scheduler::Interleaving).unwrap();
        let pos = |s: &str| g.outputs.iter().position(|o| o == s).unwrap();
        for t in 0..g.num_states() {
            for i in 0..g.num_letters() as Letter {
                let o = g.output(t, i);
                for k in 1..=3 {
                    let next = k % 3 + 1;
                    let scheduled = o >> pos(&indexed(SCH, k)) & 1 == 1;
                    let sends = o >> pos(&indexed(SND, k)) & 1 == 1;
                    let rcv_next = o >> pos(&indexed(RCV, next)) & 1 == 1;
                    if scheduled && sends {
                        assert!(rcv_next);
                    }
                }
            }
        }
    }

    #[test]
    fn arbiter_template_passes_ring_checks() {
        let p = arbiter_template();
        let spec = arbiter_spec();
        for n in 2..=4 {
            assert!(verify_ring(&spec, &p, n, Scheduler::Interleaving).unwrap(), "n = {n}");
        }
        // without fairness the token may never reach a requesting process
        let g = compose_ring(&p, 3, Scheduler::Interleaving).unwrap();
        let unfair = Formula::and(spec.parts.iter().map(|x| x.instantiate(3)).collect());
        assert!(!mc_ltl(&g, &unfair).unwrap().holds());
    }

    #[test]
    fn state_cap() {
        let p = arbiter_template();
        assert_eq!(compose_ring_capped(&p, 4, Scheduler::Interleaving, 3), Err(RingError::StateExplosion(3)));
    }

    #[test]
    fn strengthening_and_localizing() {
        let f = strengthen(&Formula::atom("b"), &Formula::atom("a"), &Formula::atom("l"), &Formula::atom("s"));
        assert_eq!(f, crate::parse_formula("(a -> s) & (b & a -> l)").unwrap().to_pnf());
        let a = parse_indexed("forall i . true").unwrap();
        let g = parse_indexed("forall j . G (r_j -> F g_j)").unwrap();
        let l = localize(&a, &g).unwrap();
        assert_eq!(l.guarantee.body, crate::parse_formula("G F tok_i -> G (r_i -> F g_i)").unwrap().to_pnf());
        assert_eq!(l.formula.vars.len(), 2);
        assert!(l.formula.body.atoms().contains("rcv_i1"));
    }

    #[test]
    fn ring_spec_errors() {
        assert!(matches!(parse_ring_spec("inputs r; outputs g;"), Err(RingError::Parse(_))));
        assert!(matches!(parse_ring_spec("inputs r; outputs g; param formula forall i . G x_i;"), Err(RingError::Parse(_))));
        assert!(matches!(parse_ring_spec("inputs r_1; outputs g; param formula forall i . G g_i;"), Err(RingError::Parse(_))));
    }

    #[test]
    fn symbolic_ring_shape() {
        let t = SymbolicMachine { kind: Semantics::Moore, inputs: vec!["r".into(), RCV.into()], outputs: vec!["g".into(), SND.into(), TOK.into()], size: 2 };
        let ring = SymbolicRing { template: t, n: 3, scheduler: Scheduler::Interleaving, mentioned: BTreeSet::new() };
        assert_eq!(ring.states().len(), 8);
        assert_eq!(ring.initial(), vec![1, 0, 0]);
        // three choices of the scheduled process, each with r of the mover and its successor
        assert_eq!(ring.edges(&[1, 0, 0]).len(), 12);
        assert_eq!(ring.props().len(), 3 + 9);
    }
}
