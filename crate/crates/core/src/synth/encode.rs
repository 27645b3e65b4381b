//! SMT encodings of "the system satisfies the automaton / formula".

use std::collections::BTreeSet;

use crate::aht::{ctlstar_to_aht, HesitantTreeAutomaton, PartKind};
use crate::automaton::{ltl_to_nbw_with, ucw_for, ucw_for_with, Acceptance, Mode, NbwOptions, WordAutomaton};
use crate::formula::Formula;
use crate::guard::Guard;
use crate::ranking::RankScheme;
use crate::smt::{Query, Sort, Term};
use crate::spec::{decompose, Quantifier};

use super::system::{SysEdge, SystemEncoding};
use super::SynthError;

pub fn rch_name(tag: &str, q: usize) -> String {
    format!("rch_{tag}_{q}")
}

pub fn rank_name(tag: &str, comp: &str, q: usize) -> String {
    format!("rk_{tag}_{comp}_{q}")
}

fn int_args(s: &[i64]) -> Vec<Term> {
    s.iter().map(|v| Term::Int(*v)).collect()
}

/// A proposition of an automaton: a system proposition or an earlier subformula marker.
#[derive(Clone, Debug)]
enum Source {
    Sys(usize),
    /// `rch` of the sub-automaton's initial state at the current system state.
    Sub(String),
}

/// Accumulates one query over a fixed system.
pub struct Encoder<'a> {
    pub sys: &'a dyn SystemEncoding,
    pub query: Query,
    states: Vec<Vec<i64>>,
    edges: Vec<Vec<SysEdge>>,
}

impl<'a> Encoder<'a> {
    pub fn new(sys: &'a dyn SystemEncoding) -> Encoder<'a> {
        let mut query = Query::new();
        sys.declare(&mut query);
        let states = sys.states();
        let edges = states.iter().map(|s| sys.edges(s)).collect();
        Encoder { sys, query, states, edges }
    }

    fn state_sorts(&self) -> Vec<Sort> {
        vec![Sort::Int; self.sys.arity()]
    }

    fn rch(&mut self, tag: &str, q: usize, args: Vec<Term>) -> Term {
        let name = rch_name(tag, q);
        self.query.declare(name.clone(), self.state_sorts(), Sort::Bool);
        Term::app(name, args)
    }

    fn rank(&mut self, tag: &str, comp: &str, q: usize, args: Vec<Term>) -> Term {
        let name = rank_name(tag, comp, q);
        self.query.declare(name.clone(), self.state_sorts(), Sort::Int);
        Term::app(name, args)
    }

    fn resolve(&self, a: &WordAutomaton, subs: &[(String, String)]) -> Result<Vec<Source>, SynthError> {
        let sys_props = self.sys.props();
        a.props
            .iter()
            .map(|p| {
                if let Some(i) = sys_props.iter().position(|x| x == p) {
                    Ok(Source::Sys(i))
                } else if let Some((_, sym)) = subs.iter().find(|(n, _)| n == p) {
                    Ok(Source::Sub(sym.clone()))
                } else {
                    Err(SynthError::Encoding(format!("automaton proposition '{p}' is unknown to the system")))
                }
            })
            .collect()
    }

    fn guard_term(&self, g: &Guard, src: &[Source], s: &[i64], e: &SysEdge) -> Term {
        Term::and(g.literals().map(|(i, v)| {
            let t = match &src[i] {
                Source::Sys(j) => e.props[*j].clone(),
                Source::Sub(sym) => Term::app(sym.clone(), int_args(s)),
            };
            if v {
                t
            } else {
                Term::not(t)
            }
        }))
    }

    /// Φ_E for nondeterministic and Φ_A for universal automata, without the initial constraint.
    fn word(&mut self, a: &WordAutomaton, tag: &str, scheme: &RankScheme, subs: &[(String, String)]) -> Result<(), SynthError> {
        let src = self.resolve(a, subs)?;
        // the completion sink decides its transitions outright for (co-)Büchi
        let sink = match (&a.acceptance, a.sink) {
            (Acceptance::Buchi(_) | Acceptance::CoBuchi(_), Some(k)) => Some(k),
            _ => None,
        };
        let universal = a.mode == Mode::Universal;
        let states = self.states.clone();
        let all_edges = self.edges.clone();
        for (si, s) in states.iter().enumerate() {
            for q in 0..a.num_states {
                if Some(q) == sink {
                    if !universal {
                        let dead = self.rch(tag, q, int_args(s));
                        self.query.assert(Term::not(dead));
                    }
                    continue;
                }
                let cur: Vec<Term> = (0..scheme.components.len())
                    .map(|c| self.rank(tag, &scheme.components[c].name, q, int_args(s)))
                    .collect();
                let dom = scheme.domain(&|c| cur[c].clone());
                self.query.assert(dom);
                let here = self.rch(tag, q, int_args(s));
                let mut options = Vec::new();
                for e in &all_edges[si] {
                    for t in a.outgoing(q) {
                        let g = self.guard_term(&t.guard, &src, s, e);
                        if g == Term::Bool(false) {
                            continue;
                        }
                        let step = if Some(t.dst) == sink {
                            Term::Bool(universal)
                        } else {
                            let next: Vec<Term> = (0..scheme.components.len())
                                .map(|c| self.rank(tag, &scheme.components[c].name, t.dst, e.succ.clone()))
                                .collect();
                            let cmp = scheme.cmp(q, &|c| cur[c].clone(), &|c| next[c].clone());
                            Term::and([self.rch(tag, t.dst, e.succ.clone()), cmp])
                        };
                        if universal {
                            self.query.assert(Term::implies(Term::and([here.clone(), g]), step));
                        } else {
                            options.push(Term::and([g, step]));
                        }
                    }
                }
                if !universal {
                    self.query.assert(Term::implies(here, Term::or(options)));
                }
            }
        }
        Ok(())
    }

    fn assert_initial(&mut self, tag: &str, q: usize) {
        let init = int_args(&self.sys.initial());
        let t = self.rch(tag, q, init);
        self.query.assert(t);
    }

    /// Tree automaton product: `rch(q,s) -> δ(q, out(s))[(d,q') ↦ rch(q', succ) ∧ ▷]`.
    fn aht(&mut self, a: &HesitantTreeAutomaton, tag: &str) -> Result<(), SynthError> {
        if !self.sys.moore() {
            return Err(SynthError::Unsupported("tree-automaton encoding needs a Moore system".into()));
        }
        let ni = self.sys.num_inputs();
        let states = self.states.clone();
        let all_edges = self.edges.clone();
        for (si, s) in states.iter().enumerate() {
            let edges = &all_edges[si];
            for q in 0..a.num_states() {
                let part = a.partition_of(q).clone();
                let cur = self.rank(tag, "r", q, int_args(s));
                self.query.assert(Term::ge(cur.clone(), Term::Int(0)));
                let here = self.rch(tag, q, int_args(s));
                let acc = a.acc.contains(&q);
                let body = {
                    let me = std::cell::RefCell::new(&mut *self);
                    a.delta[q].fold(
                        &|o, v| {
                            let t = edges[0].props[ni + o].clone();
                            if v {
                                t
                            } else {
                                Term::not(t)
                            }
                        },
                        &|d, q2| {
                            let e = edges.iter().find(|e| e.dir == d).expect("missing direction");
                            let mut m = me.borrow_mut();
                            let reach = m.rch(tag, q2, e.succ.clone());
                            let cmp = if part.states.contains(&q2) {
                                let next = m.rank(tag, "r", q2, e.succ.clone());
                                match (part.kind, acc) {
                                    (PartKind::N, true) => Term::Bool(true),
                                    (PartKind::N, false) | (PartKind::U, true) => Term::gt(cur.clone(), next),
                                    (PartKind::U, false) => Term::ge(cur.clone(), next),
                                }
                            } else {
                                Term::Bool(true)
                            };
                            Term::and([reach, cmp])
                        },
                        &Term::Bool,
                        &|xs| Term::and(xs),
                        &|xs| Term::or(xs),
                    )
                };
                self.query.assert(Term::implies(here, body));
            }
        }
        Ok(())
    }
}

/// Φ_E (nondeterministic automaton) or Φ_A (universal automaton) over the system's propositions.
pub fn encode_word(sys: &dyn SystemEncoding, a: &WordAutomaton, scheme: &RankScheme) -> Result<Query, SynthError> {
    let mut enc = Encoder::new(sys);
    enc.word(a, "w", scheme, &[])?;
    enc.assert_initial("w", a.initial);
    Ok(enc.query)
}

/// `encode_word` that insists on the expected automaton mode.
pub fn encode_word_mode(sys: &dyn SystemEncoding, a: &WordAutomaton, scheme: &RankScheme, mode: Mode) -> Result<Query, SynthError> {
    if a.mode != mode {
        return Err(SynthError::ModeMismatch);
    }
    encode_word(sys, a, scheme)
}

/// Bounded-synthesis query for an LTL body: UCW with co-Büchi ranking.
pub fn encode_ltl_for(sys: &dyn SystemEncoding, body: &Formula) -> Result<Query, SynthError> {
    encode_ltl_tagged(sys, body, "w")
}

/// `encode_ltl_for` with a caller-chosen symbol tag, so that several queries over
/// different systems can share one solver call.
pub fn encode_ltl_tagged(sys: &dyn SystemEncoding, body: &Formula, tag: &str) -> Result<Query, SynthError> {
    let ucw = ucw_for(body, &sys.props())?;
    let scheme = RankScheme::for_acceptance(&ucw.acceptance, 0);
    let mut enc = Encoder::new(sys);
    enc.word(&ucw, tag, &scheme, &[])?;
    enc.assert_initial(tag, ucw.initial);
    Ok(enc.query)
}

/// Bottom-up encoding: one automaton per quantified subformula, markers `rch(q0^p, t)`.
pub fn encode_ctl_direct_for(sys: &dyn SystemEncoding, f: &Formula) -> Result<Query, SynthError> {
    if !sys.moore() {
        return Err(SynthError::Unsupported("CTL* encodings need a Moore system".into()));
    }
    let sys_props = sys.props();
    let reserved: BTreeSet<String> = sys_props.iter().cloned().collect();
    let table = decompose(&f.to_pnf(), &reserved);
    let opts = NbwOptions { monotone_props: table.props().into_iter().collect(), ..Default::default() };
    let mut enc = Encoder::new(sys);
    let mut subs: Vec<(String, String)> = Vec::new();
    for e in &table.entries {
        let mut props = sys_props.clone();
        props.extend(subs.iter().map(|(n, _)| n.clone()));
        let a = match e.quantifier {
            Quantifier::E => ltl_to_nbw_with(&e.body, &props, &opts)?,
            Quantifier::A => ucw_for_with(&e.body, &props, &opts)?,
        };
        let scheme = RankScheme::for_acceptance(&a.acceptance, 0);
        enc.word(&a, &e.prop, &scheme, &subs)?;
        let marker = rch_name(&e.prop, a.initial);
        enc.query.declare(marker.clone(), vec![Sort::Int; sys.arity()], Sort::Bool);
        subs.push((e.prop.clone(), marker));
    }
    let init = sys.initial();
    let e0 = sys.edges(&init).into_iter().next().expect("system without edges");
    let ni = sys.num_inputs();
    let top = top_term(&table.top, &|name| {
        if let Some((_, sym)) = subs.iter().find(|(n, _)| n == name) {
            Some(Term::app(sym.clone(), int_args(&init)))
        } else {
            sys_props.iter().position(|p| p == name).filter(|i| *i >= ni).map(|i| e0.props[i].clone())
        }
    })?;
    enc.query.assert(top);
    Ok(enc.query)
}

fn top_term(f: &Formula, atom: &dyn Fn(&str) -> Option<Term>) -> Result<Term, SynthError> {
    Ok(match f {
        Formula::True => Term::Bool(true),
        Formula::False => Term::Bool(false),
        Formula::Atom { name, positive } => {
            let t = atom(name).ok_or_else(|| SynthError::Encoding(format!("'{name}' cannot appear at state level")))?;
            if *positive {
                t
            } else {
                Term::not(t)
            }
        }
        Formula::And(xs) => Term::and(xs.iter().map(|x| top_term(x, atom)).collect::<Result<Vec<_>, _>>()?),
        Formula::Or(xs) => Term::or(xs.iter().map(|x| top_term(x, atom)).collect::<Result<Vec<_>, _>>()?),
        other => return Err(SynthError::Encoding(format!("not a Boolean top-level formula: {other}"))),
    })
}

/// Non-emptiness of the product of the system with a tree automaton.
pub fn encode_aht_for(sys: &dyn SystemEncoding, a: &HesitantTreeAutomaton) -> Result<Query, SynthError> {
    let mut enc = Encoder::new(sys);
    enc.aht(a, "h")?;
    enc.assert_initial("h", a.initial);
    Ok(enc.query)
}

/// Builds the tree automaton for `f` over the system's inputs and outputs, then encodes it.
pub fn encode_ctl_aht_for(sys: &dyn SystemEncoding, f: &Formula) -> Result<Query, SynthError> {
    let props = sys.props();
    let ni = sys.num_inputs();
    let a = ctlstar_to_aht(&f.to_pnf(), &props[..ni], &props[ni..])?;
    encode_aht_for(sys, &a)
}
