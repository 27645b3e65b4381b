//! Alternating hesitant tree automata over labels `2^O` and directions `2^I`.
//!
//! Assembled from per-subformula word automata: one partition per quantified subformula,
//! nondeterministic for `E`, universal for `A`. References to inner subformulas are inlined as
//! the transition formula of the inner automaton's initial state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automaton::{ltl_to_nbw_with, ucw_for_with, AutomatonError, Mode, NbwOptions, StateSet, WordAutomaton};
use crate::formula::Formula;
use crate::guard::{letters_of, Guard, Letter};
use crate::spec::{decompose, Quantifier};

/// Positive Boolean formula over label tests and (direction, state) moves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosBool {
    True,
    False,
    /// Output `index` has the given value at the current node.
    Label(usize, bool),
    /// Send a copy in `state` to direction `dir` (a letter over the inputs).
    Move(Letter, usize),
    And(Vec<PosBool>),
    Or(Vec<PosBool>),
}

impl PosBool {
    pub fn and(xs: impl IntoIterator<Item = PosBool>) -> PosBool {
        let mut out = Vec::new();
        for x in xs {
            match x {
                PosBool::True => {}
                PosBool::False => return PosBool::False,
                PosBool::And(ys) => out.extend(ys),
                x => out.push(x),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => PosBool::True,
            1 => out.pop().unwrap(),
            _ => PosBool::And(out),
        }
    }

    pub fn or(xs: impl IntoIterator<Item = PosBool>) -> PosBool {
        let mut out = Vec::new();
        for x in xs {
            match x {
                PosBool::False => {}
                PosBool::True => return PosBool::True,
                PosBool::Or(ys) => out.extend(ys),
                x => out.push(x),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => PosBool::False,
            1 => out.pop().unwrap(),
            _ => PosBool::Or(out),
        }
    }

    /// Resolves label tests against an output letter.
    pub fn with_label(&self, out: Letter) -> PosBool {
        self.map(&|b| match b {
            PosBool::Label(i, v) => Some(if (out >> i & 1 == 1) == *v { PosBool::True } else { PosBool::False }),
            _ => None,
        })
    }

    fn map(&self, f: &dyn Fn(&PosBool) -> Option<PosBool>) -> PosBool {
        if let Some(r) = f(self) {
            return r;
        }
        match self {
            PosBool::And(xs) => PosBool::and(xs.iter().map(|x| x.map(f))),
            PosBool::Or(xs) => PosBool::or(xs.iter().map(|x| x.map(f))),
            x => x.clone(),
        }
    }

    pub fn moves(&self, out: &mut BTreeSet<(Letter, usize)>) {
        match self {
            PosBool::Move(d, q) => {
                out.insert((*d, *q));
            }
            PosBool::And(xs) | PosBool::Or(xs) => xs.iter().for_each(|x| x.moves(out)),
            _ => {}
        }
    }

    fn mentions(&self, states: &BTreeSet<usize>) -> bool {
        match self {
            PosBool::Move(_, q) => states.contains(q),
            PosBool::And(xs) | PosBool::Or(xs) => xs.iter().any(|x| x.mentions(states)),
            _ => false,
        }
    }

    fn renumber(&self, map: &BTreeMap<usize, usize>) -> PosBool {
        self.map(&|b| match b {
            PosBool::Move(d, q) => Some(PosBool::Move(*d, map[q])),
            _ => None,
        })
    }

    /// Generic fold used by encoders: labels, moves, constants and connectives.
    pub fn fold<T>(
        &self,
        label: &dyn Fn(usize, bool) -> T,
        mv: &dyn Fn(Letter, usize) -> T,
        konst: &dyn Fn(bool) -> T,
        and: &dyn Fn(Vec<T>) -> T,
        or: &dyn Fn(Vec<T>) -> T,
    ) -> T {
        match self {
            PosBool::True => konst(true),
            PosBool::False => konst(false),
            PosBool::Label(i, v) => label(*i, *v),
            PosBool::Move(d, q) => mv(*d, *q),
            PosBool::And(xs) => and(xs.iter().map(|x| x.fold(label, mv, konst, and, or)).collect()),
            PosBool::Or(xs) => or(xs.iter().map(|x| x.fold(label, mv, konst, and, or)).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartKind {
    N,
    U,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub states: Vec<usize>,
    pub kind: PartKind,
    /// Moves leaving the partition target strictly lower ranks.
    pub rank: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AhtError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("malformed tree automaton: {0}")]
    Invariant(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HesitantTreeAutomaton {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub names: Vec<String>,
    pub initial: usize,
    /// Transition formula per state; label tests stand for the output part of the letter.
    pub delta: Vec<PosBool>,
    pub partitions: Vec<Partition>,
    /// Accepting states of N partitions and rejecting states of U partitions.
    pub acc: StateSet,
}

impl HesitantTreeAutomaton {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn partition_of(&self, q: usize) -> &Partition {
        self.partitions.iter().find(|p| p.states.contains(&q)).expect("state without partition")
    }

    pub fn delta_at(&self, q: usize, out: Letter) -> PosBool {
        self.delta[q].with_label(out)
    }

    /// Partition cover, lower-set condition and hesitant relatedness.
    pub fn check(&self) -> Result<(), AhtError> {
        let n = self.num_states();
        let mut seen = vec![0usize; n];
        for p in &self.partitions {
            for &q in &p.states {
                if q >= n {
                    return Err(AhtError::Invariant(format!("partition state {q} out of range")));
                }
                seen[q] += 1;
            }
        }
        if let Some(q) = seen.iter().position(|c| *c != 1) {
            return Err(AhtError::Invariant(format!("state {} is in {} partitions", self.names[q], seen[q])));
        }
        for p in &self.partitions {
            let own: BTreeSet<usize> = p.states.iter().copied().collect();
            for &q in &p.states {
                let mut ms = BTreeSet::new();
                self.delta[q].moves(&mut ms);
                for (_, q2) in ms {
                    let p2 = self.partition_of(q2);
                    if !own.contains(&q2) && p2.rank >= p.rank {
                        return Err(AhtError::Invariant(format!(
                            "{} moves to {} in a partition that is not lower",
                            self.names[q], self.names[q2]
                        )));
                    }
                }
                if !related(&self.delta[q], &own, p.kind) {
                    return Err(AhtError::Invariant(format!("transition of {} mixes partition states", self.names[q])));
                }
            }
        }
        Ok(())
    }
}

/// N: no conjunction joins two same-partition moves; U: no disjunction does.
fn related(b: &PosBool, own: &BTreeSet<usize>, kind: PartKind) -> bool {
    match b {
        PosBool::And(xs) | PosBool::Or(xs) => {
            let bad_node = matches!((b, kind), (PosBool::And(_), PartKind::N) | (PosBool::Or(_), PartKind::U));
            if bad_node && xs.iter().filter(|x| x.mentions(own)).count() > 1 {
                return false;
            }
            xs.iter().all(|x| related(x, own, kind))
        }
        _ => true,
    }
}

impl fmt::Display for PosBool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosBool::True => write!(f, "true"),
            PosBool::False => write!(f, "false"),
            PosBool::Label(i, v) => write!(f, "{}o{i}", if *v { "" } else { "!" }),
            PosBool::Move(d, q) => write!(f, "({d},{q})"),
            PosBool::And(xs) | PosBool::Or(xs) => {
                let op = if matches!(self, PosBool::And(_)) { " & " } else { " | " };
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Where each automaton proposition comes from.
#[derive(Clone, Copy)]
enum PropRole {
    Input(usize),
    Output(usize),
    Sub(usize),
}

struct Builder<'a> {
    inputs: &'a [String],
    outputs: &'a [String],
    names: Vec<String>,
    delta: Vec<PosBool>,
    kinds: Vec<(PartKind, usize)>,
    acc: StateSet,
    /// δ of each entry's initial state, for inlining.
    inline: Vec<PosBool>,
}

/// A state with a single `true` self-loop and nothing else.
fn true_loops(a: &WordAutomaton) -> Vec<bool> {
    (0..a.num_states)
        .map(|q| {
            let out: Vec<_> = a.outgoing(q).collect();
            out.iter().all(|t| t.dst == q) && out.iter().any(|t| t.guard.is_true())
        })
        .collect()
}

impl Builder<'_> {
    fn roles(&self, a: &WordAutomaton, subs: &[String]) -> Vec<PropRole> {
        a.props
            .iter()
            .map(|p| {
                if let Some(i) = self.inputs.iter().position(|x| x == p) {
                    PropRole::Input(i)
                } else if let Some(o) = self.outputs.iter().position(|x| x == p) {
                    PropRole::Output(o)
                } else {
                    PropRole::Sub(subs.iter().position(|x| x == p).expect("unknown automaton proposition"))
                }
            })
            .collect()
    }

    /// Adds the states of `a` as one partition; returns the δ of its initial state.
    fn add(&mut self, a: &WordAutomaton, kind: PartKind, rank: usize, tag: &str, subs: &[String]) -> PosBool {
        let roles = self.roles(a, subs);
        let loops = true_loops(a);
        let marked = a.marked().clone();
        let base = self.delta.len();
        let in_mask = (1u64 << self.inputs.len()) - 1;
        let target = |d: Letter, q: usize| -> PosBool {
            if loops[q] {
                let m = marked.contains(&q);
                let verdict = match kind {
                    PartKind::N => m,
                    PartKind::U => !m,
                };
                if verdict {
                    PosBool::True
                } else {
                    PosBool::False
                }
            } else {
                PosBool::Move(d, base + q)
            }
        };
        let mut delta = Vec::with_capacity(a.num_states);
        for q in 0..a.num_states {
            let mut parts = Vec::new();
            for t in a.outgoing(q) {
                let mut labels = Vec::new();
                let mut dir = Guard::TRUE;
                let mut subs_pos = Vec::new();
                let mut subs_neg = Vec::new();
                for (i, v) in t.guard.literals() {
                    match roles[i] {
                        PropRole::Input(k) => dir = dir.and(&Guard::lit(k, v)).unwrap(),
                        PropRole::Output(o) => labels.push(PosBool::Label(o, v)),
                        PropRole::Sub(j) if v => subs_pos.push(j),
                        PropRole::Sub(j) => subs_neg.push(j),
                    }
                }
                let dirs: Vec<Letter> = letters_of(in_mask).filter(|d| dir.matches(*d)).collect();
                match kind {
                    PartKind::N => {
                        // negative subformula literals are dropped: the body is monotone in them
                        let moves = PosBool::or(dirs.iter().map(|d| target(*d, t.dst)));
                        let inl = subs_pos.iter().map(|j| self.inline[*j].clone());
                        parts.push(PosBool::and(labels.into_iter().chain(inl).chain([moves])));
                    }
                    PartKind::U => {
                        // positive subformula literals are dropped: the negated body is antitone in them
                        let moves = PosBool::and(dirs.iter().map(|d| target(*d, t.dst)));
                        let escape = labels.into_iter().map(|l| match l {
                            PosBool::Label(o, v) => PosBool::Label(o, !v),
                            _ => unreachable!(),
                        });
                        let inl = subs_neg.iter().map(|j| self.inline[*j].clone());
                        parts.push(PosBool::or(escape.chain(inl).chain([moves])));
                    }
                }
            }
            delta.push(match kind {
                PartKind::N => PosBool::or(parts),
                PartKind::U => PosBool::and(parts),
            });
        }
        let init = if loops[a.initial] { target(0, a.initial) } else { delta[a.initial].clone() };
        for (q, d) in delta.into_iter().enumerate() {
            self.names.push(format!("{tag}.{q}"));
            self.delta.push(d);
            self.kinds.push((kind, rank));
            if marked.contains(&q) {
                self.acc.insert(base + q);
            }
        }
        init
    }

    fn finish(self, initial: usize) -> HesitantTreeAutomaton {
        // keep states reachable from the initial one
        let mut reach = BTreeSet::from([initial]);
        let mut stack = vec![initial];
        while let Some(q) = stack.pop() {
            let mut ms = BTreeSet::new();
            self.delta[q].moves(&mut ms);
            for (_, q2) in ms {
                if reach.insert(q2) {
                    stack.push(q2);
                }
            }
        }
        let map: BTreeMap<usize, usize> = reach.iter().enumerate().map(|(new, old)| (*old, new)).collect();
        let mut parts: BTreeMap<(usize, bool), Partition> = BTreeMap::new();
        for (&old, &new) in &map {
            let (kind, rank) = self.kinds[old];
            parts
                .entry((rank, kind == PartKind::U))
                .or_insert(Partition { states: vec![], kind, rank })
                .states
                .push(new);
        }
        HesitantTreeAutomaton {
            inputs: self.inputs.to_vec(),
            outputs: self.outputs.to_vec(),
            names: reach.iter().map(|q| self.names[*q].clone()).collect(),
            initial: map[&initial],
            delta: reach.iter().map(|q| self.delta[*q].renumber(&map)).collect(),
            partitions: parts.into_values().collect(),
            acc: self.acc.iter().filter_map(|q| map.get(q).copied()).collect(),
        }
    }
}

/// Tree variant of a word automaton over `inputs ∪ outputs`: one partition, kind from the mode.
pub fn tree_variant(a: &WordAutomaton, inputs: &[String], outputs: &[String]) -> HesitantTreeAutomaton {
    let mut b = Builder {
        inputs,
        outputs,
        names: vec![],
        delta: vec![],
        kinds: vec![],
        acc: StateSet::new(),
        inline: vec![],
    };
    let kind = match a.mode {
        Mode::Nondeterministic => PartKind::N,
        Mode::Universal => PartKind::U,
    };
    let init = b.add(a, kind, 0, "q", &[]);
    finish_with_top(b, init, a.initial, 0, 1)
}

/// Uses the entry's own initial state when it survived, else a fresh top state.
fn finish_with_top(mut b: Builder<'_>, top: PosBool, start: usize, base: usize, rank: usize) -> HesitantTreeAutomaton {
    let idx = base + start;
    let initial = if b.delta.get(idx) == Some(&top) && !matches!(top, PosBool::True | PosBool::False) {
        idx
    } else {
        b.names.push("top".into());
        b.delta.push(top);
        b.kinds.push((PartKind::N, rank));
        b.delta.len() - 1
    };
    b.finish(initial)
}

/// AHT for a PNF state formula over inputs `I` and outputs `O`.
pub fn ctlstar_to_aht(f: &Formula, inputs: &[String], outputs: &[String]) -> Result<HesitantTreeAutomaton, AhtError> {
    let reserved: BTreeSet<String> = inputs.iter().chain(outputs).cloned().collect();
    let table = decompose(f, &reserved);
    let subs = table.props();
    let mut b = Builder {
        inputs,
        outputs,
        names: vec![],
        delta: vec![],
        kinds: vec![],
        acc: StateSet::new(),
        inline: vec![],
    };
    let opts = NbwOptions { monotone_props: subs.iter().cloned().collect(), ..Default::default() };
    let mut starts = Vec::new();
    for (i, e) in table.entries.iter().enumerate() {
        let mut props: Vec<String> = reserved_order(inputs, outputs);
        props.extend(subs[..i].iter().cloned());
        let (a, kind) = match e.quantifier {
            Quantifier::E => (ltl_to_nbw_with(&e.body, &props, &opts)?, PartKind::N),
            Quantifier::A => (ucw_for_with(&e.body, &props, &opts)?, PartKind::U),
        };
        starts.push((b.delta.len(), a.initial));
        let init = b.add(&a, kind, i, &e.prop, &subs);
        b.inline.push(init);
    }
    // top-level Boolean combination
    let top = table.top.clone();
    let single = match &top {
        Formula::Atom { name, positive: true } => table.index_of(name),
        _ => None,
    };
    let aht = match single {
        Some(j) => {
            let (base, start) = starts[j];
            let t = b.inline[j].clone();
            finish_with_top(b, t, start, base, table.entries.len())
        }
        None => {
            let t = top_delta(&top, &b, outputs, &subs);
            let rank = table.entries.len();
            b.names.push("top".into());
            b.delta.push(t);
            b.kinds.push((PartKind::N, rank));
            let init = b.delta.len() - 1;
            b.finish(init)
        }
    };
    aht.check()?;
    Ok(aht)
}

fn reserved_order(inputs: &[String], outputs: &[String]) -> Vec<String> {
    inputs.iter().chain(outputs).cloned().collect()
}

fn top_delta(f: &Formula, b: &Builder<'_>, outputs: &[String], subs: &[String]) -> PosBool {
    match f {
        Formula::True => PosBool::True,
        Formula::False => PosBool::False,
        Formula::Atom { name, positive } => {
            if let Some(o) = outputs.iter().position(|x| x == name) {
                PosBool::Label(o, *positive)
            } else {
                let j = subs.iter().position(|x| x == name).expect("top-level atom must be an output or subformula");
                // propositions occur positively in PNF
                debug_assert!(*positive);
                b.inline[j].clone()
            }
        }
        Formula::And(xs) => PosBool::and(xs.iter().map(|x| top_delta(x, b, outputs, subs))),
        Formula::Or(xs) => PosBool::or(xs.iter().map(|x| top_delta(x, b, outputs, subs))),
        other => panic!("top-level formula is not Boolean: {other}"),
    }
}
