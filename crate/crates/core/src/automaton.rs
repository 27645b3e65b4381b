//! Word automata over letters from 2^props, and the LTL to Büchi tableau.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::Formula;
use crate::guard::{complement, simplify_cover, Guard, Letter, MAX_PROPS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("alphabet of {0} propositions exceeds the cap of {1}")]
    AlphabetTooLarge(usize, usize),
    #[error("proposition '{0}' is not in the alphabet")]
    UnknownProposition(String),
    #[error("formula must be a quantifier-free path formula")]
    NotPathFormula,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Nondeterministic,
    Universal,
}

pub type StateSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Acceptance {
    Buchi(StateSet),
    CoBuchi(StateSet),
    /// Pairs (A_i, G_i): visiting A_i infinitely often requires visiting G_i infinitely often.
    Streett(Vec<(StateSet, StateSet)>),
    /// Pairs (F_i, I_i): some pair has F_i finitely and I_i infinitely often.
    Rabin(Vec<(StateSet, StateSet)>),
    /// Priority per state; the minimal priority seen infinitely often must be even.
    Parity(Vec<u32>),
    GenBuchi(Vec<StateSet>),
    GenCoBuchi(Vec<StateSet>),
}

impl Acceptance {
    /// Evaluates the condition on the set of states visited infinitely often.
    pub fn holds(&self, inf: &StateSet) -> bool {
        let hits = |s: &StateSet| s.iter().any(|q| inf.contains(q));
        match self {
            Acceptance::Buchi(f) => hits(f),
            Acceptance::CoBuchi(f) => !hits(f),
            Acceptance::Streett(pairs) => pairs.iter().all(|(a, g)| !hits(a) || hits(g)),
            Acceptance::Rabin(pairs) => pairs.iter().any(|(f, i)| !hits(f) && hits(i)),
            Acceptance::Parity(p) => inf.iter().map(|q| p[*q]).min().is_some_and(|m| m % 2 == 0),
            Acceptance::GenBuchi(fs) => fs.iter().all(hits),
            Acceptance::GenCoBuchi(fs) => fs.iter().all(|f| !hits(f)),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Acceptance::Buchi(_) => "buchi",
            Acceptance::CoBuchi(_) => "cobuchi",
            Acceptance::Streett(_) => "streett",
            Acceptance::Rabin(_) => "rabin",
            Acceptance::Parity(_) => "parity",
            Acceptance::GenBuchi(_) => "genbuchi",
            Acceptance::GenCoBuchi(_) => "gencobuchi",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: usize,
    pub guard: Guard,
    pub dst: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordAutomaton {
    pub props: Vec<String>,
    pub num_states: usize,
    pub initial: usize,
    pub mode: Mode,
    pub transitions: Vec<Transition>,
    pub acceptance: Acceptance,
    /// Non-accepting state added by completion, if any.
    pub sink: Option<usize>,
}

impl WordAutomaton {
    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.src == q)
    }

    pub fn successors(&self, q: usize, letter: Letter) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.outgoing(q).filter(|t| t.guard.matches(letter)).map(|t| t.dst).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    /// States other than the completion sink.
    pub fn proper_state_count(&self) -> usize {
        self.num_states - usize::from(self.sink.is_some())
    }

    /// Every (state, letter) has a successor.
    pub fn is_complete(&self) -> bool {
        (0..self.num_states).all(|q| {
            let gs: Vec<Guard> = self.outgoing(q).map(|t| t.guard).collect();
            complement(&gs).is_empty()
        })
    }

    /// Büchi set for Büchi and co-Büchi automata.
    pub fn marked(&self) -> &StateSet {
        match &self.acceptance {
            Acceptance::Buchi(f) | Acceptance::CoBuchi(f) => f,
            _ => panic!("automaton has no single marked set"),
        }
    }

    /// Text form: header `states N init Q0 acc buchi {..}` and one `src <cube> dst` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let set = |x: &StateSet| {
            format!("{{{}}}", x.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" "))
        };
        let acc = match &self.acceptance {
            Acceptance::Buchi(f) | Acceptance::CoBuchi(f) => set(f),
            Acceptance::GenBuchi(fs) | Acceptance::GenCoBuchi(fs) => {
                fs.iter().map(set).collect::<Vec<_>>().join(" ")
            }
            Acceptance::Streett(ps) | Acceptance::Rabin(ps) => {
                ps.iter().map(|(a, b)| format!("({} {})", set(a), set(b))).collect::<Vec<_>>().join(" ")
            }
            Acceptance::Parity(p) => {
                format!("[{}]", p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            }
        };
        let mode = match self.mode {
            Mode::Nondeterministic => "",
            Mode::Universal => " universal",
        };
        let _ = writeln!(
            s,
            "states {} init {} acc {} {}{}",
            self.num_states,
            self.initial,
            self.acceptance.name(),
            acc,
            mode
        );
        let _ = writeln!(s, "props {}", self.props.join(" "));
        for t in &self.transitions {
            let _ = writeln!(s, "{} {} {}", t.src, t.guard.render(&self.props), t.dst);
        }
        s
    }

    /// Reads Büchi or co-Büchi automata in the form written by [`WordAutomaton::to_text`].
    pub fn from_text(text: &str) -> Result<WordAutomaton, AutomatonError> {
        let err = |m: &str| AutomatonError::Parse(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| err("empty input"))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        if words.len() < 6 || words[0] != "states" || words[2] != "init" || words[4] != "acc" {
            return Err(err("bad header"));
        }
        let num_states: usize = words[1].parse().map_err(|_| err("bad state count"))?;
        let initial: usize = words[3].parse().map_err(|_| err("bad initial state"))?;
        let rest = words[6..].join(" ");
        let universal = rest.ends_with("universal");
        let inside = rest.trim_end_matches("universal").trim();
        let set: StateSet = inside
            .trim_start_matches('{')
            .trim_end_matches('}')
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| err("bad state in set")))
            .collect::<Result<_, _>>()?;
        let acceptance = match words[5] {
            "buchi" => Acceptance::Buchi(set),
            "cobuchi" => Acceptance::CoBuchi(set),
            _ => return Err(err("only buchi and cobuchi can be read")),
        };
        let props_line = lines.next().ok_or_else(|| err("missing props line"))?;
        let props: Vec<String> = props_line
            .strip_prefix("props")
            .ok_or_else(|| err("missing props line"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let mut transitions = Vec::new();
        for l in lines {
            let ws: Vec<&str> = l.split_whitespace().collect();
            if ws.len() < 3 {
                return Err(err("bad transition"));
            }
            let src = ws[0].parse().map_err(|_| err("bad source"))?;
            let dst = ws[ws.len() - 1].parse().map_err(|_| err("bad target"))?;
            let guard = Guard::parse(&ws[1..ws.len() - 1].join(" "), &props).map_err(|m| err(&m))?;
            transitions.push(Transition { src, guard, dst });
        }
        Ok(WordAutomaton {
            props,
            num_states,
            initial,
            mode: if universal { Mode::Universal } else { Mode::Nondeterministic },
            transitions,
            acceptance,
            sink: None,
        })
    }
}

/// Tableau options.
#[derive(Clone, Debug)]
pub struct NbwOptions {
    pub max_props: usize,
    /// Propositions that must only occur positively in guards derived from positive occurrences.
    pub monotone_props: BTreeSet<String>,
}

impl Default for NbwOptions {
    fn default() -> Self {
        NbwOptions { max_props: MAX_PROPS, monotone_props: BTreeSet::new() }
    }
}

pub fn ltl_to_nbw(phi: &Formula, props: &[String]) -> Result<WordAutomaton, AutomatonError> {
    ltl_to_nbw_with(phi, props, &NbwOptions::default())
}

/// Universal co-Büchi automaton accepting exactly the words satisfying `phi`.
pub fn ucw_for(phi: &Formula, props: &[String]) -> Result<WordAutomaton, AutomatonError> {
    ucw_for_with(phi, props, &NbwOptions::default())
}

pub fn ucw_for_with(
    phi: &Formula,
    props: &[String],
    opts: &NbwOptions,
) -> Result<WordAutomaton, AutomatonError> {
    let mut a = ltl_to_nbw_with(&phi.negate(), props, opts)?;
    a.mode = Mode::Universal;
    let f = a.marked().clone();
    a.acceptance = Acceptance::CoBuchi(f);
    Ok(a)
}

#[derive(Clone, Debug)]
struct Branch {
    guard: Guard,
    next: BTreeSet<Formula>,
    postponed: BTreeSet<usize>,
}

struct Tableau<'a> {
    props: &'a [String],
    untils: Vec<Formula>,
    monotone: u64,
}

impl Tableau<'_> {
    fn literal(&self, f: &Formula) -> Option<Guard> {
        match f {
            Formula::Atom { name, positive } => {
                let i = self.props.iter().position(|p| p == name)?;
                Some(Guard::lit(i, *positive))
            }
            _ => None,
        }
    }

    fn expand(&self, todo: &mut Vec<Formula>, br: Branch, out: &mut Vec<Branch>) {
        let Some(f) = todo.pop() else {
            out.push(br);
            return;
        };
        let recurse = |extra: Vec<Formula>, br: Branch, out: &mut Vec<Branch>| {
            let mut t = todo.clone();
            t.extend(extra);
            self.expand(&mut t, br, out);
        };
        match &f {
            Formula::True => recurse(vec![], br, out),
            Formula::False => {}
            Formula::Atom { .. } => {
                if let Some(g) = br.guard.and(&self.literal(&f).unwrap()) {
                    recurse(vec![], Branch { guard: g, ..br }, out);
                }
            }
            Formula::And(fs) => recurse(fs.clone(), br, out),
            Formula::Or(fs) => {
                for g in fs {
                    recurse(vec![g.clone()], br.clone(), out);
                }
            }
            Formula::Next(g) => {
                let mut br = br;
                br.next.insert((**g).clone());
                recurse(vec![], br, out);
            }
            Formula::Until(a, b) => {
                recurse(vec![(**b).clone()], br.clone(), out);
                let idx = self.untils.iter().position(|u| *u == f).unwrap();
                let mut br2 = br;
                // a U b postponed needs !b now when b is a plain literal
                if let Some(lb) = self.literal(b) {
                    if lb.care & self.monotone == 0 {
                        let neg = Guard { care: lb.care, value: lb.value ^ lb.care };
                        match br2.guard.and(&neg) {
                            Some(g) => br2.guard = g,
                            None => return,
                        }
                    }
                }
                br2.next.insert(f.clone());
                br2.postponed.insert(idx);
                recurse(vec![(**a).clone()], br2, out);
            }
            Formula::Release(a, b) => {
                recurse(vec![(**a).clone(), (**b).clone()], br.clone(), out);
                let mut br2 = br;
                br2.next.insert(f.clone());
                recurse(vec![(**b).clone()], br2, out);
            }
            Formula::Not(_) | Formula::PathA(_) | Formula::PathE(_) => unreachable!(),
        }
    }

    fn branches(&self, state: &BTreeSet<Formula>) -> Vec<Branch> {
        let mut out = Vec::new();
        let mut todo: Vec<Formula> = state.iter().rev().cloned().collect();
        self.expand(
            &mut todo,
            Branch { guard: Guard::TRUE, next: BTreeSet::new(), postponed: BTreeSet::new() },
            &mut out,
        );
        let mut normalized: Vec<Branch> = out
            .into_iter()
            .filter_map(|mut b| {
                b.next = normalize(b.next)?;
                Some(b)
            })
            .collect();
        normalized.sort_by(|a, b| (&a.guard, &a.next, &a.postponed).cmp(&(&b.guard, &b.next, &b.postponed)));
        normalized.dedup_by(|a, b| a.guard == b.guard && a.next == b.next && a.postponed == b.postponed);
        // drop branches subsumed by a weaker one
        let n = normalized.len();
        let mut keep = vec![true; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || !keep[j] {
                    continue;
                }
                let (a, b) = (&normalized[j], &normalized[i]);
                if b.guard.implies(&a.guard)
                    && a.next.is_subset(&b.next)
                    && a.postponed.is_subset(&b.postponed)
                {
                    keep[i] = false;
                    break;
                }
            }
        }
        normalized.into_iter().zip(keep).filter(|(_, k)| *k).map(|(b, _)| b).collect()
    }
}

/// Flattens conjunctions and drops `true`; `None` if the set contains `false`.
fn normalize(set: BTreeSet<Formula>) -> Option<BTreeSet<Formula>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Formula> = set.into_iter().collect();
    while let Some(f) = stack.pop() {
        match f {
            Formula::True => {}
            Formula::False => return None,
            Formula::And(fs) => stack.extend(fs),
            other => {
                out.insert(other);
            }
        }
    }
    Some(out)
}

fn collect_untils(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Until(a, b) => {
            collect_untils(a, out);
            collect_untils(b, out);
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
        Formula::Release(a, b) => {
            collect_untils(a, out);
            collect_untils(b, out);
        }
        Formula::Next(g) => collect_untils(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_untils(g, out)),
        _ => {}
    }
}

/// Nondeterministic Büchi automaton for a quantifier-free PNF formula.
pub fn ltl_to_nbw_with(
    phi: &Formula,
    props: &[String],
    opts: &NbwOptions,
) -> Result<WordAutomaton, AutomatonError> {
    if props.len() > opts.max_props.min(MAX_PROPS) {
        return Err(AutomatonError::AlphabetTooLarge(props.len(), opts.max_props.min(MAX_PROPS)));
    }
    if phi.has_quantifier() {
        return Err(AutomatonError::NotPathFormula);
    }
    let phi = phi.to_pnf();
    for a in phi.atoms() {
        if !props.contains(&a) {
            return Err(AutomatonError::UnknownProposition(a));
        }
    }
    let mut untils = Vec::new();
    collect_untils(&phi, &mut untils);
    let monotone = props
        .iter()
        .enumerate()
        .filter(|(_, p)| opts.monotone_props.contains(*p))
        .fold(0u64, |m, (i, _)| m | (1 << i));
    let tab = Tableau { props, untils, monotone };
    let m = tab.untils.len();

    type Key = (BTreeSet<Formula>, usize);
    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut queue = VecDeque::new();
    let mut trans: Vec<Transition> = Vec::new();
    let mut cache: HashMap<BTreeSet<Formula>, Vec<Branch>> = HashMap::new();

    let init_set = normalize([phi].into()).unwrap_or_else(|| [Formula::False].into());
    let init: Key = (init_set, 0);
    ids.insert(init.clone(), 0);
    keys.push(init.clone());
    queue.push_back(init);
    while let Some(key) = queue.pop_front() {
        let src = ids[&key];
        if key.0.contains(&Formula::False) {
            continue;
        }
        let brs = cache.entry(key.0.clone()).or_insert_with(|| tab.branches(&key.0)).clone();
        for br in brs {
            let mut c = if key.1 == m { 0 } else { key.1 };
            while c < m && !br.postponed.contains(&c) {
                c += 1;
            }
            let nk: Key = (br.next.clone(), c);
            let dst = *ids.entry(nk.clone()).or_insert_with(|| {
                keys.push(nk.clone());
                queue.push_back(nk);
                keys.len() - 1
            });
            trans.push(Transition { src, guard: br.guard, dst });
        }
    }
    let n = keys.len();
    let accepting: Vec<bool> = keys.iter().map(|k| k.1 == m).collect();

    // acceptance only matters on states that lie on a cycle
    let on_cycle = states_on_cycles(n, &trans);
    let mut f: StateSet =
        (0..n).filter(|&q| accepting[q] && on_cycle[q]).collect();

    let mut trans = merge_parallel(trans);
    let mut num_states = n;
    let mut sink = None;
    for q in 0..n {
        let gs: Vec<Guard> = trans.iter().filter(|t| t.src == q).map(|t| t.guard).collect();
        let missing = complement(&gs);
        if !missing.is_empty() {
            let s = *sink.get_or_insert_with(|| {
                num_states += 1;
                num_states - 1
            });
            for g in simplify_cover(&missing) {
                trans.push(Transition { src: q, guard: g, dst: s });
            }
        }
    }
    if let Some(s) = sink {
        trans.push(Transition { src: s, guard: Guard::TRUE, dst: s });
        f.remove(&s);
    }
    Ok(WordAutomaton {
        props: props.to_vec(),
        num_states,
        initial: 0,
        mode: Mode::Nondeterministic,
        transitions: trans,
        acceptance: Acceptance::Buchi(f),
        sink,
    })
}

fn merge_parallel(trans: Vec<Transition>) -> Vec<Transition> {
    let mut groups: BTreeMap<(usize, usize), Vec<Guard>> = BTreeMap::new();
    let mut order = Vec::new();
    for t in &trans {
        let e = groups.entry((t.src, t.dst)).or_default();
        if e.is_empty() {
            order.push((t.src, t.dst));
        }
        e.push(t.guard);
    }
    let mut out = Vec::new();
    for k in order {
        for g in simplify_cover(&groups[&k]) {
            out.push(Transition { src: k.0, guard: g, dst: k.1 });
        }
    }
    out
}

/// Marks states that belong to a cycle (nontrivial SCC or self-loop).
pub fn states_on_cycles(n: usize, trans: &[Transition]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for t in trans {
        adj[t.src].push(t.dst);
    }
    let comp = tarjan(&adj);
    let mut size = vec![0usize; n];
    for &c in &comp {
        size[c] += 1;
    }
    (0..n)
        .map(|q| size[comp[q]] > 1 || adj[q].contains(&q))
        .collect()
}

/// Strongly connected component index per node (iterative Tarjan).
pub fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn props(ps: &[&str]) -> Vec<String> {
        ps.iter().map(|s| s.to_string()).collect()
    }

    fn nbw(s: &str, ps: &[&str]) -> WordAutomaton {
        ltl_to_nbw(&parse_formula(s).unwrap().to_pnf(), &props(ps)).unwrap()
    }

    #[test]
    fn true_is_one_accepting_state() {
        let a = nbw("true", &["g"]);
        assert_eq!(a.num_states, 1);
        assert!(a.marked().contains(&0));
        assert!(a.is_complete());
    }

    #[test]
    fn eventually_not_g_has_two_states() {
        let a = nbw("F !g", &["r", "g"]);
        assert_eq!(a.num_states, 2);
        assert_eq!(a.sink, None);
        assert_eq!(a.marked(), &StateSet::from([1]));
        let g = a.prop_index("g").unwrap();
        assert!(a.transitions.contains(&Transition { src: 0, guard: Guard::lit(g, true), dst: 0 }));
        assert!(a.transitions.contains(&Transition { src: 0, guard: Guard::lit(g, false), dst: 1 }));
        assert!(a.transitions.contains(&Transition { src: 1, guard: Guard::TRUE, dst: 1 }));
    }

    #[test]
    fn nested_next_has_five_states_and_sink() {
        let a = nbw("X (g & X (g & F !g))", &["g"]);
        assert_eq!(a.proper_state_count(), 5);
        assert!(a.sink.is_some());
        assert_eq!(a.marked().len(), 1);
        assert!(a.is_complete());
    }

    #[test]
    fn globally_not_g_has_sink() {
        let a = nbw("G !g", &["g"]);
        assert_eq!(a.proper_state_count(), 1);
        assert!(a.sink.is_some());
    }

    #[test]
    fn ucw_for_globally() {
        let u = ucw_for(&parse_formula("G p").unwrap(), &props(&["p"])).unwrap();
        assert_eq!(u.mode, Mode::Universal);
        assert_eq!(u.num_states, 2);
        assert_eq!(u.marked().len(), 1);
    }

    #[test]
    fn ucw_for_false_rejects_everything() {
        let u = ucw_for(&Formula::False, &props(&["p"])).unwrap();
        assert_eq!(u.num_states, 1);
        assert!(u.marked().contains(&0));
    }

    #[test]
    fn text_round_trip() {
        let a = nbw("G (r -> F g)", &["r", "g"]);
        let b = WordAutomaton::from_text(&a.to_text()).unwrap();
        assert_eq!(a.transitions, b.transitions);
        assert_eq!(a.acceptance, b.acceptance);
    }

    #[test]
    fn alphabet_cap() {
        let ps: Vec<String> = (0..65).map(|i| format!("p{i}")).collect();
        assert!(matches!(
            ltl_to_nbw(&Formula::True, &ps),
            Err(AutomatonError::AlphabetTooLarge(65, _))
        ));
    }
}
