//! Rank comparison templates certifying acceptance of product lassos.
//!
//! A scheme owns a list of integer rank components per product state. `cmp` relates the
//! components at `(q, t)` with those at a successor, given as term builders.

use crate::automaton::{Acceptance, StateSet};
use crate::smt::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankKind {
    Buchi(StateSet),
    CoBuchi(StateSet),
    /// Pairs (A_i, G_i).
    Streett(Vec<(StateSet, StateSet)>),
    /// Pairs (F_i, I_i) with counters bounded by `bound`.
    Rabin { pairs: Vec<(StateSet, StateSet)>, bound: i64 },
    Generalized(Vec<RankKind>),
}

/// One integer rank component: its name and optional inclusive range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub range: (i64, Option<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankScheme {
    pub kind: RankKind,
    pub components: Vec<Component>,
}

/// Streett pairs equivalent to a min-even parity condition.
pub fn parity_to_streett(priorities: &[u32]) -> Vec<(StateSet, StateSet)> {
    let max = priorities.iter().copied().max().unwrap_or(0);
    (1..=max.div_ceil(2))
        .map(|i| {
            let a = (0..priorities.len()).filter(|q| priorities[*q] == 2 * i - 1).collect();
            let g = (0..priorities.len()).filter(|q| priorities[*q] % 2 == 0 && priorities[*q] < 2 * i).collect();
            (a, g)
        })
        .collect()
}

fn components_of(kind: &RankKind, prefix: &str) -> Vec<Component> {
    let c = |n: String, hi: Option<i64>, lo: i64| Component { name: format!("{prefix}{n}"), range: (lo, hi) };
    match kind {
        RankKind::Buchi(_) | RankKind::CoBuchi(_) => vec![c("r".into(), None, 0)],
        RankKind::Streett(pairs) => (1..=pairs.len()).map(|i| c(format!("r{i}"), None, 0)).collect(),
        RankKind::Rabin { pairs, bound } => {
            let k = pairs.len() as i64;
            let mut v = vec![c("b".into(), Some(*bound), 0)];
            for l in 1..=pairs.len() {
                v.push(c(format!("j{l}"), Some(k), 1));
                v.push(c(format!("d{l}"), Some(*bound), 0));
            }
            v
        }
        RankKind::Generalized(parts) => parts
            .iter()
            .enumerate()
            .flat_map(|(i, p)| components_of(p, &format!("{prefix}g{i}")))
            .collect(),
    }
}

impl RankScheme {
    pub fn new(kind: RankKind) -> RankScheme {
        let components = components_of(&kind, "");
        RankScheme { kind, components }
    }

    /// Scheme for an acceptance condition; `bound` is the product size `|Q×T|` (used by Rabin).
    pub fn for_acceptance(acc: &Acceptance, bound: usize) -> RankScheme {
        let kind = match acc {
            Acceptance::Buchi(f) => RankKind::Buchi(f.clone()),
            Acceptance::CoBuchi(f) => RankKind::CoBuchi(f.clone()),
            Acceptance::Streett(p) => RankKind::Streett(p.clone()),
            Acceptance::Rabin(p) => RankKind::Rabin { pairs: p.clone(), bound: bound as i64 },
            Acceptance::Parity(pr) => RankKind::Streett(parity_to_streett(pr)),
            Acceptance::GenBuchi(fs) => RankKind::Generalized(fs.iter().cloned().map(RankKind::Buchi).collect()),
            Acceptance::GenCoBuchi(fs) => RankKind::Generalized(fs.iter().cloned().map(RankKind::CoBuchi).collect()),
        };
        RankScheme::new(kind)
    }

    /// Range side constraints for one product state's components.
    pub fn domain(&self, rank: &dyn Fn(usize) -> Term) -> Term {
        Term::and(self.components.iter().enumerate().map(|(i, c)| match c.range {
            (lo, Some(hi)) => Term::in_range(rank(i), lo, hi),
            (lo, None) => Term::ge(rank(i), Term::Int(lo)),
        }))
    }

    /// `rank(q,t) ▷_q rank(q',t')`; `cur` and `next` map component indices to terms.
    pub fn cmp(&self, q: usize, cur: &dyn Fn(usize) -> Term, next: &dyn Fn(usize) -> Term) -> Term {
        cmp_kind(&self.kind, q, 0, cur, next).0
    }
}

fn gt(cur: &dyn Fn(usize) -> Term, next: &dyn Fn(usize) -> Term, i: usize) -> Term {
    Term::gt(cur(i), next(i))
}

fn ge(cur: &dyn Fn(usize) -> Term, next: &dyn Fn(usize) -> Term, i: usize) -> Term {
    Term::ge(cur(i), next(i))
}

/// Returns the template and the number of components consumed from `base`.
fn cmp_kind(
    kind: &RankKind,
    q: usize,
    base: usize,
    cur: &dyn Fn(usize) -> Term,
    next: &dyn Fn(usize) -> Term,
) -> (Term, usize) {
    match kind {
        RankKind::Buchi(f) => (if f.contains(&q) { Term::Bool(true) } else { gt(cur, next, base) }, 1),
        RankKind::CoBuchi(f) => (if f.contains(&q) { gt(cur, next, base) } else { ge(cur, next, base) }, 1),
        RankKind::Streett(pairs) => {
            let t = Term::and(pairs.iter().enumerate().map(|(i, (a, g))| {
                if g.contains(&q) {
                    Term::Bool(true)
                } else if a.contains(&q) {
                    gt(cur, next, base + i)
                } else {
                    ge(cur, next, base + i)
                }
            }));
            (t, pairs.len())
        }
        RankKind::Rabin { pairs, .. } => (rabin(pairs, q, base, cur, next), 1 + 2 * pairs.len()),
        RankKind::Generalized(parts) => {
            let mut used = 0;
            let mut conj = Vec::new();
            for p in parts {
                let (t, n) = cmp_kind(p, q, base + used, cur, next);
                conj.push(t);
                used += n;
            }
            (Term::and(conj), used)
        }
    }
}

/// Four-line Rabin template. Component layout: `b, j1, d1, ..., jk, dk`.
fn rabin(
    pairs: &[(StateSet, StateSet)],
    q: usize,
    base: usize,
    cur: &dyn Fn(usize) -> Term,
    next: &dyn Fn(usize) -> Term,
) -> Term {
    let b = base;
    let j = |l: usize| base + 2 * l - 1;
    let d = |l: usize| base + 2 * l;
    // "q ∈ S_{j_m}" as a disjunction over the concrete pair indices
    let member = |m: usize, pick: &dyn Fn(&(StateSet, StateSet)) -> bool| {
        Term::or(
            pairs
                .iter()
                .enumerate()
                .filter(|(_, p)| pick(p))
                .map(|(i, _)| Term::eq(cur(j(m)), Term::Int(i as i64 + 1))),
        )
    };
    let in_f = |m: usize| member(m, &|p| p.0.contains(&q));
    let not_f_upto = |l: usize| Term::and((1..=l).map(|m| Term::not(in_f(m))));
    let eq = |i: usize| Term::eq(cur(i), next(i));
    // equality of the prefix b, j1, d1, ..., up to and including component index `last`
    let prefix_eq = |last: usize| Term::and((base..=last).map(eq));
    let mut lines = vec![gt(cur, next, b)];
    for l in 1..=pairs.len() {
        lines.push(Term::and([prefix_eq(j(l) - 1), gt(cur, next, j(l)), not_f_upto(l - 1)]));
        lines.push(Term::and([prefix_eq(j(l)), gt(cur, next, d(l)), not_f_upto(l)]));
        lines.push(Term::and([prefix_eq(j(l)), member(l, &|p| p.1.contains(&q)), not_f_upto(l)]));
    }
    Term::or(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> StateSet {
        xs.iter().copied().collect()
    }

    fn cur(i: usize) -> Term {
        Term::var(format!("c{i}"))
    }

    fn nxt(i: usize) -> Term {
        Term::var(format!("n{i}"))
    }

    #[test]
    fn buchi_templates() {
        let s = RankScheme::new(RankKind::Buchi(set(&[0])));
        assert_eq!(s.cmp(0, &cur, &nxt), Term::Bool(true));
        assert_eq!(s.cmp(1, &cur, &nxt), Term::gt(cur(0), nxt(0)));
        let all = RankScheme::new(RankKind::Buchi(set(&[0, 1])));
        assert!((0..2).all(|q| all.cmp(q, &cur, &nxt) == Term::Bool(true)));
    }

    #[test]
    fn cobuchi_templates() {
        let s = RankScheme::new(RankKind::CoBuchi(set(&[0])));
        assert_eq!(s.cmp(0, &cur, &nxt), Term::gt(cur(0), nxt(0)));
        assert_eq!(s.cmp(1, &cur, &nxt), Term::ge(cur(0), nxt(0)));
    }

    #[test]
    fn streett_templates() {
        let s = RankScheme::new(RankKind::Streett(vec![(set(&[1]), set(&[0]))]));
        assert_eq!(s.cmp(0, &cur, &nxt), Term::Bool(true));
        assert_eq!(s.cmp(1, &cur, &nxt), Term::gt(cur(0), nxt(0)));
        assert_eq!(s.cmp(2, &cur, &nxt), Term::ge(cur(0), nxt(0)));
        assert_eq!(RankScheme::new(RankKind::Streett(vec![])).cmp(0, &cur, &nxt), Term::Bool(true));
    }

    #[test]
    fn parity_pairs() {
        assert!(parity_to_streett(&[0]).is_empty());
        assert_eq!(parity_to_streett(&[1, 0]), vec![(set(&[0]), set(&[1]))]);
        let p = parity_to_streett(&[3, 2, 1, 0]);
        assert_eq!(p, vec![(set(&[2]), set(&[3])), (set(&[0]), set(&[1, 3]))]);
    }

    #[test]
    fn rabin_components_and_domains() {
        let s = RankScheme::new(RankKind::Rabin { pairs: vec![(set(&[0]), set(&[1]))], bound: 6 });
        let names: Vec<_> = s.components.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["b", "j1", "d1"]);
        assert_eq!(s.components[1].range, (1, Some(1)));
        assert_eq!(s.components[2].range, (0, Some(6)));
    }

    #[test]
    fn rabin_in_f_leaves_only_b_line() {
        let s = RankScheme::new(RankKind::Rabin { pairs: vec![(set(&[0]), set(&[1]))], bound: 4 });
        let t = s.cmp(0, &cur, &nxt);
        // with j1 = 1 and q ∈ F_1, only b > b' can hold
        let env = |vals: [i64; 6]| {
            move |n: &str, _: &[crate::smt::Value]| {
                let i: usize = n[1..].parse().unwrap();
                let off = if n.starts_with('c') { 0 } else { 3 };
                Ok(crate::smt::Value::Int(vals[off + i]))
            }
        };
        let ev = |v| t.eval(&env(v)).unwrap().as_bool().unwrap();
        assert!(ev([2, 1, 0, 1, 1, 0]));
        assert!(!ev([2, 1, 3, 2, 1, 0])); // d decreases but q ∈ F_1
    }

    #[test]
    fn rabin_fourth_line_resets_distance() {
        let s = RankScheme::new(RankKind::Rabin { pairs: vec![(set(&[]), set(&[1]))], bound: 4 });
        let t = s.cmp(1, &cur, &nxt);
        let env = |n: &str, _: &[crate::smt::Value]| {
            let vals = [0, 1, 0, 0, 1, 4];
            let i: usize = n[1..].parse().unwrap();
            Ok(crate::smt::Value::Int(vals[if n.starts_with('c') { i } else { 3 + i }]))
        };
        assert_eq!(t.eval(&env).unwrap(), crate::smt::Value::Bool(true));
    }

    #[test]
    fn generalized_offsets_components() {
        let s = RankScheme::new(RankKind::Generalized(vec![RankKind::Buchi(set(&[0])), RankKind::Buchi(set(&[1]))]));
        assert_eq!(s.components.len(), 2);
        assert_eq!(s.cmp(0, &cur, &nxt), Term::gt(cur(1), nxt(1)));
        let single = RankScheme::new(RankKind::Generalized(vec![RankKind::Buchi(set(&[0]))]));
        assert_eq!(single.cmp(1, &cur, &nxt), RankScheme::new(RankKind::Buchi(set(&[0]))).cmp(1, &cur, &nxt));
    }
}
