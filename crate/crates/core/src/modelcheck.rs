//! Explicit-state verification: LTL via product emptiness, CTL* via bottom-up labeling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::automaton::{ltl_to_nbw_with, AutomatonError, NbwOptions, WordAutomaton};
use crate::formula::Formula;
use crate::guard::{Letter, MAX_PROPS};
use crate::machine::Machine;
use crate::spec::{decompose, Quantifier};

/// Cap on explicitly enumerated input propositions.
pub const INPUT_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum McError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("machine has {0} inputs, more than the cap of {INPUT_CAP}")]
    TooManyInputs(usize),
}

/// An ultimately periodic computation `stem · loop^ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub props: Vec<String>,
    pub stem: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |ls: &[Letter]| {
            ls.iter()
                .map(|l| {
                    let names: Vec<&str> = self
                        .props
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| l >> i & 1 == 1)
                        .map(|(_, p)| p.as_str())
                        .collect();
                    format!("{{{}}}", names.join(","))
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(f, "stem: {} loop: {}", show(&self.stem), show(&self.cycle))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(Option<Counterexample>),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Path found by nested depth-first search: edges `(label, target)` from the start.
pub struct Lasso<N, L> {
    pub stem: Vec<(L, N)>,
    pub cycle: Vec<(L, N)>,
}

/// Nested DFS for a reachable accepting cycle.
pub fn nested_dfs<N, L, S, A>(init: N, succ: S, accepting: A) -> Option<Lasso<N, L>>
where
    N: Clone + Eq + Hash,
    L: Clone,
    S: Fn(&N) -> Vec<(L, N)>,
    A: Fn(&N) -> bool,
{
    // outer stack entries: node, incoming label, successors, next successor index
    type Frame<N, L> = (N, Option<L>, Vec<(L, N)>, usize);
    let mut blue: HashMap<N, bool> = HashMap::new(); // value: still on the outer stack
    let mut red: std::collections::HashSet<N> = Default::default();
    let mut outer: Vec<Frame<N, L>> = Vec::new();
    let s0 = succ(&init);
    blue.insert(init.clone(), true);
    outer.push((init, None, s0, 0));
    while let Some(top) = outer.last_mut() {
        if top.3 < top.2.len() {
            let (l, m) = top.2[top.3].clone();
            top.3 += 1;
            if !blue.contains_key(&m) {
                blue.insert(m.clone(), true);
                let sm = succ(&m);
                outer.push((m, Some(l), sm, 0));
            }
            continue;
        }
        let seed = top.0.clone();
        if accepting(&seed) {
            // inner search for a node on the outer stack
            let mut inner: Vec<(N, Option<L>, Vec<(L, N)>, usize)> =
                vec![(seed.clone(), None, succ(&seed), 0)];
            while let Some(it) = inner.last_mut() {
                if it.3 < it.2.len() {
                    let (l, m) = it.2[it.3].clone();
                    it.3 += 1;
                    if blue.get(&m) == Some(&true) {
                        // close the cycle at m
                        let pos = outer.iter().position(|f| f.0 == m).unwrap();
                        let stem: Vec<(L, N)> = outer[1..=pos]
                            .iter()
                            .map(|f| (f.1.clone().unwrap(), f.0.clone()))
                            .collect();
                        let mut cycle: Vec<(L, N)> = outer[pos + 1..]
                            .iter()
                            .map(|f| (f.1.clone().unwrap(), f.0.clone()))
                            .collect();
                        cycle.extend(inner[1..].iter().map(|f| (f.1.clone().unwrap(), f.0.clone())));
                        cycle.push((l, m));
                        return Some(Lasso { stem, cycle });
                    }
                    if red.insert(m.clone()) {
                        let sm = succ(&m);
                        inner.push((m, Some(l), sm, 0));
                    }
                } else {
                    inner.pop();
                }
            }
        }
        let f = outer.pop().unwrap();
        blue.insert(f.0, false);
    }
    None
}

fn check_inputs(m: &Machine) -> Result<(), McError> {
    if m.inputs.len() > INPUT_CAP {
        return Err(McError::TooManyInputs(m.inputs.len()));
    }
    Ok(())
}

/// Letters seen from machine state `t` with extra state labels appended above the machine props.
fn edges(m: &Machine, t: usize, extra: Letter, extra_shift: usize) -> Vec<(Letter, usize)> {
    (0..m.num_letters() as Letter)
        .map(|i| (m.letter(t, i) | (extra << extra_shift), m.next(t, i)))
        .collect()
}

fn accepting_lasso_from(
    m: &Machine,
    a: &WordAutomaton,
    start: usize,
    labels: &[Letter],
) -> Option<Lasso<(usize, usize), Letter>> {
    let shift = m.props().len();
    let f = a.marked().clone();
    nested_dfs(
        (a.initial, start),
        |&(q, t)| {
            let mut out = Vec::new();
            for (l, t2) in edges(m, t, labels[t], shift) {
                for q2 in a.successors(q, l) {
                    out.push((l, (q2, t2)));
                }
            }
            out
        },
        |(q, _)| f.contains(q),
    )
}

/// Checks that every computation of `m` satisfies the path formula.
pub fn mc_ltl(m: &Machine, phi: &Formula) -> Result<Verdict, McError> {
    check_inputs(m)?;
    let props = m.props();
    let a = ltl_to_nbw_with(&phi.negate(), &props, &NbwOptions { max_props: MAX_PROPS, ..Default::default() })?;
    let labels = vec![0; m.num_states()];
    Ok(match accepting_lasso_from(m, &a, 0, &labels) {
        None => Verdict::Holds,
        Some(l) => Verdict::Fails(Some(Counterexample {
            props,
            stem: l.stem.iter().map(|e| e.0).collect(),
            cycle: l.cycle.iter().map(|e| e.0).collect(),
        })),
    })
}

/// Per-state truth values of every quantified subformula, plus the verdict at the initial state.
pub fn label_states(m: &Machine, f: &Formula) -> Result<(Vec<BTreeSet<String>>, bool), McError> {
    check_inputs(m)?;
    let mut reserved: BTreeSet<String> = m.props().into_iter().collect();
    reserved.extend(f.atoms());
    let table = decompose(&f.to_pnf(), &reserved);
    let base = m.props();
    let mut labels: Vec<Letter> = vec![0; m.num_states()];
    for (idx, e) in table.entries.iter().enumerate() {
        let mut props = base.clone();
        props.extend(table.entries[..idx].iter().map(|x| x.prop.clone()));
        let opts = NbwOptions {
            max_props: MAX_PROPS,
            monotone_props: table.entries.iter().map(|x| x.prop.clone()).collect(),
        };
        let (phi, want) = match e.quantifier {
            Quantifier::E => (e.body.clone(), true),
            Quantifier::A => (e.body.negate(), false),
        };
        let a = ltl_to_nbw_with(&phi, &props, &opts)?;
        let sat: Vec<bool> = (0..m.num_states())
            .map(|t| accepting_lasso_from(m, &a, t, &labels).is_some() == want)
            .collect();
        for (t, s) in sat.into_iter().enumerate() {
            if s {
                labels[t] |= 1 << idx;
            }
        }
    }
    let names = table.props();
    let sets: Vec<BTreeSet<String>> = labels
        .iter()
        .map(|l| names.iter().enumerate().filter(|(i, _)| l >> i & 1 == 1).map(|(_, n)| n.clone()).collect())
        .collect();
    let out0 = m.output(0, 0);
    let top = table.top.eval_prop(&|name: &str| {
        if let Some(i) = names.iter().position(|n| n == name) {
            labels[0] >> i & 1 == 1
        } else if let Some(j) = m.outputs.iter().position(|o| o == name) {
            out0 >> j & 1 == 1
        } else {
            false
        }
    });
    Ok((sets, top.unwrap_or(false)))
}

/// Bottom-up CTL* model checking.
pub fn mc_ctl(m: &Machine, f: &Formula) -> Result<Verdict, McError> {
    let (_, v) = label_states(m, f)?;
    Ok(if v { Verdict::Holds } else { Verdict::Fails(None) })
}

/// Counts of reachable product states, for diagnostics.
pub fn product_size(m: &Machine, a: &WordAutomaton) -> usize {
    let mut seen = BTreeMap::new();
    let mut stack = vec![(a.initial, 0usize)];
    while let Some((q, t)) = stack.pop() {
        if seen.insert((q, t), ()).is_some() {
            continue;
        }
        for (l, t2) in edges(m, t, 0, 0) {
            for q2 in a.successors(q, l) {
                stack.push((q2, t2));
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::spec::Semantics;

    fn arbiter() -> Machine {
        Machine {
            kind: Semantics::Moore,
            inputs: vec!["r".into()],
            outputs: vec!["g".into()],
            trans: vec![vec![0, 1], vec![0, 0]],
            out: vec![vec![0], vec![1]],
        }
    }

    fn never_grant() -> Machine {
        Machine {
            kind: Semantics::Moore,
            inputs: vec!["r".into()],
            outputs: vec!["g".into()],
            trans: vec![vec![0, 0]],
            out: vec![vec![0]],
        }
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap().to_pnf()
    }

    #[test]
    fn constant_g_satisfies_globally_g() {
        let m = Machine {
            kind: Semantics::Moore,
            inputs: vec![],
            outputs: vec!["g".into()],
            trans: vec![vec![0]],
            out: vec![vec![1]],
        };
        assert!(mc_ltl(&m, &f("G g")).unwrap().holds());
    }

    #[test]
    fn arbiter_ltl() {
        assert!(mc_ltl(&arbiter(), &f("G (r -> F g)")).unwrap().holds());
        match mc_ltl(&arbiter(), &f("G !g")).unwrap() {
            Verdict::Fails(Some(cex)) => {
                let all: Vec<Letter> = cex.stem.iter().chain(cex.cycle.iter()).copied().collect();
                assert!(all.iter().any(|l| l & 0b10 != 0), "{cex}");
                assert!(cex.to_string().starts_with("stem: "));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resettable_arbiter_ctl() {
        let phi = f("E G !g & A G (r -> F g) & A G E F !g");
        assert!(mc_ctl(&arbiter(), &phi).unwrap().holds());
        assert!(!mc_ctl(&never_grant(), &phi).unwrap().holds());
        assert!(mc_ctl(&never_grant(), &Formula::True).unwrap().holds());
    }

    #[test]
    fn padding_preserves_verdicts() {
        let phi = f("E G !g & A G (r -> F g) & A G E F !g");
        assert!(mc_ctl(&arbiter().padded(), &phi).unwrap().holds());
        assert!(mc_ltl(&arbiter().padded(), &f("G (r -> F g)")).unwrap().holds());
    }
}
