//! Temporal formulas for LTL and CTL* with input and output atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Formula tree. `G`, `F` and `W` are stored desugared into `U` and `R`.
///
/// `Not` only appears before normalization; [`Formula::to_pnf`] removes it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom { name: String, positive: bool },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    PathA(Box<Formula>),
    PathE(Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Atom { name: name.into(), positive: true }
    }

    pub fn neg_atom(name: impl Into<String>) -> Formula {
        Atom { name: name.into(), positive: false }
    }

    pub fn not(f: Formula) -> Formula {
        Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => True,
            1 => fs.into_iter().next().unwrap(),
            _ => And(fs),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => False,
            1 => fs.into_iter().next().unwrap(),
            _ => Or(fs),
        }
    }

    pub fn next(f: Formula) -> Formula {
        Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Formula {
        Formula::release(False, f)
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::until(True, f)
    }

    /// `a W b` as `b R (a | b)`.
    pub fn weak_until(a: Formula, b: Formula) -> Formula {
        Formula::release(b.clone(), Formula::or(vec![a, b]))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![Formula::not(a), b])
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![
            Formula::and(vec![a.clone(), b.clone()]),
            Formula::and(vec![Formula::not(a), Formula::not(b)]),
        ])
    }

    pub fn path_a(f: Formula) -> Formula {
        PathA(Box::new(f))
    }

    pub fn path_e(f: Formula) -> Formula {
        PathE(Box::new(f))
    }

    /// Rewrites `G a & G b` into `G (a & b)` everywhere; keeps tableaux of large invariants small.
    pub fn merge_globally(&self) -> Formula {
        let rec = |f: &Formula| Box::new(f.merge_globally());
        match self {
            And(fs) => {
                let mut flat = Vec::new();
                let mut stack: Vec<Formula> = fs.iter().map(Formula::merge_globally).rev().collect();
                while let Some(f) = stack.pop() {
                    match f {
                        And(gs) => stack.extend(gs.into_iter().rev()),
                        f => flat.push(f),
                    }
                }
                let mut invariants = Vec::new();
                let mut rest = Vec::new();
                for f in flat {
                    match f {
                        Release(a, b) if *a == False => invariants.push(*b),
                        f => rest.push(f),
                    }
                }
                if !invariants.is_empty() {
                    rest.push(Formula::globally(Formula::and(invariants)));
                }
                Formula::and(rest)
            }
            Or(fs) => Or(fs.iter().map(Formula::merge_globally).collect()),
            Not(f) => Not(rec(f)),
            Next(f) => Next(rec(f)),
            PathA(f) => PathA(rec(f)),
            PathE(f) => PathE(rec(f)),
            Until(a, b) => Until(rec(a), rec(b)),
            Release(a, b) => Release(rec(a), rec(b)),
            True | False | Atom { .. } => self.clone(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            True | False | Atom { .. } => 0,
            Not(f) | Next(f) | PathA(f) | PathE(f) => f.size(),
            And(fs) | Or(fs) => fs.iter().map(Formula::size).sum(),
            Until(a, b) | Release(a, b) => a.size() + b.size(),
        }
    }

    pub fn is_pnf(&self) -> bool {
        match self {
            Not(_) => false,
            True | False | Atom { .. } => true,
            Next(f) | PathA(f) | PathE(f) => f.is_pnf(),
            And(fs) | Or(fs) => fs.iter().all(Formula::is_pnf),
            Until(a, b) | Release(a, b) => a.is_pnf() && b.is_pnf(),
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            PathA(_) | PathE(_) => true,
            True | False | Atom { .. } => false,
            Not(f) | Next(f) => f.has_quantifier(),
            And(fs) | Or(fs) => fs.iter().any(Formula::has_quantifier),
            Until(a, b) | Release(a, b) => a.has_quantifier() || b.has_quantifier(),
        }
    }

    pub fn has_temporal(&self) -> bool {
        match self {
            Next(_) | Until(..) | Release(..) => true,
            True | False | Atom { .. } | PathA(_) | PathE(_) => false,
            Not(f) => f.has_temporal(),
            And(fs) | Or(fs) => fs.iter().any(Formula::has_temporal),
        }
    }

    /// True when the formula contains no `U` (syntactically a safety property in PNF).
    pub fn is_syntactic_safety(&self) -> bool {
        match self {
            Until(..) | Not(_) => false,
            True | False | Atom { .. } => true,
            Next(f) | PathA(f) | PathE(f) => f.is_syntactic_safety(),
            And(fs) | Or(fs) => fs.iter().all(Formula::is_syntactic_safety),
            Release(a, b) => a.is_syntactic_safety() && b.is_syntactic_safety(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Atom { name, .. } => {
                out.insert(name.clone());
            }
            True | False => {}
            Not(f) | Next(f) | PathA(f) | PathE(f) => f.collect_atoms(out),
            And(fs) | Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Until(a, b) | Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Replaces atoms by formulas. Negative occurrences get the negated replacement.
    pub fn substitute(&self, map: &BTreeMap<String, Formula>) -> Formula {
        match self {
            Atom { name, positive } => match map.get(name) {
                Some(r) if *positive => r.clone(),
                Some(r) => r.negate(),
                None => self.clone(),
            },
            True | False => self.clone(),
            Not(f) => Formula::not(f.substitute(map)),
            Next(f) => Formula::next(f.substitute(map)),
            PathA(f) => Formula::path_a(f.substitute(map)),
            PathE(f) => Formula::path_e(f.substitute(map)),
            And(fs) => And(fs.iter().map(|f| f.substitute(map)).collect()),
            Or(fs) => Or(fs.iter().map(|f| f.substitute(map)).collect()),
            Until(a, b) => Formula::until(a.substitute(map), b.substitute(map)),
            Release(a, b) => Formula::release(a.substitute(map), b.substitute(map)),
        }
    }

    /// Renames atoms; atoms missing from the map are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Formula {
        let m = map
            .iter()
            .map(|(k, v)| (k.clone(), Formula::atom(v.clone())))
            .collect();
        self.substitute(&m)
    }

    /// Negation in release positive normal form.
    pub fn negate(&self) -> Formula {
        Formula::not(self.clone()).to_pnf()
    }

    /// Pushes negations to atoms and flattens nested conjunctions and disjunctions.
    pub fn to_pnf(&self) -> Formula {
        self.pnf(true)
    }

    fn pnf(&self, pos: bool) -> Formula {
        match self {
            True => {
                if pos {
                    True
                } else {
                    False
                }
            }
            False => {
                if pos {
                    False
                } else {
                    True
                }
            }
            Atom { name, positive } => Atom { name: name.clone(), positive: *positive == pos },
            Not(f) => f.pnf(!pos),
            And(fs) | Or(fs) => {
                let conj = matches!(self, And(_)) == pos;
                let mut out = Vec::new();
                for f in fs {
                    match (f.pnf(pos), conj) {
                        (And(gs), true) | (Or(gs), false) => out.extend(gs),
                        (g, _) => out.push(g),
                    }
                }
                if conj {
                    And(out)
                } else {
                    Or(out)
                }
            }
            Next(f) => Formula::next(f.pnf(pos)),
            Until(a, b) => {
                if pos {
                    Formula::until(a.pnf(true), b.pnf(true))
                } else {
                    Formula::release(a.pnf(false), b.pnf(false))
                }
            }
            Release(a, b) => {
                if pos {
                    Formula::release(a.pnf(true), b.pnf(true))
                } else {
                    Formula::until(a.pnf(false), b.pnf(false))
                }
            }
            PathA(f) => {
                if pos {
                    Formula::path_a(f.pnf(true))
                } else {
                    Formula::path_e(f.pnf(false))
                }
            }
            PathE(f) => {
                if pos {
                    Formula::path_e(f.pnf(true))
                } else {
                    Formula::path_a(f.pnf(false))
                }
            }
        }
    }

    /// Nesting depth of path quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            True | False | Atom { .. } => 0,
            PathA(f) | PathE(f) => 1 + f.quantifier_depth(),
            Not(f) | Next(f) => f.quantifier_depth(),
            And(fs) | Or(fs) => fs.iter().map(Formula::quantifier_depth).max().unwrap_or(0),
            Until(a, b) | Release(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
        }
    }

    /// Evaluates a propositional formula under an atom valuation.
    pub fn eval_prop(&self, val: &dyn Fn(&str) -> bool) -> Option<bool> {
        Some(match self {
            True => true,
            False => false,
            Atom { name, positive } => val(name) == *positive,
            Not(f) => !f.eval_prop(val)?,
            And(fs) => {
                let mut r = true;
                for f in fs {
                    r &= f.eval_prop(val)?;
                }
                r
            }
            Or(fs) => {
                let mut r = false;
                for f in fs {
                    r |= f.eval_prop(val)?;
                }
                r
            }
            _ => return None,
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Or(_) => 1,
            And(_) => 2,
            Until(..) | Release(..) => 3,
            _ => 4,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({})", self)
        } else {
            write!(f, "{}", self)
        }
    }
}

impl fmt::Display for Formula {
    /// Prints in the specification grammar; the output parses back to an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom { name, positive: true } => write!(f, "{name}"),
            Atom { name, positive: false } => write!(f, "!{name}"),
            Not(g) => {
                write!(f, "!")?;
                g.fmt_child(f, 4)
            }
            And(gs) if gs.is_empty() => write!(f, "true"),
            Or(gs) if gs.is_empty() => write!(f, "false"),
            And(gs) | Or(gs) => {
                let op = if matches!(self, And(_)) { " & " } else { " | " };
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    // children of the same kind are parenthesized so the tree shape survives
                    g.fmt_child(f, self.prec() + 1)?;
                }
                Ok(())
            }
            Next(g) => {
                write!(f, "X ")?;
                g.fmt_child(f, 4)
            }
            Release(a, b) if **a == False => {
                write!(f, "G ")?;
                b.fmt_child(f, 4)
            }
            Until(a, b) if **a == True => {
                write!(f, "F ")?;
                b.fmt_child(f, 4)
            }
            Until(a, b) | Release(a, b) => {
                let op = if matches!(self, Until(..)) { "U" } else { "R" };
                a.fmt_child(f, 4)?;
                write!(f, " {op} ")?;
                b.fmt_child(f, 4)
            }
            PathA(g) => {
                write!(f, "A ")?;
                g.fmt_child(f, 4)
            }
            PathE(g) => {
                write!(f, "E ")?;
                g.fmt_child(f, 4)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::atom("a")
    }
    fn b() -> Formula {
        Formula::atom("b")
    }

    #[test]
    fn negated_until_becomes_release() {
        let f = Formula::not(Formula::until(a(), b()));
        assert_eq!(
            f.to_pnf(),
            Formula::release(Formula::neg_atom("a"), Formula::neg_atom("b"))
        );
    }

    #[test]
    fn double_negation() {
        let f = Formula::not(Formula::not(a()));
        assert_eq!(f.to_pnf(), a());
    }

    #[test]
    fn negated_globally_is_eventually() {
        let f = Formula::not(Formula::globally(a()));
        assert_eq!(f.to_pnf(), Formula::eventually(Formula::neg_atom("a")));
    }

    #[test]
    fn quantifiers_dualize() {
        let f = Formula::not(Formula::path_a(Formula::globally(a())));
        assert_eq!(
            f.to_pnf(),
            Formula::path_e(Formula::eventually(Formula::neg_atom("a")))
        );
    }

    #[test]
    fn pnf_does_not_grow() {
        let f = Formula::not(Formula::and(vec![
            Formula::implies(a(), Formula::next(b())),
            Formula::not(Formula::until(a(), Formula::not(b()))),
        ]));
        let g = f.to_pnf();
        assert!(g.is_pnf());
        assert!(g.size() <= f.size());
        assert_eq!(g.to_pnf(), g);
    }

    #[test]
    fn safety_detection() {
        assert!(Formula::globally(a()).is_syntactic_safety());
        assert!(!Formula::eventually(a()).is_syntactic_safety());
    }

    #[test]
    fn invariants_merge() {
        let f = crate::parse_formula("G a & (G b & F c) & G !d").unwrap().to_pnf();
        assert_eq!(f.merge_globally(), crate::parse_formula("F c & G (a & b & !d)").unwrap().to_pnf());
        let g = crate::parse_formula("G a | G b").unwrap().to_pnf();
        assert_eq!(g.merge_globally(), g);
    }
}
