//! Specifications, validation of state/path positions, and subformula decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::parser::is_identifier;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared proposition '{name}' at {line}:{col}")]
    UndeclaredProposition { name: String, line: usize, col: usize },
    #[error("input '{0}' used at a state-formula position")]
    InputAtStatePosition(String),
    #[error("temporal operator outside a path quantifier: {0}")]
    TemporalAtStatePosition(String),
    #[error("proposition '{0}' declared twice")]
    DuplicateProposition(String),
    #[error("'{0}' is not a valid proposition name")]
    InvalidName(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Semantics {
    Moore,
    Mealy,
}

impl Semantics {
    pub fn dual(self) -> Semantics {
        match self {
            Semantics::Moore => Semantics::Mealy,
            Semantics::Mealy => Semantics::Moore,
        }
    }
}

/// A synthesis problem statement. The formula is stored in PNF; LTL bodies are wrapped in `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Specification {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub semantics: Semantics,
    pub formula: Formula,
}

impl Specification {
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        semantics: Semantics,
        formula: Formula,
    ) -> Result<Specification, SpecError> {
        let mut seen = BTreeSet::new();
        for p in inputs.iter().chain(outputs.iter()) {
            if !is_identifier(p) {
                return Err(SpecError::InvalidName(p.clone()));
            }
            if !seen.insert(p.clone()) {
                return Err(SpecError::DuplicateProposition(p.clone()));
            }
        }
        for a in formula.atoms() {
            if !seen.contains(&a) {
                return Err(SpecError::UndeclaredProposition { name: a, line: 0, col: 0 });
            }
        }
        let f = formula.to_pnf();
        let f = if f.has_quantifier() {
            check_state(&f, &inputs)?;
            f
        } else {
            Formula::path_a(f)
        };
        Ok(Specification { inputs, outputs, semantics, formula: f })
    }

    /// Builds an LTL specification from a quantifier-free body.
    pub fn ltl(
        inputs: &[&str],
        outputs: &[&str],
        semantics: Semantics,
        body: Formula,
    ) -> Result<Specification, SpecError> {
        Specification::new(
            inputs.iter().map(|s| s.to_string()).collect(),
            outputs.iter().map(|s| s.to_string()).collect(),
            semantics,
            body,
        )
    }

    /// The quantifier-free body if the formula is `A φ` with LTL `φ`.
    pub fn ltl_body(&self) -> Option<&Formula> {
        match &self.formula {
            Formula::PathA(b) if !b.has_quantifier() => Some(b),
            _ => None,
        }
    }

    pub fn is_ltl(&self) -> bool {
        self.ltl_body().is_some()
    }

    pub fn props(&self) -> Vec<String> {
        self.inputs.iter().chain(self.outputs.iter()).cloned().collect()
    }

    /// Swapped inputs and outputs, negated body and opposite machine kind.
    pub fn dual(&self) -> Option<Specification> {
        let body = self.ltl_body()?;
        Some(Specification {
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            semantics: self.semantics.dual(),
            formula: Formula::path_a(body.negate()),
        })
    }
}

fn check_state(f: &Formula, inputs: &[String]) -> Result<(), SpecError> {
    match f {
        Formula::True | Formula::False => Ok(()),
        Formula::Atom { name, .. } => {
            if inputs.contains(name) {
                Err(SpecError::InputAtStatePosition(name.clone()))
            } else {
                Ok(())
            }
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|g| check_state(g, inputs)),
        Formula::PathA(b) | Formula::PathE(b) => check_path(b, inputs),
        other => Err(SpecError::TemporalAtStatePosition(other.to_string())),
    }
}

fn check_path(f: &Formula, inputs: &[String]) -> Result<(), SpecError> {
    match f {
        Formula::PathA(_) | Formula::PathE(_) => check_state(f, inputs),
        Formula::True | Formula::False | Formula::Atom { .. } => Ok(()),
        Formula::Not(g) | Formula::Next(g) => check_path(g, inputs),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|g| check_path(g, inputs)),
        Formula::Until(a, b) | Formula::Release(a, b) => {
            check_path(a, inputs)?;
            check_path(b, inputs)
        }
    }
}

impl fmt::Display for Specification {
    /// Prints in the file grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {};", self.inputs.join(", "))?;
        writeln!(f, "outputs {};", self.outputs.join(", "))?;
        let sem = match self.semantics {
            Semantics::Moore => "moore",
            Semantics::Mealy => "mealy",
        };
        writeln!(f, "{sem};")?;
        writeln!(f, "formula {};", self.formula)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    A,
    E,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubformulaEntry {
    pub prop: String,
    pub quantifier: Quantifier,
    /// Quantifier-free path formula over the original atoms and earlier propositions.
    pub body: Formula,
    pub depth: usize,
}

impl SubformulaEntry {
    pub fn formula(&self) -> Formula {
        match self.quantifier {
            Quantifier::A => Formula::path_a(self.body.clone()),
            Quantifier::E => Formula::path_e(self.body.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubformulaTable {
    pub entries: Vec<SubformulaEntry>,
    /// Boolean combination of outputs and entry propositions.
    pub top: Formula,
}

impl SubformulaTable {
    pub fn props(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.prop.clone()).collect()
    }

    pub fn index_of(&self, prop: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.prop == prop)
    }

    /// Substitutes every proposition by its quantified subformula.
    pub fn reconstruct(&self) -> Formula {
        let mut map: BTreeMap<String, Formula> = BTreeMap::new();
        for e in &self.entries {
            let f = e.formula().substitute(&map);
            map.insert(e.prop.clone(), f);
        }
        self.top.substitute(&map)
    }
}

/// Picks a prefix such that `prefix{n}` never clashes with a reserved name.
pub fn fresh_prefix(base: &str, reserved: &BTreeSet<String>) -> String {
    let mut prefix = base.to_string();
    while reserved.iter().any(|r| {
        r.strip_prefix(prefix.as_str())
            .is_some_and(|rest| rest.starts_with(|c: char| c.is_ascii_digit()))
    }) {
        prefix.push('_');
    }
    prefix
}

/// Splits a PNF state formula into quantified subformulas, innermost first.
pub fn decompose(f: &Formula, reserved: &BTreeSet<String>) -> SubformulaTable {
    let prefix = fresh_prefix("p", reserved);
    let mut raw: Vec<(String, Quantifier, Formula, usize)> = Vec::new();
    let top = abstract_quantifiers(f, &prefix, &mut raw);
    // stable sort by depth keeps references pointing backwards
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by_key(|&i| raw[i].3);
    let rename: BTreeMap<String, String> = order
        .iter()
        .enumerate()
        .map(|(new, &old)| (raw[old].0.clone(), format!("{prefix}{}", new + 1)))
        .collect();
    let entries = order
        .iter()
        .map(|&i| SubformulaEntry {
            prop: rename[&raw[i].0].clone(),
            quantifier: raw[i].1,
            body: raw[i].2.rename(&rename),
            depth: raw[i].3,
        })
        .collect();
    SubformulaTable { entries, top: top.rename(&rename) }
}

fn abstract_quantifiers(
    f: &Formula,
    prefix: &str,
    raw: &mut Vec<(String, Quantifier, Formula, usize)>,
) -> Formula {
    match f {
        Formula::PathA(b) | Formula::PathE(b) => {
            let q = if matches!(f, Formula::PathA(_)) { Quantifier::A } else { Quantifier::E };
            let body = abstract_quantifiers(b, prefix, raw);
            let depth = f.quantifier_depth();
            if let Some((name, ..)) = raw.iter().find(|e| e.1 == q && e.2 == body) {
                return Formula::atom(name.clone());
            }
            let name = format!("{prefix}tmp{}", raw.len());
            raw.push((name.clone(), q, body, depth));
            Formula::atom(name)
        }
        Formula::True | Formula::False | Formula::Atom { .. } => f.clone(),
        Formula::Not(g) => Formula::not(abstract_quantifiers(g, prefix, raw)),
        Formula::Next(g) => Formula::next(abstract_quantifiers(g, prefix, raw)),
        Formula::And(gs) => {
            Formula::And(gs.iter().map(|g| abstract_quantifiers(g, prefix, raw)).collect())
        }
        Formula::Or(gs) => {
            Formula::Or(gs.iter().map(|g| abstract_quantifiers(g, prefix, raw)).collect())
        }
        Formula::Until(a, b) => Formula::until(
            abstract_quantifiers(a, prefix, raw),
            abstract_quantifiers(b, prefix, raw),
        ),
        Formula::Release(a, b) => Formula::release(
            abstract_quantifiers(a, prefix, raw),
            abstract_quantifiers(b, prefix, raw),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_spec};

    fn pnf(s: &str) -> Formula {
        parse_formula(s).unwrap().to_pnf()
    }

    #[test]
    fn minimal_spec() {
        let s = parse_spec("inputs r; outputs g; moore; formula A G (r -> F g);").unwrap();
        assert_eq!(s.inputs, vec!["r"]);
        assert_eq!(s.outputs, vec!["g"]);
        assert!(s.is_ltl());
    }

    #[test]
    fn input_at_state_position_rejected() {
        let e = parse_spec("inputs r; outputs g; moore; formula (r & g) & A G g;").unwrap_err();
        assert_eq!(e, SpecError::InputAtStatePosition("r".into()));
        // under a path quantifier the same conjunction is a path formula
        assert!(parse_spec("inputs r; outputs g; moore; formula E (r & g);").is_ok());
        // without any quantifier the formula is LTL and implicitly universal
        assert!(parse_spec("inputs r; outputs g; moore; formula r & g;").is_ok());
    }

    #[test]
    fn undeclared_rejected() {
        let e = parse_spec("inputs r; outputs g; moore; formula A G x;").unwrap_err();
        assert!(matches!(e, SpecError::UndeclaredProposition { ref name, .. } if name == "x"));
    }

    #[test]
    fn decompose_nested_example() {
        let t = decompose(&pnf("E G (g -> g U A X !g)"), &BTreeSet::new());
        assert_eq!(t.entries.len(), 2);
        assert_eq!(t.entries[0].formula(), pnf("A X !g"));
        assert_eq!(t.entries[1].formula(), pnf("E G (g -> g U p1)"));
        assert_eq!(t.top, Formula::atom("p2"));
        assert_eq!(t.reconstruct(), pnf("E G (g -> g U A X !g)"));
    }

    #[test]
    fn decompose_single() {
        let t = decompose(&pnf("A G g"), &BTreeSet::new());
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].quantifier, Quantifier::A);
        assert_eq!(t.top, Formula::atom("p1"));
    }

    #[test]
    fn decompose_conjunction_with_output() {
        let t = decompose(&pnf("g & A G E F !g"), &BTreeSet::new());
        assert_eq!(t.entries[0].formula(), pnf("E F !g"));
        assert_eq!(t.entries[1].formula(), pnf("A G p1"));
        assert_eq!(t.top, pnf("g & p2"));
    }

    #[test]
    fn decompose_avoids_clashes() {
        let reserved: BTreeSet<String> = ["p1".to_string()].into();
        let t = decompose(&pnf("A G p1"), &reserved);
        assert_eq!(t.entries[0].prop, "p_1");
    }

    #[test]
    fn dual_spec() {
        let s = parse_spec("inputs r; outputs g; moore; formula G g;").unwrap();
        let d = s.dual().unwrap();
        assert_eq!(d.inputs, vec!["g"]);
        assert_eq!(d.semantics, Semantics::Mealy);
        assert_eq!(d.formula, pnf("A F !g"));
    }
}
