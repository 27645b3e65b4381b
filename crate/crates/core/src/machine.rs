//! Finite-state Moore and Mealy machines with a dot-based text format.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guard::{cover_letters, Guard, Letter};
use crate::spec::Semantics;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("machine text line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("machine is malformed: {0}")]
    Malformed(String),
}

/// States are `0..n` with initial state 0. Letters over inputs index the transition rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub kind: Semantics,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// `trans[t][i]` for every input letter `i < 2^|inputs|`.
    pub trans: Vec<Vec<usize>>,
    /// Moore: one entry per state; Mealy: one entry per input letter.
    pub out: Vec<Vec<Letter>>,
}

impl Machine {
    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn num_letters(&self) -> usize {
        1 << self.inputs.len()
    }

    pub fn output(&self, t: usize, i: Letter) -> Letter {
        match self.kind {
            Semantics::Moore => self.out[t][0],
            Semantics::Mealy => self.out[t][i as usize],
        }
    }

    pub fn next(&self, t: usize, i: Letter) -> usize {
        self.trans[t][i as usize]
    }

    /// Inputs followed by outputs.
    pub fn props(&self) -> Vec<String> {
        self.inputs.iter().chain(self.outputs.iter()).cloned().collect()
    }

    /// Joint letter (inputs in the low bits, outputs above).
    pub fn letter(&self, t: usize, i: Letter) -> Letter {
        i | (self.output(t, i) << self.inputs.len())
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let n = self.num_states();
        if n == 0 {
            return Err(MachineError::Malformed("no states".into()));
        }
        if self.out.len() != n {
            return Err(MachineError::Malformed("output table size".into()));
        }
        for t in 0..n {
            if self.trans[t].len() != self.num_letters() {
                return Err(MachineError::Malformed(format!("state {t} is not total")));
            }
            if self.trans[t].iter().any(|&s| s >= n) {
                return Err(MachineError::Malformed(format!("state {t} has a dangling edge")));
            }
            let want = match self.kind {
                Semantics::Moore => 1,
                Semantics::Mealy => self.num_letters(),
            };
            if self.out[t].len() != want {
                return Err(MachineError::Malformed(format!("state {t} output row")));
            }
        }
        Ok(())
    }

    /// Renumbers states in BFS order from the initial state and drops unreachable ones.
    pub fn canonical(&self) -> Machine {
        let n = self.num_states();
        let mut map = vec![usize::MAX; n];
        let mut order = Vec::new();
        let mut q = VecDeque::from([0]);
        map[0] = 0;
        order.push(0);
        while let Some(t) = q.pop_front() {
            for i in 0..self.num_letters() {
                let s = self.trans[t][i];
                if map[s] == usize::MAX {
                    map[s] = order.len();
                    order.push(s);
                    q.push_back(s);
                }
            }
        }
        Machine {
            kind: self.kind,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            trans: order.iter().map(|&t| self.trans[t].iter().map(|&s| map[s]).collect()).collect(),
            out: order.iter().map(|&t| self.out[t].clone()).collect(),
        }
    }

    /// Adds an unreachable copy of the last state.
    pub fn padded(&self) -> Machine {
        let mut m = self.clone();
        let last = m.num_states() - 1;
        m.trans.push(m.trans[last].clone());
        m.out.push(m.out[last].clone());
        m
    }

    /// Keeps only the named outputs (in the given order).
    pub fn project_outputs(&self, keep: &[String]) -> Machine {
        let idx: Vec<usize> =
            keep.iter().map(|k| self.outputs.iter().position(|o| o == k).expect("unknown output")).collect();
        let proj = |o: Letter| {
            idx.iter().enumerate().fold(0, |acc, (j, &i)| acc | (((o >> i) & 1) << j))
        };
        Machine {
            kind: self.kind,
            inputs: self.inputs.clone(),
            outputs: keep.to_vec(),
            trans: self.trans.clone(),
            out: self.out.iter().map(|row| row.iter().map(|&o| proj(o)).collect()).collect(),
        }
    }

    /// Strong bisimilarity of two machines over the same interface, from their initial states.
    pub fn bisimilar(&self, other: &Machine) -> bool {
        if self.inputs != other.inputs || self.outputs != other.outputs || self.kind != other.kind {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            if !seen.insert((a, b)) {
                continue;
            }
            for i in 0..self.num_letters() as Letter {
                if self.output(a, i) != other.output(b, i) {
                    return false;
                }
                stack.push((self.next(a, i), other.next(b, i)));
            }
        }
        true
    }

    fn render_outputs(&self, o: Letter) -> String {
        if self.outputs.is_empty() {
            return "-".into();
        }
        self.outputs
            .iter()
            .enumerate()
            .map(|(j, name)| if o >> j & 1 == 1 { name.clone() } else { format!("!{name}") })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Graphviz output; also the input format of [`Machine::from_dot`].
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            Semantics::Moore => "moore",
            Semantics::Mealy => "mealy",
        };
        let _ = writeln!(s, "digraph machine {{");
        let _ = writeln!(s, "  // kind: {kind}");
        let _ = writeln!(s, "  // inputs: {}", self.inputs.join(" "));
        let _ = writeln!(s, "  // outputs: {}", self.outputs.join(" "));
        let _ = writeln!(s, "  init [shape=point];");
        let _ = writeln!(s, "  init -> t0;");
        let mask = (1u64 << self.inputs.len()) - 1;
        for t in 0..self.num_states() {
            match self.kind {
                Semantics::Moore => {
                    let _ = writeln!(
                        s,
                        "  t{t} [label=\"t{t}\\n{}\"];",
                        self.render_outputs(self.out[t][0])
                    );
                }
                Semantics::Mealy => {
                    let _ = writeln!(s, "  t{t} [label=\"t{t}\"];");
                }
            }
        }
        for t in 0..self.num_states() {
            let mut groups: BTreeMap<(usize, Letter), Vec<Letter>> = BTreeMap::new();
            for i in 0..self.num_letters() as Letter {
                let o = if self.kind == Semantics::Mealy { self.out[t][i as usize] } else { 0 };
                groups.entry((self.next(t, i), o)).or_default().push(i);
            }
            for ((dst, o), letters) in groups {
                for cube in cover_letters(&letters, mask) {
                    let mut label = cube.render(&self.inputs);
                    if self.kind == Semantics::Mealy {
                        label = format!("{label} / {}", self.render_outputs(o));
                    }
                    let _ = writeln!(s, "  t{t} -> t{dst} [label=\"{label}\"];");
                }
            }
        }
        let _ = writeln!(s, "}}");
        s
    }

    /// Parses the restricted dot form written by [`Machine::to_dot`].
    pub fn from_dot(text: &str) -> Result<Machine, MachineError> {
        let mut kind = None;
        let mut inputs: Option<Vec<String>> = None;
        let mut outputs: Option<Vec<String>> = None;
        let mut nodes: BTreeMap<usize, Option<Letter>> = BTreeMap::new();
        let mut edges: Vec<(usize, usize, usize, String)> = Vec::new();
        let state_id = |s: &str, line: usize| -> Result<usize, MachineError> {
            s.trim()
                .strip_prefix('t')
                .and_then(|x| x.parse().ok())
                .ok_or(MachineError::Parse { line, msg: format!("bad state name '{s}'") })
        };
        let label_of = |s: &str| -> Option<String> {
            let start = s.find("label=\"")? + 7;
            let end = s[start..].find('"')? + start;
            Some(s[start..end].to_string())
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let l = raw.trim();
            if let Some(rest) = l.strip_prefix("//") {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("kind:") {
                    kind = Some(match v.trim() {
                        "moore" => Semantics::Moore,
                        "mealy" => Semantics::Mealy,
                        other => {
                            return Err(MachineError::Parse { line, msg: format!("kind '{other}'") })
                        }
                    });
                } else if let Some(v) = rest.strip_prefix("inputs:") {
                    inputs = Some(v.split_whitespace().map(String::from).collect());
                } else if let Some(v) = rest.strip_prefix("outputs:") {
                    outputs = Some(v.split_whitespace().map(String::from).collect());
                }
                continue;
            }
            if l.is_empty() || l.starts_with("digraph") || l == "}" || l.starts_with("init") {
                continue;
            }
            let outs = outputs.clone().ok_or(MachineError::Parse { line, msg: "outputs header missing".into() })?;
            let parse_outs = |s: &str| -> Result<Letter, MachineError> {
                let s = s.trim();
                if s == "-" || s.is_empty() {
                    return Ok(0);
                }
                let g = Guard::parse(s, &outs).map_err(|msg| MachineError::Parse { line, msg })?;
                Ok(g.value)
            };
            if let Some((lhs, rhs)) = l.split_once("->") {
                let src = state_id(lhs, line)?;
                let dst_part = rhs.split('[').next().unwrap_or("");
                let dst = state_id(dst_part.trim_end_matches(';'), line)?;
                let label = label_of(rhs).unwrap_or_else(|| "true".into());
                edges.push((line, src, dst, label));
            } else {
                let name = l.split('[').next().unwrap_or("");
                let t = state_id(name, line)?;
                let label = label_of(l).unwrap_or_default();
                let o = match label.split_once("\\n") {
                    Some((_, o)) => Some(parse_outs(o)?),
                    None => None,
                };
                nodes.insert(t, o);
            }
        }
        let kind = kind.ok_or(MachineError::Parse { line: 0, msg: "kind header missing".into() })?;
        let inputs = inputs.ok_or(MachineError::Parse { line: 0, msg: "inputs header missing".into() })?;
        let outputs = outputs.ok_or(MachineError::Parse { line: 0, msg: "outputs header missing".into() })?;
        let n = nodes.keys().max().map_or(0, |m| m + 1);
        let letters = 1usize << inputs.len();
        let mut trans = vec![vec![usize::MAX; letters]; n];
        let mut out: Vec<Vec<Letter>> = match kind {
            Semantics::Moore => (0..n).map(|t| vec![nodes.get(&t).copied().flatten().unwrap_or(0)]).collect(),
            Semantics::Mealy => vec![vec![0; letters]; n],
        };
        for (line, src, dst, label) in edges {
            let (cube, o) = match label.split_once('/') {
                Some((c, o)) => (c.to_string(), Some(o.to_string())),
                None => (label.clone(), None),
            };
            let g = Guard::parse(&cube, &inputs).map_err(|msg| MachineError::Parse { line, msg })?;
            if src >= n || dst >= n {
                return Err(MachineError::Parse { line, msg: "edge to undeclared state".into() });
            }
            for i in 0..letters {
                if g.matches(i as Letter) {
                    trans[src][i] = dst;
                    if kind == Semantics::Mealy {
                        let o = o.as_deref().ok_or(MachineError::Parse { line, msg: "mealy edge without outputs".into() })?;
                        let outs = &outputs;
                        out[src][i] = if o.trim() == "-" {
                            0
                        } else {
                            Guard::parse(o, outs).map_err(|msg| MachineError::Parse { line, msg })?.value
                        };
                    }
                }
            }
        }
        let m = Machine { kind, inputs, outputs, trans, out };
        if m.trans.iter().flatten().any(|&s| s == usize::MAX) {
            return Err(MachineError::Malformed("transition function is not total".into()));
        }
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-state arbiter: grants one step after a request.
    pub(crate) fn arbiter() -> Machine {
        Machine {
            kind: Semantics::Moore,
            inputs: vec!["r".into()],
            outputs: vec!["g".into()],
            trans: vec![vec![0, 1], vec![0, 0]],
            out: vec![vec![0], vec![1]],
        }
    }

    #[test]
    fn dot_structure() {
        let d = arbiter().to_dot();
        let nodes = d.lines().filter(|l| l.contains("[label=\"t") && !l.contains("->")).count();
        assert_eq!(nodes, 2);
        assert_eq!(d.matches(" -> ").count(), 4);
    }

    #[test]
    fn dot_round_trip() {
        let m = arbiter();
        assert_eq!(Machine::from_dot(&m.to_dot()).unwrap(), m);
        let mealy = Machine {
            kind: Semantics::Mealy,
            inputs: vec!["a".into(), "b".into()],
            outputs: vec!["x".into()],
            trans: vec![vec![0, 1, 1, 0], vec![1, 1, 0, 0]],
            out: vec![vec![0, 1, 1, 0], vec![1, 1, 1, 0]],
        };
        assert_eq!(Machine::from_dot(&mealy.to_dot()).unwrap(), mealy);
    }

    #[test]
    fn canonical_drops_unreachable() {
        let m = arbiter().padded();
        assert_eq!(m.num_states(), 3);
        assert_eq!(m.canonical(), arbiter());
    }

    #[test]
    fn bisimulation() {
        let m = arbiter();
        assert!(m.bisimilar(&m.padded()));
        let mut other = m.clone();
        other.out[1] = vec![0];
        assert!(!m.bisimilar(&other));
    }
}
