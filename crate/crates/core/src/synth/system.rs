//! Systems as seen by the encoders: concrete states, symbolic successors and letters.

use crate::guard::Letter;
use crate::machine::Machine;
use crate::smt::{Query, Sort, Term, Value};
use crate::spec::Semantics;

/// One step out of a concrete system state.
#[derive(Clone, Debug)]
pub struct SysEdge {
    /// Direction (letter over the system inputs).
    pub dir: Letter,
    /// Truth of each system proposition on this step, in `props()` order.
    pub props: Vec<Term>,
    /// Successor state components.
    pub succ: Vec<Term>,
}

pub trait SystemEncoding {
    /// Inputs then outputs; the order of `SysEdge::props`.
    fn props(&self) -> Vec<String>;
    fn num_inputs(&self) -> usize;
    /// Int components per system state.
    fn arity(&self) -> usize;
    /// Every concrete state the encoder must constrain.
    fn states(&self) -> Vec<Vec<i64>>;
    fn initial(&self) -> Vec<i64>;
    fn edges(&self, s: &[i64]) -> Vec<SysEdge>;
    /// Output values do not depend on the direction.
    fn moore(&self) -> bool;
    /// Declares the system's own symbols and range constraints.
    fn declare(&self, q: &mut Query);
}

pub fn bool_args(letter: Letter, n: usize) -> Vec<Term> {
    (0..n).map(|i| Term::Bool(letter >> i & 1 == 1)).collect()
}

pub fn bool_values(letter: Letter, n: usize) -> Vec<Value> {
    (0..n).map(|i| Value::Bool(letter >> i & 1 == 1)).collect()
}

pub const TAU: &str = "tau";

pub fn out_symbol(o: &str) -> String {
    format!("out_{o}")
}

/// Unknown machine with `n` states; `tau` and `out_*` are uninterpreted.
#[derive(Clone, Debug)]
pub struct SymbolicMachine {
    pub kind: Semantics,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub size: usize,
}

impl SymbolicMachine {
    fn succ(&self, t: i64, d: Letter) -> Term {
        if self.size == 1 {
            return Term::Int(0);
        }
        let mut args = vec![Term::Int(t)];
        args.extend(bool_args(d, self.inputs.len()));
        Term::app(TAU, args)
    }

    fn out(&self, o: &str, t: i64, d: Letter) -> Term {
        let mut args = vec![Term::Int(t)];
        if self.kind == Semantics::Mealy {
            args.extend(bool_args(d, self.inputs.len()));
        }
        Term::app(out_symbol(o), args)
    }

    /// `tau(t, d) = v`.
    pub fn pin_succ(&self, t: usize, d: Letter, v: usize) -> Term {
        Term::eq(self.succ(t as i64, d), Term::Int(v as i64))
    }

    /// Output `o` at state `t` (row `d` for Mealy machines) has value `v`.
    pub fn pin_out(&self, o: usize, t: usize, d: Letter, v: bool) -> Term {
        let x = self.out(&self.outputs[o], t as i64, d);
        if v {
            x
        } else {
            Term::not(x)
        }
    }

    /// Reads the machine out of a model; missing or out-of-range entries become state 0.
    pub fn extract(&self, m: &crate::smt::Model) -> Machine {
        let ni = self.inputs.len();
        let letters = 1u64 << ni;
        let trans = (0..self.size as i64)
            .map(|t| {
                (0..letters)
                    .map(|d| {
                        if self.size == 1 {
                            return 0;
                        }
                        let mut args = vec![Value::Int(t)];
                        args.extend(bool_values(d, ni));
                        let v = m.int(TAU, &args);
                        if (0..self.size as i64).contains(&v) {
                            v as usize
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        let rows = if self.kind == Semantics::Mealy { letters } else { 1 };
        let out = (0..self.size as i64)
            .map(|t| {
                (0..rows)
                    .map(|d| {
                        let mut args = vec![Value::Int(t)];
                        if self.kind == Semantics::Mealy {
                            args.extend(bool_values(d, ni));
                        }
                        self.outputs
                            .iter()
                            .enumerate()
                            .filter(|(_, o)| m.bool(&out_symbol(o), &args))
                            .fold(0, |acc, (j, _)| acc | 1 << j)
                    })
                    .collect()
            })
            .collect();
        Machine { kind: self.kind, inputs: self.inputs.clone(), outputs: self.outputs.clone(), trans, out }
    }
}

impl SystemEncoding for SymbolicMachine {
    fn props(&self) -> Vec<String> {
        self.inputs.iter().chain(&self.outputs).cloned().collect()
    }

    fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    fn arity(&self) -> usize {
        1
    }

    fn states(&self) -> Vec<Vec<i64>> {
        (0..self.size as i64).map(|t| vec![t]).collect()
    }

    fn initial(&self) -> Vec<i64> {
        vec![0]
    }

    fn edges(&self, s: &[i64]) -> Vec<SysEdge> {
        let t = s[0];
        (0..1u64 << self.inputs.len())
            .map(|d| {
                let mut props = bool_args(d, self.inputs.len());
                props.extend(self.outputs.iter().map(|o| self.out(o, t, d)));
                SysEdge { dir: d, props, succ: vec![self.succ(t, d)] }
            })
            .collect()
    }

    fn moore(&self) -> bool {
        self.kind == Semantics::Moore
    }

    fn declare(&self, q: &mut Query) {
        let ni = self.inputs.len();
        let mut args = vec![Sort::Int];
        args.extend(std::iter::repeat_n(Sort::Bool, ni));
        if self.size > 1 {
            q.declare(TAU, args.clone(), Sort::Int);
            for t in 0..self.size as i64 {
                for d in 0..1u64 << ni {
                    q.assert(Term::in_range(self.succ(t, d), 0, self.size as i64 - 1));
                }
            }
        }
        let out_args = if self.kind == Semantics::Mealy { args } else { vec![Sort::Int] };
        for o in &self.outputs {
            q.declare(out_symbol(o), out_args.clone(), Sort::Bool);
        }
    }
}

/// A fixed machine, for verification queries.
#[derive(Clone, Debug)]
pub struct ConcreteMachine<'a>(pub &'a Machine);

impl SystemEncoding for ConcreteMachine<'_> {
    fn props(&self) -> Vec<String> {
        self.0.props()
    }

    fn num_inputs(&self) -> usize {
        self.0.inputs.len()
    }

    fn arity(&self) -> usize {
        1
    }

    fn states(&self) -> Vec<Vec<i64>> {
        (0..self.0.num_states() as i64).map(|t| vec![t]).collect()
    }

    fn initial(&self) -> Vec<i64> {
        vec![0]
    }

    fn edges(&self, s: &[i64]) -> Vec<SysEdge> {
        let t = s[0] as usize;
        let np = self.0.props().len();
        (0..self.0.num_letters() as Letter)
            .map(|d| SysEdge {
                dir: d,
                props: bool_args(self.0.letter(t, d), np),
                succ: vec![Term::Int(self.0.next(t, d) as i64)],
            })
            .collect()
    }

    fn moore(&self) -> bool {
        self.0.kind == Semantics::Moore
    }

    fn declare(&self, _: &mut Query) {}
}

/// Another system with a different initial state.
pub struct StartingAt<'a>(pub &'a dyn SystemEncoding, pub Vec<i64>);

impl SystemEncoding for StartingAt<'_> {
    fn props(&self) -> Vec<String> {
        self.0.props()
    }

    fn num_inputs(&self) -> usize {
        self.0.num_inputs()
    }

    fn arity(&self) -> usize {
        self.0.arity()
    }

    fn states(&self) -> Vec<Vec<i64>> {
        self.0.states()
    }

    fn initial(&self) -> Vec<i64> {
        self.1.clone()
    }

    fn edges(&self, s: &[i64]) -> Vec<SysEdge> {
        self.0.edges(s)
    }

    fn moore(&self) -> bool {
        self.0.moore()
    }

    fn declare(&self, q: &mut Query) {
        self.0.declare(q)
    }
}
