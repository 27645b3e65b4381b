//! Bounded synthesis of reactive machines from LTL and CTL* specifications.

pub mod aht;
pub mod automaton;
pub mod ctl2ltl;
pub mod formula;
pub mod guarded;
pub mod guard;
pub mod machine;
pub mod modelcheck;
pub mod smt;
pub mod parser;
pub mod ranking;
pub mod rings;
pub mod spec;
pub mod synth;

pub use automaton::{Acceptance, Mode, WordAutomaton};
pub use formula::Formula;
pub use guard::{Guard, Letter};
pub use machine::Machine;
pub use parser::{parse_formula, parse_spec};
pub use spec::{Semantics, Specification};
