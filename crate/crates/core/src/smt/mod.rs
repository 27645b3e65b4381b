//! SMT queries over uninterpreted functions and linear integer arithmetic.

mod brute;
mod process;
pub mod sexp;
mod term;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use brute::{brute_solve, Domain, BRUTE_LIMIT};
pub use process::{solve, solve_cancellable, CancelToken, SolverConfig, SOLVER_ENV};
pub use term::{Cmp, Env, Sort, Term, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error("solver binary '{0}' not found")]
    SolverNotFound(String),
    #[error("solver timed out")]
    Timeout,
    #[error("cannot parse solver output: {msg}\n{raw}")]
    Parse { msg: String, raw: String },
    #[error("ill-sorted query: {0}")]
    IllSorted(String),
    #[error("solver i/o: {0}")]
    Io(String),
    #[error("brute-force search space too large ({0} candidates)")]
    TooLarge(u128),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decl {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    pub decls: Vec<Decl>,
    pub asserts: Vec<Term>,
}

impl Query {
    pub fn new() -> Query {
        Query::default()
    }

    /// Declares a symbol; a repeated identical declaration is ignored.
    pub fn declare(&mut self, name: impl Into<String>, args: Vec<Sort>, ret: Sort) {
        let d = Decl { name: name.into(), args, ret };
        match self.decls.iter().find(|x| x.name == d.name) {
            Some(old) => assert_eq!(old, &d, "conflicting declarations of '{}'", d.name),
            None => self.decls.push(d),
        }
    }

    pub fn assert(&mut self, t: Term) {
        if t != Term::Bool(true) {
            self.asserts.push(t);
        }
    }

    /// Adds another query's declarations and assertions.
    pub fn merge(&mut self, other: Query) {
        for d in other.decls {
            self.declare(d.name, d.args, d.ret);
        }
        self.asserts.extend(other.asserts);
    }

    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    /// Every symbol is declared once and every assertion is Bool-sorted.
    pub fn check(&self) -> Result<(), SmtError> {
        for (i, d) in self.decls.iter().enumerate() {
            if self.decls[..i].iter().any(|e| e.name == d.name) {
                return Err(SmtError::IllSorted(format!("'{}' declared twice", d.name)));
            }
        }
        let lookup = |n: &str| self.decl(n).map(|d| (d.args.clone(), d.ret));
        for a in &self.asserts {
            let s = a.sort(&lookup).map_err(SmtError::IllSorted)?;
            if s != Sort::Bool {
                return Err(SmtError::IllSorted(format!("assertion {a} is not Bool")));
            }
        }
        Ok(())
    }

    /// SMT-LIB2 script; model retrieval is requested only when something is declared.
    pub fn serialize(&self) -> String {
        let mut s = String::from("(set-logic UFLIA)\n");
        for d in &self.decls {
            let args: Vec<String> = d.args.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(s, "(declare-fun {} ({}) {})", d.name, args.join(" "), d.ret);
        }
        for a in &self.asserts {
            let _ = writeln!(s, "(assert {a})");
        }
        s.push_str("(check-sat)\n");
        if !self.decls.is_empty() {
            s.push_str("(get-model)\n");
        }
        s
    }
}

/// Reads back the declarations of a serialized script.
pub fn parse_declarations(script: &str) -> Result<Vec<Decl>, String> {
    let mut out = Vec::new();
    for s in sexp::parse_all(script)? {
        let xs = match s.list() {
            Some(xs) if xs.first().and_then(|h| h.atom()) == Some("declare-fun") => xs,
            _ => continue,
        };
        let name = xs.get(1).and_then(|n| n.atom()).ok_or("malformed declaration")?;
        let args = xs
            .get(2)
            .and_then(|a| a.list())
            .ok_or("malformed declaration")?
            .iter()
            .map(sexp::parse_sort)
            .collect::<Result<Vec<_>, _>>()?;
        let ret = sexp::parse_sort(xs.get(3).ok_or("malformed declaration")?)?;
        out.push(Decl { name: name.to_string(), args, ret });
    }
    Ok(out)
}

/// A function interpretation: guarded entries tried in order, then a default body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    pub params: Vec<String>,
    /// `None` in a pattern matches any argument.
    pub entries: Vec<(Vec<Option<Value>>, Term)>,
    pub default: Term,
}

impl FunctionTable {
    pub fn constant(v: Value) -> FunctionTable {
        FunctionTable { params: vec![], entries: vec![], default: v.to_term() }
    }

    /// Folds an if-then-else chain whose conditions are conjunctions of parameter equalities.
    pub fn from_body(params: Vec<String>, body: Term) -> FunctionTable {
        let mut entries = Vec::new();
        let mut cur = body;
        loop {
            let Term::Ite(c, t, e) = cur else { break };
            match pattern_of(&c, &params) {
                Some(p) => {
                    entries.push((p, *t));
                    cur = *e;
                }
                None => {
                    cur = Term::Ite(c, t, e);
                    break;
                }
            }
        }
        FunctionTable { params, entries, default: cur }
    }

    pub fn lookup(&self, args: &[Value]) -> Option<&Term> {
        self.entries
            .iter()
            .find(|(p, _)| p.iter().zip(args).all(|(x, a)| x.is_none_or(|v| v == *a)))
            .map(|(_, t)| t)
    }
}

fn pattern_of(c: &Term, params: &[String]) -> Option<Vec<Option<Value>>> {
    let mut pat = vec![None; params.len()];
    let conj: Vec<&Term> = match c {
        Term::And(xs) => xs.iter().collect(),
        t => vec![t],
    };
    for t in conj {
        let (p, v) = match t {
            Term::Eq(a, b) => match (a.as_ref(), b.as_ref()) {
                (Term::App(n, xs), v) | (v, Term::App(n, xs)) if xs.is_empty() => (n, v),
                _ => return None,
            },
            Term::App(n, xs) if xs.is_empty() => (n, &Term::Bool(true)),
            Term::Not(x) => match x.as_ref() {
                Term::App(n, xs) if xs.is_empty() => (n, &Term::Bool(false)),
                _ => return None,
            },
            _ => return None,
        };
        let i = params.iter().position(|q| q == p)?;
        let v = match v {
            Term::Int(i) => Value::Int(*i),
            Term::Bool(b) => Value::Bool(*b),
            _ => return None,
        };
        if pat[i].is_some_and(|old| old != v) {
            return None;
        }
        pat[i] = Some(v);
    }
    Some(pat)
}

/// Interpretations of every declared symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub funs: BTreeMap<String, FunctionTable>,
}

impl Model {
    pub fn call(&self, name: &str, args: &[Value]) -> Result<Value, String> {
        let f = self.funs.get(name).ok_or_else(|| format!("no interpretation for '{name}'"))?;
        if f.params.len() != args.len() {
            return Err(format!("'{name}' applied to {} arguments", args.len()));
        }
        let body = f.lookup(args).unwrap_or(&f.default);
        let env = |n: &str, xs: &[Value]| -> Result<Value, String> {
            if xs.is_empty() {
                if let Some(i) = f.params.iter().position(|p| p == n) {
                    return Ok(args[i]);
                }
            }
            self.call(n, xs)
        };
        body.eval(&env)
    }

    pub fn eval(&self, t: &Term) -> Result<Value, String> {
        t.eval(&|n, xs| self.call(n, xs))
    }

    pub fn int(&self, name: &str, args: &[Value]) -> i64 {
        self.call(name, args).ok().and_then(|v| v.as_int()).unwrap_or(0)
    }

    pub fn bool(&self, name: &str, args: &[Value]) -> bool {
        self.call(name, args).ok().and_then(|v| v.as_bool()).unwrap_or(false)
    }

    /// Adds zero/false defaults for declared symbols the solver left out.
    pub fn complete(&mut self, decls: &[Decl]) {
        for d in decls {
            self.funs.entry(d.name.clone()).or_insert_with(|| FunctionTable {
                params: (0..d.args.len()).map(|i| format!("x!{i}")).collect(),
                entries: vec![],
                default: match d.ret {
                    Sort::Bool => Term::Bool(false),
                    Sort::Int => Term::Int(0),
                },
            });
        }
    }
}

/// Reads the `define-fun` entries of a model block.
pub fn parse_model(items: &[sexp::Sexp]) -> Result<Model, String> {
    let mut m = Model::default();
    for it in items {
        let xs = match it.list() {
            Some(xs) => xs,
            None => continue, // the legacy `model` keyword
        };
        if xs.first().and_then(|h| h.atom()) != Some("define-fun") {
            continue;
        }
        let name = xs.get(1).and_then(|n| n.atom()).ok_or("malformed define-fun")?;
        let params = xs
            .get(2)
            .and_then(|p| p.list())
            .ok_or("malformed define-fun")?
            .iter()
            .map(|p| p.list().and_then(|q| q.first()).and_then(|n| n.atom()).map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or("malformed parameter list")?;
        let body = sexp::to_term(xs.get(4).ok_or("malformed define-fun")?)?;
        m.funs.insert(name.to_string(), FunctionTable::from_body(params, body));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverVerdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolverVerdict::Unsat)
    }
}

/// Parses the solver's stdout for a `check-sat` / `get-model` script.
pub fn parse_output(raw: &str, decls: &[Decl]) -> Result<SolverVerdict, SmtError> {
    let err = |msg: String| SmtError::Parse { msg, raw: raw.to_string() };
    let items = sexp::parse_all(raw).map_err(err)?;
    let head = items.first().and_then(|s| s.atom());
    match head {
        Some("unsat") => Ok(SolverVerdict::Unsat),
        Some("unknown") => Ok(SolverVerdict::Unknown("solver returned unknown".into())),
        Some("sat") => {
            let mut model = match items.get(1).and_then(|s| s.list()) {
                Some(block) => parse_model(block).map_err(err)?,
                None if decls.is_empty() => Model::default(),
                None => return Err(err("missing model".into())),
            };
            model.complete(decls);
            Ok(SolverVerdict::Sat(model))
        }
        _ => Err(err("no verdict".into())),
    }
}
