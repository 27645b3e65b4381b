//! Terms over Bool and Int with uninterpreted function applications.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    Int,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(_) => None,
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            Value::Bool(b) => Term::Bool(b),
            Value::Int(i) => Term::Int(i),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Bool(bool),
    Int(i64),
    /// Constant or function application; also used for bound parameters.
    App(String, Vec<Term>),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
    Eq(Box<Term>, Box<Term>),
    Cmp(Cmp, Box<Term>, Box<Term>),
    Add(Vec<Term>),
    Sub(Vec<Term>),
    Mul(Vec<Term>),
    Neg(Box<Term>),
}

pub type Env<'a> = dyn Fn(&str, &[Value]) -> Result<Value, String> + 'a;

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::App(name.into(), vec![])
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    pub fn not(t: Term) -> Term {
        match t {
            Term::Bool(b) => Term::Bool(!b),
            Term::Not(inner) => *inner,
            t => Term::Not(Box::new(t)),
        }
    }

    pub fn and(ts: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in ts {
            match t {
                Term::Bool(true) => {}
                Term::Bool(false) => return Term::Bool(false),
                Term::And(xs) => out.extend(xs),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::Bool(true),
            1 => out.pop().unwrap(),
            _ => Term::And(out),
        }
    }

    pub fn or(ts: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in ts {
            match t {
                Term::Bool(false) => {}
                Term::Bool(true) => return Term::Bool(true),
                Term::Or(xs) => out.extend(xs),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::Bool(false),
            1 => out.pop().unwrap(),
            _ => Term::Or(out),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::Bool(false), _) | (_, Term::Bool(true)) => Term::Bool(true),
            (Term::Bool(true), b) => b,
            (a, Term::Bool(false)) => Term::not(a),
            (a, b) => Term::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::Bool(true), x) | (x, Term::Bool(true)) => x,
            (Term::Bool(false), x) | (x, Term::Bool(false)) => Term::not(x),
            (a, b) => Term::Eq(Box::new(a), Box::new(b)),
        }
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        match c {
            Term::Bool(true) => t,
            Term::Bool(false) => e,
            c if t == e => {
                let _ = c;
                t
            }
            c => Term::Ite(Box::new(c), Box::new(t), Box::new(e)),
        }
    }

    pub fn eq(a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Int(x), Term::Int(y)) => Term::Bool(x == y),
            _ if a == b => Term::Bool(true),
            _ => Term::Eq(Box::new(a), Box::new(b)),
        }
    }

    pub fn cmp(op: Cmp, a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Int(x), Term::Int(y)) => Term::Bool(op.holds(*x, *y)),
            _ => Term::Cmp(op, Box::new(a), Box::new(b)),
        }
    }

    pub fn lt(a: Term, b: Term) -> Term {
        Term::cmp(Cmp::Lt, a, b)
    }

    pub fn le(a: Term, b: Term) -> Term {
        Term::cmp(Cmp::Le, a, b)
    }

    pub fn gt(a: Term, b: Term) -> Term {
        Term::cmp(Cmp::Gt, a, b)
    }

    pub fn ge(a: Term, b: Term) -> Term {
        Term::cmp(Cmp::Ge, a, b)
    }

    /// `lo <= t <= hi`
    pub fn in_range(t: Term, lo: i64, hi: i64) -> Term {
        Term::and([Term::ge(t.clone(), Term::Int(lo)), Term::le(t, Term::Int(hi))])
    }

    pub fn eval(&self, env: &Env<'_>) -> Result<Value, String> {
        let b = |t: &Term| -> Result<bool, String> {
            t.eval(env)?.as_bool().ok_or_else(|| format!("expected Bool: {t}"))
        };
        let i = |t: &Term| -> Result<i64, String> {
            t.eval(env)?.as_int().ok_or_else(|| format!("expected Int: {t}"))
        };
        Ok(match self {
            Term::Bool(v) => Value::Bool(*v),
            Term::Int(v) => Value::Int(*v),
            Term::App(f, args) => {
                let vals = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>, _>>()?;
                env(f, &vals)?
            }
            Term::Not(t) => Value::Bool(!b(t)?),
            Term::And(ts) => {
                for t in ts {
                    if !b(t)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Term::Or(ts) => {
                for t in ts {
                    if b(t)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Term::Implies(x, y) => Value::Bool(!b(x)? || b(y)?),
            Term::Ite(c, t, e) => {
                if b(c)? {
                    t.eval(env)?
                } else {
                    e.eval(env)?
                }
            }
            Term::Eq(x, y) => Value::Bool(x.eval(env)? == y.eval(env)?),
            Term::Cmp(op, x, y) => Value::Bool(op.holds(i(x)?, i(y)?)),
            Term::Add(ts) => Value::Int(ts.iter().map(i).sum::<Result<i64, _>>()?),
            Term::Mul(ts) => Value::Int(ts.iter().map(i).product::<Result<i64, _>>()?),
            Term::Sub(ts) => {
                let mut it = ts.iter();
                let first = i(it.next().ok_or("empty subtraction")?)?;
                if ts.len() == 1 {
                    Value::Int(-first)
                } else {
                    Value::Int(it.try_fold(first, |acc, t| i(t).map(|v| acc - v))?)
                }
            }
            Term::Neg(t) => Value::Int(-i(t)?),
        })
    }

    /// Sort of the term; `lookup` gives argument and result sorts of applied symbols.
    pub fn sort(&self, lookup: &dyn Fn(&str) -> Option<(Vec<Sort>, Sort)>) -> Result<Sort, String> {
        let expect = |t: &Term, s: Sort| -> Result<(), String> {
            let got = t.sort(lookup)?;
            if got != s {
                return Err(format!("term {t} has sort {got}, expected {s}"));
            }
            Ok(())
        };
        match self {
            Term::Bool(_) => Ok(Sort::Bool),
            Term::Int(_) => Ok(Sort::Int),
            Term::App(f, args) => {
                let (params, ret) = lookup(f).ok_or_else(|| format!("undeclared symbol '{f}'"))?;
                if params.len() != args.len() {
                    return Err(format!("'{f}' expects {} arguments, got {}", params.len(), args.len()));
                }
                for (a, s) in args.iter().zip(params) {
                    expect(a, s)?;
                }
                Ok(ret)
            }
            Term::Not(t) => expect(t, Sort::Bool).map(|_| Sort::Bool),
            Term::And(ts) | Term::Or(ts) => {
                ts.iter().try_for_each(|t| expect(t, Sort::Bool))?;
                Ok(Sort::Bool)
            }
            Term::Implies(a, b) => {
                expect(a, Sort::Bool)?;
                expect(b, Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Term::Ite(c, t, e) => {
                expect(c, Sort::Bool)?;
                let s = t.sort(lookup)?;
                expect(e, s)?;
                Ok(s)
            }
            Term::Eq(a, b) => {
                let s = a.sort(lookup)?;
                expect(b, s)?;
                Ok(Sort::Bool)
            }
            Term::Cmp(_, a, b) => {
                expect(a, Sort::Int)?;
                expect(b, Sort::Int)?;
                Ok(Sort::Bool)
            }
            Term::Add(ts) | Term::Sub(ts) | Term::Mul(ts) => {
                ts.iter().try_for_each(|t| expect(t, Sort::Int))?;
                Ok(Sort::Int)
            }
            Term::Neg(t) => expect(t, Sort::Int).map(|_| Sort::Int),
        }
    }

    /// Applied symbol names, each once, in first-occurrence order.
    pub fn symbols(&self, out: &mut Vec<String>) {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Bool(_) | Term::Int(_) => {}
                Term::App(f, args) => {
                    if !out.contains(f) {
                        out.push(f.clone());
                    }
                    stack.extend(args.iter().rev());
                }
                Term::Not(x) | Term::Neg(x) => stack.push(x),
                Term::And(ts) | Term::Or(ts) | Term::Add(ts) | Term::Sub(ts) | Term::Mul(ts) => {
                    stack.extend(ts.iter().rev())
                }
                Term::Implies(a, b) | Term::Eq(a, b) | Term::Cmp(_, a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Term::Ite(c, a, b) => {
                    stack.push(b);
                    stack.push(a);
                    stack.push(c);
                }
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, op: &str, ts: &[Term]) -> fmt::Result {
    write!(f, "({op}")?;
    for t in ts {
        write!(f, " {t}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Bool(b) => write!(f, "{b}"),
            Term::Int(i) if *i < 0 => write!(f, "(- {})", i.unsigned_abs()),
            Term::Int(i) => write!(f, "{i}"),
            Term::App(name, args) if args.is_empty() => f.write_str(name),
            Term::App(name, args) => write_list(f, name, args),
            Term::Not(t) => write!(f, "(not {t})"),
            Term::And(ts) => write_list(f, "and", ts),
            Term::Or(ts) => write_list(f, "or", ts),
            Term::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Term::Ite(c, a, b) => write!(f, "(ite {c} {a} {b})"),
            Term::Eq(a, b) => write!(f, "(= {a} {b})"),
            Term::Cmp(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Term::Add(ts) => write_list(f, "+", ts),
            Term::Sub(ts) => write_list(f, "-", ts),
            Term::Mul(ts) => write_list(f, "*", ts),
            Term::Neg(t) => write!(f, "(- {t})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(name: &str, _: &[Value]) -> Result<Value, String> {
        Err(format!("unbound {name}"))
    }

    #[test]
    fn smart_constructors_fold_constants() {
        assert_eq!(Term::and([Term::Bool(true), Term::var("a")]), Term::var("a"));
        assert_eq!(Term::or([Term::var("a"), Term::Bool(true)]), Term::Bool(true));
        assert_eq!(Term::implies(Term::Bool(true), Term::var("b")), Term::var("b"));
        assert_eq!(Term::lt(Term::Int(1), Term::Int(2)), Term::Bool(true));
    }

    #[test]
    fn display_and_eval() {
        let t = Term::Add(vec![Term::Int(-3), Term::Int(4)]);
        assert_eq!(t.to_string(), "(+ (- 3) 4)");
        assert_eq!(t.eval(&no_env).unwrap(), Value::Int(1));
        let c = Term::ite(Term::var("p"), Term::Int(1), Term::Int(2));
        let env = |n: &str, _: &[Value]| if n == "p" { Ok(Value::Bool(false)) } else { Err(n.to_string()) };
        assert_eq!(c.eval(&env).unwrap(), Value::Int(2));
    }

    #[test]
    fn sort_check() {
        let lookup = |n: &str| (n == "f").then(|| (vec![Sort::Int], Sort::Bool));
        let ok = Term::app("f", vec![Term::Int(0)]);
        assert_eq!(ok.sort(&lookup).unwrap(), Sort::Bool);
        let bad = Term::app("f", vec![Term::Bool(true)]);
        assert!(bad.sort(&lookup).is_err());
    }
}
