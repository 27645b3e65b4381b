//! Exhaustive search over finite interpretations; a test oracle for the external solver.

use std::collections::BTreeMap;

use super::{FunctionTable, Model, Query, SmtError, SolverVerdict, Value};

/// Largest number of candidate interpretations enumerated.
pub const BRUTE_LIMIT: u128 = 1_000_000;

/// Finite domain of a symbol: candidate values per argument position and for the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub args: Vec<Vec<Value>>,
    pub result: Vec<Value>,
}

impl Domain {
    pub fn constant(result: Vec<Value>) -> Domain {
        Domain { args: vec![], result }
    }

    pub fn ints(lo: i64, hi: i64) -> Vec<Value> {
        (lo..=hi).map(Value::Int).collect()
    }

    pub fn bools() -> Vec<Value> {
        vec![Value::Bool(false), Value::Bool(true)]
    }

    fn tuples(&self) -> Vec<Vec<Value>> {
        let mut out = vec![vec![]];
        for vals in &self.args {
            out = out
                .into_iter()
                .flat_map(|t: Vec<Value>| {
                    vals.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(*v);
                        t
                    })
                })
                .collect();
        }
        out
    }
}

/// Enumerates every interpretation within `domains`; arguments outside a domain map to its first result.
pub fn brute_solve(q: &Query, domains: &BTreeMap<String, Domain>) -> Result<SolverVerdict, SmtError> {
    q.check()?;
    // one cell per (symbol, argument tuple)
    let mut cells: Vec<(usize, Vec<Value>)> = Vec::new();
    let mut names = Vec::new();
    let mut results: Vec<&[Value]> = Vec::new();
    for d in &q.decls {
        let dom = domains
            .get(&d.name)
            .ok_or_else(|| SmtError::IllSorted(format!("no domain for '{}'", d.name)))?;
        if dom.result.is_empty() {
            return Ok(SolverVerdict::Unsat);
        }
        let k = names.len();
        names.push(d.name.clone());
        results.push(&dom.result);
        for t in dom.tuples() {
            cells.push((k, t));
        }
    }
    let total = cells.iter().try_fold(1u128, |acc, (k, _)| acc.checked_mul(results[*k].len() as u128));
    match total {
        Some(t) if t <= BRUTE_LIMIT => {}
        Some(t) => return Err(SmtError::TooLarge(t)),
        None => return Err(SmtError::TooLarge(u128::MAX)),
    }
    let mut choice = vec![0usize; cells.len()];
    loop {
        let lookup = |name: &str, args: &[Value]| -> Result<Value, String> {
            let k = names.iter().position(|n| n == name).ok_or_else(|| format!("unbound '{name}'"))?;
            let hit = cells.iter().zip(&choice).find(|((j, t), _)| *j == k && t.as_slice() == args);
            Ok(match hit {
                Some((_, c)) => results[k][*c],
                None => results[k][0],
            })
        };
        let mut ok = true;
        for a in &q.asserts {
            if a.eval(&lookup).map_err(SmtError::IllSorted)? != Value::Bool(true) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(SolverVerdict::Sat(to_model(q, &names, &cells, &choice, &results)));
        }
        // odometer step
        let mut i = 0;
        loop {
            if i == cells.len() {
                return Ok(SolverVerdict::Unsat);
            }
            choice[i] += 1;
            if choice[i] < results[cells[i].0].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn to_model(q: &Query, names: &[String], cells: &[(usize, Vec<Value>)], choice: &[usize], results: &[&[Value]]) -> Model {
    let mut m = Model::default();
    for (k, name) in names.iter().enumerate() {
        let arity = q.decl(name).map_or(0, |d| d.args.len());
        let entries = cells
            .iter()
            .zip(choice)
            .filter(|((j, _), _)| *j == k)
            .map(|((_, t), c)| (t.iter().map(|v| Some(*v)).collect(), results[k][*c].to_term()))
            .collect();
        m.funs.insert(
            name.clone(),
            FunctionTable {
                params: (0..arity).map(|i| format!("x!{i}")).collect(),
                entries,
                default: results[k][0].to_term(),
            },
        );
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{Sort, Term};

    #[test]
    fn one_bit_function_has_four_tables() {
        // f: Bool -> Bool with f(x) != x for both x: exactly one of 4 tables
        let mut q = Query::new();
        q.declare("f", vec![Sort::Bool], Sort::Bool);
        for b in [false, true] {
            q.assert(Term::not(Term::eq(Term::app("f", vec![Term::Bool(b)]), Term::Bool(b))));
        }
        let dom = BTreeMap::from([("f".to_string(), Domain { args: vec![Domain::bools()], result: Domain::bools() })]);
        let SolverVerdict::Sat(m) = brute_solve(&q, &dom).unwrap() else { panic!() };
        assert!(m.bool("f", &[Value::Bool(false)]));
        assert!(!m.bool("f", &[Value::Bool(true)]));
    }

    #[test]
    fn rank_cycle_is_unsat() {
        let mut q = Query::new();
        q.declare("a", vec![], Sort::Int);
        q.declare("b", vec![], Sort::Int);
        q.assert(Term::gt(Term::var("a"), Term::var("b")));
        q.assert(Term::ge(Term::var("b"), Term::var("a")));
        let dom = BTreeMap::from([
            ("a".to_string(), Domain::constant(Domain::ints(0, 4))),
            ("b".to_string(), Domain::constant(Domain::ints(0, 4))),
        ]);
        assert_eq!(brute_solve(&q, &dom).unwrap(), SolverVerdict::Unsat);
    }

    #[test]
    fn refuses_huge_spaces() {
        let mut q = Query::new();
        q.declare("f", vec![Sort::Int], Sort::Int);
        let dom = BTreeMap::from([("f".to_string(), Domain { args: vec![Domain::ints(0, 20)], result: Domain::ints(0, 20) })]);
        assert!(matches!(brute_solve(&q, &dom), Err(SmtError::TooLarge(_))));
    }
}
