//! S-expression reader for solver output.

use std::collections::HashMap;

use super::term::{Cmp, Sort, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            Sexp::Atom(_) => None,
        }
    }
}

/// Parses every top-level s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(vec![]);
            }
            ')' => {
                chars.next();
                let done = stack.pop().unwrap();
                stack.last_mut().ok_or("unbalanced ')'")?.push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                chars.next();
                let mut s = String::from("\"");
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '|' => {
                chars.next();
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
        if stack.is_empty() {
            return Err("unbalanced ')'".into());
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".into());
    }
    Ok(stack.pop().unwrap())
}

pub fn parse_sort(s: &Sexp) -> Result<Sort, String> {
    match s.atom() {
        Some("Bool") => Ok(Sort::Bool),
        Some("Int") => Ok(Sort::Int),
        _ => Err(format!("unsupported sort {s:?}")),
    }
}

/// Converts a term s-expression, inlining `let` bindings.
pub fn to_term(s: &Sexp) -> Result<Term, String> {
    to_term_in(s, &mut HashMap::new())
}

fn to_term_in(s: &Sexp, lets: &mut HashMap<String, Vec<Term>>) -> Result<Term, String> {
    match s {
        Sexp::Atom(a) => {
            if let Some(t) = lets.get(a.as_str()).and_then(|v| v.last()) {
                return Ok(t.clone());
            }
            Ok(match a.as_str() {
                "true" => Term::Bool(true),
                "false" => Term::Bool(false),
                _ => match a.parse::<i64>() {
                    Ok(i) => Term::Int(i),
                    Err(_) => Term::var(a.clone()),
                },
            })
        }
        Sexp::List(xs) => {
            let head = xs.first().and_then(|h| h.atom()).ok_or("expected operator")?;
            let rest = &xs[1..];
            if head == "let" {
                let binds = rest.first().and_then(|b| b.list()).ok_or("malformed let")?;
                let mut vals = Vec::new();
                for b in binds {
                    let pair = b.list().ok_or("malformed let binding")?;
                    let name = pair.first().and_then(|n| n.atom()).ok_or("malformed let binding")?;
                    let v = to_term_in(pair.get(1).ok_or("malformed let binding")?, lets)?;
                    vals.push((name.to_string(), v));
                }
                for (n, v) in &vals {
                    lets.entry(n.clone()).or_default().push(v.clone());
                }
                let body = to_term_in(rest.get(1).ok_or("malformed let")?, lets);
                for (n, _) in &vals {
                    lets.get_mut(n).unwrap().pop();
                }
                return body;
            }
            let args = rest.iter().map(|x| to_term_in(x, lets)).collect::<Result<Vec<_>, _>>()?;
            let two = |args: Vec<Term>| -> Result<(Box<Term>, Box<Term>), String> {
                let mut it = args.into_iter();
                match (it.next(), it.next(), it.next()) {
                    (Some(a), Some(b), None) => Ok((Box::new(a), Box::new(b))),
                    _ => Err(format!("'{head}' expects two arguments")),
                }
            };
            Ok(match head {
                "not" => Term::Not(Box::new(args.into_iter().next().ok_or("empty not")?)),
                "and" => Term::And(args),
                "or" => Term::Or(args),
                "=>" => {
                    let (a, b) = two(args)?;
                    Term::Implies(a, b)
                }
                "=" => {
                    let (a, b) = two(args)?;
                    Term::Eq(a, b)
                }
                "<" | "<=" | ">" | ">=" => {
                    let op = match head {
                        "<" => Cmp::Lt,
                        "<=" => Cmp::Le,
                        ">" => Cmp::Gt,
                        _ => Cmp::Ge,
                    };
                    let (a, b) = two(args)?;
                    Term::Cmp(op, a, b)
                }
                "ite" => {
                    let mut it = args.into_iter();
                    match (it.next(), it.next(), it.next()) {
                        (Some(c), Some(t), Some(e)) => Term::Ite(Box::new(c), Box::new(t), Box::new(e)),
                        _ => return Err("ite expects three arguments".into()),
                    }
                }
                "+" => Term::Add(args),
                "*" => Term::Mul(args),
                "-" if args.len() == 1 => match args.into_iter().next().unwrap() {
                    Term::Int(i) => Term::Int(-i),
                    t => Term::Neg(Box::new(t)),
                },
                "-" => Term::Sub(args),
                f => Term::App(f.to_string(), args),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_comments() {
        let xs = parse_all("sat ; note\n(a (b c) |x y|)").unwrap();
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[0].atom(), Some("sat"));
        assert_eq!(xs[1].list().unwrap()[2].atom(), Some("x y"));
    }

    #[test]
    fn let_bindings_are_inlined() {
        let s = &parse_all("(let ((a!1 (= x 0))) (and a!1 (let ((a!1 y)) a!1)))").unwrap()[0];
        let t = to_term(s).unwrap();
        assert_eq!(t.to_string(), "(and (= x 0) y)");
    }

    #[test]
    fn negative_literals() {
        let s = &parse_all("(- 3)").unwrap()[0];
        assert_eq!(to_term(s).unwrap(), Term::Int(-3));
    }
}
