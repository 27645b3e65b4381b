//! Tokenizer and recursive-descent parser for specification files and formulas.

use crate::formula::Formula;
use crate::spec::{Semantics, SpecError, Specification};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    "<->", "->", "&&", "||", "!=", "&", "|", "!", "(", ")", ";", ",", ".", "=", "+",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, SpecError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start.0, col: start.1 });
            continue;
        }
        if c.is_ascii_digit() {
            let mut v: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                v = v * 10 + chars[i].to_digit(10).unwrap() as u64;
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Num(v), line: start.0, col: start.1 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: start.0, col: start.1 });
            }
            None => {
                return Err(SpecError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: &[&str] = &["A", "E", "G", "F", "X", "U", "R", "W", "true", "false"];

pub fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

/// Resolves an identifier used as an atom. Returns the stored atom name.
pub(crate) type AtomResolver<'a> = dyn Fn(&str, usize, usize) -> Result<String, SpecError> + 'a;

pub(crate) struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    resolve: &'a AtomResolver<'a>,
}

impl<'a> Parser<'a> {
    pub fn new(toks: Vec<Token>, resolve: &'a AtomResolver<'a>) -> Self {
        Parser { toks, pos: 0, resolve }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> SpecError {
        let t = &self.toks[self.pos];
        SpecError::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), SpecError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{s}'")))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}'")))
        }
    }

    pub fn ident(&mut self) -> Result<String, SpecError> {
        match self.peek().clone() {
            Tok::Ident(s) if is_identifier(&s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    /// Identifiers separated by optional commas, up to the next ';'.
    pub fn idlist(&mut self) -> Result<Vec<String>, SpecError> {
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::Sym(";")) {
            out.push(self.ident()?);
            self.eat_sym(",");
        }
        Ok(out)
    }

    pub fn formula(&mut self) -> Result<Formula, SpecError> {
        let lhs = self.disjunction()?;
        if self.eat_sym("->") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        if self.eat_sym("<->") {
            let rhs = self.formula()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, SpecError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_sym("||") || self.eat_sym("|") {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::or(parts))
    }

    fn conjunction(&mut self) -> Result<Formula, SpecError> {
        let mut parts = vec![self.binary_temporal()?];
        while self.eat_sym("&&") || self.eat_sym("&") {
            parts.push(self.binary_temporal()?);
        }
        Ok(Formula::and(parts))
    }

    fn binary_temporal(&mut self) -> Result<Formula, SpecError> {
        let lhs = self.unary()?;
        let op = match self.peek() {
            Tok::Ident(s) if s == "U" || s == "R" || s == "W" => s.clone(),
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.binary_temporal()?;
        Ok(match op.as_str() {
            "U" => Formula::until(lhs, rhs),
            "R" => Formula::release(lhs, rhs),
            _ => Formula::weak_until(lhs, rhs),
        })
    }

    fn unary(&mut self) -> Result<Formula, SpecError> {
        if self.eat_sym("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat_sym("(") {
            let f = self.formula()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        let t = self.toks[self.pos].clone();
        match &t.tok {
            Tok::Ident(s) => {
                self.advance();
                match s.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    "A" => Ok(Formula::path_a(self.unary()?)),
                    "E" => Ok(Formula::path_e(self.unary()?)),
                    "G" => Ok(Formula::globally(self.unary()?)),
                    "F" => Ok(Formula::eventually(self.unary()?)),
                    "X" => Ok(Formula::next(self.unary()?)),
                    "U" | "R" | "W" => Err(SpecError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("unexpected binary operator '{s}'"),
                    }),
                    _ => Ok(Formula::atom((self.resolve)(s, t.line, t.col)?)),
                }
            }
            _ => Err(self.error("expected formula")),
        }
    }
}

/// Parses a standalone formula; every identifier is accepted as an atom.
pub fn parse_formula(text: &str) -> Result<Formula, SpecError> {
    let toks = tokenize(text)?;
    let resolve = |s: &str, _: usize, _: usize| Ok(s.to_string());
    let mut p = Parser::new(toks, &resolve);
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error("trailing input"));
    }
    Ok(f)
}

/// Parses a specification file.
pub fn parse_spec(text: &str) -> Result<Specification, SpecError> {
    let toks = tokenize(text)?;
    let mut header = Parser::new(toks.clone(), &|s, _, _| Ok(s.to_string()));
    header.expect_keyword("inputs")?;
    let inputs = header.idlist()?;
    header.expect_sym(";")?;
    header.expect_keyword("outputs")?;
    let outputs = header.idlist()?;
    header.expect_sym(";")?;
    let semantics = if header.is_keyword("moore") {
        Semantics::Moore
    } else if header.is_keyword("mealy") {
        Semantics::Mealy
    } else {
        return Err(header.error("expected 'moore' or 'mealy'"));
    };
    header.advance();
    header.expect_sym(";")?;
    header.expect_keyword("formula")?;
    let start = header.pos;

    let declared: Vec<String> = inputs.iter().chain(outputs.iter()).cloned().collect();
    let resolve = |s: &str, line, col| {
        if declared.iter().any(|d| d == s) {
            Ok(s.to_string())
        } else {
            Err(SpecError::UndeclaredProposition { name: s.to_string(), line, col })
        }
    };
    let mut p = Parser::new(toks, &resolve);
    p.pos = start;
    let f = p.formula()?;
    p.expect_sym(";")?;
    if p.peek() != &Tok::Eof {
        return Err(p.error("trailing input after formula"));
    }
    Specification::new(inputs, outputs, semantics, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let f = parse_formula("a -> b | c & d U e").unwrap();
        let expect = Formula::implies(
            Formula::atom("a"),
            Formula::or(vec![
                Formula::atom("b"),
                Formula::and(vec![
                    Formula::atom("c"),
                    Formula::until(Formula::atom("d"), Formula::atom("e")),
                ]),
            ]),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn until_is_right_associative() {
        let f = parse_formula("a U b U c").unwrap();
        let expect = Formula::until(
            Formula::atom("a"),
            Formula::until(Formula::atom("b"), Formula::atom("c")),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn unary_binds_tighter_than_until() {
        let f = parse_formula("G a U b").unwrap();
        assert_eq!(
            f,
            Formula::until(Formula::globally(Formula::atom("a")), Formula::atom("b"))
        );
    }

    #[test]
    fn weak_until_desugars() {
        let f = parse_formula("a W b").unwrap();
        assert_eq!(
            f,
            Formula::release(
                Formula::atom("b"),
                Formula::or(vec![Formula::atom("a"), Formula::atom("b")])
            )
        );
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "A G (r -> F g)",
            "E G !g & A G E F !g & A G (r -> F g)",
            "(a & b) & c | X (a U (b R c))",
            "a U (b U c)",
            "G F a W b",
        ] {
            let f = parse_formula(s).unwrap().to_pnf();
            let back = parse_formula(&f.to_string()).unwrap().to_pnf();
            assert_eq!(f, back, "{s} printed as {f}");
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_formula("a &\n  )") {
            Err(SpecError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
