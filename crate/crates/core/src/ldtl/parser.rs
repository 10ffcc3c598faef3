//! Recursive-descent parser for formulas and belief expressions.
//!
//! ```text
//! formula   ::= conj ('|' conj)*
//! conj      ::= term ('&' term)*
//! term      ::= 'G' term | 'F' term | 'X' term | primary ['U' term]
//! primary   ::= atom | '!' atom | '!' '(' formula ')' | '(' formula ')'
//! atom      ::= predicate-name | 'in' '(' '{' [name (',' name)*] '}' ')'
//!
//! expr      ::= addend (('+' | '-') addend)*
//! addend    ::= factor ('*' factor)*
//! factor    ::= number | '-' factor | 'b' '(' name ')'
//!             | ('min' | 'max') '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `!` over a parenthesized formula is pushed to the atoms with De Morgan's
//! laws when the operand is propositional; over a temporal operator it is
//! rejected. `&` binds tighter than `|`; both associate to the left. `U`
//! associates to the right.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::expr::BeliefExpr;
use super::formula::{Formula, Predicate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: usize, column: usize, found: String, expected: Vec<String> },
    #[error("{line}:{column}: `!` can only be applied to atoms or propositional formulas")]
    NegationOfCompound { line: usize, column: usize },
    #[error("{line}:{column}: unknown state `{name}`")]
    UnknownState { name: String, line: usize, column: usize },
    #[error("{line}:{column}: unknown predicate `{name}`")]
    UnknownPredicate { name: String, line: usize, column: usize },
}

/// Names a formula or expression may refer to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Symbols {
    pub states: Vec<String>,
    /// Named state sets; `b(label)` is the belief mass of the set.
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    pub predicates: BTreeMap<String, BeliefExpr>,
}

impl Symbols {
    pub fn new(states: Vec<String>) -> Self {
        Symbols { states, ..Default::default() }
    }

    fn resolve_set(&self, name: &str) -> Option<BTreeSet<usize>> {
        if let Some(q) = self.states.iter().position(|s| s == name) {
            return Some(BTreeSet::from([q]));
        }
        self.labels.get(name).cloned()
    }
}

const KEYWORDS: [&str; 5] = ["G", "F", "X", "U", "in"];

pub fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name) || matches!(name, "b" | "min" | "max")
}

pub fn parse_formula(text: &str, symbols: &Symbols) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, symbols)?;
    let f = p.formula()?;
    p.expect_end()?;
    Ok(f)
}

pub fn parse_expr(text: &str, symbols: &Symbols) -> Result<BeliefExpr, ParseError> {
    let mut p = Parser::new(text, symbols)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Punct(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse::<f64>() {
                Ok(v) => Tok::Number(v),
                Err(_) => {
                    return Err(ParseError::Syntax {
                        line: start_line,
                        column: start_col,
                        found: format!("`{s}`"),
                        expected: vec!["number".into()],
                    })
                }
            }
        } else if "(){},&|!+-*".contains(c) {
            i += 1;
            Tok::Punct(c)
        } else {
            return Err(ParseError::Syntax {
                line: start_line,
                column: start_col,
                found: format!("`{c}`"),
                expected: vec!["token".into()],
            });
        };
        column += i - start;
        out.push(Token { tok, line: start_line, column: start_col });
    }
    out.push(Token { tok: Tok::End, line, column });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    symbols: &'a Symbols,
}

impl<'a> Parser<'a> {
    fn new(text: &str, symbols: &'a Symbols) -> Result<Self, ParseError> {
        Ok(Parser { tokens: lex(text)?, pos: 0, symbols })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().tok == Tok::Punct(c)
    }

    fn at_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            line: t.line,
            column: t.column,
            found: t.tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.at_punct(c) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{c}`")])
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::End {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn name(&mut self) -> Result<Token, ParseError> {
        match &self.peek().tok {
            Tok::Ident(_) => Ok(self.bump()),
            _ => self.error(&["name"]),
        }
    }

    // ---- formulas ----

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while self.at_punct('|') {
            self.bump();
            lhs = Formula::or(lhs, self.conj()?);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.term()?;
        while self.at_punct('&') {
            self.bump();
            lhs = Formula::and(lhs, self.term()?);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Formula, ParseError> {
        if self.at_ident("G") {
            self.bump();
            return Ok(Formula::always(self.term()?));
        }
        if self.at_ident("F") {
            self.bump();
            return Ok(Formula::eventually(self.term()?));
        }
        if self.at_ident("X") {
            self.bump();
            return Ok(Formula::next(self.term()?));
        }
        let lhs = self.primary()?;
        if self.at_ident("U") {
            self.bump();
            return Ok(Formula::until(lhs, self.term()?));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        if self.at_punct('!') {
            let bang = self.bump();
            if self.at_punct('(') {
                self.bump();
                let inner = self.formula()?;
                self.expect_punct(')')?;
                return inner.negate_propositional().ok_or(ParseError::NegationOfCompound {
                    line: bang.line,
                    column: bang.column,
                });
            }
            if ["G", "F", "X"].iter().any(|k| self.at_ident(k)) {
                return Err(ParseError::NegationOfCompound { line: bang.line, column: bang.column });
            }
            let atom = self.atom()?;
            return Ok(atom.negate_propositional().expect("atoms negate"));
        }
        if self.at_punct('(') {
            self.bump();
            let inner = self.formula()?;
            self.expect_punct(')')?;
            return Ok(inner);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let tok = match &self.peek().tok {
            Tok::Ident(s) if !["G", "F", "X", "U"].contains(&s.as_str()) => self.bump(),
            _ => return self.error(&["predicate name", "`in`", "`(`", "`!`", "`G`", "`F`", "`X`"]),
        };
        let Tok::Ident(name) = &tok.tok else { unreachable!() };
        if name == "in" {
            self.expect_punct('(')?;
            self.expect_punct('{')?;
            let mut set = BTreeSet::new();
            if !self.at_punct('}') {
                loop {
                    let t = self.name()?;
                    let Tok::Ident(s) = &t.tok else { unreachable!() };
                    let resolved = self.symbols.resolve_set(s).ok_or_else(|| ParseError::UnknownState {
                        name: s.clone(),
                        line: t.line,
                        column: t.column,
                    })?;
                    set.extend(resolved);
                    if !self.at_punct(',') {
                        break;
                    }
                    self.bump();
                }
            }
            self.expect_punct('}')?;
            self.expect_punct(')')?;
            return Ok(Formula::StateSet(set));
        }
        match self.symbols.predicates.get(name) {
            Some(expr) => Ok(Formula::BeliefPred(Predicate { name: name.clone(), expr: expr.clone() })),
            None => Err(ParseError::UnknownPredicate { name: name.clone(), line: tok.line, column: tok.column }),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<BeliefExpr, ParseError> {
        let mut acc = self.addend()?;
        let mut open_sum = false;
        loop {
            if self.at_punct('+') {
                self.bump();
                let rhs = self.addend()?;
                match (&mut acc, open_sum) {
                    (BeliefExpr::Sum(xs), true) => xs.push(rhs),
                    _ => {
                        acc = BeliefExpr::Sum(vec![acc, rhs]);
                        open_sum = true;
                    }
                }
            } else if self.at_punct('-') {
                self.bump();
                let rhs = self.addend()?;
                acc = BeliefExpr::Difference(Box::new(acc), Box::new(rhs));
                open_sum = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn addend(&mut self) -> Result<BeliefExpr, ParseError> {
        let first = self.factor()?;
        if !self.at_punct('*') {
            return Ok(first);
        }
        let mut xs = vec![first];
        while self.at_punct('*') {
            self.bump();
            xs.push(self.factor()?);
        }
        Ok(BeliefExpr::Product(xs))
    }

    fn factor(&mut self) -> Result<BeliefExpr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                Ok(BeliefExpr::Constant(*v))
            }
            Tok::Punct('-') => {
                self.bump();
                if let Tok::Number(v) = self.peek().tok {
                    self.bump();
                    return Ok(BeliefExpr::Constant(-v));
                }
                let inner = self.factor()?;
                Ok(BeliefExpr::Difference(Box::new(BeliefExpr::Constant(0.0)), Box::new(inner)))
            }
            Tok::Punct('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            Tok::Ident(s) if s == "b" => {
                self.bump();
                self.expect_punct('(')?;
                let n = self.name()?;
                let Tok::Ident(name) = &n.tok else { unreachable!() };
                let set = self.symbols.resolve_set(name).ok_or_else(|| ParseError::UnknownState {
                    name: name.clone(),
                    line: n.line,
                    column: n.column,
                })?;
                self.expect_punct(')')?;
                Ok(BeliefExpr::mass(set))
            }
            Tok::Ident(s) if s == "min" || s == "max" => {
                let is_min = s == "min";
                self.bump();
                self.expect_punct('(')?;
                let mut xs = vec![self.expr()?];
                while self.at_punct(',') {
                    self.bump();
                    xs.push(self.expr()?);
                }
                self.expect_punct(')')?;
                Ok(if is_min { BeliefExpr::Min(xs) } else { BeliefExpr::Max(xs) })
            }
            _ => self.error(&["number", "`b(..)`", "`min(..)`", "`max(..)`", "`(`", "`-`"]),
        }
    }
}
