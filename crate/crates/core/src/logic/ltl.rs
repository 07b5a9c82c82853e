//! Temporal formulas over transition atoms and their concrete syntax.
//!
//! Precedence, loosest first: `->` (right associative), `|`, `&`,
//! `U` and `R` (right associative), then the prefix operators `! X F G`.
//! A word made only of `X`, `F` and `G` is read as a chain of prefix
//! operators, so `FG a` means `F G a`. Keywords therefore cannot be used as
//! transition ids.

use std::fmt;

use crate::error::{Error, Result};

/// Formula over atoms of type `A`. Plain LTL uses letter indices; the hyper
/// parser first produces `(letter, run variable)` atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula<A> {
    True,
    False,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    Next(Box<Formula<A>>),
    Until(Box<Formula<A>>, Box<Formula<A>>),
    /// Dual of until; only introduced by negation normal form and the `R` syntax.
    Release(Box<Formula<A>>, Box<Formula<A>>),
    Finally(Box<Formula<A>>),
    Globally(Box<Formula<A>>),
}

pub type LtlFormula = Formula<usize>;

use Formula::*;

impl<A> Formula<A> {
    pub fn not(f: Self) -> Self {
        Not(Box::new(f))
    }
    pub fn and(a: Self, b: Self) -> Self {
        And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Self, b: Self) -> Self {
        Or(Box::new(a), Box::new(b))
    }
    pub fn next(f: Self) -> Self {
        Next(Box::new(f))
    }
    pub fn until(a: Self, b: Self) -> Self {
        Until(Box::new(a), Box::new(b))
    }
    pub fn finally(f: Self) -> Self {
        Finally(Box::new(f))
    }
    pub fn globally(f: Self) -> Self {
        Globally(Box::new(f))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = Self>) -> Self {
        items.into_iter().reduce(Self::and).unwrap_or(True)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn any(items: impl IntoIterator<Item = Self>) -> Self {
        items.into_iter().reduce(Self::or).unwrap_or(False)
    }

    /// Number of Boolean and temporal operators.
    pub fn size(&self) -> usize {
        match self {
            True | False | Atom(_) => 0,
            Not(a) | Next(a) | Finally(a) | Globally(a) => 1 + a.size(),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn contains_next(&self) -> bool {
        match self {
            True | False | Atom(_) => false,
            Next(_) => true,
            Not(a) | Finally(a) | Globally(a) => a.contains_next(),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => a.contains_next() || b.contains_next(),
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Next(_) | Until(..) | Release(..) | Finally(_) | Globally(_))
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| out.push(a));
        out
    }

    fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            True | False => {}
            Atom(a) => f(a),
            Not(a) | Next(a) | Finally(a) | Globally(a) => a.visit_atoms(f),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f)
            }
        }
    }

    pub fn map_atoms<B>(&self, f: &impl Fn(&A) -> B) -> Formula<B> {
        let m = |x: &Formula<A>| Box::new(x.map_atoms(f));
        match self {
            True => True,
            False => False,
            Atom(a) => Atom(f(a)),
            Not(a) => Not(m(a)),
            Next(a) => Next(m(a)),
            Finally(a) => Finally(m(a)),
            Globally(a) => Globally(m(a)),
            And(a, b) => And(m(a), m(b)),
            Or(a, b) => Or(m(a), m(b)),
            Implies(a, b) => Implies(m(a), m(b)),
            Until(a, b) => Until(m(a), m(b)),
            Release(a, b) => Release(m(a), m(b)),
        }
    }
}

impl<A: Clone> Formula<A> {
    /// Negation normal form: negations only on atoms, no `->`.
    pub fn nnf(&self) -> Self {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, pos: bool) -> Self {
        let b = |f: &Formula<A>, p: bool| Box::new(f.nnf_signed(p));
        match (self, pos) {
            (True, true) | (False, false) => True,
            (True, false) | (False, true) => False,
            (Atom(a), true) => Atom(a.clone()),
            (Atom(a), false) => Not(Box::new(Atom(a.clone()))),
            (Not(a), p) => a.nnf_signed(!p),
            (And(x, y), true) | (Or(x, y), false) => And(b(x, pos), b(y, pos)),
            (Or(x, y), true) | (And(x, y), false) => Or(b(x, pos), b(y, pos)),
            (Implies(x, y), true) => Or(b(x, false), b(y, true)),
            (Implies(x, y), false) => And(b(x, true), b(y, false)),
            (Next(x), p) => Next(b(x, p)),
            (Until(x, y), true) | (Release(x, y), false) => Until(b(x, pos), b(y, pos)),
            (Release(x, y), true) | (Until(x, y), false) => Release(b(x, pos), b(y, pos)),
            (Finally(x), true) | (Globally(x), false) => Finally(b(x, pos)),
            (Globally(x), true) | (Finally(x), false) => Globally(b(x, pos)),
        }
    }
}

/// `!f` pushed into negation normal form.
pub fn negate<A: Clone>(f: &Formula<A>) -> Formula<A> {
    Formula::not(f.clone()).nnf()
}

pub fn contains_next<A>(f: &Formula<A>) -> bool {
    f.contains_next()
}

// ---------------------------------------------------------------------------
// Printing

pub struct Shown<'a, A, F> {
    formula: &'a Formula<A>,
    atom: F,
}

impl<A> Formula<A> {
    /// Renders with a caller-supplied atom printer, fully parenthesized below
    /// the top level so the output re-parses to the same tree.
    pub fn display_with<F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result>(&self, atom: F) -> Shown<'_, A, F> {
        Shown { formula: self, atom }
    }
}

impl LtlFormula {
    pub fn display<'a>(&'a self, alphabet: &'a [String]) -> impl fmt::Display + 'a {
        self.display_with(move |&a: &usize, f: &mut fmt::Formatter<'_>| write!(f, "{}", alphabet[a]))
    }
}

impl<A, F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result> Shown<'_, A, F> {
    fn go(&self, x: &Formula<A>, f: &mut fmt::Formatter<'_>, top: bool) -> fmt::Result {
        let (open, close) = if top { ("", "") } else { ("(", ")") };
        match x {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(a) => (self.atom)(a, f),
            Not(a) | Next(a) | Finally(a) | Globally(a) => {
                let op = match x {
                    Not(_) => "!",
                    Next(_) => "X ",
                    Finally(_) => "F ",
                    _ => "G ",
                };
                write!(f, "{op}")?;
                self.go(a, f, false)
            }
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                let op = match x {
                    And(..) => "&",
                    Or(..) => "|",
                    Implies(..) => "->",
                    Until(..) => "U",
                    _ => "R",
                };
                write!(f, "{open}")?;
                self.go(a, f, false)?;
                write!(f, " {op} ")?;
                self.go(b, f, false)?;
                write!(f, "{close}")
            }
        }
    }
}

impl<A, F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result> fmt::Display for Shown<'_, A, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.go(self.formula, f, true)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Sym(&'static str),
}

pub(crate) struct TokenStream {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<TokenStream> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Sym("->"), col));
            i += 2;
            continue;
        }
        let sym = match c {
            '!' => "!",
            '&' => "&",
            '|' => "|",
            '(' => "(",
            ')' => ")",
            '[' => "[",
            ']' => "]",
            '.' => ".",
            _ => return Err(Error::Syntax { line: 1, col, msg: format!("unexpected character `{c}`") }),
        };
        toks.push((Tok::Sym(sym), col));
        i += 1;
    }
    Ok(TokenStream { toks, pos: 0, len: chars.len() })
}

const KEYWORDS: [&str; 6] = ["true", "false", "U", "R", "forall", "exists"];

fn is_prefix_chain(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| matches!(c, 'X' | 'F' | 'G'))
}

impl TokenStream {
    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    pub(crate) fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.len + 1)
    }

    pub(crate) fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { line: 1, col: self.col(), msg: msg.into() })
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    pub(crate) fn eat_ident(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(x)) if x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Recursive-descent parser parameterized by how an atom is read.
pub(crate) struct FormulaParser<'a, A> {
    pub(crate) ts: &'a mut TokenStream,
    pub(crate) atom: &'a dyn Fn(&mut TokenStream, String, usize) -> Result<A>,
}

impl<A> FormulaParser<'_, A> {
    pub(crate) fn formula(&mut self) -> Result<Formula<A>> {
        self.implication()
    }

    fn implication(&mut self) -> Result<Formula<A>> {
        let lhs = self.disjunction()?;
        if self.ts.eat_sym("->") {
            let rhs = self.implication()?;
            return Ok(Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula<A>> {
        let mut lhs = self.conjunction()?;
        while self.ts.eat_sym("|") {
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula<A>> {
        let mut lhs = self.binary_temporal()?;
        while self.ts.eat_sym("&") {
            lhs = Formula::and(lhs, self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula<A>> {
        let lhs = self.unary()?;
        if self.ts.eat_ident("U") {
            return Ok(Formula::until(lhs, self.binary_temporal()?));
        }
        if self.ts.eat_ident("R") {
            return Ok(Release(Box::new(lhs), Box::new(self.binary_temporal()?)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula<A>> {
        if self.ts.eat_sym("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.ts.eat_sym("(") {
            let f = self.formula()?;
            self.ts.expect_sym(")")?;
            return Ok(f);
        }
        let col = self.ts.col();
        let name = match self.ts.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.ts.err("expected a formula"),
        };
        self.ts.pos += 1;
        if is_prefix_chain(&name) {
            let mut f = self.unary()?;
            for op in name.chars().rev() {
                f = match op {
                    'X' => Formula::next(f),
                    'F' => Formula::finally(f),
                    _ => Formula::globally(f),
                };
            }
            return Ok(f);
        }
        match name.as_str() {
            "true" => Ok(True),
            "false" => Ok(False),
            k if KEYWORDS.contains(&k) => Err(Error::Syntax { line: 1, col, msg: format!("unexpected keyword `{k}`") }),
            _ => Ok(Atom((self.atom)(self.ts, name, col)?)),
        }
    }
}

/// Parses an LTL formula whose atoms are ids from `alphabet`.
pub fn parse_ltl(text: &str, alphabet: &[String]) -> Result<LtlFormula> {
    let mut ts = tokenize(text)?;
    let atom = |_: &mut TokenStream, name: String, col: usize| -> Result<usize> {
        alphabet
            .iter()
            .position(|a| *a == name)
            .ok_or_else(|| Error::Syntax { line: 1, col, msg: format!("unknown transition `{name}`") })
    };
    let f = FormulaParser { ts: &mut ts, atom: &atom }.formula()?;
    if !ts.at_end() {
        return ts.err("unexpected trailing input");
    }
    Ok(f)
}
