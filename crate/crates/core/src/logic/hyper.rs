//! Monadic HyperLTL: a quantifier prefix over run variables and a Boolean
//! matrix whose leaves are LTL blocks, each about a single run.
//!
//! Concrete syntax: `forall r1. exists r2. <body>`, with atoms written
//! `t[r1]`. Every maximal subformula of the body that starts with a temporal
//! operator, and every bare atom, becomes one block; it must mention exactly
//! one run variable. The Boolean structure above the blocks is the matrix.

use std::fmt;

use super::ltl::{tokenize, Formula, FormulaParser, LtlFormula, TokenStream};
use crate::error::{Error, Result};
use crate::model::Protocol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn flip(self) -> Self {
        match self {
            Quantifier::Forall => Quantifier::Exists,
            Quantifier::Exists => Quantifier::Forall,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    /// Index into the prefix.
    pub var: usize,
    pub formula: LtlFormula,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Matrix {
    Const(bool),
    Block(usize),
    Not(Box<Matrix>),
    And(Box<Matrix>, Box<Matrix>),
    Or(Box<Matrix>, Box<Matrix>),
}

impl Matrix {
    pub fn eval(&self, block_value: &impl Fn(usize) -> bool) -> bool {
        match self {
            Matrix::Const(b) => *b,
            Matrix::Block(i) => block_value(*i),
            Matrix::Not(m) => !m.eval(block_value),
            Matrix::And(a, b) => a.eval(block_value) && b.eval(block_value),
            Matrix::Or(a, b) => a.eval(block_value) || b.eval(block_value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperFormula {
    pub prefix: Vec<(Quantifier, String)>,
    pub blocks: Vec<Block>,
    pub matrix: Matrix,
}

impl HyperFormula {
    /// Builds and validates a formula from parts.
    pub fn new(prefix: Vec<(Quantifier, String)>, blocks: Vec<Block>, matrix: Matrix) -> Result<Self> {
        for (i, (_, v)) in prefix.iter().enumerate() {
            if prefix[..i].iter().any(|(_, w)| w == v) {
                return Err(Error::invalid(format!("run variable `{v}` is quantified twice")));
            }
        }
        if prefix.is_empty() {
            return Err(Error::invalid("a hyper formula needs at least one quantifier"));
        }
        if let Some(b) = blocks.iter().find(|b| b.var >= prefix.len()) {
            return Err(Error::invalid(format!("block refers to unknown variable index {}", b.var)));
        }
        Ok(HyperFormula { prefix, blocks, matrix })
    }

    /// Block indices belonging to the variable at prefix position `var`.
    pub fn blocks_of(&self, var: usize) -> Vec<usize> {
        (0..self.blocks.len()).filter(|&i| self.blocks[i].var == var).collect()
    }

    pub fn contains_next(&self) -> bool {
        self.blocks.iter().any(|b| b.formula.contains_next())
    }

    /// `forall r. phi` for a plain LTL formula.
    pub fn universal(formula: LtlFormula) -> Self {
        HyperFormula {
            prefix: vec![(Quantifier::Forall, "r".into())],
            blocks: vec![Block { var: 0, formula }],
            matrix: Matrix::Block(0),
        }
    }

    pub fn display<'a>(&'a self, alphabet: &'a [String]) -> impl fmt::Display + 'a {
        HyperShown { h: self, alphabet }
    }
}

/// Flips every quantifier and negates the matrix.
pub fn dualize_hyper(h: &HyperFormula) -> HyperFormula {
    HyperFormula {
        prefix: h.prefix.iter().map(|(q, v)| (q.flip(), v.clone())).collect(),
        blocks: h.blocks.clone(),
        matrix: Matrix::Not(Box::new(h.matrix.clone())),
    }
}

struct HyperShown<'a> {
    h: &'a HyperFormula,
    alphabet: &'a [String],
}

impl HyperShown<'_> {
    fn matrix(&self, m: &Matrix, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match m {
            Matrix::Const(b) => write!(f, "{b}"),
            Matrix::Block(i) => {
                let b = &self.h.blocks[*i];
                let var = &self.h.prefix[b.var].1;
                let shown = b
                    .formula
                    .display_with(|&a: &usize, f: &mut fmt::Formatter<'_>| write!(f, "{}[{var}]", self.alphabet[a]));
                write!(f, "({shown})")
            }
            Matrix::Not(x) => {
                write!(f, "!")?;
                self.matrix(x, f)
            }
            Matrix::And(a, b) | Matrix::Or(a, b) => {
                write!(f, "(")?;
                self.matrix(a, f)?;
                write!(f, "{}", if matches!(m, Matrix::And(..)) { " & " } else { " | " })?;
                self.matrix(b, f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for HyperShown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.h.prefix {
            let kw = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            write!(f, "{kw} {v}. ")?;
        }
        self.matrix(&self.h.matrix, f)
    }
}

type HAtom = (usize, String, usize);

/// Parses a monadic hyper formula over `alphabet`.
pub fn parse_hyper(text: &str, alphabet: &[String]) -> Result<HyperFormula> {
    let mut ts = tokenize(text)?;
    let mut prefix: Vec<(Quantifier, String)> = Vec::new();
    loop {
        let q = if ts.eat_ident("forall") {
            Quantifier::Forall
        } else if ts.eat_ident("exists") {
            Quantifier::Exists
        } else {
            break;
        };
        let col = ts.col();
        let v = ts.ident()?;
        if prefix.iter().any(|(_, w)| *w == v) {
            return Err(Error::Syntax { line: 1, col, msg: format!("run variable `{v}` is quantified twice") });
        }
        ts.expect_sym(".")?;
        prefix.push((q, v));
    }
    if prefix.is_empty() {
        return ts.err("expected `forall` or `exists`");
    }

    let atom = |ts: &mut TokenStream, name: String, col: usize| -> Result<HAtom> {
        let letter = alphabet
            .iter()
            .position(|a| *a == name)
            .ok_or_else(|| Error::Syntax { line: 1, col, msg: format!("unknown transition `{name}`") })?;
        ts.expect_sym("[")?;
        let var = ts.ident()?;
        ts.expect_sym("]")?;
        Ok((letter, var, col))
    };
    let body = FormulaParser { ts: &mut ts, atom: &atom }.formula()?;
    if !ts.at_end() {
        return ts.err("unexpected trailing input");
    }

    for (_, v, col) in body.atoms() {
        if !prefix.iter().any(|(_, w)| w == v) {
            return Err(Error::Syntax { line: 1, col: *col, msg: format!("run variable `{v}` is not bound") });
        }
    }

    let mut blocks: Vec<Block> = Vec::new();
    let matrix = split_blocks(&body, &prefix, &mut blocks)?;
    HyperFormula::new(prefix, blocks, matrix)
}

fn split_blocks(f: &Formula<HAtom>, prefix: &[(Quantifier, String)], blocks: &mut Vec<Block>) -> Result<Matrix> {
    let rec = |x: &Formula<HAtom>, blocks: &mut Vec<Block>| split_blocks(x, prefix, blocks).map(Box::new);
    Ok(match f {
        Formula::True => Matrix::Const(true),
        Formula::False => Matrix::Const(false),
        Formula::Not(x) => Matrix::Not(rec(x, blocks)?),
        Formula::And(x, y) => Matrix::And(rec(x, blocks)?, rec(y, blocks)?),
        Formula::Or(x, y) => Matrix::Or(rec(x, blocks)?, rec(y, blocks)?),
        Formula::Implies(x, y) => Matrix::Or(Box::new(Matrix::Not(rec(x, blocks)?)), rec(y, blocks)?),
        _ => {
            let mut vars: Vec<&String> = f.atoms().into_iter().map(|(_, v, _)| v).collect();
            vars.sort();
            vars.dedup();
            let var = match vars.as_slice() {
                [v] => prefix.iter().position(|(_, w)| w == *v).expect("bound variables checked"),
                [] => return Err(Error::invalid("a temporal block must mention a run variable")),
                _ => {
                    return Err(Error::invalid(format!(
                        "non-monadic block mentions several run variables: {}",
                        vars.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                    )))
                }
            };
            let block = Block { var, formula: f.map_atoms(&|(l, _, _)| *l) };
            let idx = match blocks.iter().position(|b| *b == block) {
                Some(i) => i,
                None => {
                    blocks.push(block);
                    blocks.len() - 1
                }
            };
            Matrix::Block(idx)
        }
    })
}

/// The well-specification property: every pair of fair runs eventually
/// settles on the same consensus, expressed with one `FG` block per opinion
/// and run variable. Blocks are ordered (b=0,r1), (b=1,r1), (b=0,r2), (b=1,r2).
pub fn wellspec_formula(p: &Protocol) -> Result<HyperFormula> {
    let opinion = p
        .opinion
        .as_ref()
        .ok_or_else(|| Error::invalid("well-specification needs an opinion for every state"))?;
    let settled = |b: u8| -> LtlFormula {
        let letters = p
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| opinion[t.post.0] == b && opinion[t.post.1] == b)
            .map(|(i, _)| Formula::Atom(i));
        Formula::finally(Formula::globally(Formula::any(letters)))
    };
    let mut blocks = Vec::new();
    for var in 0..2 {
        for b in 0..2 {
            blocks.push(Block { var, formula: settled(b) });
        }
    }
    let both = |i: usize, j: usize| Matrix::And(Box::new(Matrix::Block(i)), Box::new(Matrix::Block(j)));
    HyperFormula::new(
        vec![(Quantifier::Forall, "r1".into()), (Quantifier::Forall, "r2".into())],
        blocks,
        Matrix::Or(Box::new(both(0, 2)), Box::new(both(1, 3))),
    )
}
