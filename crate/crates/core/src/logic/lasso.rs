//! Ultimately periodic words and direct evaluation of LTL on them.
//!
//! The evaluator works position by position on the lasso graph and never
//! touches automata, so it can serve as ground truth for the translation.

use super::ltl::{Formula, LtlFormula};
use crate::error::{Error, Result};

/// The word `stem · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoWord {
    pub stem: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl LassoWord {
    pub fn new(stem: Vec<usize>, cycle: Vec<usize>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::invalid("lasso loop must be nonempty"));
        }
        Ok(LassoWord { stem, cycle })
    }

    /// Parses `u;v` where both parts list letters by id, separated by spaces
    /// or commas. A missing `;` means an empty stem.
    pub fn parse(text: &str, alphabet: &[String]) -> Result<Self> {
        let (u, v) = text.split_once(';').unwrap_or(("", text));
        let letters = |s: &str| -> Result<Vec<usize>> {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|x| !x.is_empty())
                .map(|x| {
                    alphabet
                        .iter()
                        .position(|a| a == x)
                        .ok_or_else(|| Error::invalid(format!("unknown letter `{x}`")))
                })
                .collect()
        };
        LassoWord::new(letters(u)?, letters(v)?)
    }

    pub fn len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, i: usize) -> usize {
        if i < self.stem.len() {
            self.stem[i]
        } else {
            self.cycle[i - self.stem.len()]
        }
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 == self.len() {
            self.stem.len()
        } else {
            i + 1
        }
    }

    /// Letter at position `i` of the infinite word.
    pub fn at(&self, i: usize) -> usize {
        if i < self.stem.len() {
            self.stem[i]
        } else {
            self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }
}

/// Whether `stem · cycle^ω` satisfies `f`.
pub fn eval_on_lasso(f: &LtlFormula, w: &LassoWord) -> bool {
    eval_positions(f, w)[0]
}

/// Truth value of `f` at each of the `|u|+|v|` distinct positions of `w`.
pub fn eval_positions(f: &LtlFormula, w: &LassoWord) -> Vec<bool> {
    let n = w.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(a) => (0..n).map(|i| w.letter(i) == *a).collect(),
        Formula::Not(x) => eval_positions(x, w).into_iter().map(|b| !b).collect(),
        Formula::And(x, y) | Formula::Or(x, y) | Formula::Implies(x, y) => {
            let (p, q) = (eval_positions(x, w), eval_positions(y, w));
            (0..n)
                .map(|i| match f {
                    Formula::And(..) => p[i] && q[i],
                    Formula::Or(..) => p[i] || q[i],
                    _ => !p[i] || q[i],
                })
                .collect()
        }
        Formula::Next(x) => {
            let p = eval_positions(x, w);
            (0..n).map(|i| p[w.succ(i)]).collect()
        }
        Formula::Until(x, y) => until(w, &eval_positions(x, w), &eval_positions(y, w)),
        Formula::Finally(x) => until(w, &vec![true; n], &eval_positions(x, w)),
        Formula::Release(x, y) => {
            // x R y == !(!x U !y)
            let nx: Vec<bool> = eval_positions(x, w).into_iter().map(|b| !b).collect();
            let ny: Vec<bool> = eval_positions(y, w).into_iter().map(|b| !b).collect();
            until(w, &nx, &ny).into_iter().map(|b| !b).collect()
        }
        Formula::Globally(x) => {
            let ny: Vec<bool> = eval_positions(x, w).into_iter().map(|b| !b).collect();
            until(w, &vec![true; n], &ny).into_iter().map(|b| !b).collect()
        }
    }
}

/// Least fixpoint of `val[i] = q[i] || (p[i] && val[succ i])`.
fn until(w: &LassoWord, p: &[bool], q: &[bool]) -> Vec<bool> {
    let n = w.len();
    let mut val = vec![false; n];
    // Each pass runs backwards, so the stem is settled once the loop is; the
    // loop needs at most |v| + 1 passes for a value to travel all the way round.
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let v = q[i] || (p[i] && val[w.succ(i)]);
            if v != val[i] {
                val[i] = v;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::ltl::{negate, parse_ltl};

    fn sigma() -> Vec<String> {
        ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()
    }

    fn holds(f: &str, w: &str) -> bool {
        let s = sigma();
        eval_on_lasso(&parse_ltl(f, &s).unwrap(), &LassoWord::parse(w, &s).unwrap())
    }

    #[test]
    fn lasso_examples() {
        let phi = "!F(a & X b & X X a & X X X b)";
        assert!(!holds(phi, "; a b a b"));
        assert!(holds(phi, "; a b c d"));
        assert!(holds("G a", "; a"));
        assert!(holds("a U b", "a a; b"));
        assert!(!holds("a U b", "; a"));
        assert!(holds("FG a", "b b; a"));
        assert!(!holds("FG a", "; a b"));
        assert!(holds("GF b", "; a b"));
        assert!(holds("X X c", "a b; c"));
    }

    #[test]
    fn empty_loop_rejected() {
        assert!(LassoWord::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn negation_flips() {
        let s = sigma();
        let f = parse_ltl("(a U b) R X c", &s).unwrap();
        let w = LassoWord::parse("a c; b c c", &s).unwrap();
        assert_eq!(eval_on_lasso(&f, &w), !eval_on_lasso(&negate(&f), &w));
    }
}
