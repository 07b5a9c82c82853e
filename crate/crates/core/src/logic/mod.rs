//! Formulas: LTL over transitions, monadic HyperLTL, and lasso semantics.

mod hyper;
mod lasso;
mod ltl;

pub use hyper::{dualize_hyper, parse_hyper, wellspec_formula, Block, HyperFormula, Matrix, Quantifier};
pub use lasso::{eval_on_lasso, eval_positions, LassoWord};
pub use ltl::{contains_next, negate, parse_ltl, Formula, LtlFormula};
