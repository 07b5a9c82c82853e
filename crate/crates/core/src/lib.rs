//! Verification of LTL and monadic HyperLTL properties over transitions for
//! population protocols under strong fairness.
//!
//! The pieces, bottom up:
//! - [`model`]: protocols, configurations, plain and accelerated steps.
//! - [`logic`]: formula syntax and a direct evaluator on lasso words.
//! - [`rabin`]: LTL to deterministic Rabin automata.
//! - [`product`]: explicit product graphs, bottom SCCs and winning sets.
//! - [`flows`]: transfer flows and antichain saturation for reachability
//!   across all population sizes.
//! - [`hyper`]: the valuation-game decision procedure, cutoff checks and
//!   theoretical bounds.
//! - [`sim`]: a uniform random scheduler for statistical cross-checks.

mod bitset;
pub mod error;
pub mod flows;
pub mod hyper;
pub mod logic;
pub mod model;
pub mod product;
pub mod rabin;
pub mod random;
mod scc;
pub mod sim;

pub use error::{Error, Result};
