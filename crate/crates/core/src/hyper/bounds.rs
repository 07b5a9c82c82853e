//! Closed-form cutoff bounds. They are far too large to ever enumerate up to;
//! they are reported so that a bounded check can say how far it is from
//! complete.
//!
//! With `m` protocol states and `M` automaton states:
//! - `B = (M+1)^(3^(m²+2) · 2(log(m²+2)+1) · m²)` bounds the saturation length,
//! - the same exponent over base `M` is the variant stated for blind sets,
//! - `K = m² · max(K', 2B)` is the blindness constant for a `K'`-blind start,
//! - `(N+1)^(3^d (log d + 1))` with `d = m²+2`, `N = M² · 2^(m²)` bounds the
//!   descending chain that stabilizes saturation.
//!
//! The logarithm inside the exponents has no stated base; we use base 2.

use serde::Serialize;

use crate::error::{Error, Result};

pub const LOG_BASE: &str = "2";

/// `log10` of the exponent `3^(m²+2) · 2(log2(m²+2)+1) · m²`.
fn log10_exponent(m: usize) -> f64 {
    let m2 = (m * m) as f64;
    let d = m2 + 2.0;
    d * 3f64.log10() + (2.0 * (d.log2() + 1.0) * m2).log10()
}

/// `log10(B)` for base `M + 1`.
pub fn log10_b(m: usize, controls: usize) -> f64 {
    log10_with_base(m, (controls + 1) as f64)
}

/// `log10` of the same power taken over an arbitrary base.
pub fn log10_with_base(m: usize, base: f64) -> f64 {
    10f64.powf(log10_exponent(m)) * base.log10()
}

/// `log10(log10(B))`, finite even when `log10(B)` overflows.
pub fn log10_log10_b(m: usize, controls: usize) -> f64 {
    log10_exponent(m) + ((controls + 1) as f64).log10().log10()
}

/// `log10(K)` with `K = m² · max(K', 2B)`.
pub fn log10_k(m: usize, controls: usize, k_prime: u64) -> f64 {
    let two_b = 2f64.log10() + log10_b(m, controls);
    2.0 * (m as f64).log10() + two_b.max((k_prime.max(1) as f64).log10())
}

/// `log10` of the descending-chain length bound.
pub fn log10_chain(m: usize, controls: usize) -> f64 {
    let d = (m * m + 2) as f64;
    let n = (controls * controls) as f64 * 2f64.powi((m * m) as i32);
    3f64.powf(d) * (d.log2() + 1.0) * (n + 1.0).log10()
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub controls: usize,
    pub log10_b: f64,
    pub log10_log10_b: f64,
    /// Same exponent over base `M` instead of `M + 1`.
    pub log10_b_base_controls: f64,
    pub log10_k: f64,
    pub log10_chain: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub states: usize,
    pub k_prime: u64,
    pub log_base: &'static str,
    pub rows: Vec<BoundRow>,
    pub note: &'static str,
}

/// One row per automaton size in `dra_sizes`.
pub fn theoretical_bounds(states: usize, dra_sizes: &[usize], k_prime: u64) -> Result<BoundsReport> {
    if states == 0 || dra_sizes.contains(&0) {
        return Err(Error::invalid("bounds need at least one protocol state and one automaton state"));
    }
    let rows = dra_sizes
        .iter()
        .map(|&c| BoundRow {
            controls: c,
            log10_b: log10_b(states, c),
            log10_log10_b: log10_log10_b(states, c),
            log10_b_base_controls: log10_with_base(states, c as f64),
            log10_k: log10_k(states, c, k_prime),
            log10_chain: log10_chain(states, c),
        })
        .collect();
    Ok(BoundsReport {
        states,
        k_prime,
        log_base: LOG_BASE,
        rows,
        note: "upper bounds on a complete cutoff; no enumeration can reach them",
    })
}

impl BoundsReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("states m = {}, K' = {}, log base {}\n", self.states, self.k_prime, self.log_base);
        for r in &self.rows {
            out += &format!(
                "M = {}: log10 B = {:.4} (base M: {:.4}), log10 K = {:.4}, log10 chain = {:.4}\n",
                r.controls, r.log10_b, r.log10_b_base_controls, r.log10_k, r.log10_chain
            );
        }
        out += self.note;
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // mpmath at 50 digits
        assert!((log10_b(2, 2) - 9975.413255315642).abs() < 1e-6);
        assert!((log10_with_base(2, 2.0) - 6293.785026949748).abs() < 1e-6);
        assert!((log10_chain(2, 2) - 4737.936046052823).abs() < 1e-6);
        assert!((log10_b(1, 1) - 42.02016752071676).abs() < 1e-9);
    }

    #[test]
    fn k_substitution() {
        let k = log10_k(2, 2, 1);
        assert!((k - (4f64.log10() + 2f64.log10() + log10_b(2, 2))).abs() < 1e-9);
        let huge = log10_k(2, 2, u64::MAX);
        assert_eq!(huge, k);
    }

    #[test]
    fn monotone_in_both_sizes() {
        for m in 1..5 {
            for c in 1..5 {
                assert!(log10_b(m + 1, c) > log10_b(m, c));
                assert!(log10_b(m, c + 1) > log10_b(m, c));
                assert!(log10_log10_b(m, c + 1) > log10_log10_b(m, c));
            }
        }
        assert!(log10_log10_b(40, 3).is_finite());
        assert!(theoretical_bounds(0, &[1], 1).is_err());
    }
}
