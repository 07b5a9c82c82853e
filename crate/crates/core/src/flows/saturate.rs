use std::ops::RangeInclusive;

use pathfinding::directed::edmonds_karp::edmonds_karp_dense;

use super::{min_tr_of_transition, tf_product_min, Antichain, ExtNat, TransferFlow};
use crate::error::{Error, Result};
use crate::model::enumerate_configs;
use crate::product::{ProdConfig, ProductSystem};

pub const DEFAULT_MAX_ROUNDS: usize = 64;

/// A step witness `g >= f` with row sums `c1` and column sums `c2`, found by
/// routing the slack left over by `f` through a max-flow network.
pub fn flow_step_feasible(c1: &ProdConfig, tf: &TransferFlow, c2: &ProdConfig) -> Option<Vec<ExtNat>> {
    if c1.control != tf.src || c2.control != tf.dst || c1.config.size() != c2.config.size() {
        return None;
    }
    let n = tf.n;
    let mut row_slack = vec![0i64; n];
    let mut col_slack = vec![0i64; n];
    for q in 0..n {
        row_slack[q] = c1.config.get(q) as i64;
        col_slack[q] = c2.config.get(q) as i64;
    }
    for q in 0..n {
        for r in 0..n {
            if let Some(v) = tf.get(q, r).num() {
                row_slack[q] -= v as i64;
                col_slack[r] -= v as i64;
            }
        }
    }
    if row_slack.iter().chain(&col_slack).any(|&s| s < 0) {
        return None;
    }
    // vertices: source, rows 1..=n, columns n+1..=2n, sink
    let (source, sink) = (0, 2 * n + 1);
    let vertices: Vec<usize> = (0..=sink).collect();
    let unbounded = row_slack.iter().sum::<i64>() + 1;
    let mut caps = Vec::new();
    for q in 0..n {
        caps.push(((source, 1 + q), row_slack[q]));
        caps.push(((1 + n + q, sink), col_slack[q]));
        for r in 0..n {
            if !tf.get(q, r).is_sharp() {
                caps.push(((1 + q, 1 + n + r), unbounded));
            }
        }
    }
    let (flows, total, _) = edmonds_karp_dense(&vertices, &source, &sink, caps);
    if total != row_slack.iter().sum::<i64>() {
        return None;
    }
    let mut g = tf.f.clone();
    for ((u, v), amount) in flows {
        if (1..=n).contains(&u) && (n + 1..=2 * n).contains(&v) {
            let cell = &mut g[(u - 1) * n + (v - n - 1)];
            *cell = *cell + ExtNat::Num(amount as u32);
        }
    }
    Some(g)
}

#[derive(Clone, Debug)]
pub struct Saturation {
    /// Minimal flows of every finite transition sequence.
    pub antichain: Antichain,
    /// Rounds run: the first seeds single transitions and the empty sequence,
    /// each further round extends by one transition, and the last one changes
    /// nothing.
    pub rounds: usize,
}

/// Transitions processed in declaration order.
pub fn saturate(ps: &ProductSystem, max_rounds: usize) -> Result<Saturation> {
    let order: Vec<usize> = (0..ps.protocol.transitions.len()).collect();
    saturate_in_order(ps, &order, max_rounds)
}

/// Fixpoint of `S := min(S ∪ S ⊗ Tr(t))` over all transitions, starting from
/// the empty sequence and single transitions. Only elements added in the
/// previous round are extended.
pub fn saturate_in_order(ps: &ProductSystem, order: &[usize], max_rounds: usize) -> Result<Saturation> {
    let p = &ps.protocol;
    if !p.is_iopp {
        return Err(Error::IoppRequired("transfer flows need an immediate-observation protocol".into()));
    }
    let n = p.num_states();
    let controls = ps.dra.num_states();
    // tr[t][l]: the single minimal flow of t leaving control state l
    let mut tr: Vec<Vec<TransferFlow>> = vec![Vec::new(); p.transitions.len()];
    for &t in order {
        let mut v = min_tr_of_transition(p, t, &ps.dra)?.sorted();
        v.sort_by_key(|f| f.src);
        tr[t] = v;
    }
    let mut s = Antichain::new();
    for l in 0..controls {
        s.insert(TransferFlow::identity(n, l));
    }
    for &t in order {
        for f in &tr[t] {
            s.insert(f.clone());
        }
    }
    let mut rounds = 1;
    let mut frontier: Vec<TransferFlow> = s.iter().cloned().collect();
    loop {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::ResourceCap { what: "saturation rounds", limit: max_rounds });
        }
        let mut added = Vec::new();
        for x in &frontier {
            for &t in order {
                for z in &tf_product_min(x, &tr[t][x.dst]) {
                    if s.insert(z.clone()) {
                        added.push(z.clone());
                    }
                }
            }
        }
        frontier = added.into_iter().filter(|z| s.contains(z)).collect();
        if frontier.is_empty() {
            break;
        }
    }
    debug_assert!(s.max_weight() <= 2 * rounds as u64);
    Ok(Saturation { antichain: s, rounds })
}

/// `c2` is reachable from `c1` in the accelerated product system.
pub fn reachable_via_flows(c1: &ProdConfig, c2: &ProdConfig, sat: &Antichain) -> Result<bool> {
    if c1.config.size() != c2.config.size() {
        return Err(Error::invalid("reachability between configurations of different sizes"));
    }
    Ok(sat.iter().any(|tf| flow_step_feasible(c1, tf, c2).is_some()))
}

/// Least `K <= k_max` such that adding one agent to any state already holding
/// at least `K` agents never changes `pred`, over all configurations with
/// sizes in `sizes` and every control state. `None` when no such `K` exists.
pub fn empirical_blindness(
    pred: impl Fn(&ProdConfig) -> bool,
    num_states: usize,
    num_controls: usize,
    sizes: RangeInclusive<usize>,
    k_max: usize,
) -> Result<Option<usize>> {
    let all: Vec<usize> = (0..num_states).collect();
    let mut least = 0usize;
    for n in sizes {
        for g in enumerate_configs(n, &all, num_states)? {
            for l in 0..num_controls {
                let here = pred(&ProdConfig { config: g.clone(), control: l });
                for q in 0..num_states {
                    let bigger = ProdConfig { config: g.plus(q), control: l };
                    if pred(&bigger) != here {
                        least = least.max(g.get(q) as usize + 1);
                    }
                }
            }
        }
    }
    Ok((least <= k_max).then_some(least))
}
