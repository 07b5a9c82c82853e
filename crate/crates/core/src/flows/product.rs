//! The product `a ⊗ b` of two flows, via witnesses `H(q1,q2,q3)`.
//!
//! `H` may be numeric only where both `a(q1,q2)` and `b(q2,q3)` are; we always
//! make it numeric there (a `0` allows strictly more than `#`). For a fixed
//! middle state `q2` the constraints only couple the slice `H(.,q2,.)`: its
//! row sums must reach `a(.,q2)` and its column sums `b(q2,.)`. The minimal
//! products are therefore sums of minimal slices, pruned to an antichain as
//! slices are added.

use super::{Antichain, ExtNat, TransferFlow};
use crate::error::{Error, Result};

struct Slice {
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_need: Vec<u32>,
    col_need: Vec<u32>,
}

fn slice(a: &TransferFlow, b: &TransferFlow, mid: usize) -> Slice {
    let n = a.n;
    let rows: Vec<usize> = (0..n).filter(|&q| !a.get(q, mid).is_sharp()).collect();
    let cols: Vec<usize> = (0..n).filter(|&q| !b.get(mid, q).is_sharp()).collect();
    let row_need = rows.iter().map(|&q| a.get(q, mid).num().unwrap()).collect();
    let col_need = cols.iter().map(|&q| b.get(mid, q).num().unwrap()).collect();
    Slice { rows, cols, row_need, col_need }
}

/// Which cells of the product are numeric.
fn product_pattern(a: &TransferFlow, b: &TransferFlow) -> Vec<bool> {
    let n = a.n;
    let mut pat = vec![false; n * n];
    for mid in 0..n {
        let s = slice(a, b, mid);
        for &q1 in &s.rows {
            for &q3 in &s.cols {
                pat[q1 * n + q3] = true;
            }
        }
    }
    pat
}

/// Pointwise-minimal `r x c` matrices with row sums `>= r` and column sums
/// `>= c`. A matrix is minimal iff every positive cell sits in a tight row or
/// a tight column, which also caps each cell by `max(r_i, c_j)`.
fn minimal_slices(r: &[u32], c: &[u32]) -> Vec<Vec<u32>> {
    struct Search<'a> {
        r: &'a [u32],
        c: &'a [u32],
        m: Vec<u32>,
        row: Vec<u32>,
        col: Vec<u32>,
        out: Vec<Vec<u32>>,
    }
    impl Search<'_> {
        fn go(&mut self, cell: usize) {
            let (nr, nc) = (self.r.len(), self.c.len());
            if cell == nr * nc {
                let minimal = (0..nr * nc).all(|k| {
                    let (i, j) = (k / nc, k % nc);
                    self.m[k] == 0 || self.row[i] == self.r[i] || self.col[j] == self.c[j]
                });
                if minimal && (0..nc).all(|j| self.col[j] >= self.c[j]) {
                    self.out.push(self.m.clone());
                }
                return;
            }
            let (i, j) = (cell / nc, cell % nc);
            let mut lo = 0;
            if j + 1 == nc {
                lo = self.r[i].saturating_sub(self.row[i]);
            }
            if i + 1 == nr {
                lo = lo.max(self.c[j].saturating_sub(self.col[j]));
            }
            let hi = self.r[i].max(self.c[j]);
            for v in lo..=hi {
                self.m[cell] = v;
                self.row[i] += v;
                self.col[j] += v;
                self.go(cell + 1);
                self.row[i] -= v;
                self.col[j] -= v;
            }
            self.m[cell] = 0;
        }
    }
    let mut s = Search { r, c, m: vec![0; r.len() * c.len()], row: vec![0; r.len()], col: vec![0; c.len()], out: Vec::new() };
    s.go(0);
    s.out
}

fn minimize(vs: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    for v in vs {
        if out.iter().any(|w| w.iter().zip(&v).all(|(x, y)| x <= y)) {
            continue;
        }
        out.retain(|w| !v.iter().zip(w).all(|(x, y)| x <= y));
        out.push(v);
    }
    out
}

/// Minimal elements of `a ⊗ b`; empty when the control parts do not chain.
pub fn tf_product_min(a: &TransferFlow, b: &TransferFlow) -> Antichain {
    if a.dst != b.src || a.n != b.n {
        return Antichain::new();
    }
    let n = a.n;
    let mut partial: Vec<Vec<u32>> = vec![vec![0; n * n]];
    for mid in 0..n {
        let s = slice(a, b, mid);
        if s.rows.is_empty() != s.cols.is_empty() {
            // a row (or column) would have to be met by a sum of no cells
            return Antichain::new();
        }
        if s.rows.is_empty() {
            continue;
        }
        let mins = minimal_slices(&s.row_need, &s.col_need);
        let mut next = Vec::with_capacity(partial.len() * mins.len());
        for p in &partial {
            for m in &mins {
                let mut h = p.clone();
                for (k, &v) in m.iter().enumerate() {
                    let (i, j) = (k / s.cols.len(), k % s.cols.len());
                    h[s.rows[i] * n + s.cols[j]] += v;
                }
                next.push(h);
            }
        }
        partial = minimize(next);
    }
    let pat = product_pattern(a, b);
    partial
        .into_iter()
        .map(|h| {
            let f = (0..n * n).map(|k| if pat[k] { ExtNat::Num(h[k]) } else { ExtNat::Sharp }).collect();
            TransferFlow::new(n, f, a.src, b.dst)
        })
        .collect()
}

/// Decides `candidate ∈ a ⊗ b` by trying every witness: each numeric cell
/// `h(q1,q3)` is split over the admissible middle states in all possible ways.
/// Gives up with a resource error after `budget` witnesses.
pub fn tf_product_member_bruteforce(
    a: &TransferFlow,
    b: &TransferFlow,
    candidate: &TransferFlow,
    budget: usize,
) -> Result<bool> {
    let n = a.n;
    if a.dst != b.src || candidate.src != a.src || candidate.dst != b.dst || candidate.n != n || b.n != n {
        return Ok(false);
    }
    let pat = product_pattern(a, b);
    if (0..n * n).any(|k| pat[k] == candidate.f[k].is_sharp()) {
        return Ok(false);
    }
    // a row or column demand with nowhere to go cannot be met
    for mid in 0..n {
        let s = slice(a, b, mid);
        if s.rows.is_empty() != s.cols.is_empty() {
            return Ok(false);
        }
    }
    let cells: Vec<(usize, usize, Vec<usize>, u32)> = (0..n * n)
        .filter(|&k| pat[k])
        .map(|k| {
            let (q1, q3) = (k / n, k % n);
            let mids = (0..n).filter(|&m| !a.get(q1, m).is_sharp() && !b.get(m, q3).is_sharp()).collect();
            (q1, q3, mids, candidate.f[k].num().unwrap())
        })
        .collect();

    struct Search<'a> {
        a: &'a TransferFlow,
        b: &'a TransferFlow,
        cells: &'a [(usize, usize, Vec<usize>, u32)],
        h: Vec<u32>,
        tried: usize,
        budget: usize,
    }
    impl Search<'_> {
        fn at(&self, q1: usize, q2: usize, q3: usize) -> u32 {
            let n = self.a.n;
            self.h[(q1 * n + q2) * n + q3]
        }
        fn check(&self) -> bool {
            let n = self.a.n;
            for x in 0..n {
                for y in 0..n {
                    if let Some(need) = self.a.get(x, y).num() {
                        if (0..n).map(|z| self.at(x, y, z)).sum::<u32>() < need {
                            return false;
                        }
                    }
                    if let Some(need) = self.b.get(x, y).num() {
                        if (0..n).map(|z| self.at(z, x, y)).sum::<u32>() < need {
                            return false;
                        }
                    }
                }
            }
            true
        }
        fn cell(&mut self, c: usize) -> Result<bool> {
            if c == self.cells.len() {
                self.tried += 1;
                if self.tried > self.budget {
                    return Err(Error::ResourceCap { what: "product witnesses", limit: self.budget });
                }
                return Ok(self.check());
            }
            let total = self.cells[c].3;
            self.split(c, 0, total)
        }
        fn split(&mut self, c: usize, i: usize, left: u32) -> Result<bool> {
            let (q1, q3, ref mids, _) = self.cells[c];
            let n = self.a.n;
            let idx = |m: usize| (q1 * n + m) * n + q3;
            if i + 1 == mids.len() {
                let k = idx(mids[i]);
                self.h[k] = left;
                let ok = self.cell(c + 1)?;
                self.h[k] = 0;
                return Ok(ok);
            }
            for v in 0..=left {
                let k = idx(mids[i]);
                self.h[k] = v;
                let ok = self.split(c, i + 1, left - v)?;
                self.h[k] = 0;
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
    let mut s = Search { a, b, cells: &cells, h: vec![0; n * n * n], tried: 0, budget };
    s.cell(0)
}
