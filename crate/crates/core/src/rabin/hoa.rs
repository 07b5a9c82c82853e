//! A small HOA dialect for deterministic Rabin automata.
//!
//! ```text
//! HOA: v1
//! States: 2
//! Start: 0
//! AP: 2 "a" "b"
//! Acceptance: Rabin 1
//! --BODY--
//! State: 0 {1}
//! [0] 0
//! [1] 1
//! State: 1 {0}
//! [0] 1
//! [1] 1
//! --END--
//! ```
//!
//! Letters are whole transitions, so an edge label `[i]` names letter `i`
//! rather than a Boolean expression over propositions. Pair `j` of the
//! acceptance condition owns sets `2j` (visit finitely often) and `2j+1`
//! (visit infinitely often); a state lists the sets it belongs to. Every
//! state has exactly one edge per letter, in letter order.

use super::{Dra, RabinPair};
use crate::error::{Error, Result};

pub fn serialize_dra(d: &Dra) -> String {
    let mut out = String::new();
    out += "HOA: v1\n";
    out += &format!("States: {}\n", d.num_states());
    out += &format!("Start: {}\n", d.initial);
    out += &format!("AP: {}", d.alphabet.len());
    for a in &d.alphabet {
        out += &format!(" \"{a}\"");
    }
    out += "\n";
    out += &format!("Acceptance: Rabin {}\n", d.pairs.len());
    out += "--BODY--\n";
    for s in 0..d.num_states() {
        let mut sets = Vec::new();
        for (j, p) in d.pairs.iter().enumerate() {
            if p.fin[s] {
                sets.push((2 * j).to_string());
            }
            if p.inf[s] {
                sets.push((2 * j + 1).to_string());
            }
        }
        out += &format!("State: {s}");
        if !sets.is_empty() {
            out += &format!(" {{{}}}", sets.join(" "));
        }
        out += "\n";
        for (a, &t) in d.delta[s].iter().enumerate() {
            out += &format!("[{a}] {t}\n");
        }
    }
    out += "--END--\n";
    out
}

fn bad<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Syntax { line, col: 1, msg: msg.into() })
}

fn parse_num(line: usize, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Syntax { line, col: 1, msg: format!("expected a number, got `{s}`") })
}

pub fn parse_dra(text: &str) -> Result<Dra> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut it = lines.into_iter().peekable();

    let (mut states, mut start, mut alphabet, mut npairs) = (None, None, None, None);
    match it.next() {
        Some((_, "HOA: v1")) => {}
        Some((l, _)) => return bad(l, "expected `HOA: v1`"),
        None => return bad(1, "empty input"),
    }
    loop {
        let Some((l, line)) = it.next() else {
            return bad(0, "missing `--BODY--`");
        };
        if line == "--BODY--" {
            break;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| Error::Syntax { line: l, col: 1, msg: "malformed header".into() })?;
        match key {
            "States" => states = Some(parse_num(l, rest)?),
            "Start" => start = Some(parse_num(l, rest)?),
            "AP" => {
                let rest = rest.trim();
                let (count, names) = rest.split_once(' ').unwrap_or((rest, ""));
                let count = parse_num(l, count)?;
                let names: Vec<String> =
                    names.split_whitespace().map(|s| s.trim_matches('"').to_string()).collect();
                if names.len() != count {
                    return bad(l, format!("AP declares {count} names but lists {}", names.len()));
                }
                alphabet = Some(names);
            }
            "Acceptance" => match rest.trim().strip_prefix("Rabin ") {
                Some(k) => npairs = Some(parse_num(l, k)?),
                None => return bad(l, "only `Acceptance: Rabin k` is supported"),
            },
            _ => return bad(l, format!("unknown header `{key}`")),
        }
    }
    let n = states.ok_or_else(|| Error::invalid("missing `States:` header"))?;
    let initial = start.ok_or_else(|| Error::invalid("missing `Start:` header"))?;
    let alphabet = alphabet.ok_or_else(|| Error::invalid("missing `AP:` header"))?;
    let k = npairs.ok_or_else(|| Error::invalid("missing `Acceptance:` header"))?;
    if initial >= n {
        return Err(Error::invalid("start state out of range"));
    }

    let mut pairs = vec![RabinPair { fin: vec![false; n], inf: vec![false; n] }; k];
    let mut delta = Vec::with_capacity(n);
    for s in 0..n {
        let Some((l, line)) = it.next() else {
            return bad(0, format!("missing `State: {s}`"));
        };
        let rest = line.strip_prefix("State:").ok_or_else(|| Error::Syntax { line: l, col: 1, msg: "expected `State:`".into() })?;
        let (id, sets) = match rest.split_once('{') {
            Some((id, sets)) => (id, Some(sets.strip_suffix('}').ok_or_else(|| Error::Syntax { line: l, col: 1, msg: "unterminated `{`".into() })?)),
            None => (rest, None),
        };
        if parse_num(l, id)? != s {
            return bad(l, format!("states must appear in order, expected {s}"));
        }
        for set in sets.unwrap_or("").split_whitespace() {
            let set = parse_num(l, set)?;
            if set >= 2 * k {
                return bad(l, format!("acceptance set {set} is out of range for {k} pairs"));
            }
            if set % 2 == 0 {
                pairs[set / 2].fin[s] = true;
            } else {
                pairs[set / 2].inf[s] = true;
            }
        }
        let mut row = Vec::with_capacity(alphabet.len());
        for a in 0..alphabet.len() {
            let Some((l, edge)) = it.next() else {
                return bad(0, "truncated body");
            };
            let (label, target) = edge
                .strip_prefix('[')
                .and_then(|e| e.split_once(']'))
                .ok_or_else(|| Error::Syntax { line: l, col: 1, msg: "expected `[letter] target`".into() })?;
            if parse_num(l, label)? != a {
                return bad(l, format!("expected an edge for letter {a}"));
            }
            let t = parse_num(l, target)?;
            if t >= n {
                return bad(l, format!("edge target {t} out of range"));
            }
            row.push(t);
        }
        delta.push(row);
    }
    match it.next() {
        Some((_, "--END--")) => {}
        Some((l, _)) => return bad(l, "expected `--END--`"),
        None => return bad(0, "missing `--END--`"),
    }
    Ok(Dra { alphabet, initial, delta, pairs })
}
