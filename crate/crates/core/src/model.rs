//! Protocols, configurations and their step semantics.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest admissible population. Configurations with fewer agents are
/// never enumerated or accepted as initial configurations.
pub const MIN_POPULATION: usize = 2;

/// Prefix reserved for the self-loops added by [`Protocol::complete_totality`].
pub const IDLE_PREFIX: &str = "idle_";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct StateId {
    pub index: usize,
    pub name: String,
}

/// Immediate-observation reading of a transition `(q1,q2) -> (q3,q2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IoForm {
    pub mover: usize,
    pub observer: usize,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub id: String,
    pub pre: (usize, usize),
    pub post: (usize, usize),
}

impl Transition {
    pub fn iopp_form(&self) -> Option<IoForm> {
        (self.post.1 == self.pre.1).then_some(IoForm {
            mover: self.pre.0,
            observer: self.pre.1,
            target: self.post.0,
        })
    }

    pub fn is_idle(&self) -> bool {
        self.pre == self.post
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub states: Vec<StateId>,
    pub transitions: Vec<Transition>,
    pub initial: BTreeSet<usize>,
    pub opinion: Option<Vec<u8>>,
    pub is_iopp: bool,
}

/// Dense count vector indexed by state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub counts: Vec<u32>,
}

impl Configuration {
    pub fn new(counts: Vec<u32>) -> Self {
        Configuration { counts }
    }

    pub fn zero(num_states: usize) -> Self {
        Configuration { counts: vec![0; num_states] }
    }

    pub fn size(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn get(&self, q: usize) -> u32 {
        self.counts[q]
    }

    /// `self + q`, one extra agent in state `q`.
    pub fn plus(&self, q: usize) -> Self {
        let mut c = self.clone();
        c.counts[q] += 1;
        c
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(q, _)| q)
    }

    /// Agents listed as a sorted word of state indices, e.g. `{A:2,B:1}` is `[0,0,1]`.
    /// Comparing these words (shorter first) gives the order used to pick witnesses.
    pub fn as_word(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.size());
        for (q, &c) in self.counts.iter().enumerate() {
            w.extend(std::iter::repeat_n(q, c as usize));
        }
        w
    }

    /// Total order by size, then lexicographically by [`Configuration::as_word`].
    pub fn witness_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.as_word().cmp(&other.as_word()))
    }
}

impl Protocol {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.transitions.iter().map(|t| t.id.clone()).collect()
    }

    pub fn is_total(&self) -> bool {
        let covered: HashSet<(usize, usize)> = self.transitions.iter().map(|t| t.pre).collect();
        covered.len() == self.num_states() * self.num_states()
    }

    /// Adds an `idle_q1_q2` self-loop for every ordered pair without a transition.
    pub fn complete_totality(&self) -> Result<Protocol> {
        let covered: HashSet<(usize, usize)> = self.transitions.iter().map(|t| t.pre).collect();
        let mut out = self.clone();
        for q1 in 0..self.num_states() {
            for q2 in 0..self.num_states() {
                if covered.contains(&(q1, q2)) {
                    continue;
                }
                let id = format!("{IDLE_PREFIX}{}_{}", self.states[q1].name, self.states[q2].name);
                if self.transition_index(&id).is_some() {
                    return Err(Error::invalid(format!(
                        "transition id `{id}` collides with a reserved idle-loop id"
                    )));
                }
                out.transitions.push(Transition { id, pre: (q1, q2), post: (q1, q2) });
            }
        }
        Ok(out)
    }

    pub fn enabled(&self, g: &Configuration, t: usize) -> bool {
        let (q1, q2) = self.transitions[t].pre;
        if q1 == q2 {
            g.counts[q1] >= 2
        } else {
            g.counts[q1] >= 1 && g.counts[q2] >= 1
        }
    }

    pub fn step(&self, g: &Configuration, t: usize) -> Result<Configuration> {
        if !self.enabled(g, t) {
            return Err(Error::NotEnabled(self.transitions[t].id.clone()));
        }
        Ok(self.step_unchecked(g, t))
    }

    fn step_unchecked(&self, g: &Configuration, t: usize) -> Configuration {
        let tr = &self.transitions[t];
        let mut c = g.clone();
        c.counts[tr.pre.0] -= 1;
        c.counts[tr.pre.1] -= 1;
        c.counts[tr.post.0] += 1;
        c.counts[tr.post.1] += 1;
        c
    }

    /// All single steps from `g`, in transition order.
    pub fn successors(&self, g: &Configuration) -> Vec<(usize, Configuration)> {
        (0..self.transitions.len())
            .filter(|&t| self.enabled(g, t))
            .map(|t| (t, self.step_unchecked(g, t)))
            .collect()
    }

    /// Every `(k, g')` such that firing `t` exactly `k >= 1` times in a row leads to `g'`.
    /// A transition whose mover is its own target yields only `(1, g)`.
    pub fn accelerated_successors(&self, g: &Configuration, t: usize) -> Result<Vec<(u32, Configuration)>> {
        let tr = &self.transitions[t];
        let io = tr
            .iopp_form()
            .ok_or_else(|| Error::IoppRequired(format!("transition `{}` is not immediate-observation", tr.id)))?;
        if !self.enabled(g, t) {
            return Ok(Vec::new());
        }
        if io.mover == io.target {
            return Ok(vec![(1, g.clone())]);
        }
        let movers = g.counts[io.mover];
        let max_k = if io.observer == io.mover { movers - 1 } else { movers };
        let mut out = Vec::with_capacity(max_k as usize);
        for k in 1..=max_k {
            let mut c = g.clone();
            c.counts[io.mover] -= k;
            c.counts[io.target] += k;
            out.push((k, c));
        }
        Ok(out)
    }

    /// Breadth-first closure of `{g0}` under single steps.
    pub fn reach_set(&self, g0: &Configuration) -> BTreeSet<Configuration> {
        let mut seen: HashSet<Configuration> = HashSet::from([g0.clone()]);
        let mut queue = VecDeque::from([g0.clone()]);
        while let Some(g) = queue.pop_front() {
            for (_, h) in self.successors(&g) {
                if seen.insert(h.clone()) {
                    queue.push_back(h);
                }
            }
        }
        seen.into_iter().collect()
    }

    pub fn initial_support(&self) -> Vec<usize> {
        self.initial.iter().copied().collect()
    }

    pub fn is_initial(&self, g: &Configuration) -> bool {
        g.support().all(|q| self.initial.contains(&q))
    }

    pub fn config_display(&self, g: &Configuration) -> ConfigDisplay<'_> {
        ConfigDisplay { protocol: self, config: g.clone() }
    }

    pub fn config_map(&self, g: &Configuration) -> serde_json::Map<String, serde_json::Value> {
        g.support()
            .map(|q| (self.states[q].name.clone(), serde_json::Value::from(g.counts[q])))
            .collect()
    }

    /// Parses `{A:2, B:1}`; braces optional, unnamed states count zero.
    pub fn parse_config(&self, text: &str) -> Result<Configuration> {
        let body = text.trim().trim_start_matches('{').trim_end_matches('}');
        let mut g = Configuration::zero(self.num_states());
        for part in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, count) = part
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected `state:count`, got `{part}`")))?;
            let q = self
                .state_index(name.trim())
                .ok_or_else(|| Error::invalid(format!("unknown state `{}`", name.trim())))?;
            g.counts[q] = count
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad count in `{part}`")))?;
        }
        Ok(g)
    }

    /// Renders the protocol back into the source format.
    pub fn to_source(&self) -> String {
        let name = |q: usize| self.states[q].name.as_str();
        let mut out = String::new();
        let names: Vec<&str> = self.states.iter().map(|s| s.name.as_str()).collect();
        out += &format!("states {}\n", names.join(" "));
        let init: Vec<&str> = self.initial.iter().map(|&q| name(q)).collect();
        out += &format!("initial {}\n", init.join(" "));
        if let Some(op) = &self.opinion {
            let parts: Vec<String> = op.iter().enumerate().map(|(q, b)| format!("{}={b}", name(q))).collect();
            out += &format!("opinion {}\n", parts.join(" "));
        }
        for t in &self.transitions {
            match t.iopp_form() {
                Some(io) => {
                    out += &format!("trans {}: {} --{}--> {}\n", t.id, name(io.mover), name(io.observer), name(io.target))
                }
                None => {
                    out += &format!(
                        "trans {}: ({},{})->({},{})\n",
                        t.id,
                        name(t.pre.0),
                        name(t.pre.1),
                        name(t.post.0),
                        name(t.post.1)
                    )
                }
            }
        }
        out
    }
}

pub struct ConfigDisplay<'a> {
    protocol: &'a Protocol,
    config: Configuration,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .config
            .support()
            .map(|q| format!("{}:{}", self.protocol.states[q].name, self.config.counts[q]))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// All configurations of exactly `n` agents supported on `support`. The first
/// support state takes the most agents first, so `{A:2}` precedes `{A:1,B:1}`.
pub fn enumerate_configs(n: usize, support: &[usize], num_states: usize) -> Result<Vec<Configuration>> {
    if n < MIN_POPULATION {
        return Err(Error::invalid(format!("population {n} is below the minimum of {MIN_POPULATION}")));
    }
    Ok(enumerate_sized(n, support, num_states))
}

/// Same as [`enumerate_configs`] without the population floor.
pub(crate) fn enumerate_sized(n: usize, support: &[usize], num_states: usize) -> Vec<Configuration> {
    fn go(n: u32, support: &[usize], cur: &mut Configuration, out: &mut Vec<Configuration>) {
        match support {
            [] => {
                if n == 0 {
                    out.push(cur.clone())
                }
            }
            [last] => {
                cur.counts[*last] = n;
                out.push(cur.clone());
                cur.counts[*last] = 0;
            }
            [first, rest @ ..] => {
                for k in (0..=n).rev() {
                    cur.counts[*first] = k;
                    go(n - k, rest, cur, out);
                }
                cur.counts[*first] = 0;
            }
        }
    }
    let mut out = Vec::new();
    go(n as u32, support, &mut Configuration::zero(num_states), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Protocol source format

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    Sym(&'static str),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex_protocol(text: &str) -> Result<Vec<Vec<(Tok, usize, usize)>>> {
    let mut stmts = vec![Vec::new()];
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == ';' {
                stmts.push(Vec::new());
                i += 1;
                continue;
            }
            let rest: String = chars[i..].iter().take(3).collect();
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                Tok::Num(s.parse().map_err(|_| Error::Syntax { line: line_no, col, msg: "number too large".into() })?)
            } else if rest.starts_with("-->") {
                i += 3;
                Tok::Sym("-->")
            } else if rest.starts_with("--") {
                i += 2;
                Tok::Sym("--")
            } else if rest.starts_with("->") {
                i += 2;
                Tok::Sym("->")
            } else {
                i += 1;
                match c {
                    ':' => Tok::Sym(":"),
                    '(' => Tok::Sym("("),
                    ')' => Tok::Sym(")"),
                    ',' => Tok::Sym(","),
                    '=' => Tok::Sym("="),
                    _ => {
                        return Err(Error::Syntax { line: line_no, col, msg: format!("unexpected character `{c}`") })
                    }
                }
            };
            stmts.last_mut().unwrap().push((tok, line_no, col));
        }
        stmts.push(Vec::new());
    }
    Ok(stmts.into_iter().filter(|s| !s.is_empty()).collect())
}

impl Lexer {
    fn peek(&self) -> &Tok {
        self.toks.get(self.pos).map(|t| &t.0).unwrap_or(&Tok::End)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(&(_, l, c)) if self.pos < self.toks.len() => (l, c),
            Some((_, l, c)) => (*l, c + 1),
            None => (0, 0),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), l, c)) => {
                self.pos += 1;
                Ok((s.clone(), *l, *c))
            }
            _ => self.err("expected identifier"),
        }
    }

    fn sym(&mut self, s: &'static str) -> Result<()> {
        if *self.peek() == Tok::Sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

struct RawTrans {
    id: String,
    names: [(String, usize, usize); 4],
    at: (usize, usize),
}

/// Parses the line-oriented protocol format. Statements end at a newline or `;`.
pub fn parse_protocol(text: &str) -> Result<Protocol> {
    let mut state_names: Vec<(String, usize, usize)> = Vec::new();
    let mut initial_names: Vec<(String, usize, usize)> = Vec::new();
    let mut opinions: Vec<((String, usize, usize), u8)> = Vec::new();
    let mut raw: Vec<RawTrans> = Vec::new();

    for toks in lex_protocol(text)? {
        let mut lx = Lexer { toks, pos: 0 };
        let (kw, l, c) = lx.ident()?;
        match kw.as_str() {
            "states" | "initial" => {
                let target = if kw == "states" { &mut state_names } else { &mut initial_names };
                if lx.done() {
                    return lx.err(format!("`{kw}` needs at least one state"));
                }
                while !lx.done() {
                    target.push(lx.ident()?);
                }
            }
            "opinion" => {
                while !lx.done() {
                    let name = lx.ident()?;
                    lx.sym("=")?;
                    match lx.peek().clone() {
                        Tok::Num(b @ (0 | 1)) => {
                            lx.pos += 1;
                            opinions.push((name, b as u8));
                        }
                        _ => return lx.err("opinion must be 0 or 1"),
                    }
                }
            }
            "trans" => {
                let (id, _, _) = lx.ident()?;
                lx.sym(":")?;
                let names = if *lx.peek() == Tok::Sym("(") {
                    lx.sym("(")?;
                    let a = lx.ident()?;
                    lx.sym(",")?;
                    let b = lx.ident()?;
                    lx.sym(")")?;
                    lx.sym("->")?;
                    lx.sym("(")?;
                    let c2 = lx.ident()?;
                    lx.sym(",")?;
                    let d = lx.ident()?;
                    lx.sym(")")?;
                    [a, b, c2, d]
                } else {
                    let mover = lx.ident()?;
                    lx.sym("--")?;
                    let observer = lx.ident()?;
                    lx.sym("-->")?;
                    let target = lx.ident()?;
                    [mover, observer.clone(), target, observer]
                };
                raw.push(RawTrans { id, names, at: (l, c) });
            }
            other => {
                return Err(Error::Syntax { line: l, col: c, msg: format!("unknown statement `{other}`") });
            }
        }
        if !lx.done() {
            return lx.err("unexpected trailing input");
        }
    }

    let mut states = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (name, l, c) in state_names {
        if index.contains_key(&name) {
            return Err(Error::Syntax { line: l, col: c, msg: format!("duplicate state `{name}`") });
        }
        index.insert(name.clone(), states.len());
        states.push(StateId { index: states.len(), name });
    }
    if states.is_empty() {
        return Err(Error::invalid("no states declared"));
    }
    let lookup = |(name, l, c): &(String, usize, usize), what: &str| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Syntax { line: *l, col: *c, msg: format!("{what} `{name}` is not a declared state") })
    };

    let mut initial = BTreeSet::new();
    for n in &initial_names {
        initial.insert(lookup(n, "initial state")?);
    }
    if initial.is_empty() {
        return Err(Error::invalid("no initial states declared"));
    }

    let opinion = if opinions.is_empty() {
        None
    } else {
        let mut op = vec![None; states.len()];
        for (n, b) in &opinions {
            op[lookup(n, "opinion on")?] = Some(*b);
        }
        match op.iter().position(Option::is_none) {
            Some(q) => return Err(Error::invalid(format!("state `{}` has no opinion", states[q].name))),
            None => Some(op.into_iter().map(Option::unwrap).collect()),
        }
    };

    let mut transitions: Vec<Transition> = Vec::new();
    for r in &raw {
        if transitions.iter().any(|t| t.id == r.id) {
            return Err(Error::Syntax { line: r.at.0, col: r.at.1, msg: format!("duplicate transition `{}`", r.id) });
        }
        let q: Vec<usize> = r.names.iter().map(|n| lookup(n, "transition state")).collect::<Result<_>>()?;
        transitions.push(Transition { id: r.id.clone(), pre: (q[0], q[1]), post: (q[2], q[3]) });
    }

    Ok(Protocol::new(states, transitions, initial, opinion))
}

impl Protocol {
    pub fn new(
        states: Vec<StateId>,
        transitions: Vec<Transition>,
        initial: BTreeSet<usize>,
        opinion: Option<Vec<u8>>,
    ) -> Self {
        let is_iopp = transitions.iter().all(|t| t.iopp_form().is_some());
        Protocol { states, transitions, initial, opinion, is_iopp }
    }

    /// Builds a protocol from state names and `(id, q1, q2, q3, q4)` index tuples.
    pub fn from_parts(names: &[&str], transitions: &[(&str, usize, usize, usize, usize)], initial: &[usize]) -> Self {
        let states = names.iter().enumerate().map(|(i, n)| StateId { index: i, name: n.to_string() }).collect();
        let transitions = transitions
            .iter()
            .map(|&(id, a, b, c, d)| Transition { id: id.to_string(), pre: (a, b), post: (c, d) })
            .collect();
        Protocol::new(states, transitions, initial.iter().copied().collect(), None)
    }
}
