use std::fmt::Write;

use super::{scc_winning, ConfigGraph};
use crate::model::Protocol;
use crate::rabin::Dra;

const PALETTE: [&str; 8] = ["#e8eef7", "#f7efe1", "#ece4f5", "#e3f2ef", "#f5e6ea", "#eef3df", "#f0f0f0", "#e6ecf2"];

/// Graphviz rendering: one cluster per SCC, bottom SCCs outlined green when
/// winning and red when losing.
pub fn to_dot(g: &ConfigGraph, p: &Protocol, dra: &Dra) -> String {
    let mut out = String::from("digraph product {\n  node [shape=box, style=filled, fontname=\"monospace\"];\n");
    for (s, members) in g.sccs.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{s} {{");
        if g.bottom[s] {
            let (label, color) = if scc_winning(members, g, dra) { ("winning", "green") } else { ("losing", "red") };
            let _ = writeln!(out, "    label=\"bottom SCC {s}: {label}\"; color={color}; penwidth=2;");
        } else {
            let _ = writeln!(out, "    label=\"SCC {s}\"; color=gray;");
        }
        for &v in members {
            let c = &g.nodes[v];
            let _ = writeln!(
                out,
                "    n{v} [label=\"{} / q{}\", fillcolor=\"{}\"];",
                p.config_display(&c.config),
                c.control,
                PALETTE[s % PALETTE.len()]
            );
        }
        out += "  }\n";
    }
    for (v, es) in g.edges.iter().enumerate() {
        for &(t, w) in es {
            let _ = writeln!(out, "  n{v} -> n{w} [label=\"{}\"];", p.transitions[t].id);
        }
    }
    out += "}\n";
    out
}
