//! Graphviz exports of `𝒞`, `𝒴` and the `W^⊥I` window.

use std::fmt::Write as _;

use crate::report::Analysis;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// `𝒞` with loops as self-edges labelled by their generator.
pub fn cgraph_dot(a: &Analysis) -> String {
    graph_dot(a, true)
}

/// `𝒴`: `𝒞` without loops; 2-cells become comments.
pub fn ygraph_dot(a: &Analysis) -> String {
    graph_dot(a, false)
}

fn graph_dot(a: &Analysis, loops: bool) -> String {
    let g = a.system().graph();
    let cg = &a.cg;
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", if loops { "C" } else { "Y" });
    let _ = writeln!(out, "  node [shape=box];");
    for (i, v) in cg.vertices().iter().enumerate() {
        let _ = writeln!(out, "  v{i} [label={}];", quote(&format!("v{i} {}", g.format_tuple(v))));
    }
    for (i, e) in cg.edges().iter().enumerate() {
        if e.is_loop() {
            if loops {
                let _ = writeln!(out, "  v{} -- v{} [label={}];", e.source, e.source, quote(g.name(e.s)));
            }
            continue;
        }
        let style = if a.tree.in_tree[i] { "" } else { ", style=dashed" };
        let _ = writeln!(
            out,
            "  v{} -- v{} [label={}{style}];",
            e.source,
            e.target,
            quote(&format!("{}/{}", g.name(e.s), g.name(e.t)))
        );
    }
    if !loops {
        for (k, c) in a.tours.cells.iter().enumerate() {
            let vs: Vec<String> = c.boundary.iter().map(|&st| format!("v{}", cg.step_source(st))).collect();
            let _ = writeln!(out, "  // 2-cell {k}: {}", vs.join(" "));
        }
    }
    let _ = writeln!(out, "}}");
    out
}

/// Window classes as nodes; edges are commuting pairs and `∞` is omitted.
pub fn window_dot(a: &Analysis) -> String {
    let win = &a.window;
    let mut out = String::new();
    let _ = writeln!(out, "graph Wperp {{");
    let _ = writeln!(out, "  legend [shape=note, label=\"edges = commuting pairs; other finite orders labelled; infinity omitted\"];");
    for c in 0..win.classes.len() {
        let _ = writeln!(out, "  r{c} [label={}];", quote(&a.class_name(c)));
    }
    for (&(i, j), m) in &win.orders {
        if let Some(k) = m.finite() {
            if k == 2 {
                let _ = writeln!(out, "  r{i} -- r{j};");
            } else {
                let _ = writeln!(out, "  r{i} -- r{j} [label=\"{k}\", style=bold];");
            }
        }
    }
    let _ = writeln!(out, "}}");
    out
}
