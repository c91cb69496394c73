use std::fmt::Write;

use crate::graph::Graph;
use crate::syntax::quote;

/// Canonical text of `graph`. Depends only on graph content, never on the
/// order elements were inserted in.
pub fn print(graph: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "graph {} {{", quote(&graph.title)).unwrap();
    writeln!(
        out,
        "  meta {{ id: {}; revision: {}; }}",
        quote(&graph.id),
        graph.revision
    )
    .unwrap();
    for n in graph.nodes() {
        write!(
            out,
            "  node {} {} {} at ({}, {})",
            n.id,
            n.kind,
            quote(&n.name),
            n.position.x,
            n.position.y
        )
        .unwrap();
        if let Some(area) = n.area {
            write!(out, " area {area}").unwrap();
        }
        out.push('\n');
    }
    for t in graph.notes() {
        writeln!(
            out,
            "  note {} {} at ({}, {})",
            t.id,
            quote(&t.text),
            t.position.x,
            t.position.y
        )
        .unwrap();
    }
    for r in graph.relations() {
        let arrow = if r.directed { "->" } else { "--" };
        write!(out, "  rel {} {} {} {}", r.id, r.source, arrow, r.target).unwrap();
        if let Some(label) = &r.label {
            write!(out, " {}", quote(label)).unwrap();
        }
        out.push('\n');
    }
    for (owner, card) in graph.cards() {
        write!(out, "  card {owner} {{").unwrap();
        if card.is_empty() {
            out.push_str("}\n");
            continue;
        }
        if !card.description.is_empty() {
            write!(out, " desc {}", quote(&card.description)).unwrap();
        }
        for item in &card.items {
            write!(out, " item {}", quote(item)).unwrap();
        }
        for link in &card.links {
            write!(out, " link {}", quote(link)).unwrap();
        }
        out.push_str(" }\n");
    }
    for b in graph.bindings() {
        writeln!(out, "  bind {} {}", b.owner, b.target).unwrap();
    }
    out.push_str("}\n");
    out
}
