//! Graph validation.
//!
//! | code | severity | rule |
//! |------|----------|------|
//! | E001 | error    | relation endpoint (or card/binding owner) missing |
//! | E002 | error    | duplicate id |
//! | E003 | error    | binding path does not resolve in the kernel |
//! | E004 | error    | binding category incompatible with node kind |
//! | W001 | warning  | empty node name (or empty graph title) |
//! | W002 | warning  | two nodes of the same kind share a name |
//! | W003 | warning  | isolated node: no relations and no binding |
//! | W004 | warning  | graph has no nodes |
//! | W005 | warning  | node area differs from its bound kernel element's area |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::graph::{Graph, GraphDocument, NodeKind};
use crate::kernel::{Kernel, KernelPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    E001,
    E002,
    E003,
    E004,
    W001,
    W002,
    W003,
    W004,
    W005,
}

impl Code {
    pub const ALL: [Code; 9] = [
        Code::E001,
        Code::E002,
        Code::E003,
        Code::E004,
        Code::W001,
        Code::W002,
        Code::W003,
        Code::W004,
        Code::W005,
    ];

    pub fn severity(self) -> Severity {
        match self {
            Code::E001 | Code::E002 | Code::E003 | Code::E004 => Severity::Error,
            _ => Severity::Warning,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Subject used for findings about the document as a whole.
pub const GRAPH_SUBJECT: &str = "graph";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    /// Element id, or `"graph"`.
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn new(code: Code, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            subject: subject.into(),
            message: message.into(),
        }
    }
}

/// `<code> <severity> <subject>: <message>`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.code, self.severity, self.subject, self.message
        )
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}

pub fn lint(graph: &Graph, kernel: &Kernel) -> Vec<Diagnostic> {
    lint_document(&graph.to_document(), kernel)
}

/// Lints a raw document, which unlike a [`Graph`] may contain duplicate ids
/// and dangling references. Output is sorted by code, then subject.
pub fn lint_document(doc: &GraphDocument, kernel: &Kernel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let node_kinds: HashMap<&str, NodeKind> =
        doc.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();

    // E002
    let mut seen = HashSet::new();
    let all_ids = doc
        .nodes
        .iter()
        .map(|n| &n.id)
        .chain(doc.notes.iter().map(|t| &t.id))
        .chain(doc.relations.iter().map(|r| &r.id));
    for id in all_ids {
        if !seen.insert(id.as_str()) {
            out.push(Diagnostic::new(
                Code::E002,
                id,
                format!("id `{id}` is used more than once"),
            ));
        }
    }
    let mut seen_owner = HashSet::new();
    for c in &doc.cards {
        if !seen_owner.insert(c.owner.as_str()) {
            out.push(Diagnostic::new(
                Code::E002,
                &c.owner,
                "node has more than one card",
            ));
        }
    }
    seen_owner.clear();
    for b in &doc.bindings {
        if !seen_owner.insert(b.owner.as_str()) {
            out.push(Diagnostic::new(
                Code::E002,
                &b.owner,
                "node has more than one binding",
            ));
        }
    }

    // E001
    for r in &doc.relations {
        for (end, role) in [(&r.source, "source"), (&r.target, "target")] {
            if !node_kinds.contains_key(end.as_str()) {
                out.push(Diagnostic::new(
                    Code::E001,
                    &r.id,
                    format!("relation {role} `{end}` does not exist"),
                ));
            }
        }
    }
    for c in &doc.cards {
        if !node_kinds.contains_key(c.owner.as_str()) {
            out.push(Diagnostic::new(
                Code::E001,
                &c.owner,
                "card owner does not exist",
            ));
        }
    }
    for b in &doc.bindings {
        if !node_kinds.contains_key(b.owner.as_str()) {
            out.push(Diagnostic::new(
                Code::E001,
                &b.owner,
                "binding owner does not exist",
            ));
        }
    }

    // E003, E004, W005
    let mut bound: HashSet<&str> = HashSet::new();
    let node_areas: HashMap<&str, _> = doc
        .nodes
        .iter()
        .filter_map(|n| n.area.map(|a| (n.id.as_str(), a)))
        .collect();
    for b in &doc.bindings {
        let Some(&kind) = node_kinds.get(b.owner.as_str()) else {
            continue;
        };
        bound.insert(b.owner.as_str());
        let path: KernelPath = match b.target.parse() {
            Ok(p) => p,
            Err(e) => {
                out.push(Diagnostic::new(Code::E003, &b.owner, e));
                continue;
            }
        };
        match kernel.resolve(&path) {
            Ok(element) => {
                if let Some(&area) = node_areas.get(b.owner.as_str()) {
                    if area != element.area() {
                        out.push(Diagnostic::new(
                            Code::W005,
                            &b.owner,
                            format!(
                                "node area {area} conflicts with {path}, which belongs to {}",
                                element.area()
                            ),
                        ));
                    }
                }
            }
            Err(e) => out.push(Diagnostic::new(Code::E003, &b.owner, e.to_string())),
        }
        if !kind.can_bind(path.category) {
            let message = match kind.bindable_category() {
                Some(c) => format!("a {kind} node can only bind to kernel.{c}.*, not {path}"),
                None => format!("a {kind} node cannot bind to the kernel ({path})"),
            };
            out.push(Diagnostic::new(Code::E004, &b.owner, message));
        }
    }

    // W001
    if doc.title.trim().is_empty() {
        out.push(Diagnostic::new(
            Code::W001,
            GRAPH_SUBJECT,
            "graph title is empty",
        ));
    }
    for n in &doc.nodes {
        if n.name.trim().is_empty() {
            out.push(Diagnostic::new(
                Code::W001,
                &n.id,
                format!("{} node has no name", n.kind),
            ));
        }
    }

    // W002: report every node after the first (by id) in each group.
    let mut groups: BTreeMap<(NodeKind, &str), Vec<&str>> = BTreeMap::new();
    for n in doc.nodes.iter().filter(|n| !n.name.trim().is_empty()) {
        groups
            .entry((n.kind, n.name.as_str()))
            .or_default()
            .push(&n.id);
    }
    for ((kind, name), mut ids) in groups {
        ids.sort_unstable();
        ids.dedup();
        for id in ids.iter().skip(1) {
            out.push(Diagnostic::new(
                Code::W002,
                *id,
                format!("{kind} name {name:?} is also used by `{}`", ids[0]),
            ));
        }
    }

    // W003
    let mut connected: HashSet<&str> = HashSet::new();
    for r in &doc.relations {
        connected.insert(&r.source);
        connected.insert(&r.target);
    }
    for n in &doc.nodes {
        if !connected.contains(n.id.as_str()) && !bound.contains(n.id.as_str()) {
            out.push(Diagnostic::new(
                Code::W003,
                &n.id,
                "node has no relations and no kernel binding",
            ));
        }
    }

    // W004
    if doc.nodes.is_empty() {
        out.push(Diagnostic::new(
            Code::W004,
            GRAPH_SUBJECT,
            "graph has no nodes",
        ));
    }

    out.sort_by(|a, b| (a.code, &a.subject, &a.message).cmp(&(b.code, &b.subject, &b.message)));
    out.dedup();
    out
}
