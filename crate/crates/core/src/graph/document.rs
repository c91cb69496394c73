//! List-based, serializable mirror of [`Graph`]. Unlike a `Graph`, a
//! document may hold duplicate ids or dangling references, so it is what
//! untrusted input (HTTP bodies) is decoded into before validation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Card, ElementId, Graph, Node, NodeKind, Point, Relation, TextNote};
use crate::kernel::{AreaKey, KernelPath};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub name: String,
    pub position: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<AreaKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteDoc {
    pub id: String,
    #[serde(default)]
    pub text: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDoc {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "yes")]
    pub directed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardDoc {
    pub owner: String,
    #[serde(flatten)]
    pub card: Card,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingDoc {
    pub owner: String,
    /// `kernel.<category>.<Name>`; kept as text so malformed paths can be
    /// reported rather than rejected at decode time.
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub revision: u64,
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub notes: Vec<NoteDoc>,
    #[serde(default)]
    pub relations: Vec<RelationDoc>,
    #[serde(default)]
    pub cards: Vec<CardDoc>,
    #[serde(default)]
    pub bindings: Vec<BindingDoc>,
}

/// One reason a document cannot become a [`Graph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn new(subject: &str, message: impl Into<String>) -> Self {
        Violation {
            subject: subject.to_owned(),
            message: message.into(),
        }
    }
}

/// Parses `id` and records it in the shared id space.
fn claim<'a>(
    seen: &mut HashSet<&'a str>,
    id: &'a str,
    violations: &mut Vec<Violation>,
) -> Option<ElementId> {
    let parsed = match ElementId::new(id) {
        Ok(p) => p,
        Err(e) => {
            violations.push(Violation::new(id, e));
            return None;
        }
    };
    if seen.insert(id) {
        Some(parsed)
    } else {
        violations.push(Violation::new(id, format!("duplicate id `{id}`")));
        None
    }
}

impl Graph {
    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            id: self.id.clone(),
            title: self.title.clone(),
            revision: self.revision,
            nodes: self
                .nodes()
                .map(|n| NodeDoc {
                    id: n.id.to_string(),
                    kind: n.kind,
                    name: n.name.clone(),
                    position: n.position,
                    area: n.area,
                })
                .collect(),
            notes: self
                .notes()
                .map(|t| NoteDoc {
                    id: t.id.to_string(),
                    text: t.text.clone(),
                    position: t.position,
                })
                .collect(),
            relations: self
                .relations()
                .map(|r| RelationDoc {
                    id: r.id.to_string(),
                    source: r.source.to_string(),
                    target: r.target.to_string(),
                    label: r.label.clone(),
                    directed: r.directed,
                })
                .collect(),
            cards: self
                .cards()
                .map(|(owner, card)| CardDoc {
                    owner: owner.to_string(),
                    card: card.clone(),
                })
                .collect(),
            bindings: self
                .bindings()
                .map(|b| BindingDoc {
                    owner: b.owner.to_string(),
                    target: b.target.to_string(),
                })
                .collect(),
        }
    }

    /// Validates a document, collecting every violation rather than the first.
    pub fn from_document(doc: &GraphDocument) -> Result<Graph, Vec<Violation>> {
        let mut violations = Vec::new();
        let mut graph = Graph::new(doc.id.clone(), doc.title.clone());
        graph.revision = doc.revision;
        let mut seen: HashSet<&str> = HashSet::new();

        for n in &doc.nodes {
            let Some(id) = claim(&mut seen, &n.id, &mut violations) else {
                continue;
            };
            if !n.position.in_bounds() {
                violations.push(Violation::new(&n.id, "position outside the canvas"));
                continue;
            }
            graph.insert_node(Node {
                id,
                kind: n.kind,
                name: n.name.clone(),
                position: n.position,
                area: n.area,
            });
        }
        for t in &doc.notes {
            let Some(id) = claim(&mut seen, &t.id, &mut violations) else {
                continue;
            };
            if !t.position.in_bounds() {
                violations.push(Violation::new(&t.id, "position outside the canvas"));
                continue;
            }
            graph.insert_note(TextNote {
                id,
                text: t.text.clone(),
                position: t.position,
            });
        }
        let mut relations = Vec::new();
        for r in &doc.relations {
            if let Some(id) = claim(&mut seen, &r.id, &mut violations) {
                relations.push((id, r));
            }
        }
        for (id, r) in relations {
            let mut ok = true;
            for end in [&r.source, &r.target] {
                if graph.node(end).is_none() {
                    violations.push(Violation::new(
                        &r.id,
                        format!("relation endpoint `{end}` does not exist"),
                    ));
                    ok = false;
                }
            }
            if ok {
                graph.insert_relation(Relation {
                    id,
                    source: ElementId::new(r.source.clone()).expect("is a node id"),
                    target: ElementId::new(r.target.clone()).expect("is a node id"),
                    label: r.label.clone(),
                    directed: r.directed,
                });
            }
        }
        for c in &doc.cards {
            let Some(owner) = graph.node(&c.owner).map(|n| n.id.clone()) else {
                violations.push(Violation::new(&c.owner, "card owner is not a node"));
                continue;
            };
            if let Err(e) = c.card.validate() {
                violations.push(Violation::new(&c.owner, e));
                continue;
            }
            if graph.insert_card(owner, c.card.clone()).is_some() {
                violations.push(Violation::new(&c.owner, "more than one card for node"));
            }
        }
        for b in &doc.bindings {
            let Some(owner) = graph.node(&b.owner).map(|n| n.id.clone()) else {
                violations.push(Violation::new(&b.owner, "binding owner is not a node"));
                continue;
            };
            let target: KernelPath = match b.target.parse() {
                Ok(t) => t,
                Err(e) => {
                    violations.push(Violation::new(&b.owner, e));
                    continue;
                }
            };
            if graph.insert_binding(owner, target).is_some() {
                violations.push(Violation::new(&b.owner, "more than one binding for node"));
            }
        }

        if violations.is_empty() {
            Ok(graph)
        } else {
            Err(violations)
        }
    }
}
