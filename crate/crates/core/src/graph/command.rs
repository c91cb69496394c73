use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Card, ElementId, Graph, Node, NodeKind, Point, Relation, TextNote};
use crate::kernel::{AreaKey, KernelPath};

/// A reversible edit. Each variant carries exactly the data needed to apply it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    AddNode {
        id: ElementId,
        kind: NodeKind,
        name: String,
        position: Point,
        #[serde(default)]
        area: Option<AreaKey>,
    },
    /// Also removes the node's relations, card and binding.
    RemoveNode {
        id: ElementId,
    },
    RenameNode {
        id: ElementId,
        name: String,
    },
    /// Translates nodes and notes together as one edit.
    MoveNodes {
        ids: BTreeSet<ElementId>,
        delta: Point,
    },
    SetKind {
        id: ElementId,
        kind: NodeKind,
    },
    AddRelation {
        id: ElementId,
        source: ElementId,
        target: ElementId,
        #[serde(default)]
        label: Option<String>,
        #[serde(default = "directed_default")]
        directed: bool,
    },
    RemoveRelation {
        id: ElementId,
    },
    SetRelationLabel {
        id: ElementId,
        label: Option<String>,
    },
    AddNote {
        id: ElementId,
        text: String,
        position: Point,
    },
    SetNoteText {
        id: ElementId,
        text: String,
    },
    RemoveNote {
        id: ElementId,
    },
    SetCard {
        owner: ElementId,
        card: Card,
    },
    RemoveCard {
        owner: ElementId,
    },
    SetBinding {
        owner: ElementId,
        target: KernelPath,
    },
    RemoveBinding {
        owner: ElementId,
    },
}

fn directed_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("no element with id `{0}`")]
    UnknownId(ElementId),
    #[error("`{0}` is not a node")]
    NotANode(ElementId),
    #[error("`{0}` is not a note")]
    NotANote(ElementId),
    #[error("`{0}` is not a node or note")]
    NotMovable(ElementId),
    #[error("id `{0}` is already in use")]
    DuplicateId(ElementId),
    #[error("relation endpoint `{0}` does not exist")]
    MissingEndpoint(ElementId),
    #[error("position of `{0}` would leave the canvas")]
    OutOfBounds(ElementId),
    #[error("move offset ({}, {}) is out of range", .0.x, .0.y)]
    DeltaOutOfRange(Point),
    #[error("node `{0}` has no card")]
    NoCard(ElementId),
    #[error("node `{0}` has no binding")]
    NoBinding(ElementId),
    #[error("invalid card for `{owner}`: {reason}")]
    InvalidCard { owner: ElementId, reason: String },
}

fn require_node<'g>(graph: &'g Graph, id: &ElementId) -> Result<&'g Node, EditError> {
    graph.node(id.as_str()).ok_or_else(|| {
        if graph.contains_id(id.as_str()) {
            EditError::NotANode(id.clone())
        } else {
            EditError::UnknownId(id.clone())
        }
    })
}

fn require_fresh(graph: &Graph, id: &ElementId) -> Result<(), EditError> {
    if graph.contains_id(id.as_str()) {
        Err(EditError::DuplicateId(id.clone()))
    } else {
        Ok(())
    }
}

fn require_in_bounds(id: &ElementId, p: Point) -> Result<(), EditError> {
    if p.in_bounds() {
        Ok(())
    } else {
        Err(EditError::OutOfBounds(id.clone()))
    }
}

fn add_relation_command(rel: &Relation) -> Command {
    Command::AddRelation {
        id: rel.id.clone(),
        source: rel.source.clone(),
        target: rel.target.clone(),
        label: rel.label.clone(),
        directed: rel.directed,
    }
}

fn restore_card(owner: &ElementId, previous: Option<Card>) -> Command {
    match previous {
        Some(card) => Command::SetCard {
            owner: owner.clone(),
            card,
        },
        None => Command::RemoveCard {
            owner: owner.clone(),
        },
    }
}

fn restore_binding(owner: &ElementId, previous: Option<KernelPath>) -> Command {
    match previous {
        Some(target) => Command::SetBinding {
            owner: owner.clone(),
            target,
        },
        None => Command::RemoveBinding {
            owner: owner.clone(),
        },
    }
}

impl Command {
    /// Applies the command, returning the commands that undo it in order.
    ///
    /// Every check runs before the first mutation, so an error leaves the
    /// graph untouched.
    pub(crate) fn apply(&self, graph: &mut Graph) -> Result<Vec<Command>, EditError> {
        match self {
            Command::AddNode {
                id,
                kind,
                name,
                position,
                area,
            } => {
                require_fresh(graph, id)?;
                require_in_bounds(id, *position)?;
                graph.insert_node(Node {
                    id: id.clone(),
                    kind: *kind,
                    name: name.clone(),
                    position: *position,
                    area: *area,
                });
                Ok(vec![Command::RemoveNode { id: id.clone() }])
            }
            Command::RemoveNode { id } => {
                let node = require_node(graph, id)?.clone();
                let incident: Vec<Relation> =
                    graph.incident_relations(id.as_str()).cloned().collect();
                let mut inverse = vec![Command::AddNode {
                    id: node.id.clone(),
                    kind: node.kind,
                    name: node.name.clone(),
                    position: node.position,
                    area: node.area,
                }];
                for rel in &incident {
                    graph.remove_relation(rel.id.as_str());
                    inverse.push(add_relation_command(rel));
                }
                if let Some(card) = graph.remove_card(id.as_str()) {
                    inverse.push(Command::SetCard {
                        owner: id.clone(),
                        card,
                    });
                }
                if let Some(target) = graph.remove_binding(id.as_str()) {
                    inverse.push(Command::SetBinding {
                        owner: id.clone(),
                        target,
                    });
                }
                graph.remove_node(id.as_str());
                Ok(inverse)
            }
            Command::RenameNode { id, name } => {
                require_node(graph, id)?;
                let node = graph.node_mut(id.as_str()).expect("checked");
                let old = std::mem::replace(&mut node.name, name.clone());
                Ok(vec![Command::RenameNode {
                    id: id.clone(),
                    name: old,
                }])
            }
            Command::MoveNodes { ids, delta } => {
                let limit = 2 * super::COORD_LIMIT as u64;
                if delta.x.unsigned_abs() > limit || delta.y.unsigned_abs() > limit {
                    return Err(EditError::DeltaOutOfRange(*delta));
                }
                for id in ids {
                    let current = if let Some(n) = graph.node(id.as_str()) {
                        n.position
                    } else if let Some(t) = graph.note(id.as_str()) {
                        t.position
                    } else if graph.contains_id(id.as_str()) {
                        return Err(EditError::NotMovable(id.clone()));
                    } else {
                        return Err(EditError::UnknownId(id.clone()));
                    };
                    require_in_bounds(id, current.checked_add(*delta).expect("bounded"))?;
                }
                for id in ids {
                    if let Some(n) = graph.node_mut(id.as_str()) {
                        n.position = n.position.checked_add(*delta).expect("bounded");
                    } else if let Some(t) = graph.note_mut(id.as_str()) {
                        t.position = t.position.checked_add(*delta).expect("bounded");
                    }
                }
                Ok(vec![Command::MoveNodes {
                    ids: ids.clone(),
                    delta: delta.checked_neg().expect("bounded"),
                }])
            }
            Command::SetKind { id, kind } => {
                require_node(graph, id)?;
                let bound = graph.binding(id.as_str()).cloned();
                if matches!(&bound, Some(target) if !kind.can_bind(target.category)) {
                    graph.remove_binding(id.as_str());
                }
                let node = graph.node_mut(id.as_str()).expect("checked");
                let old = std::mem::replace(&mut node.kind, *kind);
                let mut inverse = vec![Command::SetKind {
                    id: id.clone(),
                    kind: old,
                }];
                // Restoring the old kind may itself drop the binding, so the
                // inverse always puts it back.
                if let Some(target) = bound {
                    inverse.push(Command::SetBinding {
                        owner: id.clone(),
                        target,
                    });
                }
                Ok(inverse)
            }
            Command::AddRelation {
                id,
                source,
                target,
                label,
                directed,
            } => {
                require_fresh(graph, id)?;
                for end in [source, target] {
                    if graph.node(end.as_str()).is_none() {
                        return Err(EditError::MissingEndpoint(end.clone()));
                    }
                }
                graph.insert_relation(Relation {
                    id: id.clone(),
                    source: source.clone(),
                    target: target.clone(),
                    label: label.clone(),
                    directed: *directed,
                });
                Ok(vec![Command::RemoveRelation { id: id.clone() }])
            }
            Command::RemoveRelation { id } => {
                let rel = graph
                    .remove_relation(id.as_str())
                    .ok_or_else(|| EditError::UnknownId(id.clone()))?;
                Ok(vec![add_relation_command(&rel)])
            }
            Command::SetRelationLabel { id, label } => {
                let rel = graph
                    .relation_mut(id.as_str())
                    .ok_or_else(|| EditError::UnknownId(id.clone()))?;
                let old = std::mem::replace(&mut rel.label, label.clone());
                Ok(vec![Command::SetRelationLabel {
                    id: id.clone(),
                    label: old,
                }])
            }
            Command::AddNote { id, text, position } => {
                require_fresh(graph, id)?;
                require_in_bounds(id, *position)?;
                graph.insert_note(TextNote {
                    id: id.clone(),
                    text: text.clone(),
                    position: *position,
                });
                Ok(vec![Command::RemoveNote { id: id.clone() }])
            }
            Command::SetNoteText { id, text } => {
                let note = note_or_err(graph, id)?;
                let old = std::mem::replace(&mut note.text, text.clone());
                Ok(vec![Command::SetNoteText {
                    id: id.clone(),
                    text: old,
                }])
            }
            Command::RemoveNote { id } => {
                note_or_err(graph, id)?;
                let note = graph.remove_note(id.as_str()).expect("checked");
                Ok(vec![Command::AddNote {
                    id: note.id,
                    text: note.text,
                    position: note.position,
                }])
            }
            Command::SetCard { owner, card } => {
                require_node(graph, owner)?;
                card.validate().map_err(|reason| EditError::InvalidCard {
                    owner: owner.clone(),
                    reason,
                })?;
                let previous = graph.insert_card(owner.clone(), card.clone());
                Ok(vec![restore_card(owner, previous)])
            }
            Command::RemoveCard { owner } => {
                require_node(graph, owner)?;
                let card = graph
                    .remove_card(owner.as_str())
                    .ok_or_else(|| EditError::NoCard(owner.clone()))?;
                Ok(vec![Command::SetCard {
                    owner: owner.clone(),
                    card,
                }])
            }
            Command::SetBinding { owner, target } => {
                require_node(graph, owner)?;
                let previous = graph.insert_binding(owner.clone(), target.clone());
                Ok(vec![restore_binding(owner, previous)])
            }
            Command::RemoveBinding { owner } => {
                require_node(graph, owner)?;
                let target = graph
                    .remove_binding(owner.as_str())
                    .ok_or_else(|| EditError::NoBinding(owner.clone()))?;
                Ok(vec![Command::SetBinding {
                    owner: owner.clone(),
                    target,
                }])
            }
        }
    }
}

fn note_or_err<'g>(graph: &'g mut Graph, id: &ElementId) -> Result<&'g mut TextNote, EditError> {
    if graph.note(id.as_str()).is_none() {
        return Err(if graph.contains_id(id.as_str()) {
            EditError::NotANote(id.clone())
        } else {
            EditError::UnknownId(id.clone())
        });
    }
    Ok(graph.note_mut(id.as_str()).expect("checked"))
}
