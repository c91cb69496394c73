use std::collections::BTreeSet;

use super::{Command, EditError, ElementId, Graph, NodeKind, Point};

#[derive(Debug, Clone, PartialEq, Eq)]
struct HistoryEntry {
    command: Command,
    inverse: Vec<Command>,
}

/// Result of an undo or redo request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[must_use]
pub enum HistoryStep {
    Stepped,
    /// The stack was empty; nothing changed.
    Empty,
}

/// A graph plus its undo and redo stacks. Single writer.
#[derive(Debug, Clone)]
pub struct EditSession {
    graph: Graph,
    undo_stack: Vec<HistoryEntry>,
    redo_stack: Vec<Command>,
}

/// An empty document with revision 0 and empty history.
pub fn new_graph(title: impl Into<String>) -> EditSession {
    EditSession::from_graph(Graph::new("", title))
}

impl EditSession {
    pub fn from_graph(graph: Graph) -> Self {
        EditSession {
            graph,
            undo_stack: Vec::new(),
            redo_stack: Vec::new(),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn can_undo(&self) -> bool {
        !self.undo_stack.is_empty()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo_stack.is_empty()
    }

    pub fn undo_depth(&self) -> usize {
        self.undo_stack.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo_stack.len()
    }

    /// Applies `cmd` and records its inverse. A rejected command changes
    /// neither the graph nor either stack.
    pub fn apply(&mut self, cmd: Command) -> Result<(), EditError> {
        let inverse = cmd.apply(&mut self.graph)?;
        self.undo_stack.push(HistoryEntry {
            command: cmd,
            inverse,
        });
        self.redo_stack.clear();
        Ok(())
    }

    pub fn undo(&mut self) -> HistoryStep {
        let Some(entry) = self.undo_stack.pop() else {
            return HistoryStep::Empty;
        };
        for cmd in &entry.inverse {
            cmd.apply(&mut self.graph)
                .expect("inverse of an applied command always applies");
        }
        self.redo_stack.push(entry.command);
        HistoryStep::Stepped
    }

    pub fn redo(&mut self) -> HistoryStep {
        let Some(command) = self.redo_stack.pop() else {
            return HistoryStep::Empty;
        };
        let inverse = command
            .apply(&mut self.graph)
            .expect("undone command always re-applies");
        self.undo_stack.push(HistoryEntry { command, inverse });
        HistoryStep::Stepped
    }

    /// Moves nodes and notes by `delta` as a single undo step.
    pub fn move_nodes(
        &mut self,
        ids: impl IntoIterator<Item = ElementId>,
        delta: Point,
    ) -> Result<(), EditError> {
        self.apply(Command::MoveNodes {
            ids: ids.into_iter().collect::<BTreeSet<_>>(),
            delta,
        })
    }

    /// Changes a node's kind in place, dropping a binding the new kind cannot
    /// hold in the same undo step.
    pub fn substitute_kind(&mut self, id: ElementId, kind: NodeKind) -> Result<(), EditError> {
        self.apply(Command::SetKind { id, kind })
    }
}
