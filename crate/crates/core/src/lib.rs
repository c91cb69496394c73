//! Core of essencery: a workbench for drawing Essence method graphs.
//!
//! - [`kernel`]: the Essence kernel and kernel paths.
//! - [`graph`]: graph documents and the undoable command engine.
//! - [`essfmt`]: the `.ess` text format.
//! - [`lint`]: graph diagnostics.
//! - [`render`]: SVG output for graphs and practice cards.

pub mod essfmt;
pub mod graph;
pub mod kernel;
pub mod lint;
pub mod render;
mod syntax;

pub use essfmt::{parse, print, ParseError};
pub use graph::{
    new_graph, structural_equal, Card, Command, EditError, EditSession, ElementId, Graph,
    GraphDocument, HistoryStep, Node, NodeKind, Point, Relation, TextNote,
};
pub use kernel::{load_configured_kernel, load_kernel, load_standard_kernel, Kernel, KernelPath};
pub use lint::{lint, Diagnostic};
pub use render::{render_card_svg, render_graph_svg, RenderTheme};
