//! Graph documents: typed nodes, text notes, relations, practice cards and
//! kernel bindings.
//!
//! A [`Graph`] always satisfies its referential invariants. It is built either
//! through [`EditSession`] commands, by parsing `.ess` text, or by validating
//! a [`GraphDocument`].

mod command;
mod document;
mod session;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kernel::{AreaKey, KernelCategory, KernelPath};

pub use command::{Command, EditError};
pub use document::{BindingDoc, CardDoc, GraphDocument, NodeDoc, NoteDoc, RelationDoc, Violation};
pub use session::{new_graph, EditSession, HistoryStep};

/// Largest absolute coordinate a node or note may have.
pub const COORD_LIMIT: i64 = 100_000;

/// Id of a node, note or relation: `[a-z][a-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(s: impl Into<String>) -> Result<Self, String> {
        let s = s.into();
        if is_element_id(&s) {
            Ok(ElementId(s))
        } else {
            Err(format!("`{s}` is not a valid element id"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_element_id(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ElementId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementId::new(s)
    }
}

impl std::borrow::Borrow<str> for ElementId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for ElementId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for ElementId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ElementId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ElementId::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Canvas coordinates; y grows downward. Also used for move offsets.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn in_bounds(self) -> bool {
        self.x.unsigned_abs() <= COORD_LIMIT as u64 && self.y.unsigned_abs() <= COORD_LIMIT as u64
    }

    pub fn checked_add(self, other: Point) -> Option<Point> {
        Some(Point::new(
            self.x.checked_add(other.x)?,
            self.y.checked_add(other.y)?,
        ))
    }

    pub fn checked_neg(self) -> Option<Point> {
        Some(Point::new(self.x.checked_neg()?, self.y.checked_neg()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Alpha,
    ActivitySpace,
    Activity,
    WorkProduct,
    Competency,
    Pattern,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Alpha,
        NodeKind::ActivitySpace,
        NodeKind::Activity,
        NodeKind::WorkProduct,
        NodeKind::Competency,
        NodeKind::Pattern,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Alpha => "alpha",
            NodeKind::ActivitySpace => "activity_space",
            NodeKind::Activity => "activity",
            NodeKind::WorkProduct => "work_product",
            NodeKind::Competency => "competency",
            NodeKind::Pattern => "pattern",
        }
    }

    /// The kernel category a node of this kind may bind to, if any.
    pub fn bindable_category(self) -> Option<KernelCategory> {
        match self {
            NodeKind::Alpha => Some(KernelCategory::Alpha),
            NodeKind::ActivitySpace => Some(KernelCategory::Space),
            NodeKind::Competency => Some(KernelCategory::Competency),
            NodeKind::Activity | NodeKind::WorkProduct | NodeKind::Pattern => None,
        }
    }

    pub fn can_bind(self, category: KernelCategory) -> bool {
        self.bindable_category() == Some(category)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown node kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: ElementId,
    pub kind: NodeKind,
    pub name: String,
    pub position: Point,
    pub area: Option<AreaKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextNote {
    pub id: ElementId,
    pub text: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: ElementId,
    pub source: ElementId,
    pub target: ElementId,
    pub label: Option<String>,
    pub directed: bool,
}

/// Practice card content attached to a node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Card {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub items: Vec<String>,
    #[serde(default)]
    pub links: Vec<String>,
}

impl Card {
    /// Checks that every link is an absolute URL.
    pub fn validate(&self) -> Result<(), String> {
        for link in &self.links {
            url::Url::parse(link)
                .map_err(|e| format!("link `{link}` is not an absolute URL: {e}"))?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.description.is_empty() && self.items.is_empty() && self.links.is_empty()
    }
}

/// A node's binding to a kernel element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binding<'g> {
    pub owner: &'g ElementId,
    pub target: &'g KernelPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// Opaque document id.
    pub id: String,
    pub title: String,
    pub revision: u64,
    nodes: BTreeMap<ElementId, Node>,
    notes: BTreeMap<ElementId, TextNote>,
    relations: BTreeMap<ElementId, Relation>,
    cards: BTreeMap<ElementId, Card>,
    bindings: BTreeMap<ElementId, KernelPath>,
}

impl Graph {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Graph {
            id: id.into(),
            title: title.into(),
            revision: 0,
            nodes: BTreeMap::new(),
            notes: BTreeMap::new(),
            relations: BTreeMap::new(),
            cards: BTreeMap::new(),
            bindings: BTreeMap::new(),
        }
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> + Clone {
        self.nodes.values()
    }

    pub fn notes(&self) -> impl ExactSizeIterator<Item = &TextNote> + Clone {
        self.notes.values()
    }

    pub fn relations(&self) -> impl ExactSizeIterator<Item = &Relation> + Clone {
        self.relations.values()
    }

    /// `(owner, card)` pairs in ascending owner order.
    pub fn cards(&self) -> impl ExactSizeIterator<Item = (&ElementId, &Card)> + Clone {
        self.cards.iter()
    }

    pub fn bindings(&self) -> impl ExactSizeIterator<Item = Binding<'_>> + Clone {
        self.bindings
            .iter()
            .map(|(owner, target)| Binding { owner, target })
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn note(&self, id: &str) -> Option<&TextNote> {
        self.notes.get(id)
    }

    pub fn relation(&self, id: &str) -> Option<&Relation> {
        self.relations.get(id)
    }

    pub fn card(&self, owner: &str) -> Option<&Card> {
        self.cards.get(owner)
    }

    pub fn binding(&self, owner: &str) -> Option<&KernelPath> {
        self.bindings.get(owner)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.notes.is_empty()
    }

    /// Whether `id` is taken by a node, note or relation.
    pub fn contains_id(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
            || self.notes.contains_key(id)
            || self.relations.contains_key(id)
    }

    /// Relations with `node` as source or target, in id order.
    pub fn incident_relations<'a>(
        &'a self,
        node: &'a str,
    ) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations
            .values()
            .filter(move |r| r.source.as_str() == node || r.target.as_str() == node)
    }

    /// Lowest unused `<prefix><n>` for n = 1, 2, ...
    ///
    /// # Panics
    ///
    /// If `prefix` is not itself a valid element id.
    pub fn fresh_id(&self, prefix: &str) -> ElementId {
        assert!(is_element_id(prefix), "invalid id prefix `{prefix}`");
        (1..)
            .map(|n| format!("{prefix}{n}"))
            .find(|candidate| !self.contains_id(candidate))
            .map(ElementId)
            .expect("unbounded range")
    }

    // Raw mutators; callers have already checked invariants.

    pub(crate) fn insert_node(&mut self, node: Node) {
        self.nodes.insert(node.id.clone(), node);
    }

    pub(crate) fn insert_note(&mut self, note: TextNote) {
        self.notes.insert(note.id.clone(), note);
    }

    pub(crate) fn insert_relation(&mut self, rel: Relation) {
        self.relations.insert(rel.id.clone(), rel);
    }

    pub(crate) fn insert_card(&mut self, owner: ElementId, card: Card) -> Option<Card> {
        self.cards.insert(owner, card)
    }

    pub(crate) fn insert_binding(
        &mut self,
        owner: ElementId,
        target: KernelPath,
    ) -> Option<KernelPath> {
        self.bindings.insert(owner, target)
    }

    pub(crate) fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    pub(crate) fn note_mut(&mut self, id: &str) -> Option<&mut TextNote> {
        self.notes.get_mut(id)
    }

    pub(crate) fn relation_mut(&mut self, id: &str) -> Option<&mut Relation> {
        self.relations.get_mut(id)
    }

    pub(crate) fn remove_node(&mut self, id: &str) -> Option<Node> {
        self.nodes.remove(id)
    }

    pub(crate) fn remove_note(&mut self, id: &str) -> Option<TextNote> {
        self.notes.remove(id)
    }

    pub(crate) fn remove_relation(&mut self, id: &str) -> Option<Relation> {
        self.relations.remove(id)
    }

    pub(crate) fn remove_card(&mut self, owner: &str) -> Option<Card> {
        self.cards.remove(owner)
    }

    pub(crate) fn remove_binding(&mut self, owner: &str) -> Option<KernelPath> {
        self.bindings.remove(owner)
    }
}

/// Equality ignoring the document id and revision.
pub fn structural_equal(a: &Graph, b: &Graph) -> bool {
    a.title == b.title
        && a.nodes == b.nodes
        && a.notes == b.notes
        && a.relations == b.relations
        && a.cards == b.cards
        && a.bindings == b.bindings
}
