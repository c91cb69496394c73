//! Deterministic SVG output for graphs and practice cards.
//!
//! Glyphs have a fixed size and are centred on the node position. Text is
//! never wrapped or measured, so the same graph and theme always produce the
//! same bytes.

mod card;
mod graph;
mod svg;

use serde::{Deserialize, Serialize};

use crate::graph::NodeKind;
use crate::kernel::{AreaKey, ColorToken, Kernel};

pub use card::render_card_svg;
pub use graph::render_graph_svg;

/// Glyph box size in canvas units.
pub const GLYPH_WIDTH: i64 = 120;
pub const GLYPH_HEIGHT: i64 = 60;
/// Note box width; height grows with the number of text lines.
pub const NOTE_WIDTH: i64 = 160;
pub const CARD_WIDTH: i64 = 300;
pub const CARD_HEIGHT: i64 = 420;

/// Outline drawn for a node kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Glyph {
    Circle,
    /// Dashed five-sided arrow.
    ChevronPentagon,
    /// Solid arrow with a notched tail.
    ArrowRectangle,
    FoldedRectangle,
    /// Pentagon pointing down.
    ShieldPentagon,
    Diamond,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderTheme {
    area_colors: [String; 3],
    glyphs: [Glyph; 6],
    pub font_size: u32,
    pub margin: u32,
}

fn area_index(area: AreaKey) -> usize {
    AreaKey::ALL
        .iter()
        .position(|&a| a == area)
        .expect("closed set")
}

fn kind_index(kind: NodeKind) -> usize {
    NodeKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("closed set")
}

impl Default for RenderTheme {
    fn default() -> Self {
        RenderTheme {
            area_colors: [
                ColorToken::Green.hex().to_owned(),
                ColorToken::Yellow.hex().to_owned(),
                ColorToken::Blue.hex().to_owned(),
            ],
            glyphs: [
                Glyph::Circle,
                Glyph::ChevronPentagon,
                Glyph::ArrowRectangle,
                Glyph::FoldedRectangle,
                Glyph::ShieldPentagon,
                Glyph::Diamond,
            ],
            font_size: 12,
            margin: 40,
        }
    }
}

impl RenderTheme {
    /// Default theme with area colors taken from the kernel's color tokens.
    pub fn from_kernel(kernel: &Kernel) -> Self {
        let mut theme = RenderTheme::default();
        for area in kernel.areas() {
            theme.area_colors[area_index(area.key)] = area.color.hex().to_owned();
        }
        theme
    }

    /// Fill for a node in `area`; white when it has none.
    pub fn area_color(&self, area: Option<AreaKey>) -> &str {
        match area {
            Some(a) => &self.area_colors[area_index(a)],
            None => ColorToken::White.hex(),
        }
    }

    pub fn set_area_color(&mut self, area: AreaKey, color: impl Into<String>) {
        self.area_colors[area_index(area)] = color.into();
    }

    pub fn glyph(&self, kind: NodeKind) -> Glyph {
        self.glyphs[kind_index(kind)]
    }

    pub fn set_glyph(&mut self, kind: NodeKind, glyph: Glyph) {
        self.glyphs[kind_index(kind)] = glyph;
    }
}
