use std::fmt::Write;

use super::svg::{escape, glyph_shape, open_document};
use super::{RenderTheme, CARD_HEIGHT, CARD_WIDTH};
use crate::graph::{Card, Node};
use crate::kernel::{Kernel, KernelPath};

const HEADER_HEIGHT: i64 = 56;
const PAD: i64 = 16;

/// Renders a portrait practice card: a header band in the area color with
/// the kind glyph and name, the kernel binding if any, the description, a
/// checklist of items and the links as numbered footnotes.
///
/// The band uses the node's own area, falling back to the area of the bound
/// kernel element.
pub fn render_card_svg(
    node: &Node,
    card: &Card,
    binding: Option<&KernelPath>,
    kernel: &Kernel,
    theme: &RenderTheme,
) -> String {
    let font = i64::from(theme.font_size);
    let line = font + 6;
    let resolved = binding.and_then(|p| kernel.resolve(p).ok());
    let area = node.area.or(resolved.map(|e| e.area()));

    let mut out = String::new();
    open_document(&mut out, (0, 0, CARD_WIDTH, CARD_HEIGHT));
    writeln!(out, "  <title>{}</title>", escape(&node.name)).unwrap();
    writeln!(
        out,
        r##"  <rect class="card" x="0" y="0" width="{CARD_WIDTH}" height="{CARD_HEIGHT}" rx="8" fill="#ffffff" stroke="#333333" stroke-width="1.5"/>"##
    )
    .unwrap();

    writeln!(out, r#"  <g class="card-header" data-id="{}">"#, node.id).unwrap();
    writeln!(
        out,
        r##"    <rect x="0" y="0" width="{CARD_WIDTH}" height="{HEADER_HEIGHT}" rx="8" fill="{}" stroke="#333333" stroke-width="1.5"/>"##,
        escape(theme.area_color(area))
    )
    .unwrap();
    glyph_shape(
        &mut out,
        theme.glyph(node.kind),
        PAD + 18,
        HEADER_HEIGHT / 2,
        18,
        14,
        "#ffffff",
    );
    writeln!(
        out,
        r#"    <text class="name" x="{}" y="{}" font-size="{}" font-weight="bold">{}</text>"#,
        PAD + 44,
        HEADER_HEIGHT / 2 + 2,
        font + 4,
        escape(&node.name)
    )
    .unwrap();
    writeln!(
        out,
        r#"    <text class="kind" x="{}" y="{}" font-size="{}">{}</text>"#,
        PAD + 44,
        HEADER_HEIGHT / 2 + 2 + font,
        font - 2,
        node.kind
    )
    .unwrap();
    out.push_str("  </g>\n");

    let mut y = HEADER_HEIGHT + PAD + font;
    if let Some(path) = binding {
        let detail = match resolved {
            Some(el) => format!("{} ({})", el.name(), el.area()),
            None => "unresolved".to_owned(),
        };
        writeln!(
            out,
            r#"  <text class="kernel-binding" x="{PAD}" y="{y}" font-size="{font}">{} · {}</text>"#,
            escape(&path.to_string()),
            escape(&detail)
        )
        .unwrap();
        y += line + 4;
    }

    if !card.description.is_empty() {
        writeln!(out, r#"  <text class="description" font-size="{font}">"#).unwrap();
        for text in card.description.split('\n') {
            writeln!(
                out,
                r#"    <tspan x="{PAD}" y="{y}">{}</tspan>"#,
                escape(text)
            )
            .unwrap();
            y += line;
        }
        out.push_str("  </text>\n");
        y += 4;
    }

    for item in &card.items {
        writeln!(out, r#"  <g class="checklist-item">"#).unwrap();
        writeln!(
            out,
            r##"    <rect x="{PAD}" y="{}" width="10" height="10" fill="none" stroke="#333333"/>"##,
            y - 10
        )
        .unwrap();
        writeln!(
            out,
            r#"    <text x="{}" y="{y}" font-size="{font}">{}</text>"#,
            PAD + 18,
            escape(item)
        )
        .unwrap();
        out.push_str("  </g>\n");
        y += line;
    }

    let n = card.links.len() as i64;
    for (i, link) in card.links.iter().enumerate() {
        let ly = CARD_HEIGHT - PAD - (n - 1 - i as i64) * (font + 2);
        writeln!(
            out,
            r#"  <text class="link" x="{PAD}" y="{ly}" font-size="{}">[{}] {}</text>"#,
            font - 2,
            i + 1,
            escape(link)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
