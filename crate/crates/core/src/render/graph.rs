use std::fmt::Write;

use super::svg::{escape, glyph_shape, open_document, Bounds};
use super::{Glyph, RenderTheme, GLYPH_HEIGHT, GLYPH_WIDTH, NOTE_WIDTH};
use crate::graph::{Graph, Node, Point, Relation};

const HW: i64 = GLYPH_WIDTH / 2;
const HH: i64 = GLYPH_HEIGHT / 2;
/// Height of the loop drawn for a self-relation, above the glyph.
const LOOP_RISE: i64 = 60;

/// Centered text over a white outlined copy, so lines under it stay readable.
fn halo_text(out: &mut String, indent: &str, class: &str, x: i64, y: i64, font: i64, text: &str) {
    let at = format!(r#"x="{x}" y="{y}" font-size="{font}" text-anchor="middle""#);
    writeln!(
        out,
        r##"{indent}<text class="halo" {at} fill="#ffffff" stroke="#ffffff" stroke-width="3">{text}</text>"##
    )
    .unwrap();
    writeln!(out, "{indent}<text{class} {at}>{text}</text>").unwrap();
}

fn line_height(theme: &RenderTheme) -> i64 {
    i64::from(theme.font_size) + 4
}

/// Baseline of a node's name, just under its glyph.
fn name_baseline(node: &Node, theme: &RenderTheme) -> i64 {
    node.position.y + HH + i64::from(theme.font_size) + 2
}

fn note_height(text: &str, theme: &RenderTheme) -> i64 {
    let lines = text.split('\n').count() as i64;
    lines * line_height(theme) + 8
}

/// Where the segment from `from` towards `to` leaves the node at `from`.
/// Segments heading steeply down leave below the name, circles otherwise
/// clip to their radius and every other glyph to its box.
fn clip_to_glyph(from: Point, to: Point, glyph: Glyph, below: i64) -> (i64, i64) {
    let dx = (to.x - from.x) as f64;
    let dy = (to.y - from.y) as f64;
    if dy > 0.0 && dx.abs() <= dy {
        return clip_to_box(from, to, HH, below);
    }
    if glyph == Glyph::Circle {
        let len = dx.hypot(dy);
        if len <= HH as f64 {
            return (to.x, to.y);
        }
        let t = HH as f64 / len;
        return (
            from.x + (dx * t).round() as i64,
            from.y + (dy * t).round() as i64,
        );
    }
    clip_to_box(from, to, HH, HH)
}

fn clip_to_box(from: Point, to: Point, above: i64, below: i64) -> (i64, i64) {
    let dx = (to.x - from.x) as f64;
    let dy = (to.y - from.y) as f64;
    if dx == 0.0 && dy == 0.0 {
        return (from.x, from.y);
    }
    let tx = if dx == 0.0 {
        f64::INFINITY
    } else {
        HW as f64 / dx.abs()
    };
    let ty = match dy {
        0.0 => f64::INFINITY,
        d if d < 0.0 => above as f64 / -d,
        d => below as f64 / d,
    };
    let t = tx.min(ty).min(1.0);
    (
        from.x + (dx * t).round() as i64,
        from.y + (dy * t).round() as i64,
    )
}

struct RelationGeometry {
    d: String,
    label_at: (i64, i64),
}

fn relation_geometry(
    rel: &Relation,
    graph: &Graph,
    theme: &RenderTheme,
    bounds: &mut Bounds,
) -> RelationGeometry {
    let source = graph.node(rel.source.as_str()).expect("graph invariant");
    let target = graph.node(rel.target.as_str()).expect("graph invariant");
    let (a, b) = (source.position, target.position);
    if rel.source == rel.target {
        let top = a.y - HH;
        let peak = top - LOOP_RISE;
        bounds.include_rect(a.x - 50, peak, a.x + 50, top);
        return RelationGeometry {
            d: format!(
                "M {} {top} C {} {peak}, {} {peak}, {} {top}",
                a.x - 20,
                a.x - 50,
                a.x + 50,
                a.x + 20
            ),
            label_at: (a.x, peak + 12),
        };
    }
    let below = name_baseline(source, theme) + 4 - a.y;
    let (x1, y1) = clip_to_glyph(a, b, theme.glyph(source.kind), below);
    let (x2, y2) = clip_to_glyph(b, a, theme.glyph(target.kind), below);
    let mid = ((x1 + x2).div_euclid(2), (y1 + y2).div_euclid(2));
    RelationGeometry {
        d: format!("M {x1} {y1} L {x2} {y2}"),
        label_at: mid,
    }
}

/// Renders the whole graph: one `<path>` per relation, then one `<g data-id>`
/// per node and note, all in id order.
pub fn render_graph_svg(graph: &Graph, theme: &RenderTheme) -> String {
    let font = i64::from(theme.font_size);
    let mut bounds = Bounds::default();
    for n in graph.nodes() {
        let p = n.position;
        bounds.include_rect(p.x - HW, p.y - HH, p.x + HW, name_baseline(n, theme) + 4);
    }
    for t in graph.notes() {
        let p = t.position;
        bounds.include_rect(
            p.x,
            p.y,
            p.x + NOTE_WIDTH,
            p.y + note_height(&t.text, theme),
        );
    }
    let geometry: Vec<(&Relation, RelationGeometry)> = graph
        .relations()
        .map(|r| (r, relation_geometry(r, graph, theme, &mut bounds)))
        .collect();

    let view_box = bounds.view_box(i64::from(theme.margin));
    let mut out = String::new();
    open_document(&mut out, view_box);
    writeln!(out, "  <title>{}</title>", escape(&graph.title)).unwrap();
    out.push_str(concat!(
        "  <defs>\n",
        r##"    <marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto">"##,
        "\n",
        r##"      <polygon points="0,0 10,5 0,10" fill="#333333"/>"##,
        "\n    </marker>\n  </defs>\n",
    ));
    let (vx, vy, vw, vh) = view_box;
    writeln!(
        out,
        r##"  <g class="background"><rect x="{vx}" y="{vy}" width="{vw}" height="{vh}" fill="#ffffff"/></g>"##
    )
    .unwrap();

    for (rel, geo) in &geometry {
        let marker = if rel.directed {
            r#" marker-end="url(#arrow)""#
        } else {
            ""
        };
        writeln!(
            out,
            r##"  <path class="relation" data-id="{}" d="{}" fill="none" stroke="#333333" stroke-width="1.5"{marker}/>"##,
            rel.id, geo.d
        )
        .unwrap();
        if let Some(label) = &rel.label {
            let (x, y) = geo.label_at;
            let class = format!(r#" class="relation-label" data-for="{}""#, rel.id);
            halo_text(&mut out, "  ", &class, x, y, font, &escape(label));
        }
    }

    for n in graph.nodes() {
        writeln!(out, r#"  <g class="node {}" data-id="{}">"#, n.kind, n.id).unwrap();
        glyph_shape(
            &mut out,
            theme.glyph(n.kind),
            n.position.x,
            n.position.y,
            HW,
            HH,
            theme.area_color(n.area),
        );
        let (x, y) = (n.position.x, name_baseline(n, theme));
        halo_text(
            &mut out,
            "    ",
            r#" class="name""#,
            x,
            y,
            font,
            &escape(&n.name),
        );
        out.push_str("  </g>\n");
    }

    for t in graph.notes() {
        let p = t.position;
        writeln!(out, r#"  <g class="note" data-id="{}">"#, t.id).unwrap();
        writeln!(
            out,
            r##"    <rect x="{}" y="{}" width="{NOTE_WIDTH}" height="{}" fill="#fffbe6" stroke="#999999" stroke-dasharray="4 2"/>"##,
            p.x,
            p.y,
            note_height(&t.text, theme)
        )
        .unwrap();
        writeln!(out, r#"    <text font-size="{font}">"#).unwrap();
        for (i, line) in t.text.split('\n').enumerate() {
            writeln!(
                out,
                r#"      <tspan x="{}" y="{}">{}</tspan>"#,
                p.x + 6,
                p.y + 4 + (i as i64 + 1) * line_height(theme) - 4,
                escape(line)
            )
            .unwrap();
        }
        out.push_str("    </text>\n  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}
