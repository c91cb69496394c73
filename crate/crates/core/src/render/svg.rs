use std::fmt::Write;

use super::Glyph;

/// Escapes text for element content and attribute values. Characters XML 1.0
/// cannot carry are replaced with U+FFFD.
pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => out.push(c),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

/// Axis-aligned bounding box accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Bounds {
    extent: Option<(i64, i64, i64, i64)>,
}

impl Bounds {
    pub(crate) fn include(&mut self, x: i64, y: i64) {
        self.extent = Some(match self.extent {
            None => (x, y, x, y),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        });
    }

    pub(crate) fn include_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64) {
        self.include(x0, y0);
        self.include(x1, y1);
    }

    /// `(min_x, min_y, width, height)` grown by `margin` on every side; an
    /// empty box becomes `margin` x `margin` at the origin.
    pub(crate) fn view_box(&self, margin: i64) -> (i64, i64, i64, i64) {
        match self.extent {
            None => (0, 0, margin, margin),
            Some((x0, y0, x1, y1)) => (
                x0 - margin,
                y0 - margin,
                x1 - x0 + 2 * margin,
                y1 - y0 + 2 * margin,
            ),
        }
    }
}

pub(crate) fn open_document(out: &mut String, view_box: (i64, i64, i64, i64)) {
    let (x, y, w, h) = view_box;
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x} {y} {w} {h}" width="{w}" height="{h}" font-family="sans-serif">"#
    )
    .unwrap();
}

/// Writes the outline for `glyph` centred on `(cx, cy)` with half extents
/// `hw` x `hh`.
pub(crate) fn glyph_shape(
    out: &mut String,
    glyph: Glyph,
    cx: i64,
    cy: i64,
    hw: i64,
    hh: i64,
    fill: &str,
) {
    let (l, r, t, b) = (cx - hw, cx + hw, cy - hh, cy + hh);
    let notch = hh / 2;
    let style = format!(
        r##"fill="{}" stroke="#333333" stroke-width="1.5""##,
        escape(fill)
    );
    let polygon = |out: &mut String, pts: &[(i64, i64)], extra: &str| {
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(
            out,
            r#"    <polygon points="{}" {style}{extra}/>"#,
            pts.join(" ")
        )
        .unwrap();
    };
    match glyph {
        Glyph::Circle => {
            writeln!(
                out,
                r#"    <circle cx="{cx}" cy="{cy}" r="{}" {style}/>"#,
                hh.min(hw)
            )
            .unwrap();
        }
        Glyph::ChevronPentagon => polygon(
            out,
            &[(l, t), (r - notch, t), (r, cy), (r - notch, b), (l, b)],
            r#" stroke-dasharray="6 3""#,
        ),
        Glyph::ArrowRectangle => polygon(
            out,
            &[
                (l, t),
                (r - notch, t),
                (r, cy),
                (r - notch, b),
                (l, b),
                (l + notch, cy),
            ],
            "",
        ),
        Glyph::FoldedRectangle => {
            polygon(
                out,
                &[(l, t), (r - notch, t), (r, t + notch), (r, b), (l, b)],
                "",
            );
            writeln!(
                out,
                r##"    <polyline points="{},{t} {},{} {r},{}" fill="none" stroke="#333333" stroke-width="1.5"/>"##,
                r - notch,
                r - notch,
                t + notch,
                t + notch
            )
            .unwrap();
        }
        Glyph::ShieldPentagon => polygon(out, &[(l, t), (r, t), (r, cy), (cx, b), (l, cy)], ""),
        Glyph::Diamond => polygon(out, &[(cx, t), (r, cy), (cx, b), (l, cy)], ""),
    }
}
