//! SVG output. Output is byte-stable: coordinates use three decimals and
//! elements follow cell order.

use std::fmt::Write as _;

use crate::hierarchy::SuperPatch;
use crate::lattice::{super_vertex_to_base, CellIndex, VertexId};
use crate::patch::Patch;
use crate::rules::{RuleSet, TipLabel};

const PALETTE: [&str; 12] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
    "#393b79", "#637939",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Drawing units per lattice unit; must be positive.
    pub scale: f64,
    /// Colour per label, indexed by label.
    pub palette: Vec<String>,
    /// Supertiles whose outlines are drawn over the tiles.
    pub overlay: Option<SuperPatch>,
    /// Probe markers.
    pub dots: Vec<CellIndex>,
    /// Cells to mark as contradictions.
    pub red: Vec<CellIndex>,
}

impl RenderStyle {
    /// Default palette: directed pairs share a colour.
    pub fn new(rs: &RuleSet, scale: f64) -> Self {
        let mut stems: Vec<&str> = Vec::new();
        let palette = rs
            .alphabet()
            .iter()
            .map(|tok| {
                let stem = tok.trim_end_matches(['+', '-']);
                let i = stems.iter().position(|s| *s == stem).unwrap_or_else(|| {
                    stems.push(stem);
                    stems.len() - 1
                });
                PALETTE[i % PALETTE.len()].to_string()
            })
            .collect();
        RenderStyle { scale, palette, overlay: None, dots: Vec::new(), red: Vec::new() }
    }
}

fn point(rs6: (i32, i32), scale: f64) -> (f64, f64) {
    let (x, y) = (rs6.0 as f64 / 6.0, rs6.1 as f64 / 6.0);
    ((x + y / 2.0) * scale, -(y * 3f64.sqrt() / 2.0) * scale)
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn polygon_points(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect::<Vec<_>>().join(" ")
}

fn vertex_point(v: VertexId, scale: f64) -> (f64, f64) {
    point(v.pos6(), scale)
}

/// Base-level vertex of a vertex of `sp`'s level.
fn lower(mut v: VertexId, sp: &SuperPatch) -> VertexId {
    let offsets = sp.offsets().unwrap_or_else(|| vec![(0, 0); sp.level as usize]);
    for s in offsets.iter().rev() {
        let u = super_vertex_to_base(v);
        v = VertexId::new(u.a + s.0, u.b + s.1, u.dir);
    }
    v
}

pub fn render_svg(rs: &RuleSet, p: &Patch, style: &RenderStyle) -> String {
    let s = style.scale;
    let mut pts: Vec<(f64, f64)> = p.vertices().into_iter().map(|v| vertex_point(v, s)).collect();
    if let Some(sp) = &style.overlay {
        for c in sp.patch.cells() {
            pts.extend(c.vertices().into_iter().map(|v| vertex_point(lower(v, sp), s)));
        }
    }
    let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    if let Some(&(x, y)) = pts.first() {
        (x0, y0, x1, y1) = (x, y, x, y);
    }
    for &(x, y) in &pts {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let m = s;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        fmt(x0 - m),
        fmt(y0 - m),
        fmt(x1 - x0 + 2.0 * m),
        fmt(y1 - y0 + 2.0 * m)
    );
    out.push_str("<g id=\"tiles\" stroke=\"#222222\" stroke-width=\"0.5\">\n");
    for (c, t) in p.iter() {
        let corners: Vec<(f64, f64)> = c.vertices().into_iter().map(|v| vertex_point(v, s)).collect();
        let fill = if c.is_hex() { "#f4efe1" } else { "#c9d8e8" };
        let _ = writeln!(
            out,
            "<polygon class=\"tile\" data-cell=\"{}\" data-tile=\"{} r{}{}\" fill=\"{fill}\" points=\"{}\"/>",
            c,
            rs.prototiles()[t.prototile()].name,
            t.rotation(),
            if t.reflected() { " m" } else { "" },
            polygon_points(&corners)
        );
    }
    out.push_str("</g>\n<g id=\"tips\" stroke=\"none\">\n");
    for (c, t) in p.iter() {
        let centre = point(c.center6(), s);
        for (k, v) in c.vertices().into_iter().enumerate() {
            let (vx, vy) = vertex_point(v, s);
            let (mx, my) = (vx + 0.22 * (centre.0 - vx), vy + 0.22 * (centre.1 - vy));
            let label = rs.labels(t)[k];
            let colour = &style.palette[label.0 as usize];
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{colour}\"/>",
                fmt(mx),
                fmt(my),
                fmt(0.06 * s)
            );
            if let Some(inner) = direction_mark(rs, label) {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{inner}\"/>",
                    fmt(mx),
                    fmt(my),
                    fmt(0.025 * s)
                );
            }
        }
    }
    out.push_str("</g>\n");
    if let Some(sp) = &style.overlay {
        out.push_str("<g id=\"overlay\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\">\n");
        for c in sp.patch.cells() {
            let corners: Vec<(f64, f64)> = c.vertices().into_iter().map(|v| vertex_point(lower(v, sp), s)).collect();
            let _ = writeln!(out, "<polygon points=\"{}\"/>", polygon_points(&corners));
        }
        out.push_str("</g>\n");
    }
    if !style.dots.is_empty() || !style.red.is_empty() {
        out.push_str("<g id=\"markers\">\n");
        for (cells, colour) in [(&style.dots, "#000000"), (&style.red, "#e00000")] {
            for c in cells {
                let (x, y) = point(c.center6(), s);
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{colour}\"/>",
                    fmt(x),
                    fmt(y),
                    fmt(0.1 * s)
                );
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Inner mark colour for directed labels.
fn direction_mark(rs: &RuleSet, l: TipLabel) -> Option<&'static str> {
    if rs.mirror(l) == l {
        return None;
    }
    Some(if rs.symbol(l).ends_with('+') { "#000000" } else { "#ffffff" })
}
