use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::geometry::{ClusterCut, Dendrogram};

/// Stroke of branches that join different clusters.
pub const NEUTRAL_COLOR: &str = "#808080";

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

/// Color of cluster `label` (1-based). Labels past the fixed palette get
/// golden-angle hues so every cluster stays distinguishable.
pub fn cluster_color(label: usize) -> String {
    if (1..=PALETTE.len()).contains(&label) {
        return PALETTE[label - 1].to_string();
    }
    let hue = (label as f64 * 137.507_764) % 360.0;
    let (r, g, b) = hsl_to_rgb(hue, 0.6, 0.4);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to(r), to(g), to(b))
}

/// Geometry of the rendered figure, in SVG user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgLayout {
    pub size: f64,
    /// Radius at which leaves sit; the root is nearest the centre.
    pub leaf_radius: f64,
    pub label_radius: f64,
    pub bar_inner: f64,
    pub bar_max: f64,
}

impl Default for SvgLayout {
    fn default() -> Self {
        SvgLayout {
            size: 840.0,
            leaf_radius: 240.0,
            label_radius: 250.0,
            bar_inner: 310.0,
            bar_max: 90.0,
        }
    }
}

impl SvgLayout {
    pub fn center(&self) -> f64 {
        self.size / 2.0
    }

    fn point(&self, angle: f64, radius: f64) -> (f64, f64) {
        (
            self.center() + radius * angle.cos(),
            self.center() + radius * angle.sin(),
        )
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Standalone SVG of a circular dendrogram. Leaves are evenly spaced on the
/// circumference starting at 12 o'clock; a junction at coupling height `h`
/// sits at radius `leaf_radius * (1 - h / (1.05 h_max))`, so higher merges lie
/// closer to the centre. Subtrees inside one cluster of `cut` take that
/// cluster's color. An outer ring of bars is scaled to `volumes`.
pub fn render_circular_dendrogram(
    dendrogram: &Dendrogram,
    cut: &ClusterCut,
    volumes: &BTreeMap<String, u64>,
    layout: &SvgLayout,
) -> String {
    let n = dendrogram.len();
    let total_nodes = 2 * n - 1;
    let h_scale = dendrogram.max_height().filter(|h| *h > 0.0).unwrap_or(1.0) * 1.05;
    let radius_of = |node: usize| layout.leaf_radius * (1.0 - dendrogram.node_height(node) / h_scale);

    let mut angle = vec![0.0; total_nodes];
    let order = dendrogram.leaf_order();
    for (pos, &leaf) in order.iter().enumerate() {
        angle[leaf] = 2.0 * PI * pos as f64 / n as f64 - PI / 2.0;
    }
    // cluster of each node, None once a subtree spans several clusters
    let mut cluster: Vec<Option<usize>> = vec![None; total_nodes];
    for (slot, &label) in cluster.iter_mut().zip(&cut.labels) {
        *slot = Some(label);
    }
    for (k, m) in dendrogram.merges().iter().enumerate() {
        let node = n + k;
        angle[node] = (angle[m.left] + angle[m.right]) / 2.0;
        cluster[node] = match (cluster[m.left], cluster[m.right]) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        };
    }
    let color_of = |node: usize| cluster[node].map_or_else(|| NEUTRAL_COLOR.to_string(), cluster_color);

    let mut svg = String::new();
    let size = layout.size;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        svg,
        "<title>Circular dendrogram: {n} leaves, {} clusters at threshold {}</title>",
        cut.count,
        crate::format::sig6(cut.threshold)
    );

    let _ = writeln!(svg, r#"<g class="tree" fill="none" stroke-width="1.5">"#);
    for (k, m) in dendrogram.merges().iter().enumerate() {
        let node = n + k;
        let r = radius_of(node);
        let color = color_of(node);
        for child in [m.left, m.right] {
            let (x1, y1) = layout.point(angle[child], radius_of(child));
            let (x2, y2) = layout.point(angle[child], r);
            let _ = writeln!(
                svg,
                r#"<line class="branch" x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}" stroke="{}"/>"#,
                color_of(child)
            );
        }
        let (a0, a1) = (angle[m.left], angle[m.right]);
        let (x0, y0) = layout.point(a0, r);
        let (x1, y1) = layout.point(a1, r);
        let large = u8::from((a1 - a0).abs() > PI);
        let sweep = u8::from(a1 > a0);
        let _ = writeln!(
            svg,
            r#"<path class="junction" data-height="{}" d="M {x0:.6} {y0:.6} A {r:.6} {r:.6} 0 {large} {sweep} {x1:.6} {y1:.6}" stroke="{color}"/>"#,
            m.height
        );
    }
    let _ = writeln!(svg, "</g>");

    let max_volume = volumes.values().copied().max().unwrap_or(0).max(1) as f64;
    let half_width = PI / n as f64 * 0.8;
    let _ = writeln!(svg, r#"<g class="leaves" font-family="sans-serif" font-size="10">"#);
    for (leaf, name) in dendrogram.leaves().iter().enumerate() {
        let a = angle[leaf];
        let color = color_of(leaf);
        let (cx, cy) = layout.point(a, layout.leaf_radius);
        let _ = writeln!(
            svg,
            r#"<circle class="leaf" data-leaf="{}" data-cluster="{}" cx="{cx:.6}" cy="{cy:.6}" r="3" fill="{color}"/>"#,
            escape(name),
            cut.labels[leaf]
        );

        let (tx, ty) = layout.point(a, layout.label_radius);
        let mut degrees = a.to_degrees();
        let flipped = a.cos() < 0.0;
        if flipped {
            degrees += 180.0;
        }
        let anchor = if flipped { "end" } else { "start" };
        let _ = writeln!(
            svg,
            r#"<text class="leaf-label" x="{tx:.6}" y="{ty:.6}" text-anchor="{anchor}" dominant-baseline="middle" transform="rotate({degrees:.6} {tx:.6} {ty:.6})">{}</text>"#,
            escape(name)
        );

        let volume = volumes.get(name).copied().unwrap_or(0);
        let outer = layout.bar_inner + layout.bar_max * volume as f64 / max_volume;
        let (ax, ay) = layout.point(a - half_width, layout.bar_inner);
        let (bx, by) = layout.point(a + half_width, layout.bar_inner);
        let (cx2, cy2) = layout.point(a + half_width, outer);
        let (dx, dy) = layout.point(a - half_width, outer);
        let _ = writeln!(
            svg,
            r#"<path class="bar" data-volume="{volume}" d="M {ax:.6} {ay:.6} L {bx:.6} {by:.6} L {cx2:.6} {cy2:.6} L {dx:.6} {dy:.6} Z" fill="{color}"/>"#
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}
