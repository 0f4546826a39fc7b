//! Standalone SVG output: the annotated 2-D document map, and the 2×2 panel
//! figure of evaluation curves. Rendering is a pure function of its inputs —
//! identical inputs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::EvalReport;

/// Qualitative 10-color palette; clusters beyond 10 cycle.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Fill for documents not confidently assigned to any cluster.
pub const UNASSIGNED_COLOR: &str = "#c0c0c0";

const POINT_RADIUS: f64 = 3.0;
const LABEL_OFFSET: f64 = 12.0;
const LABEL_LINE_HEIGHT: f64 = 15.0;

/// Color for a cluster id (cycling palette) or gray for unassigned.
pub fn palette_color(cluster: Option<usize>) -> &'static str {
    match cluster {
        Some(c) => PALETTE[c % PALETTE.len()],
        None => UNASSIGNED_COLOR,
    }
}

/// Drawing surface in pixels, with a uniform inner margin that the affine
/// fit keeps all data inside of.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas {
            width: 1200.0,
            height: 900.0,
            margin: 60.0,
        }
    }
}

/// One document on the map, in data (projection) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub doc_id: String,
    pub x: f64,
    pub y: f64,
    pub cluster: Option<usize>,
}

/// Per-cluster annotation: up to five label strings anchored at the cluster
/// mean (data coordinates; mapped through the same affine fit as the points).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabel {
    pub cluster: usize,
    pub anchor: [f64; 2],
    pub labels: Vec<String>,
}

/// Everything the map renderer needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapScene {
    pub points: Vec<MapPoint>,
    pub labels: Vec<ClusterLabel>,
    pub canvas: Canvas,
}

fn xml_escape(text: &str) -> String {
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

/// Map a data value into pixel range [out_lo, out_hi]; a degenerate data
/// range collapses to the midpoint.
fn map_val(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi > lo {
        out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
    } else {
        (out_lo + out_hi) / 2.0
    }
}

struct Bounds {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

fn fit_bounds(scene: &MapScene) -> Result<Bounds> {
    let mut b = Bounds {
        xmin: f64::INFINITY,
        xmax: f64::NEG_INFINITY,
        ymin: f64::INFINITY,
        ymax: f64::NEG_INFINITY,
    };
    let mut absorb = |x: f64, y: f64, what: &str| -> Result<()> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Numeric(format!("non-finite coordinate in {what}")));
        }
        b.xmin = b.xmin.min(x);
        b.xmax = b.xmax.max(x);
        b.ymin = b.ymin.min(y);
        b.ymax = b.ymax.max(y);
        Ok(())
    };
    for p in &scene.points {
        absorb(p.x, p.y, &format!("point '{}'", p.doc_id))?;
    }
    for l in &scene.labels {
        absorb(l.anchor[0], l.anchor[1], &format!("cluster {} anchor", l.cluster))?;
    }
    Ok(b)
}

/// Render the annotated document map: one circle per document (cluster color,
/// gray when unassigned) plus one text group per cluster with its number and
/// up to five labels, all fitted inside the canvas margins.
pub fn render_map(scene: &MapScene, out: &Path) -> Result<()> {
    let canvas = &scene.canvas;
    if !(canvas.width > 2.0 * canvas.margin && canvas.height > 2.0 * canvas.margin) {
        return Err(Error::Validation(format!(
            "canvas {}x{} too small for margin {}",
            canvas.width, canvas.height, canvas.margin
        )));
    }
    let b = fit_bounds(scene)?;
    let (x0, x1) = (canvas.margin, canvas.width - canvas.margin);
    // SVG y grows downward; flip so larger data y is higher on screen.
    let (y0, y1) = (canvas.height - canvas.margin, canvas.margin);
    let px = |x: f64| map_val(x, b.xmin, b.xmax, x0, x1);
    let py = |y: f64| map_val(y, b.ymin, b.ymax, y0, y1);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = canvas.width,
        h = canvas.height
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{w:.0}" height="{h:.0}" fill="#ffffff"/>"##,
        w = canvas.width,
        h = canvas.height
    );
    for p in &scene.points {
        let _ = writeln!(
            svg,
            r#"<circle class="doc" cx="{:.2}" cy="{:.2}" r="{POINT_RADIUS:.1}" fill="{}" fill-opacity="0.75"><title>{}</title></circle>"#,
            px(p.x),
            py(p.y),
            palette_color(p.cluster),
            xml_escape(&p.doc_id)
        );
    }
    let mut labels: Vec<&ClusterLabel> = scene.labels.iter().collect();
    labels.sort_by_key(|l| l.cluster);
    for label in labels {
        // Offset the text block so it does not sit on the cluster mean.
        let ax = px(label.anchor[0]) + LABEL_OFFSET;
        let ay = py(label.anchor[1]) - LABEL_OFFSET;
        let _ = writeln!(svg, r#"<g class="cluster-label">"#);
        let _ = writeln!(
            svg,
            r##"<text class="cluster-number" x="{ax:.2}" y="{ay:.2}" font-family="sans-serif" font-size="16" font-weight="bold" fill="#111111">{}</text>"##,
            label.cluster
        );
        for (i, text) in label.labels.iter().take(5).enumerate() {
            let _ = writeln!(
                svg,
                r##"<text x="{ax:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="#111111">{}</text>"##,
                ay + (i + 1) as f64 * LABEL_LINE_HEIGHT,
                xml_escape(text)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}

/// Evaluation figure: 2×2 panels (precision@n, recall@n, F1@n, and
/// precision-vs-recall), one polyline per method per panel, shared legend.
/// Metric axes span exactly [0, 1]; values outside clamp to the frame.
pub fn render_curves(reports: &[EvalReport], out: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Validation(
            "render_curves needs at least one evaluation report".into(),
        ));
    }
    let mut max_n = 1usize;
    for report in reports {
        if report.rows.is_empty() {
            return Err(Error::Validation(format!(
                "evaluation report for {} has no rows",
                report.method
            )));
        }
        for row in &report.rows {
            if !(row.precision.is_finite() && row.recall.is_finite() && row.f1.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite metric in {} report at n={}",
                    report.method, row.n
                )));
            }
            max_n = max_n.max(row.n);
        }
    }
    let (width, height) = (1200.0, 900.0);
    let outer = 50.0;
    let legend_h = 40.0;
    let gap = 30.0;
    let panel_w = (width - 2.0 * outer - gap) / 2.0;
    let panel_h = (height - 2.0 * outer - legend_h - gap) / 2.0;
    // Plot area inside each panel leaves room for title and axis labels.
    let (pad_l, pad_r, pad_t, pad_b) = (55.0, 15.0, 35.0, 45.0);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##
    );

    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, report) in reports.iter().enumerate() {
        let lx = outer + i as f64 * 160.0;
        let ly = outer + legend_h / 2.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="legend-entry">"#);
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2.5"/>"#,
            lx + 30.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" fill="#111111">{}</text>"##,
            lx + 38.0,
            ly + 5.0,
            report.method
        );
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</g>");

    // (id, title, x-axis label, value extractor (x, y), x range is [0,1]?)
    type Extract = fn(&crate::evaluation::EvalRow) -> (f64, f64);
    let panels: [(&str, &str, &str, &str, Extract, bool); 4] = [
        ("precision", "Precision@n", "n", "precision", |r| (r.n as f64, r.precision), false),
        ("recall", "Recall@n", "n", "recall", |r| (r.n as f64, r.recall), false),
        ("f1", "F1@n", "n", "F1", |r| (r.n as f64, r.f1), false),
        ("pr", "Precision vs recall", "recall", "precision", |r| (r.recall, r.precision), true),
    ];
    for (idx, (id, title, xlab, ylab, extract, unit_x)) in panels.iter().enumerate() {
        let col = (idx % 2) as f64;
        let row = (idx / 2) as f64;
        let panel_x = outer + col * (panel_w + gap);
        let panel_y = outer + legend_h + row * (panel_h + gap);
        let (plot_x0, plot_x1) = (panel_x + pad_l, panel_x + panel_w - pad_r);
        let (plot_y0, plot_y1) = (panel_y + panel_h - pad_b, panel_y + pad_t);
        let (x_lo, x_hi) = if *unit_x { (0.0, 1.0) } else { (1.0, max_n as f64) };

        let _ = writeln!(svg, r#"<g class="panel" id="panel-{id}">"#);
        let _ = writeln!(
            svg,
            r##"<text class="panel-title" x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="16" font-weight="bold" fill="#111111">{title}</text>"##,
            panel_x + panel_w / 2.0 - 60.0,
            panel_y + 20.0
        );
        let _ = writeln!(
            svg,
            r##"<rect class="plot-frame" x="{plot_x0:.2}" y="{plot_y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333" stroke-width="1"/>"##,
            plot_x1 - plot_x0,
            plot_y0 - plot_y1
        );
        // Metric (y) axis is always [0, 1]; ticks at both ends.
        for (v, label) in [(0.0, "0.0"), (0.5, "0.5"), (1.0, "1.0")] {
            let ty = map_val(v, 0.0, 1.0, plot_y0, plot_y1);
            let _ = writeln!(
                svg,
                r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#333333">{label}</text>"##,
                plot_x0 - 32.0,
                ty + 4.0
            );
        }
        let x_ticks: [(f64, String); 2] = if *unit_x {
            [(0.0, "0.0".into()), (1.0, "1.0".into())]
        } else {
            [(1.0, "1".into()), (max_n as f64, format!("{max_n}"))]
        };
        for (v, label) in &x_ticks {
            let tx = map_val(*v, x_lo, x_hi, plot_x0, plot_x1);
            let _ = writeln!(
                svg,
                r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#333333">{label}</text>"##,
                tx - 4.0,
                plot_y0 + 16.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="#333333">{xlab}</text>"##,
            (plot_x0 + plot_x1) / 2.0 - 10.0,
            plot_y0 + 34.0
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="#333333" transform="rotate(-90 {:.2} {:.2})">{ylab}</text>"##,
            plot_x0 - 40.0,
            (plot_y0 + plot_y1) / 2.0,
            plot_x0 - 40.0,
            (plot_y0 + plot_y1) / 2.0
        );
        for (i, report) in reports.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut points = String::new();
            for r in &report.rows {
                let (xv, yv) = extract(r);
                let xv = if *unit_x { xv.clamp(0.0, 1.0) } else { xv };
                let yv = yv.clamp(0.0, 1.0);
                if !points.is_empty() {
                    points.push(' ');
                }
                let _ = write!(
                    points,
                    "{:.2},{:.2}",
                    map_val(xv, x_lo, x_hi, plot_x0, plot_x1),
                    map_val(yv, 0.0, 1.0, plot_y0, plot_y1)
                );
            }
            let _ = writeln!(
                svg,
                r#"<polyline class="curve curve-{}" fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>"#,
                report.method
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}
