//! Ternary diagrams as standalone SVG.
//!
//! Each panel plots two chosen components against the sum of the rest.
//! The first group is drawn with dots, the second with crosses, further
//! groups with squares and diamonds. Output is fully deterministic.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::composition::{ternary_coordinates, CompositionDataset, TERNARY_VERTICES};
use crate::error::{Error, Result};

const PANEL: f64 = 320.0;
const MARGIN: f64 = 40.0;
const SIDE: f64 = PANEL - 2.0 * MARGIN;
const GRID_COLUMNS: usize = 3;
const LEGEND_HEIGHT: f64 = 24.0;

/// One panel with `axes` as the first two vertices.
pub fn ternary_svg(ds: &CompositionDataset, axes: (usize, usize)) -> Result<String> {
    check(ds)?;
    let mut body = String::new();
    panel(ds, axes, 0.0, 0.0, &mut body)?;
    Ok(document(ds, PANEL, PANEL, body))
}

/// Every pair of components, one panel each, in lexicographic pair order.
pub fn ternary_grid_svg(ds: &CompositionDataset) -> Result<String> {
    check(ds)?;
    let pairs = all_pairs(ds.n_components());
    let cols = GRID_COLUMNS.min(pairs.len());
    let rows = pairs.len().div_ceil(cols);
    let mut body = String::new();
    for (i, &axes) in pairs.iter().enumerate() {
        let (x, y) = ((i % cols) as f64 * PANEL, (i / cols) as f64 * PANEL);
        panel(ds, axes, x, y, &mut body)?;
    }
    Ok(document(ds, cols as f64 * PANEL, rows as f64 * PANEL, body))
}

pub fn all_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
        .collect()
}

/// Renders first and writes only on success, so a failed render leaves no
/// file behind.
pub fn write_ternary_svg(ds: &CompositionDataset, axes: Option<(usize, usize)>, path: impl AsRef<Path>) -> Result<()> {
    let svg = match axes {
        Some(a) => ternary_svg(ds, a)?,
        None => ternary_grid_svg(ds)?,
    };
    fs::write(path, svg)?;
    Ok(())
}

fn check(ds: &CompositionDataset) -> Result<()> {
    if ds.total_observations() == 0 {
        return Err(Error::InvalidDataset("nothing to plot".into()));
    }
    if ds.n_components() < 3 {
        return Err(Error::TooFewComponents(ds.n_components()));
    }
    Ok(())
}

fn document(ds: &CompositionDataset, width: f64, height: f64, body: String) -> String {
    let mut out = String::new();
    let total_h = height + LEGEND_HEIGHT;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" viewBox="0 0 {width} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    out.push_str(&body);
    for (i, g) in ds.groups().iter().enumerate() {
        let x = 16.0 + 120.0 * i as f64;
        let y = height + LEGEND_HEIGHT / 2.0;
        out.push_str(&marker(i, x, y));
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 10.0, y + 4.0, escape(&g.label));
    }
    out.push_str("</svg>\n");
    out
}

fn panel(ds: &CompositionDataset, axes: (usize, usize), ox: f64, oy: f64, out: &mut String) -> Result<()> {
    let points = ternary_coordinates(ds, axes)?;
    // unit triangle has y up; SVG has y down
    let to_svg = |x: f64, y: f64| {
        (
            ox + MARGIN + x * SIDE,
            oy + MARGIN + (TERNARY_VERTICES[1][2] - y) * SIDE + (SIDE - TERNARY_VERTICES[1][2] * SIDE) / 2.0,
        )
    };
    let v: Vec<(f64, f64)> = (0..3)
        .map(|i| to_svg(TERNARY_VERTICES[0][i], TERNARY_VERTICES[1][i]))
        .collect();
    let _ = writeln!(
        out,
        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1
    );
    let names = ds.component_names();
    let rest: Vec<&str> = (0..names.len())
        .filter(|&j| j != axes.0 && j != axes.1)
        .map(|j| names[j].as_str())
        .collect();
    let labels = [
        names[axes.0].clone(),
        names[axes.1].clone(),
        format!("{}*", rest.join("+")),
    ];
    let offsets = [(-4.0, 16.0, "end"), (4.0, 16.0, "start"), (0.0, -8.0, "middle")];
    for ((&(x, y), label), (dx, dy, anchor)) in v.iter().zip(&labels).zip(offsets) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
            x + dx,
            y + dy,
            escape(label)
        );
    }
    for p in &points {
        let g = ds.groups().iter().position(|g| g.label == p.group).unwrap_or(0);
        let (x, y) = to_svg(p.xy[0], p.xy[1]);
        out.push_str(&marker(g, x, y));
    }
    Ok(())
}

fn marker(group: usize, x: f64, y: f64) -> String {
    const R: f64 = 3.5;
    match group % 4 {
        0 => format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{R}\" fill=\"black\"/>\n"),
        1 => format!(
            "<path d=\"M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
            x - R, y - R, x + R, y + R, x - R, y + R, x + R, y - R
        ),
        2 => format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            x - R, y - R, 2.0 * R, 2.0 * R
        ),
        _ => format!(
            "<path d=\"M{x:.2},{:.2}L{:.2},{y:.2}L{x:.2},{:.2}L{:.2},{y:.2}Z\" fill=\"none\" stroke=\"black\"/>\n",
            y - R, x + R, y + R, x - R
        ),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
