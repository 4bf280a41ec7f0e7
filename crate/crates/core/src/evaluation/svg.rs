use std::fmt::Write;

use crate::model::{DragInstance, History};

use super::rollout::EpisodeRecord;

const CELL: usize = 48;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Grid drawing of one episode: the attacker's path as a polyline and, at each step, a
/// dot colored by the asset the defender allocated to. `None` for instances without a
/// grid layout or an undecodable history.
pub fn trajectory_svg(inst: &DragInstance, record: &EpisodeRecord) -> Option<String> {
    let layout = inst.layout()?;
    let hist = History::decode(&record.history, inst).ok()?;
    let (w, h) = (layout.cols * CELL, layout.rows * CELL + 24);
    let center = |s: usize| {
        let (r, c) = layout.cells[s];
        (c * CELL + CELL / 2, r * CELL + CELL / 2)
    };
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    for r in 0..layout.rows {
        for c in 0..layout.cols {
            let fill = if layout.obstacles.contains(&(r, c)) { "#444" } else { "#fff" };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#999"/>"##,
                c * CELL,
                r * CELL
            );
        }
    }
    for (k, &a) in inst.assets().iter().enumerate() {
        let (x, y) = center(a);
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle" font-size="14" fill="{color}">A{k}</text>"#, y + 5);
    }
    let (sx, sy) = center(inst.s0());
    let _ = writeln!(out, r#"<text x="{sx}" y="{}" text-anchor="middle" font-size="12">S</text>"#, sy - 12);
    let points: Vec<String> = hist.states.iter().map(|&s| {
        let (x, y) = center(s);
        format!("{x},{y}")
    }).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#, points.join(" "));
    for (t, &v) in hist.allocs.iter().enumerate() {
        let (x, y) = center(hist.states[t]);
        let color = PALETTE[v % PALETTE.len()];
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="5" fill="{color}"/>"#, x + 8, y + 8);
    }
    let _ = writeln!(
        out,
        r#"<text x="4" y="{}" font-size="12">episode {} type {} reward {:.3}</text>"#,
        layout.rows * CELL + 16,
        record.episode,
        record.theta,
        record.reward
    );
    out.push_str("</svg>\n");
    Some(out)
}
