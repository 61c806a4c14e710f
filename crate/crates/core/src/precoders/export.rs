//! Text exports of evaluation results: CSV tables and an SVG heatmap.
//!
//! Heatmap colormap: η ∈ [0, 1] maps linearly from blue `#0000ff` (η = 0) to
//! yellow `#ffff00` (η = 1); lattice points without data (inside buildings
//! or with a zero-norm channel) are black. The base station is a red cross.

use std::fmt::Write;

use super::{EvalReport, MapCell, SpatialMap, SweepRow};

/// One row per evaluated sample, sorted by η, with the CDF value there.
pub fn report_cdf_csv(report: &EvalReport) -> String {
    let mut sorted = report.correlations.clone();
    sorted.sort_by(f64::total_cmp);
    let mut out = String::from("eta,cdf\n");
    for x in sorted {
        writeln!(out, "{x},{}", report.cdf_at(x)).unwrap();
    }
    out
}

/// Long-format grid: `x,y,status,eta` with status `value`, `building` or
/// `no_channel` (η left empty for the latter two).
pub fn heatmap_csv(map: &SpatialMap) -> String {
    let mut out = String::from("x,y,status,los,eta\n");
    for (p, c) in map.iter() {
        match c {
            MapCell::Value { eta, los } => writeln!(out, "{},{},value,{},{eta}", p[0], p[1], los as u8),
            MapCell::Building => writeln!(out, "{},{},building,,", p[0], p[1]),
            MapCell::NoChannel => writeln!(out, "{},{},no_channel,0,", p[0], p[1]),
        }
        .unwrap();
    }
    out
}

fn color(eta: f64) -> String {
    let t = eta.clamp(0.0, 1.0);
    let ch = (255.0 * t).round() as u8;
    format!("#{ch:02x}{ch:02x}{:02x}", 255 - ch)
}

/// Raster rendering of a spatial map, one square per lattice point, north up.
pub fn heatmap_svg(map: &SpatialMap) -> String {
    const CELL: usize = 4;
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let (w, h) = (nx * CELL, ny * CELL);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    )
    .unwrap();
    writeln!(out, "<!-- eta 0 = #0000ff ... 1 = #ffff00, no data = black -->").unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="black"/>"#).unwrap();
    for iy in 0..ny {
        let y = (ny - 1 - iy) * CELL;
        for ix in 0..nx {
            if let Some(eta) = map.cell(ix, iy).eta() {
                writeln!(
                    out,
                    r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                    ix * CELL,
                    color(eta)
                )
                .unwrap();
            }
        }
    }
    let g = &map.grid;
    let bx = (map.bs_position[0] - g.origin[0]) / g.pitch * CELL as f64 + CELL as f64 / 2.0;
    let by = h as f64 - ((map.bs_position[1] - g.origin[1]) / g.pitch * CELL as f64 + CELL as f64 / 2.0);
    let arm = 3.0 * CELL as f64;
    writeln!(
        out,
        r#"<path d="M{} {} L{} {} M{} {} L{} {}" stroke="red" stroke-width="2"/>"#,
        bx - arm,
        by - arm,
        bx + arm,
        by + arm,
        bx - arm,
        by + arm,
        bx + arm,
        by - arm
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

/// Sweep table without wall-clock columns, so reruns are byte-identical.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,median_eta,mean_eta,train_samples,steps\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.n, r.median, r.mean, r.train_samples, r.steps).unwrap();
    }
    out
}
