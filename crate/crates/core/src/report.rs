//! Report files: accuracy and confusion tables, and the dimension sweep plot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{SessionReport, SweepCurve};

pub const ACCURACY_FILE: &str = "accuracy.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";
pub const SWEEP_SVG_FILE: &str = "sweep.svg";

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

/// Per-direction fold accuracies with a session average row.
pub fn accuracy_csv(sessions: &[SessionReport]) -> String {
    let folds = sessions
        .iter()
        .flat_map(|s| &s.directions)
        .map(|r| r.fold_accuracy.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("Session,Direction");
    for f in 1..=folds {
        write!(out, ",{f}").unwrap();
    }
    out.push_str(",Average\n");
    for s in sessions {
        for r in &s.directions {
            write!(out, "{},{}", s.session, r.direction).unwrap();
            for a in &r.fold_accuracy {
                write!(out, ",{}", pct(*a)).unwrap();
            }
            writeln!(out, ",{}", pct(r.mean_accuracy)).unwrap();
        }
        let n = s.directions.len() as f64;
        write!(out, "{},Average", s.session).unwrap();
        for f in 0..folds {
            let mean = s
                .directions
                .iter()
                .map(|r| r.fold_accuracy.get(f).copied().unwrap_or(0.0))
                .sum::<f64>()
                / n;
            write!(out, ",{}", pct(mean)).unwrap();
        }
        writeln!(out, ",{}", pct(s.grand_average())).unwrap();
    }
    out
}

/// Row-normalized confusion matrices (rows true, columns predicted) per
/// direction, then pooled over the session.
pub fn confusion_csv(sessions: &[SessionReport]) -> String {
    let mut out = String::from("Session,Direction,True,1,2,3\n");
    let block = |out: &mut String, session: &str, label: &str, m: &[[f64; 3]; 3]| {
        for (t, row) in m.iter().enumerate() {
            writeln!(
                out,
                "{session},{label},{},{},{},{}",
                t + 1,
                pct(row[0]),
                pct(row[1]),
                pct(row[2])
            )
            .unwrap();
        }
    };
    for s in sessions {
        let session = s.session.to_string();
        for r in &s.directions {
            block(&mut out, &session, &r.direction.to_string(), &r.confusion);
        }
        block(&mut out, &session, "Average", &s.confusion());
    }
    out
}

pub fn sweep_csv(curves: &[SweepCurve]) -> String {
    let mut out = String::from("Session,Dimension,Accuracy\n");
    for c in curves {
        for p in &c.points {
            writeln!(out, "{},{},{}", c.session, p.dim, pct(p.accuracy)).unwrap();
        }
    }
    out
}

/// Accuracy against PCA dimension, one polyline per session.
pub fn sweep_svg(curves: &[SweepCurve]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    let pts = curves.iter().flat_map(|c| &c.points);
    let x_max = pts.clone().map(|p| p.dim).max().unwrap_or(1).max(1) as f64;
    let lo = pts.clone().map(|p| p.accuracy).fold(f64::INFINITY, f64::min);
    let hi = pts.map(|p| p.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let (y_min, y_max) = if lo.is_finite() {
        let lo = (lo - 0.5).floor().max(0.0);
        let hi = (hi + 0.5).ceil().min(100.0);
        (lo, if hi > lo { hi } else { lo + 1.0 })
    } else {
        (0.0, 100.0)
    };
    let px = |x: f64| LEFT + x / x_max * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y_min) / (y_max - y_min) * (H - TOP - BOTTOM);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    for i in 0..=5 {
        let y = y_min + (y_max - y_min) * i as f64 / 5.0;
        let yy = py(y);
        writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            yy + 4.0
        )
        .unwrap();
    }
    for i in 0..=4 {
        let x = x_max * i as f64 / 4.0;
        let xx = px(x);
        writeln!(
            s,
            r##"<line x1="{xx:.1}" y1="{TOP}" x2="{xx:.1}" y2="{:.1}" stroke="#ddd"/><text x="{xx:.1}" y="{:.1}" text-anchor="middle">{x:.0}</text>"##,
            H - BOTTOM,
            H - BOTTOM + 18.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{b:.1}" x2="{:.1}" y2="{b:.1}" stroke="black"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b:.1}" stroke="black"/>"#,
        W - RIGHT,
        b = H - BOTTOM
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">PCA dimension</text><text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">Accuracy (%)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = c
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", px(p.dim as f64), py(p.accuracy)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = TOP + 16.0 * (i as f64 + 1.0);
        writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT - 80.0,
            W - RIGHT - 60.0,
            W - RIGHT - 55.0,
            ly + 4.0,
            c.session
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the evaluation tables, and the sweep files when `sweeps` is
/// non-empty; returns the written paths.
pub fn render_report(sessions: &[SessionReport], sweeps: &[SweepCurve], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if !sessions.is_empty() {
        written.push(write(out_dir, ACCURACY_FILE, &accuracy_csv(sessions))?);
        written.push(write(out_dir, CONFUSION_FILE, &confusion_csv(sessions))?);
    }
    if sweeps.iter().any(|c| !c.points.is_empty()) {
        written.push(write(out_dir, SWEEP_CSV_FILE, &sweep_csv(sweeps))?);
        written.push(write(out_dir, SWEEP_SVG_FILE, &sweep_svg(sweeps))?);
    }
    Ok(written)
}
