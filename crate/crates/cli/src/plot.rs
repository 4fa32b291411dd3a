//! Static SVG 1.1 figures. Output is a pure function of the report: fixed
//! canvas, fixed palette, three-decimal coordinates.

use std::fmt::Write as _;
use std::path::Path;

use fedclus_core::{Algorithm, RocCurve};

use crate::error::Result;
use crate::report::{io_err, ExperimentReport};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 760.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 540.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Axis-aligned linear map from data coordinates to the plot area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Frame {
    pub fn unit() -> Self {
        Frame {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
        let px = LEFT + (x - self.x_min) / span(self.x_min, self.x_max) * (RIGHT - LEFT);
        let py = BOTTOM - (y - self.y_min) / span(self.y_min, self.y_max) * (BOTTOM - TOP);
        (px, py)
    }

    /// `"x,y"` as it appears inside a polyline.
    pub fn point(&self, x: f64, y: f64) -> String {
        let (px, py) = self.map(x, y);
        format!("{px:.3},{py:.3}")
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let (px, _) = frame.map(xv, frame.y_min);
        let (_, py) = frame.map(frame.x_min, yv);
        let _ = writeln!(
            s,
            r#"<text x="{px:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            BOTTOM + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 40.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.3}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.3})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn polyline(s: &mut String, frame: &Frame, pts: impl IntoIterator<Item = (f64, f64)>, stroke: &str, dash: bool) {
    let coords: Vec<String> = pts.into_iter().map(|(x, y)| frame.point(x, y)).collect();
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{stroke}" stroke-width="2"{dash} points="{}"/>"#,
        coords.join(" ")
    );
}

fn legend(s: &mut String, entries: &[(String, &str)]) {
    for (i, (label, stroke)) in entries.iter().enumerate() {
        let y = TOP + 18.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="{stroke}" stroke-width="2"/>"#,
            RIGHT - 170.0,
            RIGHT - 145.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12">{}</text>"#,
            RIGHT - 140.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// ROC polyline with the chance diagonal and the KS gap marked at its
/// maximising point.
pub fn roc_svg(algorithm: Algorithm, curve: &RocCurve) -> String {
    let frame = Frame::unit();
    let mut s = open(&format!("ROC: {}", algorithm.name()));
    axes(&mut s, &frame, "false positive rate", "true positive rate");
    polyline(&mut s, &frame, [(0.0, 0.0), (1.0, 1.0)], "#999999", true);
    polyline(
        &mut s,
        &frame,
        curve.points.iter().map(|p| (p.fpr, p.tpr)),
        color(0),
        false,
    );
    if let Some(p) = curve.ks_point() {
        let (x, y1) = frame.map(p.fpr, p.tpr);
        let (_, y0) = frame.map(p.fpr, p.fpr);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{y0:.3}" x2="{x:.3}" y2="{y1:.3}" stroke="{}" stroke-width="1.5"/>"#,
            color(1)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13" fill="{}">KS = {:.3}</text>"#,
            x + 8.0,
            (y0 + y1) / 2.0,
            color(1),
            curve.ks()
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Mean test accuracy across seeds, one polyline per algorithm.
pub fn accuracy_svg(report: &ExperimentReport) -> String {
    let series: Vec<(Algorithm, Vec<(f64, f64)>)> = report
        .config
        .algorithms
        .iter()
        .map(|&a| {
            let runs: Vec<_> = report.runs.iter().filter(|r| r.algorithm == a).collect();
            let len = runs.iter().map(|r| r.rounds.len()).min().unwrap_or(0);
            let pts = (0..len)
                .map(|i| {
                    let mean = runs.iter().map(|r| r.rounds[i].accuracy).sum::<f64>() / runs.len() as f64;
                    (runs[0].rounds[i].round as f64, mean)
                })
                .collect();
            (a, pts)
        })
        .collect();
    let x_max = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.0))
        .fold(1.0, f64::max);
    let frame = Frame {
        x_min: 0.0,
        x_max,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut s = open("Test accuracy by round");
    axes(&mut s, &frame, "round", "accuracy (mean over seeds)");
    let mut entries = Vec::new();
    for (i, (a, pts)) in series.iter().enumerate() {
        polyline(&mut s, &frame, pts.iter().copied(), color(i), false);
        entries.push((a.name().to_string(), color(i)));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}

/// Modeled per-round latency, grouped by algorithm with one bar per
/// bandwidth profile. Uses the first seed; latency does not depend on it.
pub fn latency_svg(report: &ExperimentReport) -> String {
    let profiles: Vec<&String> = report.config.bandwidth_profiles.keys().collect();
    let bars: Vec<(Algorithm, Vec<f64>)> = report
        .config
        .algorithms
        .iter()
        .filter_map(|&a| {
            let run = report.runs.iter().find(|r| r.algorithm == a)?;
            let vals = profiles
                .iter()
                .map(|p| run.latency.get(*p).map(|l| l.total).unwrap_or(0.0))
                .collect();
            Some((a, vals))
        })
        .collect();
    let y_max = bars.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0, f64::max);
    let frame = Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: if y_max > 0.0 { y_max * 1.1 } else { 1.0 },
    };
    let mut s = open("Modeled latency per round");
    axes(&mut s, &frame, "", "seconds");
    let groups = bars.len().max(1) as f64;
    let group_w = (RIGHT - LEFT) / groups;
    let bar_w = group_w * 0.8 / profiles.len().max(1) as f64;
    for (g, (a, vals)) in bars.iter().enumerate() {
        let x0 = LEFT + group_w * g as f64 + group_w * 0.1;
        for (j, v) in vals.iter().enumerate() {
            let (_, top) = frame.map(0.0, *v);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{top:.3}" width="{bar_w:.3}" height="{:.3}" fill="{}"/>"#,
                x0 + bar_w * j as f64,
                BOTTOM - top,
                color(j)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + group_w * 0.4,
            BOTTOM + 30.0,
            a.name()
        );
    }
    let entries: Vec<(String, &str)> = profiles
        .iter()
        .enumerate()
        .map(|(j, p)| ((*p).clone(), color(j)))
        .collect();
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    s
}

/// Writes every figure for `report` into `dir` and returns the file names.
pub fn write_plots(report: &ExperimentReport, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    for &a in &report.config.algorithms {
        if let Some(run) = report.runs.iter().find(|r| r.algorithm == a) {
            files.push((format!("roc_{}.svg", a.name()), roc_svg(a, &run.final_roc)));
        }
    }
    files.push(("accuracy_vs_round.svg".to_string(), accuracy_svg(report)));
    files.push(("latency_bars.svg".to_string(), latency_svg(report)));
    let mut names = Vec::new();
    for (name, body) in files {
        let path = dir.join(&name);
        std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        names.push(name);
    }
    Ok(names)
}
