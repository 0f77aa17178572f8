use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// Scientific notation with 15 significant digits, or the literal `nan`.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.14e}")
    } else {
        "nan".into()
    }
}

pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    assert_eq!(header.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows), "ragged CSV columns");
    let mut out = header.join(",");
    out.push('\n');
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| fmt_value(c[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Distance tag for file names: `30` → `z30m`, `0.5` → `z0.5m`.
pub fn distance_tag(z: f64) -> String {
    format!("z{z}m")
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: Option<bool>,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::judged(name, value.is_finite() && value <= tolerance, Some(value), Some(tolerance), detail)
    }

    pub fn judged(name: &str, pass: bool, value: Option<f64>, tolerance: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: Some(pass),
            value,
            tolerance,
            status: if pass { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: None, value: None, tolerance: None, status: Status::Skipped, detail: detail.into() }
    }

    pub fn error(name: &str, err: impl std::fmt::Display) -> Self {
        Self::judged(name, false, None, None, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(experiment: &str, entries: &BTreeMap<String, String>) -> Self {
        let parameters = entries.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        Self { experiment: experiment.into(), parameters, metrics: BTreeMap::new(), checks: Vec::new() }
    }

    pub fn param(&mut self, key: &str, value: f64) {
        self.parameters.insert(key.into(), serde_json::json!(value));
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value.is_finite().then_some(value));
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line plot with a frame, tick labels at the extremes and a legend.
pub fn svg_plot(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let (x0, mut x1) = bounds(series.iter().flat_map(|s| s.x));
    let (y0, mut y1) = bounds(series.iter().flat_map(|s| s.y));
    if x1.partial_cmp(&x0) != Some(std::cmp::Ordering::Greater) {
        x1 = x0 + 1.0;
    }
    if y1.partial_cmp(&y0) != Some(std::cmp::Ordering::Greater) {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, escape(x_label));
    for (v, anchor, x) in [(x0, "start", m), (x1, "end", w - m)] {
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{v:.3e}</text>"#, h - m + 16.0);
    }
    for (v, y) in [(y0, h - m), (y1, m + 10.0)] {
        let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3e}</text>"#, m - 4.0);
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let ly = m + 16.0 + 16.0 * i as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" text-anchor="end" fill="{color}">{}</text>"#, w - m - 6.0, escape(s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}
