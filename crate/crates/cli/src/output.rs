//! Deterministic output writers: CSV with RFC quoting, JSON Lines, and a
//! minimal SVG 1.1 log-log plot. Every file starts with a header line
//! carrying the artifact version and the config hash.

use crate::config::ARTIFACT_VERSION;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Fixed-precision significant-digit formatting; the only float-to-text
/// path in output files, so reruns are byte-identical.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.*e}", digits - 1, x)
}

/// CSV: 6 significant digits.
pub fn csv_f(x: f64) -> String {
    fmt_sig(x, 6)
}

/// JSONL: 17 significant digits (round-trips f64 exactly).
pub fn json_f(x: f64) -> String {
    fmt_sig(x, 17)
}

/// RFC-style CSV quoting: quote when the field contains a comma, quote,
/// or newline; double embedded quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn header_line(config_hash: &str) -> String {
    format!("# curvedio {ARTIFACT_VERSION} config_sha256={config_hash}")
}

pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(config_hash: &str, columns: &[&str]) -> Self {
        let mut buf = header_line(config_hash);
        buf.push('\n');
        buf.push_str(&columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        let line = fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
        self.buf.push_str(&line);
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_file(path, self.buf.as_bytes())
    }
}

pub struct JsonlWriter {
    buf: String,
}

impl JsonlWriter {
    pub fn new(config_hash: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            "{{\"artifact\":\"curvedio\",\"version\":\"{ARTIFACT_VERSION}\",\"config_sha256\":\"{config_hash}\"}}"
        );
        Self { buf }
    }

    /// One record per line; the caller provides pre-serialized JSON.
    pub fn record(&mut self, json: &str) {
        self.buf.push_str(json);
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_file(path, self.buf.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)
}

/// One plotted series.
pub struct Series {
    pub label: String,
    /// Raw (x, y); both mapped through log2 by the renderer.
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1b6ca8", "#c0392b", "#27803b", "#8e44ad", "#b8860b", "#16646e"];

/// Minimal SVG 1.1 log-log scatter/line plot.
pub fn svg_loglog(
    config_hash: &str,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
) -> String {
    let (w, h) = (640.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 140.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.log2(), p.1.log2()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if pts.is_empty() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(out, "<!-- {} -->", header_line(config_hash));
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        (w - mr + ml) / 2.0,
        xml_escape(title)
    );
    // axes
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        h - mb,
        w - mr
    );
    let _ = writeln!(out, "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>", h - mb);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{} (log2)</text>",
        (w - mr + ml) / 2.0,
        h - 12.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{} (log2)</text>",
        (h - mb + mt) / 2.0,
        (h - mb + mt) / 2.0,
        xml_escape(ylabel)
    );
    // integer log2 ticks
    let mut k = x0.ceil() as i64;
    while (k as f64) <= x1 {
        let x = sx(k as f64);
        let _ = writeln!(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>", csv_f(x), h - mb, h - mb + 4.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">{k}</text>",
            csv_f(x),
            h - mb + 16.0
        );
        k += 1;
    }
    let mut k = y0.ceil() as i64;
    while (k as f64) <= y1 {
        let y = sy(k as f64);
        let _ = writeln!(out, "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\"/>", ml - 4.0, ml, csv_f(y));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{k}</text>",
            ml - 8.0,
            csv_f(y + 3.0)
        );
        k += 1;
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|p| format!("{},{}", csv_f(sx(p.0.log2())), csv_f(sy(p.1.log2()))))
            .collect();
        if path.len() > 1 {
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        for p in s.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0) {
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>",
                csv_f(sx(p.0.log2())),
                csv_f(sy(p.1.log2()))
            );
        }
        let ly = mt + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            w - mr + 10.0,
            ly
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
            w - mr + 26.0,
            ly + 9.0,
            xml_escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, svg: &str) -> std::io::Result<()> {
    write_file(path, svg.as_bytes())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
