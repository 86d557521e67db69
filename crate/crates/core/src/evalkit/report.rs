//! Report tables, CSV serialization and SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(usize),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) => format!("{v:.4}"),
            Cell::Int(n) => n.to_string(),
            Cell::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(v) => Some(v),
            Cell::Int(n) => Some(n as f64),
            _ => None,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

/// A named table whose first column labels the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric cell at the row whose first cell renders as `label`.
    pub fn value(&self, label: &str, column: &str) -> Option<f64> {
        let c = self.column(column)?;
        self.rows
            .iter()
            .find(|r| r[0].render() == label)
            .and_then(|r| r[c].as_f64())
    }

    /// Numeric values of one column, in row order.
    pub fn series(&self, column: &str) -> Vec<Option<f64>> {
        match self.column(column) {
            Some(c) => self.rows.iter().map(|r| r[c].as_f64()).collect(),
            None => vec![None; self.rows.len()],
        }
    }

    /// True when any row carries a non-`ok` status.
    pub fn is_partial(&self) -> bool {
        match self.column("status") {
            Some(c) => self.rows.iter().any(|r| r[c] != Cell::Text("ok".into())),
            None => false,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(&c.render())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// Single-series line chart. Missing points break the line. The data is
/// repeated in a leading comment as `x,y` lines.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, Option<f64>)]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push_str("<!-- data\n");
    let _ = writeln!(svg, "{x_label},{y_label}");
    for (x, y) in points {
        let y = y.map_or(String::new(), |v| format!("{v:.4}"));
        let _ = writeln!(svg, "{x:.4},{y}");
    }
    svg.push_str("-->\n");

    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (x0, x1) = if x0 < x1 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - y.clamp(0.0, 1.0) * plot_h;

    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{MARGIN} {MARGIN} V{b} H{r}" stroke="black" fill="none"/>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.2}</text>"#,
            MARGIN - 4.0,
            py(v) + 3.0
        );
    }
    for &x in &xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            px(x),
            HEIGHT - MARGIN + 14.0,
            trim_number(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        xml_escape(y_label)
    );

    let mut path = String::new();
    let mut pen_down = false;
    for &(x, y) in points {
        match y {
            Some(y) => {
                let _ = write!(path, "{}{:.1} {:.1} ", if pen_down { "L" } else { "M" }, px(x), py(y));
                pen_down = true;
            }
            None => pen_down = false,
        }
    }
    if !path.is_empty() {
        let _ = writeln!(svg, r#"<path d="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#, path.trim_end());
    }
    for &(x, y) in points {
        if let Some(y) = y {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, px(x), py(y));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Recovers the `x,y` rows embedded by [`line_chart`].
pub fn chart_data(svg: &str) -> Option<Vec<(f64, Option<f64>)>> {
    let start = svg.find("<!-- data\n")? + "<!-- data\n".len();
    let end = start + svg[start..].find("-->")?;
    svg[start..end]
        .lines()
        .skip(1)
        .map(|l| {
            let (x, y) = l.split_once(',')?;
            let y = if y.is_empty() { None } else { Some(y.parse().ok()?) };
            Some((x.parse().ok()?, y))
        })
        .collect()
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_four_decimals() {
        let mut t = Table::new("t", &["method", "word_acc", "status"]);
        t.push(vec!["G".into(), 0.5.into(), "ok".into()]);
        t.push(vec!["a,b".into(), Cell::Missing, "error: x".into()]);
        assert_eq!(t.to_csv(), "method,word_acc,status\nG,0.5000,ok\n\"a,b\",,error: x\n");
        assert_eq!(t.value("G", "word_acc"), Some(0.5));
        assert!(t.is_partial());
    }

    #[test]
    fn chart_round_trip() {
        let pts = vec![(0.0, Some(0.9)), (5.0, None), (10.0, Some(0.25))];
        let svg = line_chart("noise", "level", "word_acc", &pts);
        assert!(svg.starts_with("<svg"));
        assert_eq!(chart_data(&svg).unwrap(), pts);
    }
}
