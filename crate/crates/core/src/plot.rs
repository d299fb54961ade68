//! Minimal static SVG rendering of study CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Numeric columns against `ratio_value` (or `ratio`).
    Line,
    /// `d1, d2, d3` point cloud as three 2D projections.
    Scatter3dProjections,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(PlotKind::Line),
            "scatter" | "scatter3d" | "scatter3d-projections" => Ok(PlotKind::Scatter3dProjections),
            _ => Err(Error::domain(format!(
                "unknown plot kind '{s}' (expected line or scatter3d-projections)"
            ))),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rd = store::csv_reader(path)?;
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let rows = rd
        .records()
        .map(|r| Ok(r?.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok(Table { header, rows })
}

fn invalid(path: &Path, what: &str) -> Error {
    Error::Validation(vec![format!("{}: {what}", path.display())])
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of a column if every non-empty cell is numeric.
    fn numeric(&self, idx: usize) -> Option<Vec<Option<f64>>> {
        self.rows
            .iter()
            .map(|r| match r.get(idx).map(|s| s.trim()) {
                None | Some("") => Some(None),
                Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
            })
            .collect()
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, svg: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            svg,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            self.x0, self.y0, self.w, self.h
        );
        for k in 0..=4 {
            let fx = self.xr.0 + (self.xr.1 - self.xr.0) * k as f64 / 4.0;
            let fy = self.yr.0 + (self.yr.1 - self.yr.0) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                self.px(fx),
                self.y0 + self.h + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                self.x0 - 4.0,
                self.py(fy) + 3.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 32.0,
            escape(xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            self.x0 - 40.0,
            self.y0 + self.h / 2.0,
            self.x0 - 40.0,
            self.y0 + self.h / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn render_line(t: &Table, path: &Path) -> Result<String> {
    let xi = ["ratio_value", "ratio"]
        .iter()
        .filter_map(|n| t.column(n))
        .find(|&i| t.numeric(i).is_some())
        .ok_or_else(|| {
            invalid(
                path,
                "line plot needs a numeric ratio_value or ratio column",
            )
        })?;
    if t.rows.is_empty() {
        return Err(invalid(path, "no data rows"));
    }
    let xs: Vec<f64> = t
        .numeric(xi)
        .unwrap()
        .into_iter()
        .map(|v| v.ok_or_else(|| invalid(path, "empty x value")))
        .collect::<Result<_>>()?;
    let series: Vec<(String, Vec<Option<f64>>)> = (0..t.header.len())
        .filter(|&i| i != xi && t.header[i] != "ratio" && t.header[i] != "ratio_value")
        .filter_map(|i| t.numeric(i).map(|v| (t.header[i].clone(), v)))
        .filter(|(_, v)| v.iter().any(Option::is_some))
        .collect();
    if series.is_empty() {
        return Err(invalid(path, "no numeric series to plot"));
    }
    let frame = Frame {
        x0: 70.0,
        y0: 20.0,
        w: 560.0,
        h: 320.0,
        xr: range(xs.iter().copied()),
        yr: range(series.iter().flat_map(|(_, v)| v.iter().flatten().copied())),
    };
    let mut svg = svg_open(760.0, 400.0);
    frame.axes(
        &mut svg,
        &t.header[xi],
        if series.len() == 1 {
            &series[0].0
        } else {
            "value"
        },
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter_map(|(&x, y)| y.map(|y| (x, y)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let d: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            d.join(" ")
        );
        if pts.len() <= 64 {
            for &(x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="645" y="{:.1}" font-size="11" fill="{color}">{}</text>"#,
            30.0 + 14.0 * k as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render_scatter(t: &Table, path: &Path) -> Result<String> {
    let cols: Vec<usize> = ["d1", "d2", "d3"]
        .iter()
        .map(|n| {
            t.column(n)
                .ok_or_else(|| invalid(path, "scatter plot needs d1, d2, d3 columns"))
        })
        .collect::<Result<_>>()?;
    if t.rows.is_empty() {
        return Err(invalid(path, "no data rows"));
    }
    let group = t.column("interval");
    let mut groups: BTreeMap<String, Vec<[f64; 3]>> = BTreeMap::new();
    for r in &t.rows {
        let mut p = [0.0; 3];
        for (k, &c) in cols.iter().enumerate() {
            p[k] = r
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| invalid(path, "non-numeric coordinate"))?;
        }
        let key = group.and_then(|g| r.get(g)).cloned().unwrap_or_default();
        groups.entry(key).or_default().push(p);
    }
    let all = || groups.values().flatten();
    let ranges: Vec<(f64, f64)> = (0..3).map(|k| range(all().map(|p| p[k]))).collect();
    let mut svg = svg_open(1000.0, 360.0);
    for (panel, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
        let frame = Frame {
            x0: 60.0 + 300.0 * panel as f64,
            y0: 20.0,
            w: 220.0,
            h: 260.0,
            xr: ranges[a],
            yr: ranges[b],
        };
        frame.axes(&mut svg, &format!("d{}", a + 1), &format!("d{}", b + 1));
        for (k, pts) in groups.values().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            for p in pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{color}" fill-opacity="0.6"/>"#,
                    frame.px(p[a]),
                    frame.py(p[b])
                );
            }
        }
    }
    for (k, name) in groups.keys().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="345" font-size="11" fill="{}">{}</text>"#,
            60.0 + 90.0 * (k % 10) as f64,
            PALETTE[k % PALETTE.len()],
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(csv: &Path, kind: PlotKind) -> Result<String> {
    let t = read_table(csv)?;
    match kind {
        PlotKind::Line => render_line(&t, csv),
        PlotKind::Scatter3dProjections => render_scatter(&t, csv),
    }
}

pub fn emit_plot(csv: &Path, kind: PlotKind, svg: &Path) -> Result<()> {
    let doc = render_plot(csv, kind)?;
    fs::write(svg, doc).map_err(|e| Error::io(svg, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn line_and_scatter() {
        let dir = tempfile::tempdir().unwrap();
        let curve = write(
            dir.path(),
            "curve.csv",
            "interval,ratio,ratio_value,mean,score_55\nunison,1/1,1,0.3,0.3\nminor2,16/15,1.0666666666666667,0.1,0.1\n",
        );
        let svg = dir.path().join("curve.svg");
        emit_plot(&curve, PlotKind::Line, &svg).unwrap();
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.contains("polyline"));

        let pts = write(
            dir.path(),
            "points.csv",
            "interval,base_hz,d1,d2,d3\nunison,55,1,1,1\nperfect5,55,0.5,0.5,0.5\n",
        );
        let doc = render_plot(&pts, PlotKind::Scatter3dProjections).unwrap();
        assert_eq!(doc.matches("<rect x=").count(), 3);
        assert_eq!(doc.matches("<circle").count(), 6);
    }

    #[test]
    fn schema_mismatch_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let empty = write(dir.path(), "e.csv", "ratio,dissonance\n");
        assert!(matches!(
            render_plot(&empty, PlotKind::Line),
            Err(Error::Validation(_))
        ));
        let pts = write(
            dir.path(),
            "p.csv",
            "interval,base_hz,d1,d2,d3\nunison,55,1,1,1\n",
        );
        assert!(matches!(
            render_plot(&pts, PlotKind::Line),
            Err(Error::Validation(_))
        ));
        let curve = write(dir.path(), "c.csv", "ratio,dissonance\n1,0.5\n");
        assert!(matches!(
            render_plot(&curve, PlotKind::Scatter3dProjections),
            Err(Error::Validation(_))
        ));
        assert!("line".parse::<PlotKind>().is_ok());
        assert!("bar".parse::<PlotKind>().is_err());
    }
}
