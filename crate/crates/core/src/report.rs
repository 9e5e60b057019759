//! File formats: returns ingestion from CSV, result tables (CSV / JSON) and
//! an SVG line chart of rejection rates.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::ResultRow;
use crate::kernels::Series;
use crate::statistics::TripleSeries;

/// Header of every results CSV.
pub const RESULTS_HEADER: &str =
    "experiment,coefficient,method,correction,rejection_rate,replications,mean_statistic,seconds";

/// First differences `x_t − x_{t−1}` divided by their sample standard
/// deviation (denominator `n − 1`). The output is one element shorter.
pub fn preprocess_returns(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 values to form normalised returns, got {}",
            values.len()
        )));
    }
    let returns: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / m;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sd = var.sqrt();
    if !sd.is_finite() || sd <= 0.0 {
        return Err(Error::Degenerate(
            "returns have zero standard deviation".into(),
        ));
    }
    Ok(returns.into_iter().map(|r| r / sd).collect())
}

/// Which columns to read and which slice of the processed series to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct IngestOptions {
    /// Column names for X, Y and Z.
    pub columns: [String; 3],
    /// First processed entry to keep.
    pub start: usize,
    /// Number of entries; `None` keeps as many as every shifted column allows.
    pub len: Option<usize>,
    /// Extra offset per variable, added to `start`.
    pub shifts: [usize; 3],
}

impl IngestOptions {
    pub fn columns(x: &str, y: &str, z: &str) -> Self {
        IngestOptions {
            columns: [x.to_string(), y.to_string(), z.to_string()],
            start: 0,
            len: None,
            shifts: [0; 3],
        }
    }
}

/// Reads the named numeric columns of a headed CSV file.
pub fn read_numeric_columns(path: &Path, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
                path: display.clone(),
                row: 1,
                column: name.clone(),
                message: "column not found in header".into(),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // line 1 is the header
        let row = r + 2;
        for (c, &i) in idx.iter().enumerate() {
            let cell = record.get(i).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                path: display.clone(),
                row,
                column: names[c].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    path: display.clone(),
                    row,
                    column: names[c].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            out[c].push(v);
        }
    }
    Ok(out)
}

/// Reads three price columns, converts each to normalised returns and keeps
/// the requested window.
pub fn ingest_returns_csv(path: &Path, opts: &IngestOptions) -> Result<TripleSeries> {
    let display = path.display().to_string();
    let cols = read_numeric_columns(path, &opts.columns)?;
    let rows = cols[0].len();
    if rows < 3 {
        return Err(Error::Csv {
            path: display,
            row: rows + 1,
            column: opts.columns[0].clone(),
            message: format!("need at least 3 data rows, found {rows}"),
        });
    }
    let processed: Vec<Vec<f64>> = cols
        .iter()
        .zip(&opts.columns)
        .map(|(c, name)| {
            preprocess_returns(c).map_err(|e| Error::Csv {
                path: display.clone(),
                row: 0,
                column: name.clone(),
                message: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let avail = processed[0].len();
    let max_shift = opts.shifts.iter().copied().max().unwrap_or(0);
    let len = match opts.len {
        Some(l) => l,
        None => avail.saturating_sub(opts.start + max_shift),
    };
    let mut series = Vec::with_capacity(3);
    for (v, p) in processed.iter().enumerate() {
        let from = opts.start + opts.shifts[v];
        if from + len > p.len() {
            return Err(Error::invalid(format!(
                "column `{}`: window {}..{} exceeds the {} processed entries",
                opts.columns[v],
                from,
                from + len,
                p.len()
            )));
        }
        series.push(Series::from_scalars(&p[from..from + len])?);
    }
    let z = series.pop().expect("three series");
    let y = series.pop().expect("three series");
    let x = series.pop().expect("three series");
    TripleSeries::new(x, y, z)
}

/// Writes a triple of scalar series as a headed CSV with one column per
/// variable. Values are printed in shortest round-trip form.
pub fn write_series_csv(path: &Path, t: &TripleSeries, names: [&str; 3]) -> Result<()> {
    for s in [&t.x, &t.y, &t.z] {
        if s.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: s.dim(),
            });
        }
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(names)?;
    for i in 0..t.len() {
        w.write_record([
            t.x.point(i)[0].to_string(),
            t.y.point(i)[0].to_string(),
            t.z.point(i)[0].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn results_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("csv output is utf-8");
    Ok(format!("{RESULTS_HEADER}\n{body}"))
}

pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("no result rows to write"));
    }
    let text = match format {
        OutputFormat::Csv => results_to_csv(rows)?,
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            s
        }
    };
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::invalid(format!(
            "{}: unexpected header `{}`",
            path.display(),
            header.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn read_results_json(path: &Path) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of rejection rate against coefficient, one polyline per
/// (method, correction) series in order of first appearance.
pub fn render_svg(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no result rows to plot"));
    }
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 190.0, 30.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        xmin = xmin.min(r.coefficient);
        xmax = xmax.max(r.coefficient);
    }
    if xmax <= xmin {
        xmin -= 0.5;
        xmax += 0.5;
    }
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| top + (1.0 - y) * ph;

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let key = format!("{} ({})", r.method, r.correction);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((r.coefficient, r.rejection_rate)),
            None => series.push((key, vec![(r.coefficient, r.rejection_rate)])),
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        left + pw / 2.0,
        xml_escape(&rows[0].experiment)
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + ph
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
            left - 6.0,
            sy(v) + 4.0
        );
        let xv = xmin + v * (xmax - xmin);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            format_tick(xv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">coefficient</text>"#,
        left + pw / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {})">rejection rate</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 12.0,
            left + pw + 32.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            left + pw + 38.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn emit_plot(rows: &[ResultRow], path: &Path) -> Result<()> {
    let svg = render_svg(rows)?;
    std::fs::write(path, svg)?;
    Ok(())
}
