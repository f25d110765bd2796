//! CSV and SVG emission.
//!
//! Data CSV: one observation per row, comma separated, LF line endings,
//! optional leading lines starting with `#`. Floats are written with 17
//! significant digits so they read back bit for bit.
//!
//! Curve CSV: header `param,stat,stderr,n,seeds`; an absent stderr is an
//! empty field.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::asymptotics::curves::{CurvePoint, DiagnosticCurve};
use crate::error::{Error, Result};
use crate::geom::Dataset;

pub const CURVE_HEADER: [&str; 5] = ["param", "stat", "stderr", "n", "seeds"];

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

/// Shortest format that reads back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn data_header(d: usize) -> String {
    let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    format!("# {}", cols.join(","))
}

pub fn write_data_csv<W: Write>(mut w: W, data: &Dataset, header: bool) -> Result<()> {
    let mut out = String::new();
    if header {
        out.push_str(&data_header(data.dim()));
        out.push('\n');
    }
    for p in data.points() {
        let row: Vec<String> = p.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}

/// Reads a data CSV. An input with no rows needs a header to fix `d`.
pub fn read_data_csv<R: Read>(r: R) -> Result<Dataset> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text).map_err(io_err)?;
    let header_dim = text
        .lines()
        .find(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').split(',').count());
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dim = None;
    let mut coords = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match dim {
            None => dim = Some(rec.len()),
            Some(d) if d != rec.len() => {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {d}",
                    line + 1,
                    rec.len()
                )))
            }
            _ => {}
        }
        for f in rec.iter() {
            let x: f64 = f
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: not a number: {f:?}", line + 1)))?;
            coords.push(x);
        }
    }
    match dim.or(header_dim) {
        Some(d) if coords.is_empty() => Ok(Dataset::empty(d)),
        Some(d) => Dataset::from_flat(d, coords),
        None => Err(Error::Parse("empty data file without a header".into())),
    }
}

pub fn write_curve_csv<W: Write>(w: W, curve: &DiagnosticCurve) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(CURVE_HEADER).map_err(io_err)?;
    for p in &curve.points {
        wr.write_record([
            format_f64(p.param),
            format_f64(p.stat),
            p.stderr.map(format_f64).unwrap_or_default(),
            p.n.to_string(),
            p.seeds.to_string(),
        ])
        .map_err(io_err)?;
    }
    wr.flush().map_err(io_err)
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<DiagnosticCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = reader.headers().map_err(io_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::Parse(format!(
            "curve header must be {}",
            CURVE_HEADER.join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
        let num = |i: usize, what: &str| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(what))
        };
        let stderr = if rec[2].is_empty() {
            None
        } else {
            Some(num(2, "stderr")?)
        };
        points.push(CurvePoint::new(
            num(0, "param")?,
            num(1, "stat")?,
            stderr,
            rec[3].parse().map_err(|_| bad("n"))?,
            rec[4].parse().map_err(|_| bad("seeds"))?,
        ));
    }
    Ok(DiagnosticCurve::from_points(points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XAxis {
    #[default]
    Linear,
    Log,
    /// Points placed by their rank among all x values.
    Index,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub x_axis: XAxis,
    pub y_log: bool,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            x_axis: XAxis::Linear,
            y_log: false,
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            width: 640.0,
            height: 420.0,
        }
    }
}

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

/// Minimal line plot: one polyline per series, axes, ticks and a legend.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> Result<String> {
    let (ml, mr, mt, mb) = (70.0, 20.0, 36.0, 50.0);
    let (w, h) = (opts.width, opts.height);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let mut xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let fx = |x: f64| -> Option<f64> {
        match opts.x_axis {
            XAxis::Linear => Some(x),
            XAxis::Log => (x > 0.0).then(|| x.log10()),
            XAxis::Index => xs.iter().position(|&v| v == x).map(|i| i as f64),
        }
    };
    let fy = |y: f64| -> Option<f64> {
        if opts.y_log {
            (y > 0.0).then(|| y.log10())
        } else {
            y.is_finite().then_some(y)
        }
    };
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter_map(|&(x, y)| Some((fx(x)?, fy(y)?)))
                .collect()
        })
        .collect();
    let all: Vec<&(f64, f64)> = mapped.iter().flatten().collect();
    if all.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        w / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let x_ticks: Vec<(f64, String)> = match opts.x_axis {
        XAxis::Index => {
            let every = xs.len().div_ceil(10).max(1);
            xs.iter()
                .enumerate()
                .filter(|(i, _)| i % every == 0)
                .map(|(i, &v)| (i as f64, tick_label(v)))
                .collect()
        }
        XAxis::Log => linear_ticks(x0, x1)
            .into_iter()
            .map(|t| (t, tick_label(10f64.powf(t))))
            .collect(),
        XAxis::Linear => linear_ticks(x0, x1).into_iter().map(|t| (t, tick_label(t))).collect(),
    };
    for (t, label) in x_ticks {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0,
            escape(&label)
        );
    }
    for t in linear_ticks(y0, y1) {
        let y = py(t);
        let label = if opts.y_log { tick_label(10f64.powf(t)) } else { tick_label(t) };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ml - 5.0,
            ml - 8.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 12.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&opts.y_label)
    );
    for (i, (ser, pts)) in series.iter().zip(&mapped).enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = mt + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            ml + pw - 120.0,
            ml + pw - 100.0,
            ml + pw - 95.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn curve_series(label: &str, curve: &DiagnosticCurve) -> Series {
    Series {
        label: label.to_string(),
        points: curve.points.iter().map(|p| (p.param, p.stat)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use crate::samplers::{sample, DistributionSpec};

    #[test]
    fn data_round_trip_is_exact() {
        let data = sample(&DistributionSpec::pareto(3, 2.2), 200, RngSpec::new(1, 2)).unwrap();
        let mut buf = Vec::new();
        write_data_csv(&mut buf, &data, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# x1,x2,x3\n"));
        assert!(!text.contains('\r'));
        let back = read_data_csv(buf.as_slice()).unwrap();
        assert_eq!(back.flat(), data.flat());
    }

    #[test]
    fn empty_data_keeps_dimension() {
        let data = Dataset::empty(2);
        let mut buf = Vec::new();
        write_data_csv(&mut buf, &data, true).unwrap();
        assert_eq!(buf, b"# x1,x2\n");
        let back = read_data_csv(buf.as_slice()).unwrap();
        assert_eq!((back.dim(), back.len()), (2, 0));
        assert!(read_data_csv(&b""[..]).is_err());
    }

    #[test]
    fn malformed_data() {
        assert!(read_data_csv(&b"1,2\n3\n"[..]).is_err());
        assert!(read_data_csv(&b"1,abc\n"[..]).is_err());
        assert!(read_data_csv(&b"1,inf\n"[..]).is_err());
        let d = read_data_csv(&b"# a header\n1, 2\n\n3,4\n"[..]).unwrap();
        assert_eq!(d.flat(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn curve_round_trip() {
        let mut c = DiagnosticCurve::from_points(vec![
            CurvePoint::new(0.9, 0.125, Some(0.01), 1000, 10),
            CurvePoint::new(0.99, -1.0 / 3.0, None, 2000, 1),
        ]);
        c.meta.experiment = "y".into();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("param,stat,stderr,n,seeds\n"));
        let back = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(back.points, c.points);
        assert!(read_curve_csv(&b"a,b\n1,2\n"[..]).is_err());
        assert!(read_curve_csv(&b"param,stat,stderr,n,seeds\n1,x,,3,1\n"[..]).is_err());
    }

    #[test]
    fn svg_shapes() {
        let a = Series { label: "gauss".into(), points: vec![(0.9, 0.3), (0.99, 0.1), (0.999, 0.05)] };
        let b = Series { label: "pareto<3.2>".into(), points: vec![(0.9, 0.5), (0.99, 0.4), (0.999, 0.0)] };
        for (x_axis, y_log) in [(XAxis::Linear, false), (XAxis::Log, true), (XAxis::Index, false)] {
            let opts = PlotOptions { x_axis, y_log, title: "t".into(), ..Default::default() };
            let svg = render_svg(&[a.clone(), b.clone()], &opts).unwrap();
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert_eq!(svg.matches("<polyline").count(), 2);
            assert!(svg.contains("pareto&lt;3.2&gt;"));
        }
        assert!(render_svg(&[], &PlotOptions::default()).is_err());
    }
}
