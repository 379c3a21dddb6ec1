//! Self-contained SVG 1.1 line plots of CSV tables.

use super::output::csv_error;
use super::{ShellError, ShellResult};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy)]
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_column: &'a str,
    pub y_column: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
}

/// Six significant digits, trailing zeros removed.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let exp = v.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp > 5 && exp < 15 {
        let f = 10f64.powi(exp - 5);
        format!("{:.0}", (v / f).round() * f)
    } else if (-5..15).contains(&exp) {
        trim(format!("{:.*}", (5 - exp).max(0) as usize, v))
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn column(header: &csv::StringRecord, name: &str) -> ShellResult<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| ShellError::Parse {
        line: 1,
        reason: format!("missing column `{name}`"),
    })
}

/// Reads the `(x, y)` pairs of one table.
pub fn read_series(text: &str, x: &str, y: &str) -> ShellResult<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_error)?.clone();
    let (ix, iy) = (column(&header, x)?, column(&header, y)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse = |i: usize, name: &str| -> ShellResult<f64> {
            let v: f64 = rec[i].parse().map_err(|_| ShellError::Parse {
                line,
                reason: format!("column `{name}`: `{}` is not a number", &rec[i]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ShellError::Parse {
                    line,
                    reason: format!("column `{name}` is not finite"),
                })
            }
        };
        out.push((parse(ix, x)?, parse(iy, y)?));
    }
    Ok(out)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders one plot with a polyline per `(legend, csv)` table.
pub fn emit_svg(tables: &[(&str, &str)], spec: &PlotSpec<'_>) -> ShellResult<String> {
    let series = tables
        .iter()
        .map(|(label, text)| Ok((*label, read_series(text, spec.x_column, spec.y_column)?)))
        .collect::<ShellResult<Vec<_>>>()?;
    let all = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        sig6(WIDTH),
        sig6(HEIGHT),
        sig6(WIDTH),
        sig6(HEIGHT)
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        sig6(LEFT + pw / 2.0),
        escape(spec.title)
    ));
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        sig6(LEFT),
        sig6(TOP),
        sig6(pw),
        sig6(ph)
    ));
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{4}</text>\n",
            sig6(px),
            sig6(TOP + ph),
            sig6(TOP + ph + 5.0),
            sig6(TOP + ph + 18.0),
            sig6(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{5}</text>\n",
            sig6(LEFT - 5.0),
            sig6(py),
            sig6(LEFT),
            sig6(LEFT - 8.0),
            sig6(py + 4.0),
            sig6(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        sig6(LEFT + pw / 2.0),
        sig6(HEIGHT - 15.0),
        escape(spec.x_label)
    ));
    s.push_str(&format!(
        "<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 {0})\">{1}</text>\n",
        sig6(TOP + ph / 2.0),
        escape(spec.y_label)
    ));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() == 1 {
            s.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n",
                sig6(sx(pts[0].0)),
                sig6(sy(pts[0].1))
            ));
        } else if !pts.is_empty() {
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", sig6(sx(*x)), sig6(sy(*y)))).collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                coords.join(" ")
            ));
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"{3}\" y=\"{4}\" font-family=\"sans-serif\" font-size=\"12\">{5}</text>\n",
            sig6(LEFT + pw + 12.0),
            sig6(ly),
            sig6(LEFT + pw + 36.0),
            sig6(LEFT + pw + 42.0),
            sig6(ly + 4.0),
            escape(label)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: PlotSpec<'static> = PlotSpec {
        title: "t",
        x_column: "eta",
        y_column: "capacity",
        x_label: "x",
        y_label: "y",
    };

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(2.5), "2.5");
        assert_eq!(sig6(-0.000123456789), "-0.000123457");
        assert_eq!(sig6(1.5e-9), "1.5e-9");
    }

    #[test]
    fn single_point_gets_a_marker() {
        let svg = emit_svg(&[("one", "eta,capacity\n0,0.1\n")], &SPEC).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn one_polyline_per_table() {
        let t = "eta,capacity\n0,0.2\n1,0.1\n";
        let svg = emit_svg(&[("a", t), ("b", t), ("c<&>", t)], &SPEC).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("c&lt;&amp;&gt;"));
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let err = emit_svg(&[("a", "eta,capacity\n0,0.2\n1,oops\n")], &SPEC).unwrap_err();
        assert!(matches!(err, ShellError::Parse { line: 3, .. }), "{err}");
        let err = emit_svg(&[("a", "eta,capacity\n0,0.2\n1\n")], &SPEC).unwrap_err();
        assert!(matches!(err, ShellError::Parse { line: 3, .. }), "{err}");
        let err = emit_svg(&[("a", "eta,other\n0,0.2\n")], &SPEC).unwrap_err();
        assert!(matches!(err, ShellError::Parse { line: 1, .. }), "{err}");
    }
}
