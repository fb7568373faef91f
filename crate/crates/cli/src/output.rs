//! Trace CSV, plot data and SVG rendering.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use ngcp::{IterRecord, Trace};

pub const TRACE_HEADER: &str = "iter,time_s,f,h,gnorm_rel,fevals,gevals,restart,beta";
pub const PLOT_HEADER: &str = "series,metric,iter,time_s,value";

/// Writes one row per record. Wall-clock times are written only when
/// `timing` is set; otherwise the column holds 0 so identical runs produce
/// identical bytes.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &Trace, timing: bool) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        let time = if timing { r.time_s } else { 0.0 };
        let beta = r.beta.map(|b| format!("{b:?}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{},{},{},{}",
            r.iter,
            time,
            r.f,
            r.h,
            r.gnorm_rel,
            r.fevals,
            r.gevals,
            u8::from(r.restart),
            beta
        )?;
    }
    w.flush()
}

/// Parses a trace written by [`write_trace_csv`]. Counter columns not in
/// the schema are left at zero.
pub fn read_trace_csv<R: BufRead>(r: R) -> Result<Trace, String> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == TRACE_HEADER => {}
        _ => return Err(format!("line 1: expected header '{TRACE_HEADER}'")),
    }
    let mut trace = Trace::default();
    for (k, line) in lines {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| format!("line {}: invalid {what}", k + 1);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(format!("line {}: expected 9 fields, found {}", k + 1, f.len()));
        }
        let num = |i: usize, what: &str| f[i].parse::<f64>().map_err(|_| bad(what));
        let int = |i: usize, what: &str| f[i].parse::<usize>().map_err(|_| bad(what));
        trace.records.push(IterRecord {
            iter: int(0, "iter")?,
            time_s: num(1, "time_s")?,
            f: num(2, "f")?,
            h: num(3, "h")?,
            gnorm_rel: num(4, "gnorm_rel")?,
            fevals: int(5, "fevals")?,
            gevals: int(6, "gevals")?,
            precond_calls: 0,
            restart: f[7] == "1",
            beta: if f[8].is_empty() { None } else { Some(num(8, "beta")?) },
            cg_beta: None,
        });
    }
    Ok(trace)
}

/// One labelled convergence series.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub trace: Trace,
}

impl Series {
    /// `h` at the final iterate, the reference for `|h − h*|`.
    pub fn h_star(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.h)
    }
}

/// Long-format rows for `|h − h*|` (metric `h_err`) and `gnorm_rel`.
pub fn write_plot_data<W: Write>(mut w: W, series: &[Series]) -> io::Result<()> {
    writeln!(w, "{PLOT_HEADER}")?;
    for s in series {
        let h_star = s.h_star();
        for metric in ["h_err", "gnorm_rel"] {
            for r in &s.trace.records {
                let v = if metric == "h_err" { (r.h - h_star).abs() } else { r.gnorm_rel };
                writeln!(w, "{},{metric},{},{:?},{v:?}", s.label, r.iter, r.time_s)?;
            }
        }
    }
    w.flush()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Two panels of `|h − h*|` on a log axis, against iteration and time.
pub fn render_svg(series: &[Series]) -> String {
    let (pw, ph, margin) = (420.0, 300.0, 50.0);
    let mut svg = String::new();
    let width = 2.0 * (pw + margin) + margin;
    let height = ph + 2.0 * margin + 20.0 * series.len() as f64;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );

    let points = |s: &Series, by_time: bool| -> Vec<(f64, f64)> {
        let h_star = s.h_star();
        s.trace
            .records
            .iter()
            .map(|r| (if by_time { r.time_s } else { r.iter as f64 }, (r.h - h_star).abs()))
            .filter(|&(_, v)| v > 0.0 && v.is_finite())
            .map(|(x, v)| (x, v.log10()))
            .collect()
    };

    for (panel, by_time) in [false, true].into_iter().enumerate() {
        let all: Vec<(f64, f64)> = series.iter().flat_map(|s| points(s, by_time)).collect();
        let x_max = all.iter().map(|p| p.0).fold(0.0, f64::max).max(1e-9);
        let y_min = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().min(0.0);
        let y_max = all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil().max(y_min + 1.0);
        let x0 = margin + panel as f64 * (pw + margin);
        let y0 = margin;
        let sx = |x: f64| x0 + pw * x / x_max;
        let sy = |y: f64| y0 + ph * (y_max - y) / (y_max - y_min);

        let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let xlabel = if by_time { "time (s)" } else { "iteration" };
        let _ =
            writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, x0 + pw / 2.0, y0 + ph + 35.0);
        let _ = writeln!(svg, r#"<text x="{x0}" y="{}">|h - h*|</text>"#, y0 - 10.0);
        let mut e = y_min as i64;
        while e as f64 <= y_max {
            let y = sy(e as f64);
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" text-anchor="end">1e{e}</text><line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##,
                x0 - 4.0,
                y + 4.0,
                x0 + pw
            );
            e += 1;
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{x_max:.3}</text>"#, x0 + pw, y0 + ph + 15.0);

        for (k, s) in series.iter().enumerate() {
            let path: Vec<String> =
                points(s, by_time).iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            if !path.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    PALETTE[k % PALETTE.len()],
                    path.join(" ")
                );
            }
        }
    }
    for (k, s) in series.iter().enumerate() {
        let y = margin + ph + 55.0 + 20.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{margin}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 10.0,
            PALETTE[k % PALETTE.len()],
            margin + 18.0,
            y,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
