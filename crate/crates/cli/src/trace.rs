//! Trace CSV files and their SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use carnot_core::talagrand::max_upward_jump;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Row {
    t: f64,
    value: f64,
}

fn trace_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Trace {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes `t,value` rows; floats round-trip exactly.
pub fn write_trace_csv(path: &Path, times: &[f64], values: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| trace_err(path, e.to_string()))?;
    for (&t, &value) in times.iter().zip(values) {
        w.serialize(Row { t, value })
            .map_err(|e| trace_err(path, e.to_string()))?;
    }
    w.flush().map_err(|e| trace_err(path, e.to_string()))
}

pub fn read_trace_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| trace_err(path, e.to_string()))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| trace_err(path, format!("row {}: {e}", i + 1)))?;
        if !(row.t.is_finite() && row.value.is_finite()) {
            return Err(trace_err(path, format!("row {} is not finite", i + 1)));
        }
        times.push(row.t);
        values.push(row.value);
    }
    if times.is_empty() {
        return Err(trace_err(path, "trace is empty"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(trace_err(path, "times must be strictly increasing"));
    }
    Ok((times, values))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

/// Polyline of the trace with the largest upward step marked. The exact jump
/// is kept in the `data-max-jump` attribute.
pub fn trace_svg(times: &[f64], values: &[f64], title: &str) -> String {
    let jump = max_upward_jump(values);
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let span_v = if hi > lo { hi - lo } else { 1.0 };
    let px = |t: f64| MARGIN + (t - t0) / span_t * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - lo) / span_v * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-max-jump="{jump:e}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">t = {t0:.3} … {t1:.3}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="8" y="{}" font-size="11">{hi:.6}</text><text x="8" y="{}" font-size="11">{lo:.6}</text>"#,
        MARGIN,
        HEIGHT - MARGIN
    );
    let points: Vec<String> = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        points.join(" ")
    );
    if jump > 0.0 {
        let k = values
            .windows(2)
            .position(|w| w[1] - w[0] == jump)
            .expect("the jump comes from a window");
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="3"/>"#,
            px(times[k]),
            py(values[k]),
            px(times[k + 1]),
            py(values[k + 1])
        );
    }
    let _ = writeln!(
        s,
        r#"<text id="max-jump" x="{}" y="24" font-size="12" text-anchor="end">max upward jump {jump:.3e}</text>"#,
        WIDTH - MARGIN
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Reads a trace CSV and writes its plot; returns the annotated jump.
pub fn plot(input: &Path, output: &Path) -> CliResult<f64> {
    let (times, values) = read_trace_csv(input)?;
    let title = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    std::fs::write(output, trace_svg(&times, &values, &title)).map_err(|e| CliError::Io {
        path: output.to_path_buf(),
        source: e,
    })?;
    Ok(max_upward_jump(&values))
}

/// The `data-max-jump` attribute of a plot written by [`trace_svg`].
pub fn annotated_jump(svg: &str) -> Option<f64> {
    let rest = svg.split("data-max-jump=\"").nth(1)?;
    rest.split('"').next()?.parse().ok()
}
