//! Report rendering: locale-independent CSV with 12 significant digits,
//! and JSON carrying the full report structure. Identical inputs always
//! produce byte-identical output.

use eprop_core::{DiagnosticReport, MetricModel, ReportRow};
use serde_json::{json, Value};

/// Formats a float with 12 significant digits, `.` decimal separator, no
/// exponent notation, and a bare `0` for zero.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 60) as usize;
    format!("{x:.decimals$}")
}

/// Renders probe rows as `probe_id,distance,gap` CSV.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("probe_id,distance,gap\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.probe.index(),
            fmt_sig12(row.distance),
            fmt_sig12(row.gap)
        ));
    }
    out
}

fn rows_to_json(model: &MetricModel, rows: &[ReportRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| {
                json!({
                    "probe": row.probe.index(),
                    "label": model.state(row.probe).label,
                    "distance": row.distance,
                    "gap": row.gap,
                })
            })
            .collect(),
    )
}

/// Renders the full report as JSON: parameters, rows, and verdict.
pub fn report_to_json(model: &MetricModel, report: &DiagnosticReport) -> Value {
    json!({
        "profile": report.profile,
        "model": model.name(),
        "target": report.target.index(),
        "target_label": model.state(report.target).label,
        "horizon": report.horizon,
        "tail_start": report.tail_start,
        "tol": report.tol,
        "rows": rows_to_json(model, &report.rows),
        "verdict": {
            "label": report.verdict.label(),
            "gap": report.verdict.gap(),
        },
    })
}

/// Renders a stability trace as `n,flat_distance` CSV.
pub fn trace_to_csv(trace: &[(usize, f64)]) -> String {
    let mut out = String::from("n,flat_distance\n");
    for (n, d) in trace {
        out.push_str(&format!("{},{}\n", n, fmt_sig12(*d)));
    }
    out
}

/// Renders a stability trace as JSON.
pub fn trace_to_json(model: &MetricModel, start: usize, trace: &[(usize, f64)]) -> Value {
    json!({
        "profile": "stability",
        "model": model.name(),
        "start": start,
        "rows": trace.iter().map(|(n, d)| json!({"n": n, "flat_distance": d})).collect::<Vec<_>>(),
    })
}
