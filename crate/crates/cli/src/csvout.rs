//! CSV emission for planning traces and single geodesics.
//!
//! Values are printed with 12 significant digits, dot decimal separator,
//! in a fixed column order, so traces can be pinned byte-for-byte.

use infogeo_core::{GeodesicState, PlanTrace};

/// Formats with 12 significant digits; plain decimal where reasonable,
/// scientific otherwise. Locale-independent and deterministic.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        if trimmed == "-0" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    } else {
        format!("{v:.11e}")
    }
}

fn platform_headers(count: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(2 * count);
    for j in 1..=count {
        cols.push(format!("x{j}"));
        cols.push(format!("y{j}"));
    }
    cols
}

/// Trace CSV: `t, x1, y1, ..., det_F_mean, bearing_sep, q_eig1, ...`,
/// one row per replan record, time-ordered.
pub fn trace_csv(trace: &PlanTrace) -> String {
    let mut out = String::new();
    if let Some(first) = trace.records.first() {
        let mut header = vec!["t".to_string()];
        header.extend(platform_headers(first.config.count()));
        header.push("det_F_mean".to_string());
        header.push("bearing_sep".to_string());
        for k in 1..=first.q_eigenvalues.len() {
            header.push(format!("q_eig{k}"));
        }
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for r in &trace.records {
        let mut row = vec![fmt_sig(r.time)];
        row.extend(r.config.flat().iter().map(|v| fmt_sig(*v)));
        row.push(fmt_sig(r.det_fisher_mean));
        row.push(fmt_sig(r.bearing_separation));
        row.extend(r.q_eigenvalues.iter().map(|v| fmt_sig(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Geodesic CSV: `t, x1, y1, ..., u_x1, u_y1, ..., q_speed` per sample.
pub fn geodesic_csv(samples: &[(f64, GeodesicState)], speeds: &[f64]) -> String {
    let mut out = String::new();
    if let Some((_, first)) = samples.first() {
        let count = first.sigma.len() / 2;
        let mut header = vec!["t".to_string()];
        header.extend(platform_headers(count));
        for j in 1..=count {
            header.push(format!("u_x{j}"));
            header.push(format!("u_y{j}"));
        }
        header.push("q_speed".to_string());
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for ((t, state), speed) in samples.iter().zip(speeds) {
        let mut row = vec![fmt_sig(*t)];
        row.extend(state.sigma.iter().map(|v| fmt_sig(*v)));
        row.extend(state.velocity.iter().map(|v| fmt_sig(*v)));
        row.push(fmt_sig(*speed));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
