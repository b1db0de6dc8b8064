//! Minimal standalone SVG plotter for planning traces: solid platform
//! polylines, dotted straight-line extrapolations, a target marker and the
//! 1-sigma prior ellipse. Pure serialization: identical traces give
//! identical bytes.

use infogeo_core::{extrapolate, sym_eigen, PlanTrace, Scenario};

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[[f64; 2]]) -> Frame {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for p in points {
            min_x = min_x.min(p[0]);
            max_x = max_x.max(p[0]);
            min_y = min_y.min(p[1]);
            max_y = max_y.max(p[1]);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
        Frame {
            min_x,
            min_y,
            scale: (CANVAS - 2.0 * MARGIN) / span,
        }
    }

    /// World to screen, with the y axis pointing up.
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.min_x) * self.scale,
            CANVAS - MARGIN - (p[1] - self.min_y) * self.scale,
        )
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn polyline(frame: &Frame, points: &[[f64; 2]], color: &str, class: &str, dashed: bool) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{},{}", fmt(x), fmt(y))
        })
        .collect();
    let dash = if dashed {
        " stroke-dasharray=\"6,5\""
    } else {
        ""
    };
    format!(
        "  <polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n",
        coords.join(" ")
    )
}

/// Renders the trace. The dotted continuation covers a quarter of the
/// traced time span along the final chosen direction.
pub fn render_svg(trace: &PlanTrace, scenario: &Scenario) -> String {
    let records = &trace.records;
    let platform_count = records
        .first()
        .map(|r| r.config.count())
        .unwrap_or(0);

    let extr_duration = match records.len() {
        0 | 1 => 0.0,
        _ => 0.25 * (records.last().unwrap().time - records[0].time),
    };
    let extrapolated = if extr_duration > 0.0 {
        extrapolate(trace, extr_duration).ok()
    } else {
        None
    };

    // Collect every drawable world point for the viewport.
    let mut points: Vec<[f64; 2]> = Vec::new();
    for r in records {
        points.extend(r.config.platforms().iter().copied());
    }
    if let Some(cfg) = &extrapolated {
        points.extend(cfg.platforms().iter().copied());
    }
    points.push([scenario.target.x, scenario.target.y]);
    let mean = scenario.prior.mean();
    let cov_eig = sym_eigen(scenario.prior.covariance().sym());
    let (r1, r2) = (cov_eig.values[0].sqrt(), cov_eig.values[1].sqrt());
    points.push([mean.x - r1, mean.y - r1]);
    points.push([mean.x + r1, mean.y + r1]);
    let frame = Frame::fit(&points);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">\n",
        c = CANVAS
    ));
    svg.push_str(&format!(
        "  <rect width=\"{c}\" height=\"{c}\" fill=\"white\"/>\n",
        c = CANVAS
    ));

    // 1-sigma prior ellipse; rotation from the leading eigenvector.
    let (cx, cy) = frame.map([mean.x, mean.y]);
    let angle = cov_eig.vectors[(1, 0)].atan2(cov_eig.vectors[(0, 0)]);
    svg.push_str(&format!(
        "  <ellipse class=\"prior\" cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" transform=\"rotate({} {} {})\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1.5\"/>\n",
        fmt(cx),
        fmt(cy),
        fmt(r1 * frame.scale),
        fmt(r2 * frame.scale),
        fmt(-angle.to_degrees()),
        fmt(cx),
        fmt(cy),
    ));

    // Target marker: an x-cross.
    let (tx, ty) = frame.map([scenario.target.x, scenario.target.y]);
    let arm = 7.0;
    svg.push_str(&format!(
        "  <path class=\"target\" d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"black\" stroke-width=\"2\"/>\n",
        fmt(tx - arm),
        fmt(ty - arm),
        fmt(tx + arm),
        fmt(ty + arm),
        fmt(tx - arm),
        fmt(ty + arm),
        fmt(tx + arm),
        fmt(ty - arm),
    ));

    for j in 0..platform_count {
        let color = PALETTE[j % PALETTE.len()];
        let path: Vec<[f64; 2]> = records.iter().map(|r| r.config.platform(j)).collect();
        if path.len() >= 2 {
            svg.push_str(&polyline(&frame, &path, color, "trajectory", false));
        }
        if let Some(cfg) = &extrapolated {
            let tail = [*path.last().unwrap(), cfg.platform(j)];
            svg.push_str(&polyline(&frame, &tail, color, "extrapolation", true));
        }
        // Start marker.
        if let Some(first) = path.first() {
            let (x, y) = frame.map(*first);
            svg.push_str(&format!(
                "  <circle class=\"start\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n",
                fmt(x),
                fmt(y)
            ));
        }
    }

    svg.push_str("</svg>\n");
    svg
}
