//! Hand-rolled SVG phase plots: no plotting dependency, deterministic bytes,
//! diffable output.
//!
//! Every plot uses a fixed 800x600 canvas: the simulated phase trajectory as
//! a solid polyline, the anhysteresis curve dashed, the level-set curves
//! dotted (curve-chasing models only), a circle marking the initial point,
//! and numeric axis ticks.

use std::fmt::Write;

use duhem::{anhysteresis_at, Branch, DuhemModel, TimeTrajectory};

pub const CANVAS_WIDTH: f64 = 800.0;
pub const CANVAS_HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
/// Cap on polyline vertices; longer trajectories are strided down.
const MAX_PLOT_POINTS: usize = 8000;
const OVERLAY_SAMPLES: usize = 257;

struct Frame {
    u_lo: f64,
    u_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, u: f64) -> f64 {
        MARGIN_LEFT + (u - self.u_lo) / (self.u_hi - self.u_lo)
            * (CANVAS_WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        CANVAS_HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y_lo) / (self.y_hi - self.y_lo)
                * (CANVAS_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Round tick labels: shortest representation of a value that is already a
/// nice number.
fn fmt_tick(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Step size 1/2/5 x 10^k giving about `target` intervals over `span`.
fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let residual = raw / magnitude;
    let factor = if residual < 1.5 {
        1.0
    } else if residual < 3.5 {
        2.0
    } else if residual < 7.5 {
        5.0
    } else {
        10.0
    };
    factor * magnitude
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).ceil();
    let last = (hi / step).floor();
    let mut out = Vec::new();
    let mut k = first;
    while k <= last {
        out.push(k * step);
        k += 1.0;
    }
    out
}

fn polyline(out: &mut String, points: &[(f64, f64)], frame: &Frame, style: &str) {
    if points.len() < 2 {
        return;
    }
    out.push_str("  <polyline fill=\"none\" ");
    out.push_str(style);
    out.push_str(" points=\"");
    for (i, &(u, v)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", fmt_coord(frame.x(u)), fmt_coord(frame.y(v)));
    }
    out.push_str("\"/>\n");
}

/// Renders the phase plot of `trajectory` under `model` to SVG text.
pub fn phase_plot(model: &DuhemModel, trajectory: &TimeTrajectory, y0: f64) -> String {
    let mut points: Vec<(f64, f64)> = trajectory.samples.iter().map(|s| (s.u, s.y)).collect();
    if points.is_empty() {
        points.push((0.0, y0));
    }
    let stride = points.len().div_ceil(MAX_PLOT_POINTS).max(1);
    let plotted: Vec<(f64, f64)> = if stride > 1 {
        let mut p: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
        if *p.last().unwrap() != *points.last().unwrap() {
            p.push(*points.last().unwrap());
        }
        p
    } else {
        points.clone()
    };

    let mut u_lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for &(u, y) in &points {
        u_lo = u_lo.min(u);
        u_hi = u_hi.max(u);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if u_hi - u_lo <= 0.0 {
        u_lo -= 1.0;
        u_hi += 1.0;
    }
    if y_hi - y_lo <= 0.0 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pad_u = 0.05 * (u_hi - u_lo);
    let pad_y = 0.05 * (y_hi - y_lo);
    let frame = Frame {
        u_lo: u_lo - pad_u,
        u_hi: u_hi + pad_u,
        y_lo: y_lo - pad_y,
        y_hi: y_hi + pad_y,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_WIDTH}\" height=\"{CANVAS_HEIGHT}\" viewBox=\"0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}\">"
    );
    out.push_str("  <rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n");

    // frame and ticks
    let _ = writeln!(
        out,
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP),
        fmt_coord(CANVAS_WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        fmt_coord(CANVAS_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM),
    );
    for tick in ticks(frame.u_lo, frame.u_hi) {
        let x = fmt_coord(frame.x(tick));
        let y0_line = fmt_coord(CANVAS_HEIGHT - MARGIN_BOTTOM);
        let y1_line = fmt_coord(CANVAS_HEIGHT - MARGIN_BOTTOM + 6.0);
        let _ = writeln!(
            out,
            "  <line x1=\"{x}\" y1=\"{y0_line}\" x2=\"{x}\" y2=\"{y1_line}\" stroke=\"black\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            out,
            "  <text x=\"{x}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            fmt_coord(CANVAS_HEIGHT - MARGIN_BOTTOM + 20.0),
            fmt_tick(tick)
        );
    }
    for tick in ticks(frame.y_lo, frame.y_hi) {
        let y = fmt_coord(frame.y(tick));
        let _ = writeln!(
            out,
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\" stroke-width=\"1\"/>",
            fmt_coord(MARGIN_LEFT - 6.0),
            fmt_coord(MARGIN_LEFT)
        );
        let _ = writeln!(
            out,
            "  <text x=\"{}\" y=\"{y}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            fmt_coord(MARGIN_LEFT - 10.0),
            fmt_tick(tick)
        );
    }
    let _ = writeln!(
        out,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">u</text>",
        fmt_coord(0.5 * (MARGIN_LEFT + CANVAS_WIDTH - MARGIN_RIGHT)),
        fmt_coord(CANVAS_HEIGHT - 8.0)
    );
    let _ = writeln!(
        out,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">y</text>",
        fmt_coord(18.0),
        fmt_coord(0.5 * (MARGIN_TOP + CANVAS_HEIGHT - MARGIN_BOTTOM))
    );

    // overlay: level-set curves (dotted) for curve-chasing models
    let grid: Vec<f64> = (0..OVERLAY_SAMPLES)
        .map(|i| frame.u_lo + (frame.u_hi - frame.u_lo) * i as f64 / (OVERLAY_SAMPLES - 1) as f64)
        .collect();
    for (branch, color) in [(Branch::Rising, "#b03030"), (Branch::Falling, "#3030b0")] {
        if let Some(curve) = model.level_curve(branch) {
            let pts: Vec<(f64, f64)> = grid.iter().map(|&u| (u, curve.eval(u))).collect();
            let style = format!(
                "stroke=\"{color}\" stroke-width=\"1\" stroke-dasharray=\"1 3\""
            );
            polyline(&mut out, &pts, &frame, &style);
        }
    }

    // overlay: anhysteresis curve (dashed), sampled by bisection
    let g_mid = 0.5 * (frame.y_lo + frame.y_hi);
    let g_half = 2.0 * (frame.y_hi - frame.y_lo).max(1.0);
    let anhysteresis: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&u| {
            anhysteresis_at(model, u, (g_mid - g_half, g_mid + g_half), 1e-10)
                .ok()
                .map(|a| (u, a))
        })
        .collect();
    polyline(
        &mut out,
        &anhysteresis,
        &frame,
        "stroke=\"#308030\" stroke-width=\"1\" stroke-dasharray=\"6 4\"",
    );

    // the trajectory itself
    polyline(
        &mut out,
        &plotted,
        &frame,
        "stroke=\"black\" stroke-width=\"1.2\"",
    );

    // initial point marker
    let (u0, y0_actual) = trajectory
        .samples
        .first()
        .map(|s| (s.u, s.y))
        .unwrap_or((0.0, y0));
    let _ = writeln!(
        out,
        "  <circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        fmt_coord(frame.x(u0)),
        fmt_coord(frame.y(y0_actual))
    );

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use duhem::{TimeSample, BranchLabel};

    fn tiny_trajectory() -> TimeTrajectory {
        TimeTrajectory {
            samples: vec![
                TimeSample {
                    t: 0.0,
                    u: -1.0,
                    y: 0.0,
                    branch: BranchLabel::Rising,
                },
                TimeSample {
                    t: 1.0,
                    u: 1.0,
                    y: 0.5,
                    branch: BranchLabel::Rising,
                },
                TimeSample {
                    t: 2.0,
                    u: -1.0,
                    y: 0.1,
                    branch: BranchLabel::Falling,
                },
            ],
        }
    }

    #[test]
    fn plot_contains_expected_elements() {
        let model = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let svg = phase_plot(&model, &tiny_trajectory(), 0.0);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("stroke-dasharray=\"6 4\"")); // anhysteresis
        assert!(svg.contains("<circle")); // initial point marker
        assert!(svg.contains("<text")); // tick labels
        // Bouc-Wen has no analytic level curves
        assert!(!svg.contains("stroke-dasharray=\"1 3\""));
    }

    #[test]
    fn curve_chasing_plot_shows_level_curves() {
        let model = DuhemModel::curve_chasing(
            duhem::CurveSpec::polynomial(&[0.0, 1.0]),
            duhem::CurveSpec::polynomial(&[0.0, -1.0]),
            1.0,
        )
        .unwrap();
        let svg = phase_plot(&model, &tiny_trajectory(), 0.0);
        assert!(svg.contains("stroke-dasharray=\"1 3\""));
    }

    #[test]
    fn plot_is_deterministic() {
        let model = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let a = phase_plot(&model, &tiny_trajectory(), 0.0);
        let b = phase_plot(&model, &tiny_trajectory(), 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_single_point_still_renders() {
        let model = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let traj = TimeTrajectory {
            samples: vec![TimeSample {
                t: 0.0,
                u: 0.5,
                y: 0.3,
                branch: BranchLabel::Stationary,
            }],
        };
        let svg = phase_plot(&model, &traj, 0.3);
        assert!(svg.contains("<circle"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
