use std::fmt::Write;

use thiserror::Error;

use crate::analytics::{ChangePoint, Direction, MinuteRate, Stage, StageInterval};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("cannot chart an empty series")]
    EmptySeries,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 60.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const UP_COLOR: &str = "#1f77b4";
const DOWN_COLOR: &str = "#ff7f0e";
const RATE_COLOR: &str = "#222222";

fn stage_fill(stage: Stage) -> &'static str {
    match stage {
        Stage::High => "#2ca02c",
        Stage::Medium => "#bcbd22",
        Stage::Low => "#d62728",
    }
}

struct Frame {
    minutes: f64,
    count_max: f64,
}

impl Frame {
    fn x(&self, minute: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT) * minute / self.minutes
    }

    fn y_count(&self, v: f64) -> f64 {
        TOP + (HEIGHT - TOP - BOTTOM) * (1.0 - v / self.count_max)
    }

    fn y_rate(&self, v: f64) -> f64 {
        TOP + (HEIGHT - TOP - BOTTOM) * (1.0 - v)
    }
}

/// Splits a series into runs of present values, one polyline each.
fn polylines(
    out: &mut String,
    class: &str,
    color: &str,
    points: impl Iterator<Item = Option<(f64, f64)>>,
) {
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for p in points {
        match p {
            Some(xy) => runs.last_mut().expect("non-empty").push(xy),
            None if !runs.last().expect("non-empty").is_empty() => runs.push(Vec::new()),
            None => {}
        }
    }
    for run in runs.into_iter().filter(|r| !r.is_empty()) {
        let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
    }
}

/// Static trend chart: heads-up and heads-down counts, head-up rate,
/// shaded stages and marked change points. Minute `m` is drawn at `m + 0.5`.
pub fn render_trend_svg(
    series: &[MinuteRate],
    points: &[ChangePoint],
    intervals: &[StageInterval],
) -> Result<String, RenderError> {
    if series.is_empty() {
        return Err(RenderError::EmptySeries);
    }
    let peak = series
        .iter()
        .flat_map(|m| [m.up_avg, m.down_avg])
        .flatten()
        .fold(0.0f64, f64::max);
    let count_max = ((peak / 5.0).ceil() * 5.0).max(5.0);
    let f = Frame {
        minutes: series.len() as f64,
        count_max,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    for iv in intervals {
        let x1 = f.x(iv.start_min as f64);
        let x2 = f.x(iv.end_min as f64);
        let _ = writeln!(
            out,
            r#"<rect class="band band-{}" x="{x1:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.12"/>"#,
            iv.stage.as_str(),
            x2 - x1,
            HEIGHT - TOP - BOTTOM,
            stage_fill(iv.stage)
        );
    }

    // axes
    let (x0, x1) = (f.x(0.0), f.x(f.minutes));
    let (y0, y1) = (f.y_rate(0.0), f.y_rate(1.0));
    let _ = writeln!(
        out,
        r##"<path class="axes" d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2} L{x1:.2},{y1:.2}" fill="none" stroke="#444444"/>"##
    );
    let step = if series.len() > 60 { 10 } else { 5 };
    for m in (0..=series.len()).step_by(step) {
        let x = f.x(m as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{m}</text>"##,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for k in 0..=5 {
        let v = count_max * k as f64 / 5.0;
        let r = k as f64 / 5.0;
        let y = f.y_count(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.0}</text><text x="{:.2}" y="{:.2}" text-anchor="start">{r:.1}</text>"##,
            x0 - 6.0,
            y + 4.0,
            x1 + 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">minute</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">students</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(90 {:.2} {:.2})">head-up rate</text>"#,
        WIDTH - 14.0,
        (y0 + y1) / 2.0,
        WIDTH - 14.0,
        (y0 + y1) / 2.0
    );

    let centre = |m: &MinuteRate| f.x(m.minute_index as f64 + 0.5);
    polylines(
        &mut out,
        "series-up",
        UP_COLOR,
        series.iter().map(|m| m.up_avg.map(|v| (centre(m), f.y_count(v)))),
    );
    polylines(
        &mut out,
        "series-down",
        DOWN_COLOR,
        series.iter().map(|m| m.down_avg.map(|v| (centre(m), f.y_count(v)))),
    );
    polylines(
        &mut out,
        "series-rate",
        RATE_COLOR,
        series.iter().map(|m| m.rate.map(|v| (centre(m), f.y_rate(v)))),
    );

    for p in points {
        let x = f.x(p.minute as f64);
        let (class, color, marker) = match p.direction {
            Direction::Increase => ("increase", "#2ca02c", format!("M{:.2},{:.2} l-6,10 l12,0 z", x, y1 - 12.0)),
            Direction::Decrease => ("decrease", "#d62728", format!("M{:.2},{:.2} l-6,-10 l12,0 z", x, y1 - 2.0)),
        };
        let _ = writeln!(
            out,
            r#"<line class="change-point {class}" x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{y0:.2}" stroke="{color}" stroke-dasharray="4 3"/><path class="change-marker {class}" d="{marker}" fill="{color}"/>"#
        );
    }

    let legend = [
        ("heads up (avg)", UP_COLOR),
        ("heads down (avg)", DOWN_COLOR),
        ("head-up rate", RATE_COLOR),
    ];
    for (i, (label, color)) in legend.iter().enumerate() {
        let lx = LEFT + 10.0 + 150.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="20" x2="{:.2}" y2="20" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="24">{label}</text>"#,
            lx + 20.0,
            lx + 26.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
