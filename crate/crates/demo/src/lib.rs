//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain strings and numbers and returns a JSON string, so
//! the page needs no bundler or generated TypeScript types. The `*_json`
//! functions hold the logic and are what the native tests call.

use lecturelens_core::analytics::{
    detect_change_points, segment_stages, series_from_rates, AnalyticsConfig,
};
use lecturelens_core::ingest::{validate_session, SessionMetadata};
use lecturelens_core::metrics::{
    mean_average_precision, parse_ground_truth, parse_predictions, ApVariant,
};
use lecturelens_core::pipeline::{analyze, PipelineOptions};
use lecturelens_core::render::render_trend_svg;
use lecturelens_core::synth::{generate_synthetic, SyntheticProfile};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn config(high: f64, low: f64, window: usize, delta: f64) -> Result<AnalyticsConfig, String> {
    let cfg = AnalyticsConfig {
        high_threshold: high,
        low_threshold: low,
        window_w: window,
        delta,
        ..AnalyticsConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Generates a session from a profile and runs the analytics stage on it.
pub fn simulate_json(
    profile: &str,
    high: f64,
    low: f64,
    window: usize,
    delta: f64,
) -> Result<String, String> {
    let profile: SyntheticProfile = serde_json::from_str(profile).map_err(|e| e.to_string())?;
    let synth = generate_synthetic(&profile).map_err(|e| e.to_string())?;
    let duration = synth.duration_s();
    let bundle = validate_session(
        "demo",
        synth.frames,
        synth.segments,
        duration,
        SessionMetadata::default(),
    )
    .map_err(|e| e.to_string())?;
    let opts = PipelineOptions {
        analytics: config(high, low, window, delta)?,
        ..PipelineOptions::default()
    };
    let a = analyze(&bundle, &opts).map_err(|e| e.to_string())?;
    let svg = render_trend_svg(&a.series, &a.change_points, &a.stages).map_err(|e| e.to_string())?;
    Ok(json!({
        "svg": svg,
        "stats": a.stats,
        "ratio": a.stats.ratio_display(),
        "stages": a.stages,
        "change_points": a.change_points,
        "truth": synth.truth.steps,
        "notes": a.notes,
    })
    .to_string())
}

/// Stage segmentation and change points for a hand-typed rate series
/// (numbers separated by commas or whitespace, one per minute).
pub fn explore_json(
    rates: &str,
    high: f64,
    low: f64,
    window: usize,
    delta: f64,
) -> Result<String, String> {
    let rates = rates
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t}")))
        .collect::<Result<Vec<_>, _>>()?;
    if rates.is_empty() {
        return Err("enter at least one rate".into());
    }
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(format!("rates must lie in [0, 1], got {r}"));
    }
    let cfg = config(high, low, window, delta)?;
    let series = series_from_rates(&rates);
    let stages = segment_stages(&series, &cfg).map_err(|e| e.to_string())?;
    let points = if rates.len() >= 2 * window {
        detect_change_points(&series, &cfg).map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };
    let svg = render_trend_svg(&series, &points, &stages).map_err(|e| e.to_string())?;
    Ok(json!({ "svg": svg, "stages": stages, "change_points": points }).to_string())
}

/// Per-category AP and mAP for pasted prediction and ground-truth JSONL.
pub fn toy_map_json(pred: &str, gt: &str, iou: f64) -> Result<String, String> {
    if !(iou > 0.0 && iou < 1.0) {
        return Err(format!("IoU threshold must lie in (0, 1), got {iou}"));
    }
    let dets = parse_predictions(pred.as_bytes()).map_err(|e| format!("predictions: {e}"))?;
    let gts = parse_ground_truth(gt.as_bytes()).map_err(|e| format!("ground truth: {e}"))?;
    let summary = mean_average_precision(&dets, &gts, iou, ApVariant::AllPoint)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn simulate(profile: &str, high: f64, low: f64, window: usize, delta: f64) -> Result<String, JsError> {
    simulate_json(profile, high, low, window, delta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn explore(rates: &str, high: f64, low: f64, window: usize, delta: f64) -> Result<String, JsError> {
    explore_json(rates, high, low, window, delta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn toy_map(pred: &str, gt: &str, iou: f64) -> Result<String, JsError> {
    toy_map_json(pred, gt, iou).map_err(|e| JsError::new(&e))
}
