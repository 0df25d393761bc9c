//! Brute-force reference implementations shared by the oracle tests and the
//! acceptance suite. Deliberately naive: clarity over speed.

#![allow(dead_code)]

use lecturelens_core::analytics::{AnalyticsConfig, ChangePoint, Direction, Stage, StageInterval};
use lecturelens_core::ingest::{BBox, Category};
use lecturelens_core::metrics::{GroundTruthBox, ScoredDetection};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Keeps one label per minute and rebuilds the run list from scratch after
/// every relabelling.
pub fn segmentation_oracle(rates: &[f64], cfg: &AnalyticsConfig) -> Vec<StageInterval> {
    let mut labels: Vec<Stage> = rates
        .iter()
        .map(|&r| {
            if r >= cfg.high_threshold {
                Stage::High
            } else if r < cfg.low_threshold {
                Stage::Low
            } else {
                Stage::Medium
            }
        })
        .collect();

    let runs_of = |labels: &[Stage]| -> Vec<(usize, usize, Stage)> {
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=labels.len() {
            if i == labels.len() || labels[i] != labels[start] {
                runs.push((start, i, labels[start]));
                start = i;
            }
        }
        runs
    };

    loop {
        let runs = runs_of(&labels);
        if runs.len() < 2 {
            break;
        }
        let mut pick: Option<(usize, bool, usize)> = None;
        for (i, &(s, e, _)) in runs.iter().enumerate() {
            if e - s >= cfg.window_w {
                continue;
            }
            let key = (e - s, i == 0 || i == runs.len() - 1, i);
            if pick.is_none_or(|p| key < p) {
                pick = Some(key);
            }
        }
        let Some((_, _, i)) = pick else { break };
        let (s, e, _) = runs[i];
        let own = mean(&rates[s..e]);
        let dist = |j: usize| (own - mean(&rates[runs[j].0..runs[j].1])).abs();
        let target = if i == 0 {
            1
        } else if i == runs.len() - 1 {
            i - 1
        } else if dist(i - 1) <= dist(i + 1) {
            i - 1
        } else {
            i + 1
        };
        let stage = runs[target].2;
        for l in &mut labels[s..e] {
            *l = stage;
        }
    }

    runs_of(&labels)
        .into_iter()
        .map(|(s, e, stage)| StageInterval {
            start_min: s,
            end_min: e,
            stage,
            mean_rate: mean(&rates[s..e]),
        })
        .collect()
}

/// Repeatedly takes the strongest remaining candidate and strikes out its
/// neighbourhood.
pub fn change_point_oracle(rates: &[f64], cfg: &AnalyticsConfig) -> Vec<ChangePoint> {
    let w = cfg.window_w;
    let n = rates.len();
    let mut alive: Vec<Option<f64>> = vec![None; n + 1];
    for t in w..=n - w {
        let d = mean(&rates[t..t + w]) - mean(&rates[t - w..t]);
        if d.abs() >= cfg.delta {
            alive[t] = Some(d);
        }
    }
    let mut out = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (t, d) in alive.iter().enumerate() {
            if let Some(d) = d {
                if best.is_none_or(|(_, b): (usize, f64)| d.abs() > b.abs()) {
                    best = Some((t, *d));
                }
            }
        }
        let Some((t, d)) = best else { break };
        out.push(ChangePoint {
            minute: t,
            direction: if d > 0.0 { Direction::Increase } else { Direction::Decrease },
            magnitude: d.abs(),
        });
        for (s, slot) in alive.iter_mut().enumerate() {
            if s.abs_diff(t) < w {
                *slot = None;
            }
        }
    }
    out.sort_by_key(|p| p.minute);
    out
}

pub fn random_rates(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=60);
    // Half of the series are piecewise-constant so that long runs and
    // genuine steps are exercised, not only white noise.
    if rng.random_bool(0.5) {
        (0..len).map(|_| rng.random_range(0.0..=1.0)).collect()
    } else {
        let mut v = Vec::with_capacity(len);
        let mut level: f64 = rng.random_range(0.0..=1.0);
        for _ in 0..len {
            if rng.random_bool(0.15) {
                level = rng.random_range(0.0..=1.0);
            }
            v.push((level + rng.random_range(-0.05..=0.05)).clamp(0.0, 1.0));
        }
        v
    }
}

pub fn random_config(rng: &mut ChaCha8Rng) -> AnalyticsConfig {
    AnalyticsConfig {
        window_w: rng.random_range(1..=4),
        delta: [0.05, 0.15, 0.3][rng.random_range(0..3)],
        ..AnalyticsConfig::default()
    }
}

// ---------------------------------------------------------------- metrics

pub fn naive_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    let union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
    if inter == 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// True positives among detections with confidence ≥ `threshold`, matched
/// from scratch for that threshold alone.
pub fn tp_at(dets: &[ScoredDetection], gts: &[GroundTruthBox], threshold: f64, iou_thr: f64) -> usize {
    let mut kept: Vec<&ScoredDetection> = dets.iter().filter(|d| d.confidence >= threshold).collect();
    kept.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap());
    let mut used = vec![false; gts.len()];
    let mut tp = 0;
    for d in kept {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if used[gi] || g.image_id != d.image_id {
                continue;
            }
            let v = naive_iou(&d.bbox, &g.bbox);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, v)) = best {
            if v >= iou_thr {
                used[gi] = true;
                tp += 1;
            }
        }
    }
    tp
}

/// Enumerates every distinct confidence as a threshold and integrates the
/// right-max precision envelope over recall directly.
pub fn ap_oracle(dets: &[ScoredDetection], gts: &[GroundTruthBox], iou_thr: f64) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    let mut thresholds: Vec<f64> = dets.iter().map(|d| d.confidence).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&c| {
            let n = dets.iter().filter(|d| d.confidence >= c).count();
            let tp = tp_at(dets, gts, c, iou_thr);
            (tp as f64 / gts.len() as f64, tp as f64 / n as f64)
        })
        .collect();
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(r, _)) in points.iter().enumerate() {
        let envelope = points[i..].iter().map(|p| p.1).fold(0.0, f64::max);
        area += (r - prev_recall) * envelope;
        prev_recall = r;
    }
    area
}

pub fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let x = rng.random_range(0.0..80.0);
    let y = rng.random_range(0.0..80.0);
    BBox::new(x, y, x + rng.random_range(5.0..25.0), y + rng.random_range(5.0..25.0)).unwrap()
}

pub fn jitter(rng: &mut ChaCha8Rng, b: &BBox) -> BBox {
    let mut j = || rng.random_range(-4.0..4.0);
    let (dx, dy, dw, dh) = (j(), j(), j(), j());
    BBox::new(b.x1 + dx, b.y1 + dy, (b.x2 + dx + dw).max(b.x1 + dx + 1.0), (b.y2 + dy + dh).max(b.y1 + dy + 1.0))
        .unwrap()
}

pub fn toy_set(rng: &mut ChaCha8Rng) -> (Vec<ScoredDetection>, Vec<GroundTruthBox>) {
    let images = ["a", "b", "c"];
    let n_img = rng.random_range(1..=3);
    let n_gt = rng.random_range(1..=10);
    let gts: Vec<GroundTruthBox> = (0..n_gt)
        .map(|_| GroundTruthBox {
            image_id: images[rng.random_range(0..n_img)].to_string(),
            category: Category::HeadUp,
            bbox: random_box(rng),
        })
        .collect();
    let n_det = rng.random_range(0..=10);
    // Distinct confidences: shuffled evenly spaced values.
    let mut confs: Vec<f64> = (0..n_det).map(|i| (i as f64 + 1.0) / (n_det as f64 + 1.0)).collect();
    for i in (1..confs.len()).rev() {
        let j = rng.random_range(0..=i);
        confs.swap(i, j);
    }
    let dets = confs
        .into_iter()
        .map(|confidence| {
            let (image_id, bbox) = if rng.random_bool(0.6) {
                let g = &gts[rng.random_range(0..gts.len())];
                (g.image_id.clone(), jitter(rng, &g.bbox))
            } else {
                (images[rng.random_range(0..n_img)].to_string(), random_box(rng))
            };
            ScoredDetection { image_id, category: Category::HeadUp, confidence, bbox }
        })
        .collect();
    (dets, gts)
}

