//! Detector evaluation: IoU matching, precision/recall curves, AP and mAP.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{json_error, jsonl_lines, BBox, Category, DetectionBox, IngestError};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no ground-truth boxes in any category")]
    NoGroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    #[serde(rename = "image")]
    pub image_id: String,
    #[serde(rename = "cls")]
    pub category: Category,
    #[serde(rename = "xyxy")]
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDetection {
    pub image_id: String,
    pub category: Category,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchFlag {
    TruePositive,
    FalsePositive,
}

/// A detection's match outcome, in descending-confidence order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedMatch {
    pub det_index: usize,
    pub confidence: f64,
    pub flag: MatchFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence_threshold: f64,
    pub precision: f64,
    /// `None` when there is no ground truth to recall.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApVariant {
    /// Exact area under the right-max precision envelope.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    ElevenPoint,
    /// Mean envelope precision at recall 0, 0.01, ..., 1.
    HundredOnePoint,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionLine {
    image: String,
    #[serde(default, rename = "t")]
    _t: Option<f64>,
    boxes: Vec<DetectionBox>,
}

/// Predictions are detection-JSONL frames carrying an extra `"image"` field.
pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Vec<ScoredDetection>, IngestError> {
    let mut out = Vec::new();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let p: PredictionLine = serde_json::from_str(&text).map_err(|e| json_error(line, e))?;
        for b in p.boxes {
            b.check().map_err(|reason| IngestError::Invalid { line, reason })?;
            out.push(ScoredDetection {
                image_id: p.image.clone(),
                category: b.category,
                confidence: b.confidence,
                bbox: b.bbox,
            });
        }
    }
    Ok(out)
}

/// One annotated box per line: `{"image": .., "cls": .., "xyxy": [..]}`.
pub fn parse_ground_truth<R: BufRead>(reader: R) -> Result<Vec<GroundTruthBox>, IngestError> {
    let mut out = Vec::new();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        out.push(serde_json::from_str(&text).map_err(|e| json_error(line, e))?);
    }
    Ok(out)
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = w * h;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// Greedy confidence-ranked matching for a single category.
///
/// Ties in confidence keep input order. Each ground truth can be consumed by
/// at most one detection.
pub fn match_detections(
    dets: &[ScoredDetection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Vec<RankedMatch> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));

    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_image.entry(g.image_id.as_str()).or_default().push(i);
    }
    let mut used = vec![false; gts.len()];

    order
        .into_iter()
        .map(|di| {
            let d = &dets[di];
            let best = by_image
                .get(d.image_id.as_str())
                .into_iter()
                .flatten()
                .filter(|&&gi| !used[gi])
                .map(|&gi| (gi, iou(&d.bbox, &gts[gi].bbox)))
                .fold(None::<(usize, f64)>, |acc, (gi, v)| match acc {
                    Some((_, best)) if best >= v => acc,
                    _ => Some((gi, v)),
                });
            let flag = match best {
                Some((gi, v)) if v >= iou_threshold => {
                    used[gi] = true;
                    MatchFlag::TruePositive
                }
                _ => MatchFlag::FalsePositive,
            };
            RankedMatch {
                det_index: di,
                confidence: d.confidence,
                flag,
            }
        })
        .collect()
}

/// Cumulative precision and recall after each ranked detection.
pub fn pr_curve(matches: &[RankedMatch], n_gt: usize) -> Vec<PrPoint> {
    let mut tp = 0usize;
    matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if m.flag == MatchFlag::TruePositive {
                tp += 1;
            }
            PrPoint {
                confidence_threshold: m.confidence,
                precision: tp as f64 / (i + 1) as f64,
                recall: (n_gt > 0).then(|| tp as f64 / n_gt as f64),
            }
        })
        .collect()
}

pub fn average_precision(curve: &[PrPoint], variant: ApVariant) -> f64 {
    if curve.is_empty() || curve[0].recall.is_none() {
        return 0.0;
    }
    let recall: Vec<f64> = curve.iter().map(|p| p.recall.unwrap_or(0.0)).collect();
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    match variant {
        ApVariant::AllPoint => {
            let mut prev = 0.0;
            let mut ap = 0.0;
            for (r, p) in recall.iter().zip(&envelope) {
                ap += p * (r - prev);
                prev = *r;
            }
            ap
        }
        ApVariant::ElevenPoint => sampled(&recall, &envelope, 11),
        ApVariant::HundredOnePoint => sampled(&recall, &envelope, 101),
    }
}

fn sampled(recall: &[f64], envelope: &[f64], n: usize) -> f64 {
    let total: f64 = (0..n)
        .map(|k| {
            let r = k as f64 / (n - 1) as f64;
            // recall is non-decreasing, so the first index reaching r carries the envelope max
            let idx = recall.partition_point(|&x| x < r - 1e-12);
            envelope.get(idx).copied().unwrap_or(0.0)
        })
        .sum();
    total / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub per_category_ap: BTreeMap<Category, f64>,
    pub n_gt: BTreeMap<Category, usize>,
    pub n_det: BTreeMap<Category, usize>,
    pub map: f64,
    pub iou_threshold: f64,
    pub variant: ApVariant,
}

pub fn mean_average_precision(
    dets: &[ScoredDetection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
    variant: ApVariant,
) -> Result<MetricsSummary, MetricsError> {
    if gts.is_empty() {
        return Err(MetricsError::NoGroundTruth);
    }
    let mut per_category_ap = BTreeMap::new();
    let mut n_gt = BTreeMap::new();
    let mut n_det = BTreeMap::new();
    for cat in Category::ALL {
        let cat_dets: Vec<ScoredDetection> =
            dets.iter().filter(|d| d.category == cat).cloned().collect();
        let cat_gts: Vec<GroundTruthBox> =
            gts.iter().filter(|g| g.category == cat).cloned().collect();
        n_gt.insert(cat, cat_gts.len());
        n_det.insert(cat, cat_dets.len());
        if cat_gts.is_empty() {
            continue;
        }
        let matches = match_detections(&cat_dets, &cat_gts, iou_threshold);
        let curve = pr_curve(&matches, cat_gts.len());
        per_category_ap.insert(cat, average_precision(&curve, variant));
    }
    let map = per_category_ap.values().sum::<f64>() / per_category_ap.len() as f64;
    Ok(MetricsSummary {
        per_category_ap,
        n_gt,
        n_det,
        map,
        iou_threshold,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(img: &str, conf: f64, b: BBox) -> ScoredDetection {
        ScoredDetection { image_id: img.into(), category: Category::HeadUp, confidence: conf, bbox: b }
    }

    fn gt(img: &str, b: BBox) -> GroundTruthBox {
        GroundTruthBox { image_id: img.into(), category: Category::HeadUp, bbox: b }
    }

    fn flags(m: &[RankedMatch]) -> Vec<MatchFlag> {
        m.iter().map(|m| m.flag).collect()
    }

    use MatchFlag::{FalsePositive as FP, TruePositive as TP};

    #[test]
    fn iou_cases() {
        let a = bb(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(2.0, 2.0, 3.0, 3.0)), 0.0);
        assert!((iou(&a, &bb(0.5, 0.0, 1.5, 1.0)) - 1.0 / 3.0).abs() < 1e-12);
        // touching edges share no area
        assert_eq!(iou(&a, &bb(1.0, 0.0, 2.0, 1.0)), 0.0);
    }

    #[test]
    fn matching_cases() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(flags(&match_detections(&[det("a", 0.9, b)], &[gt("a", b)], 0.5)), vec![TP]);
        let m = match_detections(&[det("a", 0.8, b), det("a", 0.9, b)], &[gt("a", b)], 0.5);
        assert_eq!(flags(&m), vec![TP, FP]);
        assert_eq!(m[0].det_index, 1);
        assert_eq!(flags(&match_detections(&[det("A", 0.9, b)], &[gt("B", b)], 0.5)), vec![FP]);
    }

    #[test]
    fn ties_keep_input_order() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[det("a", 0.5, b), det("a", 0.5, b)], &[gt("a", b)], 0.5);
        assert_eq!(m[0].det_index, 0);
        assert_eq!(flags(&m), vec![TP, FP]);
    }

    fn ranked(fs: &[MatchFlag]) -> Vec<RankedMatch> {
        fs.iter()
            .enumerate()
            .map(|(i, &flag)| RankedMatch { det_index: i, confidence: 1.0 - i as f64 * 0.1, flag })
            .collect()
    }

    #[test]
    fn pr_curve_cases() {
        let c = pr_curve(&ranked(&[TP]), 1);
        assert_eq!((c[0].precision, c[0].recall), (1.0, Some(1.0)));
        let c = pr_curve(&ranked(&[TP, FP]), 2);
        assert_eq!(
            c.iter().map(|p| (p.precision, p.recall.unwrap())).collect::<Vec<_>>(),
            vec![(1.0, 0.5), (0.5, 0.5)]
        );
        assert!(pr_curve(&[], 3).is_empty());
        let c = pr_curve(&ranked(&[FP, FP]), 0);
        assert!(c.iter().all(|p| p.recall.is_none() && p.precision == 0.0));
    }

    #[test]
    fn ap_cases() {
        assert_eq!(average_precision(&pr_curve(&ranked(&[TP]), 1), ApVariant::AllPoint), 1.0);
        assert_eq!(average_precision(&pr_curve(&[], 4), ApVariant::AllPoint), 0.0);
        let ap = average_precision(&pr_curve(&ranked(&[TP, FP, TP]), 2), ApVariant::AllPoint);
        assert!((ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-12);
        assert!((ap - 0.8333).abs() < 5e-5);
    }

    #[test]
    fn sampled_variants() {
        let c = pr_curve(&ranked(&[TP]), 1);
        assert_eq!(average_precision(&c, ApVariant::ElevenPoint), 1.0);
        assert_eq!(average_precision(&c, ApVariant::HundredOnePoint), 1.0);
        // recall reaches 0.5 with precision 1, never more
        let c = pr_curve(&ranked(&[TP]), 2);
        assert!((average_precision(&c, ApVariant::ElevenPoint) - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn map_perfect_and_empty() {
        let b1 = bb(0.0, 0.0, 10.0, 10.0);
        let b2 = bb(20.0, 0.0, 30.0, 10.0);
        let gts = vec![
            gt("a", b1),
            GroundTruthBox { image_id: "a".into(), category: Category::HeadDown, bbox: b2 },
        ];
        let dets = vec![
            det("a", 0.9, b1),
            ScoredDetection { image_id: "a".into(), category: Category::HeadDown, confidence: 0.7, bbox: b2 },
        ];
        let s = mean_average_precision(&dets, &gts, 0.5, ApVariant::AllPoint).unwrap();
        assert_eq!(s.map, 1.0);
        let s = mean_average_precision(&[], &gts, 0.5, ApVariant::AllPoint).unwrap();
        assert_eq!(s.map, 0.0);
        assert_eq!(
            mean_average_precision(&dets, &[], 0.5, ApVariant::AllPoint),
            Err(MetricsError::NoGroundTruth)
        );
    }

    #[test]
    fn categories_without_gt_excluded() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let dets = vec![
            det("a", 0.9, b),
            ScoredDetection { image_id: "a".into(), category: Category::HeadDown, confidence: 0.7, bbox: b },
        ];
        let s = mean_average_precision(&dets, &[gt("a", b)], 0.5, ApVariant::AllPoint).unwrap();
        assert_eq!(s.per_category_ap.len(), 1);
        assert_eq!(s.map, 1.0);
    }
}
