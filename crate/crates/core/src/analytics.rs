//! Head-up rate statistics and timeline structure.
//!
//! Per-recognition rates are averaged into a per-minute series, gaps are
//! filled, and the series is then split two ways: into High/Medium/Low stage
//! intervals that partition the session, and into change points where the
//! windowed mean jumps by at least `delta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{minute_count, Category, DetectionFrame};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("frame at t={0} has no boxes")]
    EmptyFrame(f64),
    #[error("participants must be at least 1")]
    NoParticipants,
    #[error("no non-empty frames")]
    NoNonEmptyFrames,
    #[error("series has no observed minute")]
    AllMissing,
    #[error("series is empty")]
    EmptySeries,
    #[error("series has a missing minute at index {0}; interpolate first")]
    NotGapless(usize),
    #[error("series of length {len} is shorter than 2 × window ({window})")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid analytics config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// `up / (up + down)` per recognition.
    #[default]
    UpPlusDown,
    /// `up / participants`, clamped to 1.
    Participants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    pub denominator_mode: DenominatorMode,
    pub high_threshold: f64,
    pub low_threshold: f64,
    pub window_w: usize,
    pub delta: f64,
    pub contrast_k: usize,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            denominator_mode: DenominatorMode::UpPlusDown,
            high_threshold: 0.65,
            low_threshold: 0.45,
            window_w: 2,
            delta: 0.15,
            contrast_k: 3,
        }
    }
}

impl AnalyticsConfig {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |m: &str| Err(AnalyticsError::InvalidConfig(m.to_string()));
        if !(0.0 < self.low_threshold
            && self.low_threshold < self.high_threshold
            && self.high_threshold < 1.0)
        {
            return bad("thresholds must satisfy 0 < low < high < 1");
        }
        if self.window_w < 1 {
            return bad("window_w must be ≥ 1");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be > 0");
        }
        if self.contrast_k < 1 {
            return bad("contrast_k must be ≥ 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecognitionRate {
    pub timestamp_s: f64,
    pub up_count: u32,
    pub down_count: u32,
    pub rate: f64,
}

/// Head-up rate of one recognition result.
pub fn frame_rate(
    frame: &DetectionFrame,
    mode: DenominatorMode,
    participants: u32,
) -> Result<RecognitionRate, AnalyticsError> {
    let up = frame.count(Category::HeadUp) as u32;
    let down = frame.count(Category::HeadDown) as u32;
    if up + down == 0 {
        return Err(AnalyticsError::EmptyFrame(frame.timestamp_s));
    }
    let rate = match mode {
        DenominatorMode::UpPlusDown => up as f64 / (up + down) as f64,
        DenominatorMode::Participants => {
            if participants == 0 {
                return Err(AnalyticsError::NoParticipants);
            }
            (up as f64 / participants as f64).min(1.0)
        }
    };
    Ok(RecognitionRate {
        timestamp_s: frame.timestamp_s,
        up_count: up,
        down_count: down,
        rate,
    })
}

/// Rates for every non-empty frame, plus the timestamps of dropped empty frames.
pub fn recognition_rates(
    frames: &[DetectionFrame],
    mode: DenominatorMode,
    participants: u32,
) -> Result<(Vec<RecognitionRate>, Vec<f64>), AnalyticsError> {
    let mut rates = Vec::with_capacity(frames.len());
    let mut dropped = Vec::new();
    for f in frames {
        match frame_rate(f, mode, participants) {
            Ok(r) => rates.push(r),
            Err(AnalyticsError::EmptyFrame(t)) => dropped.push(t),
            Err(e) => return Err(e),
        }
    }
    Ok((rates, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteRate {
    pub minute_index: usize,
    /// `None` marks a minute with no observations.
    pub rate: Option<f64>,
    pub up_avg: Option<f64>,
    pub down_avg: Option<f64>,
    pub n_frames: usize,
    pub interpolated: bool,
}

impl MinuteRate {
    fn missing(minute_index: usize) -> Self {
        Self {
            minute_index,
            rate: None,
            up_avg: None,
            down_avg: None,
            n_frames: 0,
            interpolated: false,
        }
    }
}

/// Averages recognition rates into half-open minute buckets `[60m, 60(m+1))`.
///
/// A rate stamped exactly at the session end falls into the last minute.
pub fn minute_series(rates: &[RecognitionRate], duration_s: f64) -> Vec<MinuteRate> {
    let len = minute_count(duration_s);
    let mut sums = vec![(0.0f64, 0u64, 0u64, 0usize); len];
    for r in rates {
        if len == 0 {
            break;
        }
        let m = ((r.timestamp_s / 60.0).floor() as usize).min(len - 1);
        let slot = &mut sums[m];
        slot.0 += r.rate;
        slot.1 += r.up_count as u64;
        slot.2 += r.down_count as u64;
        slot.3 += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(m, (rate_sum, up, down, n))| {
            if n == 0 {
                MinuteRate::missing(m)
            } else {
                let nf = n as f64;
                MinuteRate {
                    minute_index: m,
                    rate: Some(rate_sum / nf),
                    up_avg: Some(up as f64 / nf),
                    down_avg: Some(down as f64 / nf),
                    n_frames: n,
                    interpolated: false,
                }
            }
        })
        .collect()
}

/// Fills missing minutes by linear interpolation between observed neighbours;
/// leading and trailing gaps take the nearest observed value.
pub fn interpolate_missing(series: &[MinuteRate]) -> Result<Vec<MinuteRate>, AnalyticsError> {
    let observed: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.rate.map(|r| (i, r)))
        .collect();
    if observed.is_empty() {
        return Err(AnalyticsError::AllMissing);
    }
    let mut out = series.to_vec();
    let mut next = 0usize; // index into `observed` of the first observation at or after i
    for (i, m) in out.iter_mut().enumerate() {
        while next < observed.len() && observed[next].0 < i {
            next += 1;
        }
        if m.rate.is_some() {
            continue;
        }
        let left = next.checked_sub(1).map(|j| observed[j]);
        let right = observed.get(next).copied();
        let value = match (left, right) {
            (Some((li, lv)), Some((ri, rv))) => {
                lv + (rv - lv) * (i - li) as f64 / (ri - li) as f64
            }
            (Some((_, v)), None) | (None, Some((_, v))) => v,
            (None, None) => unreachable!("observed is non-empty"),
        };
        m.rate = Some(value);
        m.interpolated = true;
    }
    Ok(out)
}

/// Largest number of students seen in a single recognition.
pub fn estimate_participants(frames: &[DetectionFrame]) -> Result<u32, AnalyticsError> {
    frames
        .iter()
        .map(|f| f.boxes.len() as u32)
        .filter(|&n| n > 0)
        .max()
        .ok_or(AnalyticsError::NoNonEmptyFrames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub participants: u32,
    pub avg_up_per_min: f64,
    pub avg_down_per_min: f64,
    /// `None` when no student was ever seen with the head down.
    pub up_down_ratio: Option<f64>,
    pub duration_min: usize,
}

impl SessionStats {
    /// Ratio rounded to two decimals, as shown in reports.
    pub fn reported_ratio(&self) -> Option<f64> {
        self.up_down_ratio.map(|r| (r * 100.0).round() / 100.0)
    }

    pub fn ratio_display(&self) -> String {
        match self.up_down_ratio {
            Some(r) => format!("{r:.2}"),
            None => "n/a".to_string(),
        }
    }
}

pub fn session_stats(
    series: &[MinuteRate],
    participants: u32,
) -> Result<SessionStats, AnalyticsError> {
    if participants == 0 {
        return Err(AnalyticsError::NoParticipants);
    }
    let observed: Vec<(f64, f64)> = series
        .iter()
        .filter(|m| m.n_frames > 0)
        .filter_map(|m| Some((m.up_avg?, m.down_avg?)))
        .collect();
    if observed.is_empty() {
        return Err(AnalyticsError::AllMissing);
    }
    let n = observed.len() as f64;
    let avg_up = observed.iter().map(|o| o.0).sum::<f64>() / n;
    let avg_down = observed.iter().map(|o| o.1).sum::<f64>() / n;
    Ok(SessionStats {
        participants,
        avg_up_per_min: avg_up,
        avg_down_per_min: avg_down,
        up_down_ratio: (avg_down > 0.0).then(|| avg_up / avg_down),
        duration_min: series.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    High,
    Medium,
    Low,
}

impl Stage {
    pub fn classify(rate: f64, cfg: &AnalyticsConfig) -> Stage {
        if rate >= cfg.high_threshold {
            Stage::High
        } else if rate < cfg.low_threshold {
            Stage::Low
        } else {
            Stage::Medium
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::High => "high",
            Stage::Medium => "medium",
            Stage::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageInterval {
    pub start_min: usize,
    pub end_min: usize,
    pub stage: Stage,
    pub mean_rate: f64,
}

impl StageInterval {
    pub fn len(&self) -> usize {
        self.end_min - self.start_min
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn gapless_rates(series: &[MinuteRate]) -> Result<Vec<f64>, AnalyticsError> {
    if series.is_empty() {
        return Err(AnalyticsError::EmptySeries);
    }
    series
        .iter()
        .enumerate()
        .map(|(i, m)| m.rate.ok_or(AnalyticsError::NotGapless(i)))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Splits the timeline into High/Medium/Low stages.
///
/// Minutes are classified pointwise, merged into maximal runs, and then the
/// shortest run below `window_w` minutes is repeatedly absorbed (length ties
/// go to interior runs before edge runs, then to the earliest) into whichever neighbour has the closer mean rate (left on ties).
pub fn segment_stages(
    series: &[MinuteRate],
    cfg: &AnalyticsConfig,
) -> Result<Vec<StageInterval>, AnalyticsError> {
    let rates = gapless_rates(series)?;

    struct Run {
        start: usize,
        end: usize,
        stage: Stage,
    }

    let mut runs: Vec<Run> = Vec::new();
    for (i, &r) in rates.iter().enumerate() {
        let stage = Stage::classify(r, cfg);
        match runs.last_mut() {
            Some(last) if last.stage == stage => last.end = i + 1,
            _ => runs.push(Run { start: i, end: i + 1, stage }),
        }
    }

    let run_mean = |run: &Run| mean(&rates[run.start..run.end]);

    loop {
        if runs.len() < 2 {
            break;
        }
        let Some(idx) = runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.end - r.start < cfg.window_w)
            .min_by_key(|(i, r)| {
                let edge = *i == 0 || *i + 1 == runs.len();
                (r.end - r.start, edge, *i)
            })
            .map(|(i, _)| i)
        else {
            break;
        };

        let own = run_mean(&runs[idx]);
        let into_left = match (idx.checked_sub(1), runs.get(idx + 1)) {
            (Some(l), Some(right)) => {
                (own - run_mean(&runs[l])).abs() <= (own - run_mean(right)).abs()
            }
            (Some(_), None) => true,
            (None, _) => false,
        };

        let absorbed = runs.remove(idx);
        // After removal the right neighbour sits at `idx`.
        let target = if into_left { idx - 1 } else { idx };
        if into_left {
            runs[target].end = absorbed.end;
        } else {
            runs[target].start = absorbed.start;
        }
        // The absorbed run may have separated two runs of the same stage.
        if target + 1 < runs.len() && runs[target + 1].stage == runs[target].stage {
            let next = runs.remove(target + 1);
            runs[target].end = next.end;
        }
        if target > 0 && runs[target - 1].stage == runs[target].stage {
            let cur = runs.remove(target);
            runs[target - 1].end = cur.end;
        }
    }

    Ok(runs
        .iter()
        .map(|r| StageInterval {
            start_min: r.start,
            end_min: r.end,
            stage: r.stage,
            mean_rate: run_mean(r),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub minute: usize,
    pub direction: Direction,
    pub magnitude: f64,
}

/// Windowed mean difference `mean(rates[t..t+w]) - mean(rates[t-w..t])`.
pub fn window_difference(rates: &[f64], t: usize, w: usize) -> f64 {
    mean(&rates[t..t + w]) - mean(&rates[t - w..t])
}

/// Marks minutes where the head-up rate jumps by at least `delta`.
///
/// Every minute `t` with `w ≤ t ≤ len − w` is scored; candidates are accepted
/// greedily by descending `|d|` (earlier minute on ties) and anything closer
/// than `w` minutes to an accepted point is suppressed.
pub fn detect_change_points(
    series: &[MinuteRate],
    cfg: &AnalyticsConfig,
) -> Result<Vec<ChangePoint>, AnalyticsError> {
    let w = cfg.window_w.max(1);
    if series.len() < 2 * w {
        return Err(AnalyticsError::SeriesTooShort {
            len: series.len(),
            window: w,
        });
    }
    let rates = gapless_rates(series)?;

    let mut candidates: Vec<(usize, f64)> = (w..=rates.len() - w)
        .map(|t| (t, window_difference(&rates, t, w)))
        .filter(|(_, d)| d.abs() >= cfg.delta)
        .collect();
    candidates.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));

    let mut accepted: Vec<(usize, f64)> = Vec::new();
    for (t, d) in candidates {
        if accepted.iter().all(|&(s, _)| t.abs_diff(s) >= w) {
            accepted.push((t, d));
        }
    }
    accepted.sort_by_key(|&(t, _)| t);

    Ok(accepted
        .into_iter()
        .map(|(minute, d)| ChangePoint {
            minute,
            direction: if d > 0.0 {
                Direction::Increase
            } else {
                Direction::Decrease
            },
            magnitude: d.abs(),
        })
        .collect())
}

/// Builds an observed series directly from per-minute rates (testing and demos).
pub fn series_from_rates(rates: &[f64]) -> Vec<MinuteRate> {
    rates
        .iter()
        .enumerate()
        .map(|(i, &r)| MinuteRate {
            minute_index: i,
            rate: Some(r),
            up_avg: None,
            down_avg: None,
            n_frames: 1,
            interpolated: false,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BBox, DetectionBox};

    fn frame(t: f64, up: usize, down: usize) -> DetectionFrame {
        let bx = |c| DetectionBox {
            category: c,
            confidence: 0.8,
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
        };
        let mut boxes: Vec<_> = (0..up).map(|_| bx(Category::HeadUp)).collect();
        boxes.extend((0..down).map(|_| bx(Category::HeadDown)));
        DetectionFrame { timestamp_s: t, boxes }
    }

    fn rate_at(t: f64, rate: f64) -> RecognitionRate {
        RecognitionRate { timestamp_s: t, up_count: 1, down_count: 1, rate }
    }

    fn cfg() -> AnalyticsConfig {
        AnalyticsConfig::default()
    }

    #[test]
    fn frame_rate_modes() {
        let f = frame(0.0, 19, 16);
        let r = frame_rate(&f, DenominatorMode::UpPlusDown, 0).unwrap();
        assert!((r.rate - 19.0 / 35.0).abs() < 1e-12);
        assert!((r.rate - 0.5429).abs() < 5e-5);

        let r = frame_rate(&frame(0.0, 10, 0), DenominatorMode::UpPlusDown, 0).unwrap();
        assert_eq!(r.rate, 1.0);

        let r = frame_rate(&f, DenominatorMode::Participants, 35).unwrap();
        assert!((r.rate - 0.5429).abs() < 5e-5);
        let r = frame_rate(&f, DenominatorMode::Participants, 40).unwrap();
        assert!((r.rate - 0.475).abs() < 1e-12);

        let r = frame_rate(&frame(0.0, 50, 0), DenominatorMode::Participants, 40).unwrap();
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn frame_rate_empty_frame() {
        assert_eq!(
            frame_rate(&frame(3.0, 0, 0), DenominatorMode::UpPlusDown, 1),
            Err(AnalyticsError::EmptyFrame(3.0))
        );
        assert_eq!(
            frame_rate(&frame(3.0, 1, 0), DenominatorMode::Participants, 0),
            Err(AnalyticsError::NoParticipants)
        );
    }

    #[test]
    fn minute_series_mean() {
        let s = minute_series(&[rate_at(0.0, 0.5), rate_at(30.0, 0.7)], 60.0);
        assert_eq!(s.len(), 1);
        assert!((s[0].rate.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(s[0].n_frames, 2);
    }

    #[test]
    fn minute_series_gap() {
        let rates: Vec<_> = [0.0, 70.0, 130.0, 250.0]
            .iter()
            .map(|&t| rate_at(t, 0.5))
            .collect();
        let s = minute_series(&rates, 300.0);
        assert_eq!(s.len(), 5);
        assert!(s[3].rate.is_none());
        assert_eq!(s[3].n_frames, 0);
        assert!(!s[3].interpolated);
    }

    #[test]
    fn minute_series_half_open_boundary() {
        let s = minute_series(&[rate_at(60.0, 0.5)], 120.0);
        assert_eq!(s[0].n_frames, 0);
        assert_eq!(s[1].n_frames, 1);
    }

    #[test]
    fn minute_series_end_of_session_goes_to_last_minute() {
        let s = minute_series(&[rate_at(120.0, 0.5)], 120.0);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].n_frames, 1);
    }

    #[test]
    fn minute_series_empty_input() {
        let s = minute_series(&[], 150.0);
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|m| m.rate.is_none()));
    }

    fn with_gaps(rates: &[Option<f64>]) -> Vec<MinuteRate> {
        rates
            .iter()
            .enumerate()
            .map(|(i, r)| match r {
                Some(v) => series_from_rates(&[*v]).remove(0).with_index(i),
                None => MinuteRate::missing(i),
            })
            .collect()
    }

    impl MinuteRate {
        fn with_index(mut self, i: usize) -> Self {
            self.minute_index = i;
            self
        }
    }

    #[test]
    fn interpolate_midpoint() {
        let out = interpolate_missing(&with_gaps(&[Some(0.4), None, Some(0.8)])).unwrap();
        let rates: Vec<f64> = out.iter().map(|m| m.rate.unwrap()).collect();
        assert!((rates[1] - 0.6).abs() < 1e-12);
        assert_eq!(
            out.iter().map(|m| m.interpolated).collect::<Vec<_>>(),
            vec![false, true, false]
        );
        assert!(out[1].up_avg.is_none());
    }

    #[test]
    fn interpolate_edges() {
        let out = interpolate_missing(&with_gaps(&[None, Some(0.5)])).unwrap();
        assert_eq!(out[0].rate, Some(0.5));
        assert!(out[0].interpolated);
        let out = interpolate_missing(&with_gaps(&[Some(0.3), None, None])).unwrap();
        assert_eq!(out[2].rate, Some(0.3));
    }

    #[test]
    fn interpolate_identity_and_all_missing() {
        let s = series_from_rates(&[0.1, 0.2]);
        assert_eq!(interpolate_missing(&s).unwrap(), s);
        assert_eq!(
            interpolate_missing(&with_gaps(&[None, None])),
            Err(AnalyticsError::AllMissing)
        );
    }

    #[test]
    fn participants_is_max_total() {
        let frames: Vec<_> = [33, 35, 34].iter().map(|&n| frame(0.0, n, 0)).collect();
        assert_eq!(estimate_participants(&frames), Ok(35));
        assert_eq!(estimate_participants(&[frame(0.0, 7, 5)]), Ok(12));
        let frames: Vec<_> = (0..3).map(|_| frame(0.0, 4, 6)).collect();
        assert_eq!(estimate_participants(&frames), Ok(10));
        assert_eq!(
            estimate_participants(&[frame(0.0, 0, 0)]),
            Err(AnalyticsError::NoNonEmptyFrames)
        );
    }

    fn count_series(ups: &[f64], downs: &[f64]) -> Vec<MinuteRate> {
        ups.iter()
            .zip(downs)
            .enumerate()
            .map(|(i, (&u, &d))| MinuteRate {
                minute_index: i,
                rate: Some(u / (u + d)),
                up_avg: Some(u),
                down_avg: Some(d),
                n_frames: 1,
                interpolated: false,
            })
            .collect()
    }

    #[test]
    fn stats_classroom_averages() {
        let s = session_stats(&count_series(&[19.39; 40], &[13.87; 40]), 35).unwrap();
        assert_eq!(s.reported_ratio(), Some(1.40));
        assert_eq!(s.ratio_display(), "1.40");
        assert!((s.up_down_ratio.unwrap() - 1.3980).abs() < 1e-4);
    }

    #[test]
    fn stats_arithmetic() {
        let s = session_stats(&count_series(&[20.0, 18.0], &[14.0, 14.0]), 35).unwrap();
        assert_eq!(s.avg_up_per_min, 19.0);
        assert_eq!(s.avg_down_per_min, 14.0);
        assert_eq!(s.reported_ratio(), Some(1.36));
        assert_eq!(s.duration_min, 2);
    }

    #[test]
    fn stats_undefined_ratio() {
        let s = session_stats(&count_series(&[5.0, 6.0], &[0.0, 0.0]), 6).unwrap();
        assert_eq!(s.up_down_ratio, None);
        assert_eq!(s.ratio_display(), "n/a");
    }

    #[test]
    fn stages_three_bands() {
        let mut rates = vec![0.8; 5];
        rates.extend([0.55; 5]);
        rates.extend([0.3; 5]);
        let out = segment_stages(&series_from_rates(&rates), &cfg()).unwrap();
        let spans: Vec<_> = out.iter().map(|i| (i.start_min, i.end_min, i.stage)).collect();
        assert_eq!(
            spans,
            vec![(0, 5, Stage::High), (5, 10, Stage::Medium), (10, 15, Stage::Low)]
        );
    }

    #[test]
    fn stages_constant_plateau() {
        let out = segment_stages(&series_from_rates(&[0.55; 40]), &cfg()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].start_min, out[0].end_min, out[0].stage), (0, 40, Stage::Medium));
    }

    #[test]
    fn stages_flicker_absorbed() {
        let out = segment_stages(&series_from_rates(&[0.8, 0.4, 0.8, 0.8]), &cfg()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].start_min, out[0].end_min, out[0].stage), (0, 4, Stage::High));
        assert!((out[0].mean_rate - 0.7).abs() < 1e-12);
    }

    #[test]
    fn stages_errors() {
        assert_eq!(segment_stages(&[], &cfg()), Err(AnalyticsError::EmptySeries));
        let s = with_gaps(&[Some(0.5), None]);
        assert_eq!(segment_stages(&s, &cfg()), Err(AnalyticsError::NotGapless(1)));
    }

    #[test]
    fn change_point_single_step() {
        let mut rates = vec![0.3; 11];
        rates.extend([0.8; 10]);
        let pts = detect_change_points(&series_from_rates(&rates), &cfg()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].minute, 11);
        assert_eq!(pts[0].direction, Direction::Increase);
        assert!((pts[0].magnitude - 0.5).abs() < 1e-12);
    }

    #[test]
    fn change_point_constant_and_short() {
        assert!(detect_change_points(&series_from_rates(&[0.5; 20]), &cfg())
            .unwrap()
            .is_empty());
        assert_eq!(
            detect_change_points(&series_from_rates(&[0.5; 3]), &cfg()),
            Err(AnalyticsError::SeriesTooShort { len: 3, window: 2 })
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.low_threshold = 0.7;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.window_w = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.delta = 0.0;
        assert!(c.validate().is_err());
    }
}
