//! Day segmentation: motion-score shot detection and uniform sampling.
//!
//! The motion score between two frames is the mean absolute luma
//! difference of 32×32 box-averaged thumbnails, scaled to `[0, 1]`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{DayLog, LifelogStore, Raster};

/// Side length of the luma thumbnail compared by [`motion_score`].
pub const THUMB: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentMethod {
    Shot,
    Uniform,
}

impl SegmentMethod {
    pub const ALL: [SegmentMethod; 2] = [SegmentMethod::Shot, SegmentMethod::Uniform];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentMethod::Shot => "shot",
            SegmentMethod::Uniform => "uniform",
        }
    }
}

impl fmt::Display for SegmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "shot" => Ok(SegmentMethod::Shot),
            "uniform" => Ok(SegmentMethod::Uniform),
            other => Err(format!("unknown segmentation method `{other}` (expected shot or uniform)")),
        }
    }
}

/// A contiguous frame range `[start, end]` of one day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub segment_id: u64,
    /// Day ordinal in the store.
    #[serde(skip)]
    pub day: u32,
    pub day_id: String,
    pub start: u32,
    pub end: u32,
    pub keyframe: u32,
    pub method: SegmentMethod,
}

impl Segment {
    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: u32) -> bool {
        (self.start..=self.end).contains(&index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    /// Motion score a frame pair must exceed to open a new shot.
    pub theta: f64,
    /// Frames an open shot needs before it may be closed.
    pub min_len: usize,
    /// Frames per uniform segment.
    pub uniform_rate: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self { theta: 0.3, min_len: 3, uniform_rate: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("day {0} has no frames")]
    EmptyDay(String),
    #[error("uniform rate must be at least 1 (got {0})")]
    BadRate(usize),
    #[error("invalid segmentation config: {0}")]
    BadConfig(String),
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(SegmentError::BadConfig(format!("theta {} must be a finite non-negative number", self.theta)));
        }
        if self.min_len < 1 {
            return Err(SegmentError::BadConfig("min_len must be at least 1".into()));
        }
        if self.uniform_rate < 1 {
            return Err(SegmentError::BadRate(self.uniform_rate));
        }
        Ok(())
    }
}

/// Box-averaged 32×32 luma thumbnail (Y = (299R + 587G + 114B) / 1000).
pub fn luma_thumbnail(r: &Raster) -> Vec<f64> {
    let (w, h) = (r.width(), r.height());
    let luma: Vec<f64> = r
        .pixels()
        .map(|[red, g, b]| (299.0 * f64::from(red) + 587.0 * f64::from(g) + 114.0 * f64::from(b)) / 1000.0)
        .collect();
    // each output cell averages at least one source pixel, so this also upsamples
    let span = |i: usize, len: usize| {
        let lo = i * len / THUMB;
        let hi = ((i + 1) * len / THUMB).max(lo + 1);
        (lo, hi)
    };
    let mut out = vec![0.0; THUMB * THUMB];
    for ty in 0..THUMB {
        let (y0, y1) = span(ty, h);
        for tx in 0..THUMB {
            let (x0, x1) = span(tx, w);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += luma[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            out[ty * THUMB + tx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    out
}

fn thumb_distance(a: &[f64], b: &[f64]) -> f64 {
    let mad = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    (mad / 255.0).clamp(0.0, 1.0)
}

/// Visual change between two frames, in `[0, 1]`.
pub fn motion_score(a: &Raster, b: &Raster) -> f64 {
    thumb_distance(&luma_thumbnail(a), &luma_thumbnail(b))
}

/// Motion scores of consecutive frame pairs: entry `i` compares frames `i`
/// and `i + 1`.
pub fn day_motion_profile(day: &DayLog) -> Vec<f64> {
    let mut out = Vec::with_capacity(day.frames.len().saturating_sub(1));
    let mut prev: Option<(&Arc<Raster>, Vec<f64>)> = None;
    for f in &day.frames {
        match &prev {
            // shared image file: identical content
            Some((p, _)) if Arc::ptr_eq(p, &f.raster) => out.push(0.0),
            Some((_, t)) => {
                let thumb = luma_thumbnail(&f.raster);
                out.push(thumb_distance(t, &thumb));
                prev = Some((&f.raster, thumb));
            }
            None => prev = Some((&f.raster, luma_thumbnail(&f.raster))),
        }
    }
    out
}

/// Middle frame of `[start, end]`.
pub fn select_keyframe(start: u32, end: u32) -> u32 {
    ((u64::from(start) + u64::from(end)) / 2) as u32
}

/// Shot spans from a pair-score profile (`scores.len() + 1` frames).
pub fn shot_spans(scores: &[f64], theta: f64, min_len: usize) -> Vec<(u32, u32)> {
    let n = scores.len() + 1;
    let mut spans = Vec::new();
    let mut open = 0usize;
    for i in 1..n {
        if scores[i - 1] > theta && i - open >= min_len {
            spans.push((open as u32, (i - 1) as u32));
            open = i;
        }
    }
    spans.push((open as u32, (n - 1) as u32));
    spans
}

/// Uniform spans of `rate` frames; the last holds the remainder.
pub fn uniform_spans(n: usize, rate: usize) -> Vec<(u32, u32)> {
    (0..n).step_by(rate.max(1)).map(|s| (s as u32, ((s + rate).min(n) - 1) as u32)).collect()
}

fn to_segments(day: &DayLog, day_ordinal: u32, spans: Vec<(u32, u32)>, method: SegmentMethod) -> Vec<Segment> {
    spans
        .into_iter()
        .enumerate()
        .map(|(i, (start, end))| Segment {
            segment_id: i as u64,
            day: day_ordinal,
            day_id: day.day_id.clone(),
            start,
            end,
            keyframe: select_keyframe(start, end),
            method,
        })
        .collect()
}

/// Shot segments of one day. Segment ids are day-local ordinals.
pub fn detect_shots(day: &DayLog, cfg: &SegmentationConfig) -> Result<Vec<Segment>, SegmentError> {
    cfg.validate()?;
    if day.frames.is_empty() {
        return Err(SegmentError::EmptyDay(day.day_id.clone()));
    }
    let scores = day_motion_profile(day);
    Ok(to_segments(day, 0, shot_spans(&scores, cfg.theta, cfg.min_len), SegmentMethod::Shot))
}

/// Uniform segments of one day. Segment ids are day-local ordinals.
pub fn uniform_segments(day: &DayLog, rate: usize) -> Result<Vec<Segment>, SegmentError> {
    if rate < 1 {
        return Err(SegmentError::BadRate(rate));
    }
    if day.frames.is_empty() {
        return Err(SegmentError::EmptyDay(day.day_id.clone()));
    }
    Ok(to_segments(day, 0, uniform_spans(day.frames.len(), rate), SegmentMethod::Uniform))
}

/// All segments of one method across a store, ordered by (day, start),
/// with globally unique ids.
#[derive(Debug, Clone)]
pub struct SegmentTable {
    method: SegmentMethod,
    segments: Vec<Segment>,
    /// `day_start[d]..day_start[d + 1]` indexes the segments of day `d`.
    day_start: Vec<usize>,
    first_id: u64,
}

impl SegmentTable {
    fn from_days(method: SegmentMethod, per_day: Vec<Vec<(u32, u32)>>, store: &LifelogStore, first_id: u64) -> Self {
        let mut segments = Vec::new();
        let mut day_start = Vec::with_capacity(per_day.len() + 1);
        for (d, spans) in per_day.into_iter().enumerate() {
            day_start.push(segments.len());
            for mut seg in to_segments(store.day(d as u32), d as u32, spans, method) {
                seg.segment_id = first_id + segments.len() as u64;
                segments.push(seg);
            }
        }
        day_start.push(segments.len());
        Self { method, segments, day_start, first_id }
    }

    pub fn method(&self) -> SegmentMethod {
        self.method
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn day_segments(&self, day: u32) -> &[Segment] {
        &self.segments[self.day_start[day as usize]..self.day_start[day as usize + 1]]
    }

    /// Position of a segment id inside [`Self::segments`].
    pub fn position(&self, segment_id: u64) -> Option<usize> {
        let pos = segment_id.checked_sub(self.first_id)? as usize;
        (pos < self.segments.len()).then_some(pos)
    }

    pub fn get(&self, segment_id: u64) -> Option<&Segment> {
        self.position(segment_id).map(|p| &self.segments[p])
    }

    /// Table position of the segment containing a frame.
    pub fn position_of_frame(&self, day: u32, index: u32) -> Option<usize> {
        let lo = self.day_start[day as usize];
        let segs = self.day_segments(day);
        let i = segs.partition_point(|s| s.end < index);
        (i < segs.len() && segs[i].contains(index)).then_some(lo + i)
    }

    /// Writes `segment_id,day_id,start,end,keyframe` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["segment_id", "day_id", "start", "end", "keyframe"])?;
        for s in &self.segments {
            wr.write_record([
                s.segment_id.to_string(),
                s.day_id.clone(),
                s.start.to_string(),
                s.end.to_string(),
                s.keyframe.to_string(),
            ])?;
        }
        wr.flush()
    }

    /// Reads a table written by [`Self::write_csv`], checking it still
    /// partitions every day of `store`.
    pub fn read_csv<R: io::Read>(r: R, method: SegmentMethod, store: &LifelogStore) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Row {
            segment_id: u64,
            day_id: String,
            start: u32,
            end: u32,
            keyframe: u32,
        }
        let mut rows: Vec<Row> = csv::Reader::from_reader(r)
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e: csv::Error| e.to_string())?;
        rows.sort_by(|a, b| (&a.day_id, a.start).cmp(&(&b.day_id, b.start)));
        let first_id = rows.iter().map(|r| r.segment_id).min().unwrap_or(0);
        let mut segments = Vec::with_capacity(rows.len());
        let mut day_start = Vec::new();
        for (d, day) in store.days().iter().enumerate() {
            day_start.push(segments.len());
            let mut next = 0u32;
            for r in rows.iter().filter(|r| r.day_id == day.day_id) {
                if r.start != next || r.end < r.start || !(r.start..=r.end).contains(&r.keyframe) {
                    return Err(format!("segments of day {} do not partition its frames", day.day_id));
                }
                if r.segment_id != first_id + segments.len() as u64 {
                    return Err("segment ids are not dense in (day, start) order".into());
                }
                next = r.end + 1;
                segments.push(Segment {
                    segment_id: r.segment_id,
                    day: d as u32,
                    day_id: r.day_id.clone(),
                    start: r.start,
                    end: r.end,
                    keyframe: r.keyframe,
                    method,
                });
            }
            if next as usize != day.frames.len() {
                return Err(format!("segments of day {} do not cover all frames", day.day_id));
            }
        }
        day_start.push(segments.len());
        if segments.len() != rows.len() {
            return Err("rows reference unknown days".into());
        }
        Ok(Self { method, segments, day_start, first_id })
    }
}

/// Both segmentations of a store plus the per-day motion profiles they
/// were derived from. Shot ids come first, uniform ids continue after them.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub shot: SegmentTable,
    pub uniform: SegmentTable,
    /// `motion[d][i]` = motion score between frames `i` and `i + 1` of day `d`.
    pub motion: Vec<Vec<f64>>,
}

impl Segmentation {
    pub fn build(store: &LifelogStore, cfg: &SegmentationConfig) -> Result<Self, SegmentError> {
        cfg.validate()?;
        let motion: Vec<Vec<f64>> = store.days().par_iter().map(day_motion_profile).collect();
        let shot_spans: Vec<_> = motion.iter().map(|m| shot_spans(m, cfg.theta, cfg.min_len)).collect();
        let shot = SegmentTable::from_days(SegmentMethod::Shot, shot_spans, store, 0);
        let uni_spans = store.days().iter().map(|d| uniform_spans(d.frames.len(), cfg.uniform_rate)).collect();
        let uniform = SegmentTable::from_days(SegmentMethod::Uniform, uni_spans, store, shot.len() as u64);
        Ok(Self { shot, uniform, motion })
    }

    pub fn table(&self, method: SegmentMethod) -> &SegmentTable {
        match method {
            SegmentMethod::Shot => &self.shot,
            SegmentMethod::Uniform => &self.uniform,
        }
    }

    /// Finds a segment by id in either table.
    pub fn get(&self, segment_id: u64) -> Option<&Segment> {
        self.shot.get(segment_id).or_else(|| self.uniform.get(segment_id))
    }
}
