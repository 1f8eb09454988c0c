//! Scalar sort keys for feature maps.

use std::fmt;
use std::str::FromStr;

use crate::ingest::{LifelogStore, Raster};
use crate::segment::{motion_score, Segment};

use super::DescriptorError;

/// What a feature map is ordered by.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Color,
    Edge,
    Motion,
    Concept(String),
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Color => f.write_str("color"),
            Criterion::Edge => f.write_str("edge"),
            Criterion::Motion => f.write_str("motion"),
            Criterion::Concept(c) => write!(f, "concept:{c}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "color" => Ok(Criterion::Color),
            "edge" => Ok(Criterion::Edge),
            "motion" => Ok(Criterion::Motion),
            _ => match s.strip_prefix("concept:") {
                Some(c) if !c.is_empty() => Ok(Criterion::Concept(c.to_string())),
                _ => Err(format!("unknown criterion `{s}`")),
            },
        }
    }
}

/// Hue of the mean color in `[0, 1)`; achromatic means map to 0.
pub fn color_score(r: &Raster) -> f64 {
    let n = (r.width() * r.height()) as f64;
    let mut sum = [0.0f64; 3];
    for p in r.pixels() {
        for c in 0..3 {
            sum[c] += f64::from(p[c]);
        }
    }
    let [red, g, b] = sum.map(|s| s / n);
    let max = red.max(g).max(b);
    let min = red.min(g).min(b);
    let d = max - min;
    if d <= 0.0 {
        return 0.0;
    }
    let hue = if max == red {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - red) / d + 2.0)
    } else {
        60.0 * ((red - g) / d + 4.0)
    };
    (hue / 360.0).clamp(0.0, 1.0)
}

/// Mean absolute luma gradient: `(mean |dx| + mean |dy|) / (2 · 255)`.
/// Each mean runs over the pixel pairs that exist along its axis.
pub fn edge_score(r: &Raster) -> f64 {
    let (w, h) = (r.width(), r.height());
    let luma: Vec<f64> = r
        .pixels()
        .map(|[red, g, b]| (299.0 * f64::from(red) + 587.0 * f64::from(g) + 114.0 * f64::from(b)) / 1000.0)
        .collect();
    let mut dx = 0.0;
    let mut dy = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = luma[y * w + x];
            if x + 1 < w {
                dx += (luma[y * w + x + 1] - v).abs();
            }
            if y + 1 < h {
                dy += (luma[(y + 1) * w + x] - v).abs();
            }
        }
    }
    let mean = |s: f64, pairs: usize| if pairs == 0 { 0.0 } else { s / pairs as f64 };
    let total = mean(dx, (w - 1) * h) + mean(dy, w * (h - 1));
    (total / (2.0 * 255.0)).clamp(0.0, 1.0)
}

/// Mean of the pair scores inside a segment (0 for a single frame).
/// `day_profile[i]` compares frames `i` and `i + 1` of the segment's day.
pub fn motion_from_profile(seg: &Segment, day_profile: &[f64]) -> f64 {
    if seg.start == seg.end {
        return 0.0;
    }
    let pairs = &day_profile[seg.start as usize..seg.end as usize];
    pairs.iter().sum::<f64>() / pairs.len() as f64
}

/// Highest confidence of `concept` or any of its descendants on a frame of
/// the segment; 0 when absent.
pub fn concept_score(store: &LifelogStore, seg: &Segment, concept: &str) -> Result<f64, DescriptorError> {
    let tax = store.taxonomy();
    let key = tax.key(concept).ok_or_else(|| DescriptorError::UnknownConcept(concept.to_string()))?;
    let subtree = tax.subtree(key);
    let day = store.day(seg.day);
    Ok(day.frames[seg.start as usize..=seg.end as usize]
        .iter()
        .flat_map(|f| &f.detections)
        .filter(|d| subtree.binary_search(&d.concept).is_ok())
        .map(|d| d.confidence)
        .fold(0.0, f64::max))
}

/// Scores a segment for a feature-map criterion, in `[0, 1]`.
pub fn criterion_score(store: &LifelogStore, seg: &Segment, criterion: &Criterion) -> Result<f64, DescriptorError> {
    let day = store.day(seg.day);
    let key = &day.frames[seg.keyframe as usize].raster;
    Ok(match criterion {
        Criterion::Color => color_score(key),
        Criterion::Edge => edge_score(key),
        Criterion::Motion => {
            let frames = &day.frames[seg.start as usize..=seg.end as usize];
            if frames.len() < 2 {
                0.0
            } else {
                frames.windows(2).map(|w| motion_score(&w[0].raster, &w[1].raster)).sum::<f64>()
                    / (frames.len() - 1) as f64
            }
        }
        Criterion::Concept(c) => concept_score(store, seg, c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hue_of_primaries() {
        assert_eq!(color_score(&Raster::filled(3, 3, [255, 0, 0])), 0.0);
        assert!((color_score(&Raster::filled(3, 3, [0, 255, 0])) - 120.0 / 360.0).abs() < 1e-12);
        assert!((color_score(&Raster::filled(3, 3, [0, 0, 255])) - 240.0 / 360.0).abs() < 1e-12);
        assert!((color_score(&Raster::filled(3, 3, [255, 0, 255])) - 300.0 / 360.0).abs() < 1e-12);
        assert_eq!(color_score(&Raster::filled(3, 3, [77, 77, 77])), 0.0);
    }

    #[test]
    fn edges() {
        assert_eq!(edge_score(&Raster::filled(5, 4, [9, 9, 9])), 0.0);
        assert_eq!(edge_score(&Raster::filled(1, 1, [9, 9, 9])), 0.0);
        // vertical stripes: every horizontal pair differs by 255, vertical pairs by 0
        let mut r = Raster::filled(4, 4, [0, 0, 0]);
        for y in 0..4 {
            r.set_pixel(1, y, [255, 255, 255]);
            r.set_pixel(3, y, [255, 255, 255]);
        }
        assert!((edge_score(&r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn criterion_names() {
        for c in [Criterion::Color, Criterion::Edge, Criterion::Motion, Criterion::Concept("beer".into())] {
            assert_eq!(c.to_string().parse::<Criterion>().unwrap(), c);
        }
        assert!("concept:".parse::<Criterion>().is_err());
        assert!("size".parse::<Criterion>().is_err());
    }
}
