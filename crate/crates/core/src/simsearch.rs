//! Exact k-nearest-neighbour search over segments.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{compute_histmap, histmap_distance, CellMask, DescriptorError, FeatureVector, HistMap, SketchHistMap};
use crate::ingest::LifelogStore;
use crate::segment::SegmentTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "cosine")]
    CosineDeep,
    #[serde(rename = "histmap")]
    HistMapL1,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::CosineDeep => "cosine",
            Metric::HistMapL1 => "histmap",
        }
    }

    /// Whether larger scores rank first.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::CosineDeep)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cosinedeep" | "deep" => Ok(Metric::CosineDeep),
            "histmap" | "histmapl1" | "color" => Ok(Metric::HistMapL1),
            other => Err(format!("unknown metric `{other}` (expected cosine or histmap)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborResult {
    pub segment_id: u64,
    /// Similarity for [`Metric::CosineDeep`], distance for [`Metric::HistMapL1`].
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimSearchError {
    #[error("unknown segment {0}")]
    UnknownSegment(u64),
    #[error("metric `{0}` is unavailable for this dataset")]
    MetricUnavailable(Metric),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
}

/// Dot product of two unit vectors.
pub fn cosine(u: &FeatureVector, v: &FeatureVector) -> Result<f64, SimSearchError> {
    if u.dim() != v.dim() {
        return Err(SimSearchError::DimensionMismatch(u.dim(), v.dim()));
    }
    Ok(u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum())
}

/// Per-segment descriptors for one segmentation method.
#[derive(Debug, Clone)]
pub struct SegmentDescriptor {
    pub segment_id: u64,
    pub histmap: HistMap,
    pub vector: Option<FeatureVector>,
}

#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    /// Sorted by segment id.
    entries: Vec<SegmentDescriptor>,
    has_vectors: bool,
}

fn rank_order(higher_is_better: bool) -> impl Fn(&(f64, u64), &(f64, u64)) -> Ordering {
    move |a, b| {
        let by_score = if higher_is_better { b.0.total_cmp(&a.0) } else { a.0.total_cmp(&b.0) };
        by_score.then(a.1.cmp(&b.1))
    }
}

fn top_k(mut scored: Vec<(f64, u64)>, k: usize, higher_is_better: bool) -> Vec<NeighborResult> {
    let order = rank_order(higher_is_better);
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, &order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(&order);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (score, segment_id))| NeighborResult { segment_id, score, rank: i + 1 })
        .collect()
}

impl SimilarityIndex {
    /// Input order does not matter.
    pub fn new(mut entries: Vec<SegmentDescriptor>) -> Self {
        entries.sort_by_key(|e| e.segment_id);
        let has_vectors = entries.iter().any(|e| e.vector.is_some());
        Self { entries, has_vectors }
    }

    /// Computes every keyframe HistMap of `table`. A segment's deep vector
    /// is the normalized mean of its frames' vectors.
    pub fn build(store: &LifelogStore, table: &SegmentTable) -> Result<Self, DescriptorError> {
        let entries = table
            .segments()
            .par_iter()
            .map(|seg| {
                let frames = &store.day(seg.day).frames[seg.start as usize..=seg.end as usize];
                let key = &frames[(seg.keyframe - seg.start) as usize];
                Ok(SegmentDescriptor {
                    segment_id: seg.segment_id,
                    histmap: compute_histmap(&key.raster)?,
                    vector: FeatureVector::centroid(frames.iter().filter_map(|f| f.vector.as_ref())),
                })
            })
            .collect::<Result<_, DescriptorError>>()?;
        Ok(Self::new(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SegmentDescriptor] {
        &self.entries
    }

    pub fn metric_available(&self, m: Metric) -> bool {
        match m {
            Metric::CosineDeep => self.has_vectors,
            Metric::HistMapL1 => true,
        }
    }

    pub fn get(&self, segment_id: u64) -> Option<&SegmentDescriptor> {
        self.entries
            .binary_search_by_key(&segment_id, |e| e.segment_id)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// The `k` segments most similar to `query`, excluding itself. Segments
    /// without a deep vector are skipped under [`Metric::CosineDeep`].
    pub fn knn(&self, query: u64, k: usize, m: Metric) -> Result<Vec<NeighborResult>, SimSearchError> {
        if k == 0 {
            return Err(SimSearchError::ZeroK);
        }
        let q = self.get(query).ok_or(SimSearchError::UnknownSegment(query))?;
        if !self.metric_available(m) {
            return Err(SimSearchError::MetricUnavailable(m));
        }
        let others = self.entries.par_iter().filter(|e| e.segment_id != query);
        let scored: Vec<(f64, u64)> = match m {
            Metric::CosineDeep => {
                let qv = q.vector.as_ref().ok_or(SimSearchError::MetricUnavailable(m))?;
                others
                    .filter_map(|e| e.vector.as_ref().map(|v| cosine(qv, v).map(|s| (s, e.segment_id))))
                    .collect::<Result<_, _>>()?
            }
            Metric::HistMapL1 => others
                .map(|e| histmap_distance(&q.histmap, &e.histmap, &CellMask::FULL).map(|d| (d, e.segment_id)))
                .collect::<Result<_, _>>()?,
        };
        Ok(top_k(scored, k, m.higher_is_better()))
    }

    /// Keyframes closest to the sketch over its painted cells.
    pub fn sketch_search(&self, sk: &SketchHistMap, k: usize) -> Result<Vec<NeighborResult>, SimSearchError> {
        if k == 0 {
            return Err(SimSearchError::ZeroK);
        }
        if sk.mask.count() == 0 {
            return Err(DescriptorError::EmptyMask.into());
        }
        let scored: Vec<(f64, u64)> = self
            .entries
            .par_iter()
            .map(|e| histmap_distance(&sk.histmap, &e.histmap, &sk.mask).map(|d| (d, e.segment_id)))
            .collect::<Result<_, _>>()?;
        Ok(top_k(scored, k, false))
    }
}
