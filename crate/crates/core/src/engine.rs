//! Everything derived from a store, built once and shared read-only.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::descriptor::{color_score, concept_score, edge_score, motion_from_profile, Criterion, DescriptorError, SketchHistMap};
use crate::dsl::{self, ParseError};
use crate::featmap::{build_level0, build_pyramid, FeatMapError, FeatureMapPyramid, DEFAULT_VIEWPORT};
use crate::ingest::{load_dataset, IngestError, LifelogStore};
use crate::query::{evaluate, Query, QueryError, QueryIndex, ResultList};
use crate::segment::{Segment, SegmentError, SegmentMethod, SegmentTable, Segmentation, SegmentationConfig};
use crate::simsearch::{Metric, NeighborResult, SimSearchError, SimilarityIndex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    FeatMap(#[from] FeatMapError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("parse error at {}:{}: {}", .0.line, .0.column, .0.message)]
    Parse(ParseError),
    #[error(transparent)]
    SimSearch(#[from] SimSearchError),
}

impl From<ParseError> for EngineError {
    fn from(e: ParseError) -> Self {
        EngineError::Parse(e)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub segmentation: SegmentationConfig,
    pub viewport: usize,
    /// Used where a caller names no segmentation method.
    pub default_method: SegmentMethod,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { segmentation: SegmentationConfig::default(), viewport: DEFAULT_VIEWPORT, default_method: SegmentMethod::Shot }
    }
}

/// Criteria whose maps are built up front.
pub const DEFAULT_CRITERIA: [Criterion; 3] = [Criterion::Color, Criterion::Edge, Criterion::Motion];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngineSummary {
    pub days: usize,
    pub frames: usize,
    pub shot_segments: usize,
    pub uniform_segments: usize,
    pub vector_dim: Option<usize>,
    pub concepts: usize,
}

type LazyMap = Arc<OnceLock<Result<Arc<FeatureMapPyramid>, EngineError>>>;

pub struct Engine {
    store: LifelogStore,
    config: EngineConfig,
    segmentation: Segmentation,
    index: QueryIndex,
    similarity: [SimilarityIndex; 2],
    pyramids: HashMap<(Criterion, SegmentMethod), Arc<FeatureMapPyramid>>,
    concept_maps: Mutex<HashMap<(String, SegmentMethod), LazyMap>>,
}

fn method_slot(m: SegmentMethod) -> usize {
    match m {
        SegmentMethod::Shot => 0,
        SegmentMethod::Uniform => 1,
    }
}

impl Engine {
    /// Segments with both methods, then builds the query index, similarity
    /// indexes and the default feature maps.
    pub fn build(store: LifelogStore, config: EngineConfig) -> Result<Self, EngineError> {
        let segmentation = Segmentation::build(&store, &config.segmentation)?;
        let index = QueryIndex::build(&store);
        let similarity = [
            SimilarityIndex::build(&store, &segmentation.shot)?,
            SimilarityIndex::build(&store, &segmentation.uniform)?,
        ];
        let mut engine = Self {
            store,
            config,
            segmentation,
            index,
            similarity,
            pyramids: HashMap::new(),
            concept_maps: Mutex::new(HashMap::new()),
        };
        let mut pyramids = HashMap::new();
        for method in SegmentMethod::ALL {
            for c in DEFAULT_CRITERIA {
                let p = engine.build_pyramid(&c, method)?;
                pyramids.insert((c, method), Arc::new(p));
            }
        }
        engine.pyramids = pyramids;
        Ok(engine)
    }

    pub fn load(root: impl AsRef<Path>, config: EngineConfig) -> Result<Self, LoadError> {
        Ok(Self::build(load_dataset(root)?, config)?)
    }

    pub fn store(&self) -> &LifelogStore {
        &self.store
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn segmentation(&self) -> &Segmentation {
        &self.segmentation
    }

    pub fn table(&self, method: SegmentMethod) -> &SegmentTable {
        self.segmentation.table(method)
    }

    pub fn query_index(&self) -> &QueryIndex {
        &self.index
    }

    pub fn similarity(&self, method: SegmentMethod) -> &SimilarityIndex {
        &self.similarity[method_slot(method)]
    }

    pub fn summary(&self) -> EngineSummary {
        EngineSummary {
            days: self.store.days().len(),
            frames: self.store.frame_count(),
            shot_segments: self.segmentation.shot.len(),
            uniform_segments: self.segmentation.uniform.len(),
            vector_dim: self.store.vector_dim(),
            concepts: self.store.taxonomy().len(),
        }
    }

    /// Scores every segment of `method` for `criterion`, in table order.
    pub fn scores(&self, criterion: &Criterion, method: SegmentMethod) -> Result<Vec<f64>, EngineError> {
        let table = self.table(method);
        let score = |seg: &Segment| -> Result<f64, DescriptorError> {
            let day = self.store.day(seg.day);
            Ok(match criterion {
                Criterion::Color => color_score(&day.frames[seg.keyframe as usize].raster),
                Criterion::Edge => edge_score(&day.frames[seg.keyframe as usize].raster),
                Criterion::Motion => motion_from_profile(seg, &self.segmentation.motion[seg.day as usize]),
                Criterion::Concept(c) => concept_score(&self.store, seg, c)?,
            })
        };
        Ok(table.segments().par_iter().map(score).collect::<Result<_, _>>()?)
    }

    fn build_pyramid(&self, criterion: &Criterion, method: SegmentMethod) -> Result<FeatureMapPyramid, EngineError> {
        let scores = self.scores(criterion, method)?;
        let ids: Vec<u64> = self.table(method).segments().iter().map(|s| s.segment_id).collect();
        Ok(build_pyramid(build_level0(&ids, &scores)?, self.config.viewport))
    }

    /// Default maps are prebuilt; a concept map is built on first use, once
    /// per concept even under concurrent requests.
    pub fn pyramid(&self, criterion: &Criterion, method: SegmentMethod) -> Result<Arc<FeatureMapPyramid>, EngineError> {
        if let Some(p) = self.pyramids.get(&(criterion.clone(), method)) {
            return Ok(p.clone());
        }
        let Criterion::Concept(concept) = criterion else {
            unreachable!("default criteria are prebuilt")
        };
        if !self.store.taxonomy().contains(concept) {
            return Err(DescriptorError::UnknownConcept(concept.clone()).into());
        }
        let cell = self.concept_maps.lock().unwrap().entry((concept.clone(), method)).or_default().clone();
        cell.get_or_init(|| self.build_pyramid(criterion, method).map(Arc::new)).clone()
    }

    /// Concept maps built so far.
    pub fn built_concept_maps(&self) -> usize {
        self.concept_maps.lock().unwrap().values().filter(|c| c.get().is_some()).count()
    }

    pub fn query(&self, q: &Query) -> Result<ResultList, EngineError> {
        Ok(evaluate(q, &self.store, &self.index, self.table(q.method))?)
    }

    pub fn query_text(&self, text: &str, method: SegmentMethod) -> Result<ResultList, EngineError> {
        self.query(&dsl::parse(text)?.with_method(method))
    }

    /// Neighbours among segments of the query segment's own method.
    pub fn similar(&self, segment_id: u64, k: usize, metric: Metric) -> Result<Vec<NeighborResult>, EngineError> {
        let seg = self.segmentation.get(segment_id).ok_or(SimSearchError::UnknownSegment(segment_id))?;
        Ok(self.similarity(seg.method).knn(segment_id, k, metric)?)
    }

    pub fn sketch(&self, sk: &SketchHistMap, k: usize, method: SegmentMethod) -> Result<Vec<NeighborResult>, EngineError> {
        Ok(self.similarity(method).sketch_search(sk, k)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::{synthesize, SyntheticSpec};

    fn engine() -> Engine {
        let store = synthesize(&SyntheticSpec::new(3, 2, 60).with_scene_changes(4)).to_store().unwrap();
        Engine::build(store, EngineConfig::default()).unwrap()
    }

    #[test]
    fn builds_default_maps() {
        let e = engine();
        let s = e.summary();
        assert_eq!((s.days, s.frames), (2, 120));
        assert_eq!(s.uniform_segments, 12);
        for m in SegmentMethod::ALL {
            for c in DEFAULT_CRITERIA {
                let p = e.pyramid(&c, m).unwrap();
                assert_eq!(p.levels[0].occupied(), e.table(m).len());
            }
        }
        assert_eq!(e.built_concept_maps(), 0);
    }

    #[test]
    fn concept_maps_are_lazy_and_cached() {
        let e = engine();
        let c = Criterion::Concept("drink".into());
        let a = e.pyramid(&c, SegmentMethod::Shot).unwrap();
        let b = e.pyramid(&c, SegmentMethod::Shot).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(e.built_concept_maps(), 1);
        assert!(e.pyramid(&Criterion::Concept("nope".into()), SegmentMethod::Shot).is_err());
    }

    #[test]
    fn similar_stays_within_method() {
        let e = engine();
        let uid = e.table(SegmentMethod::Uniform).segments()[0].segment_id;
        let res = e.similar(uid, 100, Metric::HistMapL1).unwrap();
        assert_eq!(res.len(), e.table(SegmentMethod::Uniform).len() - 1);
        assert!(res.iter().all(|r| e.table(SegmentMethod::Uniform).get(r.segment_id).is_some()));
    }
}
