//! Inverted indexes and query evaluation.

use std::collections::HashMap;

use serde::Serialize;

use super::{sensor_value, tokenize, Compiled, CompiledContainer, Query, QueryError, SensorField};
use crate::ingest::LifelogStore;
use crate::segment::SegmentTable;

/// Posting lists over dense frame ids (see [`LifelogStore::global_id`]).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryIndex {
    /// Per concept key: `(frame, best confidence of that concept on the frame)`, by frame.
    concepts: Vec<Vec<(u32, f64)>>,
    ocr_tokens: HashMap<String, Vec<u32>>,
    locations: HashMap<String, Vec<u32>>,
    activities: HashMap<String, Vec<u32>>,
    /// Per sensor field: `(value, frame)` sorted ascending.
    sensor_columns: [Vec<(f64, u32)>; 4],
    /// `(lat, frame)` sorted ascending.
    latitudes: Vec<(f64, u32)>,
    frame_count: usize,
}

fn push_unique(list: &mut Vec<u32>, gid: u32) {
    if list.last() != Some(&gid) {
        list.push(gid);
    }
}

impl QueryIndex {
    pub fn build(store: &LifelogStore) -> Self {
        let mut concepts: Vec<Vec<(u32, f64)>> = vec![Vec::new(); store.taxonomy().len()];
        let mut ocr_tokens: HashMap<String, Vec<u32>> = HashMap::new();
        let mut locations: HashMap<String, Vec<u32>> = HashMap::new();
        let mut activities: HashMap<String, Vec<u32>> = HashMap::new();
        let mut sensor_columns: [Vec<(f64, u32)>; 4] = Default::default();
        let mut latitudes = Vec::new();

        for (gid, at) in store.frame_refs().enumerate() {
            let gid = gid as u32;
            let frame = store.frame(at);
            for d in &frame.detections {
                let list = &mut concepts[d.concept.index()];
                match list.last_mut() {
                    Some((g, conf)) if *g == gid => *conf = conf.max(d.confidence),
                    _ => list.push((gid, d.confidence)),
                }
            }
            for text in &frame.ocr {
                for tok in tokenize(text) {
                    push_unique(ocr_tokens.entry(tok).or_default(), gid);
                }
            }
            if let Some(s) = store.sensor_of(frame) {
                if let Some(l) = &s.location_name {
                    push_unique(locations.entry(l.to_lowercase()).or_default(), gid);
                }
                if let Some(a) = &s.activity {
                    push_unique(activities.entry(a.to_lowercase()).or_default(), gid);
                }
                for (col, field) in sensor_columns.iter_mut().zip(SensorField::ALL) {
                    if let Some(v) = sensor_value(s, field) {
                        col.push((v, gid));
                    }
                }
                if let Some(g) = s.geo {
                    latitudes.push((g.lat, gid));
                }
            }
        }
        let by_value = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        for col in &mut sensor_columns {
            col.sort_by(by_value);
        }
        latitudes.sort_by(by_value);
        Self {
            concepts,
            ocr_tokens,
            locations,
            activities,
            sensor_columns,
            latitudes,
            frame_count: store.frame_count(),
        }
    }

    /// Frames carrying a detection of exactly this concept key.
    pub fn concept_postings(&self, concept: usize) -> &[(u32, f64)] {
        self.concepts.get(concept).map_or(&[], Vec::as_slice)
    }

    pub fn ocr_postings(&self, token: &str) -> &[u32] {
        self.ocr_tokens.get(token).map_or(&[], Vec::as_slice)
    }

    /// Candidate frames for one compiled predicate, sorted, or `None` when
    /// the predicate is not index-backed.
    fn candidates(&self, p: &Compiled<'_>) -> Option<Vec<u32>> {
        let sorted_ids = |slice: &[(f64, u32)]| {
            let mut ids: Vec<u32> = slice.iter().map(|(_, g)| *g).collect();
            ids.sort_unstable();
            ids
        };
        match p {
            Compiled::Concept { subtree, min_conf } => {
                let mut ids: Vec<u32> = subtree
                    .iter()
                    .flat_map(|k| self.concept_postings(k.index()))
                    .filter(|(_, c)| *c >= *min_conf)
                    .map(|(g, _)| *g)
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                Some(ids)
            }
            Compiled::Ocr { tokens } => {
                let rarest = tokens.iter().min_by_key(|t| self.ocr_postings(t).len())?;
                Some(self.ocr_postings(rarest).to_vec())
            }
            Compiled::Location(name) => Some(self.locations.get(name).cloned().unwrap_or_default()),
            Compiled::Activity(name) => Some(self.activities.get(name).cloned().unwrap_or_default()),
            Compiled::Plain(super::Predicate::Range { field, bound }) => {
                let col = &self.sensor_columns[*field as usize];
                let (lo, hi) = match *bound {
                    super::RangeBound::Between { min, max } => (min, max),
                    super::RangeBound::Compare { op, value } => match op {
                        super::Comparison::Lt | super::Comparison::Le => (f64::NEG_INFINITY, value),
                        super::Comparison::Eq => (value, value),
                        super::Comparison::Ge | super::Comparison::Gt => (value, f64::INFINITY),
                    },
                };
                // inclusive superset; strict comparisons are re-checked per frame
                let a = col.partition_point(|(v, _)| *v < lo);
                let b = col.partition_point(|(v, _)| *v <= hi);
                Some(sorted_ids(&col[a..b.max(a)]))
            }
            Compiled::Plain(super::Predicate::GeoBox { lat_min, lat_max, .. }) => {
                let a = self.latitudes.partition_point(|(v, _)| v < lat_min);
                let b = self.latitudes.partition_point(|(v, _)| v <= lat_max);
                Some(sorted_ids(&self.latitudes[a..b.max(a)]))
            }
            Compiled::Plain(_) => None,
        }
    }

    /// Upper bound on the candidate count, used to pick the driving predicate.
    fn estimate(&self, p: &Compiled<'_>) -> usize {
        let span = |col: &[(f64, u32)], lo: f64, hi: f64| {
            let a = col.partition_point(|(v, _)| *v < lo);
            col.partition_point(|(v, _)| *v <= hi).saturating_sub(a)
        };
        match p {
            Compiled::Concept { subtree, .. } => subtree.iter().map(|k| self.concept_postings(k.index()).len()).sum(),
            Compiled::Ocr { tokens } => tokens.iter().map(|t| self.ocr_postings(t).len()).min().unwrap_or(usize::MAX),
            Compiled::Location(n) => self.locations.get(n).map_or(0, Vec::len),
            Compiled::Activity(n) => self.activities.get(n).map_or(0, Vec::len),
            Compiled::Plain(super::Predicate::Range { field, bound }) => {
                let col = &self.sensor_columns[*field as usize];
                match *bound {
                    super::RangeBound::Between { min, max } => span(col, min, max),
                    super::RangeBound::Compare { op, value } => match op {
                        super::Comparison::Lt | super::Comparison::Le => span(col, f64::NEG_INFINITY, value),
                        super::Comparison::Eq => span(col, value, value),
                        _ => span(col, value, f64::INFINITY),
                    },
                }
            }
            Compiled::Plain(super::Predicate::GeoBox { lat_min, lat_max, .. }) => {
                span(&self.latitudes, *lat_min, *lat_max)
            }
            Compiled::Plain(_) => usize::MAX,
        }
    }
}

/// One matching segment and the frames inside it that matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultEntry {
    pub segment_id: u64,
    pub day_id: String,
    pub start: u32,
    pub end: u32,
    pub keyframe: u32,
    pub frames: Vec<u32>,
}

/// Matching segments ordered by `(day_id, start)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ResultList {
    pub entries: Vec<ResultEntry>,
}

impl ResultList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn segment_ids(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.segment_id).collect()
    }

    pub fn matched_frames(&self) -> usize {
        self.entries.iter().map(|e| e.frames.len()).sum()
    }
}

fn compile<'q>(q: &'q Query, store: &LifelogStore) -> Result<Vec<CompiledContainer<'q>>, QueryError> {
    if q.containers.is_empty() {
        return Err(QueryError::InvalidQuery("query has no containers".into()));
    }
    q.containers.iter().map(|c| CompiledContainer::new(c, store.taxonomy())).collect()
}

/// Groups sorted, deduplicated frame ids into segment results.
fn group(store: &LifelogStore, table: &SegmentTable, gids: &[u32]) -> ResultList {
    let mut entries: Vec<ResultEntry> = Vec::new();
    for &gid in gids {
        let at = store.frame_ref(gid as usize);
        let pos = table.position_of_frame(at.day, at.index).expect("segment table covers every frame");
        let seg = &table.segments()[pos];
        match entries.last_mut() {
            Some(e) if e.segment_id == seg.segment_id => e.frames.push(at.index),
            _ => entries.push(ResultEntry {
                segment_id: seg.segment_id,
                day_id: seg.day_id.clone(),
                start: seg.start,
                end: seg.end,
                keyframe: seg.keyframe,
                frames: vec![at.index],
            }),
        }
    }
    ResultList { entries }
}

/// Index-backed evaluation: each container is driven by its most selective
/// indexed predicate, and every candidate is then checked against the
/// whole container.
pub fn evaluate(q: &Query, store: &LifelogStore, index: &QueryIndex, table: &SegmentTable) -> Result<ResultList, QueryError> {
    let containers = compile(q, store)?;
    let mut hits: Vec<u32> = Vec::new();
    for c in &containers {
        let driver = c
            .predicates
            .iter()
            .map(|p| (index.estimate(p), p))
            .filter(|(n, _)| *n != usize::MAX)
            .min_by_key(|(n, _)| *n);
        let check = |gid: u32| c.matches(store, store.frame(store.frame_ref(gid as usize)));
        match driver.and_then(|(_, p)| index.candidates(p)) {
            Some(cands) => hits.extend(cands.into_iter().filter(|&g| check(g))),
            None => hits.extend((0..index.frame_count as u32).filter(|&g| check(g))),
        }
    }
    hits.sort_unstable();
    hits.dedup();
    Ok(group(store, table, &hits))
}

/// Reference evaluation: every container against every frame.
pub fn evaluate_scan(q: &Query, store: &LifelogStore, table: &SegmentTable) -> Result<ResultList, QueryError> {
    let containers = compile(q, store)?;
    let hits: Vec<u32> = store
        .frame_refs()
        .enumerate()
        .filter(|(_, at)| containers.iter().any(|c| c.matches(store, store.frame(*at))))
        .map(|(g, _)| g as u32)
        .collect();
    Ok(group(store, table, &hits))
}
