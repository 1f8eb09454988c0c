//! Dataset ingestion: CSV manifests and sidecars plus PPM frames, assembled
//! into an immutable [`LifelogStore`].
//!
//! Directory layout (relative to the dataset root):
//!
//! | file | columns |
//! |------|---------|
//! | `frames.csv` | `day_id,index,timestamp_utc,tz_offset_min,image_path` |
//! | `sensors.csv` | `timestamp_utc,lat,lon,location_name,speed_kmh,heart_rate_bpm,steps,calories,activity` |
//! | `concepts.csv` | `day_id,frame_index,concept_id,confidence,bx,by,bw,bh` |
//! | `taxonomy.csv` | `concept_id,parent_id` |
//! | `ocr.csv` | `day_id,frame_index,text` |
//! | `vectors.csv` | `day_id,frame_index,v0..v{D-1}` |
//!
//! Only `frames.csv` is mandatory. Empty CSV fields mean "absent".

mod align;
mod ppm;
pub mod synthetic;
mod taxonomy;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use align::{align_sensors, UnsortedSamples, DEFAULT_TOLERANCE_S};
pub use ppm::{parse_ppm, PpmError, Raster};
pub use synthetic::{generate_synthetic, SyntheticDataset, SyntheticSpec};
pub use taxonomy::{ConceptKey, ConceptTaxonomy, TaxonomyError};

use crate::descriptor::{normalize_vector, FeatureVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub day_id: String,
    pub index: u32,
    pub timestamp_utc: i64,
    pub tz_offset_min: i32,
    pub image_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SensorSample {
    pub timestamp_utc: i64,
    pub geo: Option<GeoPoint>,
    pub location_name: Option<String>,
    pub speed_kmh: Option<f64>,
    pub heart_rate_bpm: Option<u32>,
    pub steps: Option<u32>,
    pub calories: Option<f64>,
    pub activity: Option<String>,
}

impl SensorSample {
    fn has_payload(&self) -> bool {
        self.geo.is_some()
            || self.location_name.is_some()
            || self.speed_kmh.is_some()
            || self.heart_rate_bpm.is_some()
            || self.steps.is_some()
            || self.calories.is_some()
            || self.activity.is_some()
    }

    fn check(&self) -> Result<(), String> {
        if !self.has_payload() {
            return Err("sample carries no sensor field".into());
        }
        if let Some(g) = self.geo {
            if !(-90.0..=90.0).contains(&g.lat) || !(-180.0..=180.0).contains(&g.lon) {
                return Err(format!("coordinates out of range: {}, {}", g.lat, g.lon));
            }
        }
        for (name, v) in [("speed_kmh", self.speed_kmh), ("calories", self.calories)] {
            if v.is_some_and(|v| !v.is_finite() || v < 0.0) {
                return Err(format!("{name} must be a non-negative number"));
            }
        }
        Ok(())
    }
}

/// Normalized bounding box, all components in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDetection {
    pub day_id: String,
    pub frame_index: u32,
    pub concept_id: String,
    pub confidence: f64,
    pub bbox: Option<BBox>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcrRecord {
    pub day_id: String,
    pub frame_index: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorRecord {
    pub day_id: String,
    pub frame_index: u32,
    pub values: Vec<f64>,
}

/// Everything a store is assembled from, before cross-referencing.
#[derive(Debug, Clone, Default)]
pub struct DatasetRecords {
    pub frames: Vec<FrameRecord>,
    /// Decoded images keyed by `image_path`.
    pub images: HashMap<String, Arc<Raster>>,
    pub sensors: Vec<SensorSample>,
    pub detections: Vec<ConceptDetection>,
    pub taxonomy: Vec<(String, Option<String>)>,
    pub ocr: Vec<OcrRecord>,
    pub vectors: Vec<VectorRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("no frames.csv under {0}")]
    MissingManifest(PathBuf),
    #[error("{file}:{line}: {reason}")]
    MalformedRow { file: String, line: u64, reason: String },
    #[error("day {day_id}: timestamps are not strictly increasing")]
    NonMonotonicTimestamps { day_id: String },
    #[error("day {day_id}: frame indices are not exactly 0..N-1")]
    FrameIndexGap { day_id: String },
    #[error("{file}:{line}: {reason}")]
    DanglingReference { file: String, line: u64, reason: String },
    #[error("image {path}: {source}")]
    BadImage { path: String, source: PpmError },
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    UnsortedSamples(#[from] UnsortedSamples),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A concept detection attached to a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub concept: ConceptKey,
    pub confidence: f64,
    pub bbox: Option<BBox>,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub index: u32,
    pub timestamp_utc: i64,
    pub tz_offset_min: i32,
    pub image_path: String,
    pub raster: Arc<Raster>,
    /// Index into [`LifelogStore::sensors`].
    pub sensor: Option<u32>,
    pub detections: Vec<Detection>,
    pub ocr: Vec<String>,
    pub vector: Option<FeatureVector>,
}

impl Frame {
    /// Seconds since the epoch shifted into the capture's local time.
    pub fn local_time(&self) -> i64 {
        self.timestamp_utc + i64::from(self.tz_offset_min) * 60
    }
}

#[derive(Debug, Clone)]
pub struct DayLog {
    pub day_id: String,
    pub frames: Vec<Frame>,
}

/// Position of a frame in the store: day ordinal plus index within the day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameRef {
    pub day: u32,
    pub index: u32,
}

/// The immutable, cross-referenced dataset. Days are ordered by `day_id`.
#[derive(Debug, Clone)]
pub struct LifelogStore {
    days: Vec<DayLog>,
    day_lookup: HashMap<String, u32>,
    day_offsets: Vec<usize>,
    sensors: Vec<SensorSample>,
    taxonomy: ConceptTaxonomy,
    vector_dim: Option<usize>,
}

fn row_error(file: &str, row: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRow { file: file.into(), line: row as u64 + 2, reason: reason.into() }
}

fn dangling(file: &str, row: usize, reason: impl Into<String>) -> IngestError {
    IngestError::DanglingReference { file: file.into(), line: row as u64 + 2, reason: reason.into() }
}

impl LifelogStore {
    /// Cross-references and validates raw records. Row numbers in errors
    /// assume one CSV line per record after a header line.
    pub fn assemble(records: DatasetRecords) -> Result<Self, IngestError> {
        let DatasetRecords { frames, images, mut sensors, detections, taxonomy, ocr, vectors } = records;
        let taxonomy = ConceptTaxonomy::from_edges(taxonomy)?;

        let mut by_day: BTreeMap<String, Vec<FrameRecord>> = BTreeMap::new();
        for (row, f) in frames.into_iter().enumerate() {
            if f.day_id.is_empty() {
                return Err(row_error("frames.csv", row, "empty day_id"));
            }
            if !images.contains_key(&f.image_path) {
                return Err(dangling("frames.csv", row, format!("no decoded image for {}", f.image_path)));
            }
            by_day.entry(f.day_id.clone()).or_default().push(f);
        }

        let mut days = Vec::with_capacity(by_day.len());
        for (day_id, mut recs) in by_day {
            recs.sort_by_key(|r| r.index);
            if recs.iter().enumerate().any(|(i, r)| r.index as usize != i) {
                return Err(IngestError::FrameIndexGap { day_id });
            }
            if recs.windows(2).any(|w| w[1].timestamp_utc <= w[0].timestamp_utc) {
                return Err(IngestError::NonMonotonicTimestamps { day_id });
            }
            let frames = recs
                .into_iter()
                .map(|r| Frame {
                    index: r.index,
                    timestamp_utc: r.timestamp_utc,
                    tz_offset_min: r.tz_offset_min,
                    raster: Arc::clone(&images[&r.image_path]),
                    image_path: r.image_path,
                    sensor: None,
                    detections: Vec::new(),
                    ocr: Vec::new(),
                    vector: None,
                })
                .collect();
            days.push(DayLog { day_id, frames });
        }
        let day_lookup: HashMap<String, u32> =
            days.iter().enumerate().map(|(i, d)| (d.day_id.clone(), i as u32)).collect();

        let day_lens: Vec<usize> = days.iter().map(|d| d.frames.len()).collect();
        let locate = |file: &str, row: usize, day_id: &str, idx: u32| -> Result<FrameRef, IngestError> {
            let day = *day_lookup
                .get(day_id)
                .ok_or_else(|| dangling(file, row, format!("unknown day {day_id}")))?;
            if idx as usize >= day_lens[day as usize] {
                return Err(dangling(file, row, format!("day {day_id} has no frame {idx}")));
            }
            Ok(FrameRef { day, index: idx })
        };

        for (row, s) in sensors.iter().enumerate() {
            s.check().map_err(|e| row_error("sensors.csv", row, e))?;
        }
        // stable: equal timestamps keep file order
        sensors.sort_by_key(|s| s.timestamp_utc);
        let sample_times: Vec<i64> = sensors.iter().map(|s| s.timestamp_utc).collect();
        for day in &mut days {
            let times: Vec<i64> = day.frames.iter().map(|f| f.timestamp_utc).collect();
            let attached = align_sensors(&times, &sample_times, DEFAULT_TOLERANCE_S)?;
            for (frame, a) in day.frames.iter_mut().zip(attached) {
                frame.sensor = a.map(|i| i as u32);
            }
        }

        let mut placed = Vec::with_capacity(detections.len());
        for (row, d) in detections.into_iter().enumerate() {
            let at = locate("concepts.csv", row, &d.day_id, d.frame_index)?;
            let concept = taxonomy
                .key(&d.concept_id)
                .ok_or_else(|| dangling("concepts.csv", row, format!("concept {} not in taxonomy", d.concept_id)))?;
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(row_error("concepts.csv", row, "confidence outside [0, 1]"));
            }
            if let Some(b) = d.bbox {
                let unit = |v: f64| (0.0..=1.0).contains(&v);
                if !(unit(b.x) && unit(b.y) && unit(b.w) && unit(b.h))
                    || b.x + b.w > 1.0 + 1e-9
                    || b.y + b.h > 1.0 + 1e-9
                {
                    return Err(row_error("concepts.csv", row, "bounding box leaves the unit square"));
                }
            }
            placed.push((at, Detection { concept, confidence: d.confidence, bbox: d.bbox }));
        }
        for (at, det) in placed {
            days[at.day as usize].frames[at.index as usize].detections.push(det);
        }

        for (row, o) in ocr.into_iter().enumerate() {
            let at = locate("ocr.csv", row, &o.day_id, o.frame_index)?;
            days[at.day as usize].frames[at.index as usize].ocr.push(o.text);
        }

        let mut vector_dim = None;
        for (row, v) in vectors.into_iter().enumerate() {
            let at = locate("vectors.csv", row, &v.day_id, v.frame_index)?;
            let dim = *vector_dim.get_or_insert(v.values.len());
            if v.values.len() != dim {
                return Err(row_error("vectors.csv", row, format!("expected {dim} components, got {}", v.values.len())));
            }
            let unit = normalize_vector(&v.values).map_err(|e| row_error("vectors.csv", row, e.to_string()))?;
            days[at.day as usize].frames[at.index as usize].vector = Some(unit);
        }

        let mut day_offsets = Vec::with_capacity(days.len() + 1);
        let mut acc = 0;
        for d in &days {
            day_offsets.push(acc);
            acc += d.frames.len();
        }
        day_offsets.push(acc);

        Ok(Self { days, day_lookup, day_offsets, sensors, taxonomy, vector_dim })
    }

    pub fn days(&self) -> &[DayLog] {
        &self.days
    }

    pub fn day(&self, day: u32) -> &DayLog {
        &self.days[day as usize]
    }

    pub fn day_index(&self, day_id: &str) -> Option<u32> {
        self.day_lookup.get(day_id).copied()
    }

    pub fn frame(&self, at: FrameRef) -> &Frame {
        &self.days[at.day as usize].frames[at.index as usize]
    }

    pub fn get_frame(&self, day_id: &str, index: u32) -> Option<&Frame> {
        let day = self.day_index(day_id)?;
        self.days[day as usize].frames.get(index as usize)
    }

    pub fn frame_count(&self) -> usize {
        *self.day_offsets.last().unwrap_or(&0)
    }

    /// Dense ordinal of a frame across all days, in (day, index) order.
    pub fn global_id(&self, at: FrameRef) -> usize {
        self.day_offsets[at.day as usize] + at.index as usize
    }

    pub fn frame_ref(&self, global_id: usize) -> FrameRef {
        let day = self.day_offsets.partition_point(|&o| o <= global_id) - 1;
        FrameRef { day: day as u32, index: (global_id - self.day_offsets[day]) as u32 }
    }

    pub fn frame_refs(&self) -> impl Iterator<Item = FrameRef> + '_ {
        self.days.iter().enumerate().flat_map(|(d, day)| {
            (0..day.frames.len() as u32).map(move |index| FrameRef { day: d as u32, index })
        })
    }

    pub fn sensors(&self) -> &[SensorSample] {
        &self.sensors
    }

    pub fn sensor_of(&self, frame: &Frame) -> Option<&SensorSample> {
        frame.sensor.map(|i| &self.sensors[i as usize])
    }

    pub fn taxonomy(&self) -> &ConceptTaxonomy {
        &self.taxonomy
    }

    /// Dimension of ingested deep-feature vectors, if any were loaded.
    pub fn vector_dim(&self) -> Option<usize> {
        self.vector_dim
    }
}

// --- CSV loading --------------------------------------------------------------

#[derive(Deserialize)]
struct FrameRow {
    day_id: String,
    index: u32,
    timestamp_utc: i64,
    tz_offset_min: i32,
    image_path: String,
}

#[derive(Deserialize)]
struct SensorRow {
    timestamp_utc: i64,
    lat: Option<f64>,
    lon: Option<f64>,
    location_name: Option<String>,
    speed_kmh: Option<f64>,
    heart_rate_bpm: Option<u32>,
    steps: Option<u32>,
    calories: Option<f64>,
    activity: Option<String>,
}

#[derive(Deserialize)]
struct ConceptRow {
    day_id: String,
    frame_index: u32,
    concept_id: String,
    confidence: f64,
    bx: Option<f64>,
    by: Option<f64>,
    bw: Option<f64>,
    bh: Option<f64>,
}

#[derive(Deserialize)]
struct TaxonomyRow {
    concept_id: String,
    parent_id: Option<String>,
}

#[derive(Deserialize)]
struct OcrRow {
    day_id: String,
    frame_index: u32,
    text: String,
}

fn csv_error(file: &str, err: csv::Error) -> IngestError {
    let line = err.position().map_or(0, |p| p.line());
    IngestError::MalformedRow { file: file.into(), line, reason: err.to_string() }
}

fn open_csv(root: &Path, file: &str) -> Result<Option<csv::Reader<fs::File>>, IngestError> {
    let path = root.join(file);
    match fs::File::open(&path) {
        Ok(f) => Ok(Some(csv::ReaderBuilder::new().has_headers(true).from_reader(f))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(IngestError::Io { path, source }),
    }
}

fn read_rows<T: serde::de::DeserializeOwned>(root: &Path, file: &str) -> Result<Vec<T>, IngestError> {
    let Some(mut rdr) = open_csv(root, file)? else { return Ok(Vec::new()) };
    rdr.deserialize().map(|r| r.map_err(|e| csv_error(file, e))).collect()
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.is_empty())
}

/// Reads every CSV and image of a dataset directory without cross-checking.
pub fn read_records(root: &Path) -> Result<DatasetRecords, IngestError> {
    if !root.join("frames.csv").is_file() {
        return Err(IngestError::MissingManifest(root.to_path_buf()));
    }
    let frames: Vec<FrameRecord> = read_rows::<FrameRow>(root, "frames.csv")?
        .into_iter()
        .map(|r| FrameRecord {
            day_id: r.day_id,
            index: r.index,
            timestamp_utc: r.timestamp_utc,
            tz_offset_min: r.tz_offset_min,
            image_path: r.image_path,
        })
        .collect();

    let mut sensors = Vec::new();
    for (row, r) in read_rows::<SensorRow>(root, "sensors.csv")?.into_iter().enumerate() {
        let geo = match (r.lat, r.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
            (None, None) => None,
            _ => return Err(row_error("sensors.csv", row, "lat and lon must be given together")),
        };
        sensors.push(SensorSample {
            timestamp_utc: r.timestamp_utc,
            geo,
            location_name: non_empty(r.location_name),
            speed_kmh: r.speed_kmh,
            heart_rate_bpm: r.heart_rate_bpm,
            steps: r.steps,
            calories: r.calories,
            activity: non_empty(r.activity),
        });
    }

    let mut detections = Vec::new();
    for (row, r) in read_rows::<ConceptRow>(root, "concepts.csv")?.into_iter().enumerate() {
        let bbox = match (r.bx, r.by, r.bw, r.bh) {
            (Some(x), Some(y), Some(w), Some(h)) => Some(BBox { x, y, w, h }),
            (None, None, None, None) => None,
            _ => return Err(row_error("concepts.csv", row, "bounding box is partially specified")),
        };
        detections.push(ConceptDetection {
            day_id: r.day_id,
            frame_index: r.frame_index,
            concept_id: r.concept_id,
            confidence: r.confidence,
            bbox,
        });
    }

    let taxonomy = read_rows::<TaxonomyRow>(root, "taxonomy.csv")?
        .into_iter()
        .map(|r| (r.concept_id, non_empty(r.parent_id)))
        .collect();

    let ocr = read_rows::<OcrRow>(root, "ocr.csv")?
        .into_iter()
        .map(|r| OcrRecord { day_id: r.day_id, frame_index: r.frame_index, text: r.text })
        .collect();

    let vectors = read_vectors(root)?;

    let mut paths: Vec<&str> = frames.iter().map(|f| f.image_path.as_str()).collect();
    paths.sort_unstable();
    paths.dedup();
    let images = paths
        .par_iter()
        .map(|p| {
            let full = root.join(p);
            let bytes = fs::read(&full).map_err(|source| IngestError::Io { path: full, source })?;
            let raster = parse_ppm(&bytes).map_err(|source| IngestError::BadImage { path: p.to_string(), source })?;
            Ok((p.to_string(), Arc::new(raster)))
        })
        .collect::<Result<HashMap<_, _>, IngestError>>()?;

    Ok(DatasetRecords { frames, images, sensors, detections, taxonomy, ocr, vectors })
}

fn read_vectors(root: &Path) -> Result<Vec<VectorRecord>, IngestError> {
    const FILE: &str = "vectors.csv";
    let Some(mut rdr) = open_csv(root, FILE)? else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(FILE, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| IngestError::MalformedRow { file: FILE.into(), line, reason };
        if rec.len() < 3 {
            return Err(bad("expected day_id, frame_index and at least one component".into()));
        }
        let frame_index = rec[1].parse().map_err(|_| bad(format!("bad frame_index {:?}", &rec[1])))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("bad component {v:?}"))))
            .collect::<Result<_, _>>()?;
        out.push(VectorRecord { day_id: rec[0].to_string(), frame_index, values });
    }
    Ok(out)
}

/// Parses a dataset directory into a store.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<LifelogStore, IngestError> {
    LifelogStore::assemble(read_records(root.as_ref())?)
}
