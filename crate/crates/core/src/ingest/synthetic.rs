//! Deterministic synthetic lifelog datasets.
//!
//! Each day is a run of piecewise-constant "scenes". Consecutive scenes swap
//! between a dark and a bright background (luma gap of at least 150), so a
//! scene change always moves the mean luma by far more than the per-pixel
//! noise can. The planted scene starts are written to
//! `ground_truth_shots.csv`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    BBox, ConceptDetection, DatasetRecords, FrameRecord, GeoPoint, IngestError, LifelogStore, OcrRecord, Raster,
    SensorSample, VectorRecord,
};
use crate::descriptor::PALETTE;

/// Nominal capture cadence of a wearable camera.
pub const FRAME_INTERVAL_S: i64 = 40;
/// Shortest planted scene, in frames.
pub const MIN_SCENE_LEN: usize = 3;

const TZ_OFFSET_MIN: i32 = 60;
const DAY_START_LOCAL_S: i64 = 6 * 3600;

pub const TAXONOMY: &[(&str, Option<&str>)] = &[
    ("drink", None),
    ("beer", Some("drink")),
    ("wine", Some("drink")),
    ("coffee", Some("drink")),
    ("device", None),
    ("screen", Some("device")),
    ("tablet", Some("screen")),
    ("tv", Some("screen")),
    ("phone", Some("device")),
    ("animal", None),
    ("dog", Some("animal")),
    ("cat", Some("animal")),
    ("food", None),
    ("pizza", Some("food")),
    ("salad", Some("food")),
    ("person", None),
    ("car", None),
    ("table", None),
    ("book", None),
];

pub const LOCATIONS: &[(&str, f64, f64)] = &[
    ("The Helix", 53.3856, -6.2568),
    ("Home", 53.3700, -6.2200),
    ("DCU", 53.3860, -6.2570),
    ("Office", 53.3400, -6.2600),
    ("Dublin Airport", 53.4264, -6.2499),
    ("Hotel Room", 53.3450, -6.2650),
    ("The Pub", 53.3440, -6.2670),
];

pub const ACTIVITIES: &[&str] = &["still", "walking", "running", "cycling", "transport"];

pub const OCR_PHRASES: &[&str] = &[
    "EXIT",
    "Gate 12",
    "Flight LH-123",
    "Coffee & Cake",
    "SALE 50%",
    "Platform 3",
    "Menu of the day",
    "Welcome to The Helix",
];

/// Generator parameters. Output is a pure function of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub days: usize,
    pub frames_per_day: usize,
    /// Scene changes per day; `None` plants one per 20 frames.
    pub scene_changes: Option<usize>,
    pub width: usize,
    pub height: usize,
    /// Per-channel uniform noise amplitude. With 0, frames of a scene share one image file.
    pub noise: u8,
    /// Deep-feature dimension; 0 omits `vectors.csv`.
    pub vector_dim: usize,
    pub first_day: NaiveDate,
}

impl SyntheticSpec {
    pub fn new(seed: u64, days: usize, frames_per_day: usize) -> Self {
        Self {
            seed,
            days,
            frames_per_day,
            scene_changes: None,
            width: 32,
            height: 24,
            noise: 3,
            vector_dim: 16,
            first_day: NaiveDate::from_ymd_opt(2016, 8, 15).expect("valid date"),
        }
    }

    pub fn with_scene_changes(mut self, n: usize) -> Self {
        self.scene_changes = Some(n);
        self
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_noise(mut self, noise: u8) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_vector_dim(mut self, dim: usize) -> Self {
        self.vector_dim = dim;
        self
    }
}

/// One row of `tasks.csv`.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct TaskHintRow {
    pub task_id: String,
    pub hint_t: u32,
    pub hint_text: String,
    pub truth_day_id: String,
    pub truth_start: u32,
    pub truth_end: u32,
    pub duration_s: u32,
}

/// A generated dataset held in memory.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub frames: Vec<FrameRecord>,
    /// Images in generation order.
    pub images: Vec<(String, Arc<Raster>)>,
    pub sensors: Vec<SensorSample>,
    pub detections: Vec<ConceptDetection>,
    pub ocr: Vec<OcrRecord>,
    pub vectors: Vec<VectorRecord>,
    /// `(day_id, first frame of a new scene)`.
    pub boundaries: Vec<(String, u32)>,
    pub tasks: Vec<TaskHintRow>,
}

struct Scene {
    start: usize,
    end: usize,
    background: [u8; 3],
    accent: (usize, usize, [u8; 3]),
    location: usize,
    activity: usize,
    concepts: [usize; 2],
    ocr: usize,
    vector: Vec<f64>,
}

fn luma(c: [u8; 3]) -> f64 {
    (299.0 * f64::from(c[0]) + 587.0 * f64::from(c[1]) + 114.0 * f64::from(c[2])) / 1000.0
}

fn background(rng: &mut ChaCha8Rng, bright: bool) -> [u8; 3] {
    loop {
        let c = [rng.random::<u8>(), rng.random::<u8>(), rng.random::<u8>()];
        let y = luma(c);
        if (bright && y >= 200.0) || (!bright && y <= 50.0) {
            return c;
        }
    }
}

/// Scene starts for a day of `n` frames: every scene at least
/// [`MIN_SCENE_LEN`] long. `changes` is reduced when it cannot fit.
fn plant_boundaries(rng: &mut ChaCha8Rng, n: usize, changes: usize) -> Vec<usize> {
    let changes = changes.min((n / MIN_SCENE_LEN).saturating_sub(1));
    if changes == 0 {
        return Vec::new();
    }
    let slack = n - MIN_SCENE_LEN * (changes + 1);
    let mut offsets: Vec<usize> = (0..changes).map(|_| rng.random_range(0..=slack)).collect();
    offsets.sort_unstable();
    offsets.iter().enumerate().map(|(k, r)| MIN_SCENE_LEN * (k + 1) + r).collect()
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Generates a dataset in memory.
pub fn synthesize(spec: &SyntheticSpec) -> SyntheticDataset {
    assert!(spec.width >= 4 && spec.height >= 4, "synthetic frames must be at least 4x4");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = SyntheticDataset {
        spec: spec.clone(),
        frames: Vec::new(),
        images: Vec::new(),
        sensors: Vec::new(),
        detections: Vec::new(),
        ocr: Vec::new(),
        vectors: Vec::new(),
        boundaries: Vec::new(),
        tasks: Vec::new(),
    };
    let leaf_like: Vec<usize> = (0..TAXONOMY.len()).filter(|&i| TAXONOMY[i].1.is_some() || i >= 15).collect();
    let n = spec.frames_per_day;
    let mut task_scene: Option<(String, usize, usize, usize, usize, [usize; 2])> = None;

    for d in 0..spec.days {
        let date = spec.first_day + Duration::days(d as i64);
        let day_id = date.format("%Y-%m-%d").to_string();
        let midnight_utc = date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
        let day_start_utc = midnight_utc + DAY_START_LOCAL_S - i64::from(TZ_OFFSET_MIN) * 60;
        if n == 0 {
            continue;
        }

        let changes = spec.scene_changes.unwrap_or(n / 20);
        let starts = plant_boundaries(&mut rng, n, changes);
        let mut bright = rng.random_bool(0.5);
        let mut scenes = Vec::new();
        let mut bounds = vec![0];
        bounds.extend(&starts);
        bounds.push(n);
        for w in bounds.windows(2) {
            let ax = rng.random_range(0..4);
            let ay = rng.random_range(0..4);
            let accent = PALETTE[rng.random_range(0..PALETTE.len())];
            let vector = (0..spec.vector_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            scenes.push(Scene {
                start: w[0],
                end: w[1] - 1,
                background: background(&mut rng, bright),
                accent: (ax, ay, accent),
                location: rng.random_range(0..LOCATIONS.len()),
                activity: rng.random_range(0..ACTIVITIES.len()),
                concepts: [
                    leaf_like[rng.random_range(0..leaf_like.len())],
                    leaf_like[rng.random_range(0..leaf_like.len())],
                ],
                ocr: rng.random_range(0..OCR_PHRASES.len()),
                vector,
            });
            bright = !bright;
        }
        out.boundaries.extend(starts.iter().map(|&s| (day_id.clone(), s as u32)));

        for (si, scene) in scenes.iter().enumerate() {
            let base = scene_raster(spec, scene);
            let shared_path = format!("images/{day_id}/scene_{si:04}.ppm");
            if spec.noise == 0 {
                out.images.push((shared_path.clone(), Arc::new(base.clone())));
            }
            for idx in scene.start..=scene.end {
                let ts = day_start_utc + idx as i64 * FRAME_INTERVAL_S;
                let image_path = if spec.noise == 0 {
                    shared_path.clone()
                } else {
                    let path = format!("images/{day_id}/{idx:05}.ppm");
                    out.images.push((path.clone(), Arc::new(noisy(&mut rng, &base, spec.noise))));
                    path
                };
                out.frames.push(FrameRecord {
                    day_id: day_id.clone(),
                    index: idx as u32,
                    timestamp_utc: ts,
                    tz_offset_min: TZ_OFFSET_MIN,
                    image_path,
                });
                frame_sidecars(&mut rng, &mut out, scene, &day_id, idx as u32, ts, &leaf_like);
            }
        }

        if d == 0 {
            let s = &scenes[scenes.len() / 2];
            task_scene = Some((day_id.clone(), s.start, s.end, s.location, s.activity, s.concepts));
        }
    }

    if let Some((day_id, start, end, loc, act, concepts)) = task_scene {
        let texts = [
            format!("I remember being at {}.", LOCATIONS[loc].0),
            format!("There was a {} in view.", TAXONOMY[concepts[0]].0),
            format!("My activity was {}.", ACTIVITIES[act]),
            format!("A {} was there as well.", TAXONOMY[concepts[1]].0),
            "It was on the first day of recording.".to_string(),
            format!("The moment lasted about {} minutes.", ((end - start + 1) as i64 * FRAME_INTERVAL_S + 59) / 60),
        ];
        for (i, text) in texts.into_iter().enumerate() {
            out.tasks.push(TaskHintRow {
                task_id: "t1".into(),
                hint_t: 30 * i as u32,
                hint_text: text,
                truth_day_id: day_id.clone(),
                truth_start: start as u32,
                truth_end: end as u32,
                duration_s: 180,
            });
        }
    }
    out
}

fn scene_raster(spec: &SyntheticSpec, scene: &Scene) -> Raster {
    let mut r = Raster::filled(spec.width, spec.height, scene.background);
    let (ax, ay, color) = scene.accent;
    // accent fills exactly one 4x4 descriptor cell
    let (x0, x1) = (ax * spec.width / 4, (ax + 1) * spec.width / 4);
    let (y0, y1) = (ay * spec.height / 4, (ay + 1) * spec.height / 4);
    for y in y0..y1 {
        for x in x0..x1 {
            r.set_pixel(x, y, color);
        }
    }
    r
}

fn noisy(rng: &mut ChaCha8Rng, base: &Raster, amp: u8) -> Raster {
    let amp = i16::from(amp);
    let bytes = base
        .rgb_bytes()
        .iter()
        .map(|&b| (i16::from(b) + rng.random_range(-amp..=amp)).clamp(0, 255) as u8)
        .collect();
    Raster::from_rgb(base.width(), base.height(), bytes).expect("same dimensions")
}

fn frame_sidecars(
    rng: &mut ChaCha8Rng,
    out: &mut SyntheticDataset,
    scene: &Scene,
    day_id: &str,
    idx: u32,
    ts: i64,
    leaf_like: &[usize],
) {
    if rng.random_bool(0.92) {
        let (name, lat, lon) = LOCATIONS[scene.location];
        let activity = ACTIVITIES[scene.activity];
        let speed = match activity {
            "still" => 0.0,
            "walking" => rng.random_range(3.0..6.0),
            "running" => rng.random_range(8.0..14.0),
            "cycling" => rng.random_range(12.0..28.0),
            _ => rng.random_range(20.0..110.0),
        };
        let mut s = SensorSample {
            timestamp_utc: ts + rng.random_range(-10..=10),
            geo: rng.random_bool(0.85).then(|| GeoPoint {
                lat: round_to(lat + rng.random_range(-0.002..0.002), 5),
                lon: round_to(lon + rng.random_range(-0.002..0.002), 5),
            }),
            location_name: rng.random_bool(0.8).then(|| name.to_string()),
            speed_kmh: rng.random_bool(0.85).then(|| round_to(speed, 1)),
            heart_rate_bpm: rng.random_bool(0.85).then(|| rng.random_range(55..=170)),
            steps: rng.random_bool(0.85).then(|| rng.random_range(0..=120)),
            calories: rng.random_bool(0.85).then(|| round_to(rng.random_range(0.0..15.0), 1)),
            activity: rng.random_bool(0.8).then(|| activity.to_string()),
        };
        if !s.has_payload() {
            s.activity = Some(activity.to_string());
        }
        out.sensors.push(s);
    }

    let mut emit = |rng: &mut ChaCha8Rng, concept: usize| {
        let bbox = rng.random_bool(0.7).then(|| {
            let w = f64::from(rng.random_range(1..=50u32)) / 100.0;
            let h = f64::from(rng.random_range(1..=50u32)) / 100.0;
            let x = f64::from(rng.random_range(0..=50u32)) / 100.0;
            let y = f64::from(rng.random_range(0..=50u32)) / 100.0;
            BBox { x, y, w, h }
        });
        out.detections.push(ConceptDetection {
            day_id: day_id.to_string(),
            frame_index: idx,
            concept_id: TAXONOMY[concept].0.to_string(),
            confidence: f64::from(rng.random_range(5..=100u32)) / 100.0,
            bbox,
        });
    };
    for &c in &scene.concepts {
        if rng.random_bool(0.6) {
            emit(rng, c);
        }
    }
    if rng.random_bool(0.15) {
        let c = leaf_like[rng.random_range(0..leaf_like.len())];
        emit(rng, c);
    }

    if rng.random_bool(0.12) {
        out.ocr.push(OcrRecord {
            day_id: day_id.to_string(),
            frame_index: idx,
            text: OCR_PHRASES[scene.ocr].to_string(),
        });
    }

    if !scene.vector.is_empty() {
        let values = scene.vector.iter().map(|v| round_to(v + rng.random_range(-0.1..0.1), 4)).collect();
        out.vectors.push(VectorRecord { day_id: day_id.to_string(), frame_index: idx, values });
    }
}

impl SyntheticDataset {
    pub fn records(&self) -> DatasetRecords {
        DatasetRecords {
            frames: self.frames.clone(),
            images: self.images.iter().cloned().collect::<HashMap<_, _>>(),
            sensors: self.sensors.clone(),
            detections: self.detections.clone(),
            taxonomy: TAXONOMY.iter().map(|(c, p)| (c.to_string(), p.map(str::to_string))).collect(),
            ocr: self.ocr.clone(),
            vectors: self.vectors.clone(),
        }
    }

    /// Assembles the store directly, skipping the disk round trip.
    pub fn to_store(&self) -> Result<LifelogStore, IngestError> {
        LifelogStore::assemble(self.records())
    }

    /// Writes the dataset directory.
    pub fn write(&self, out: &Path) -> Result<(), IngestError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| IngestError::Io { path, source }
        };
        fs::create_dir_all(out).map_err(io(out))?;
        for (rel, raster) in &self.images {
            let path = out.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io(parent))?;
            }
            fs::write(&path, raster.to_ppm()).map_err(io(&path))?;
        }

        let opt = |v: Option<String>| v.unwrap_or_default();
        let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let int = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_default();

        write_csv(out, "frames.csv", &["day_id", "index", "timestamp_utc", "tz_offset_min", "image_path"], |w| {
            for f in &self.frames {
                w.write_record([
                    f.day_id.clone(),
                    f.index.to_string(),
                    f.timestamp_utc.to_string(),
                    f.tz_offset_min.to_string(),
                    f.image_path.clone(),
                ])?;
            }
            Ok(())
        })?;
        write_csv(
            out,
            "sensors.csv",
            &["timestamp_utc", "lat", "lon", "location_name", "speed_kmh", "heart_rate_bpm", "steps", "calories", "activity"],
            |w| {
                for s in &self.sensors {
                    w.write_record([
                        s.timestamp_utc.to_string(),
                        num(s.geo.map(|g| g.lat)),
                        num(s.geo.map(|g| g.lon)),
                        opt(s.location_name.clone()),
                        num(s.speed_kmh),
                        int(s.heart_rate_bpm),
                        int(s.steps),
                        num(s.calories),
                        opt(s.activity.clone()),
                    ])?;
                }
                Ok(())
            },
        )?;
        write_csv(out, "concepts.csv", &["day_id", "frame_index", "concept_id", "confidence", "bx", "by", "bw", "bh"], |w| {
            for d in &self.detections {
                let b = d.bbox;
                w.write_record([
                    d.day_id.clone(),
                    d.frame_index.to_string(),
                    d.concept_id.clone(),
                    d.confidence.to_string(),
                    num(b.map(|b| b.x)),
                    num(b.map(|b| b.y)),
                    num(b.map(|b| b.w)),
                    num(b.map(|b| b.h)),
                ])?;
            }
            Ok(())
        })?;
        write_csv(out, "taxonomy.csv", &["concept_id", "parent_id"], |w| {
            for (c, p) in TAXONOMY {
                w.write_record([*c, p.unwrap_or("")])?;
            }
            Ok(())
        })?;
        write_csv(out, "ocr.csv", &["day_id", "frame_index", "text"], |w| {
            for o in &self.ocr {
                w.write_record([o.day_id.clone(), o.frame_index.to_string(), o.text.clone()])?;
            }
            Ok(())
        })?;
        if self.spec.vector_dim > 0 {
            let mut header = vec!["day_id".to_string(), "frame_index".to_string()];
            header.extend((0..self.spec.vector_dim).map(|i| format!("v{i}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(out, "vectors.csv", &header, |w| {
                for v in &self.vectors {
                    let mut row = vec![v.day_id.clone(), v.frame_index.to_string()];
                    row.extend(v.values.iter().map(f64::to_string));
                    w.write_record(row)?;
                }
                Ok(())
            })?;
        }
        write_csv(
            out,
            "tasks.csv",
            &["task_id", "hint_t", "hint_text", "truth_day_id", "truth_start", "truth_end", "duration_s"],
            |w| {
                for t in &self.tasks {
                    w.write_record([
                        t.task_id.clone(),
                        t.hint_t.to_string(),
                        t.hint_text.clone(),
                        t.truth_day_id.clone(),
                        t.truth_start.to_string(),
                        t.truth_end.to_string(),
                        t.duration_s.to_string(),
                    ])?;
                }
                Ok(())
            },
        )?;
        write_csv(out, "ground_truth_shots.csv", &["day_id", "boundary_index"], |w| {
            for (day, b) in &self.boundaries {
                w.write_record([day.clone(), b.to_string()])?;
            }
            Ok(())
        })
    }
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    body: impl FnOnce(&mut csv::Writer<fs::File>) -> csv::Result<()>,
) -> Result<(), IngestError> {
    let path = dir.join(name);
    let to_err = |e: csv::Error| {
        let path = path.clone();
        match e.into_kind() {
            csv::ErrorKind::Io(source) => IngestError::Io { path, source },
            other => IngestError::Io { path, source: std::io::Error::other(format!("{other:?}")) },
        }
    };
    let mut w = csv::Writer::from_path(&path).map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    body(&mut w).map_err(to_err)?;
    w.flush().map_err(|source| IngestError::Io { path: path.clone(), source })
}

/// Generates a dataset and writes it to `out`.
pub fn generate_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<SyntheticDataset, IngestError> {
    let ds = synthesize(spec);
    ds.write(out)?;
    Ok(ds)
}

/// Reads `ground_truth_shots.csv` back as `(day_id, boundary_index)` pairs.
pub fn read_ground_truth(root: &Path) -> Result<Vec<(String, u32)>, IngestError> {
    let path = root.join("ground_truth_shots.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| IngestError::MalformedRow {
        file: "ground_truth_shots.csv".into(),
        line: 0,
        reason: e.to_string(),
    })?;
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| IngestError::MalformedRow {
                file: "ground_truth_shots.csv".into(),
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })
        })
        .collect()
}
