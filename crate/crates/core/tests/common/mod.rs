//! Reference implementations and generators shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, Datelike, Timelike};
use lifegrid::descriptor::{normalize_vector, sketch_to_histmap, HistMap, SketchHistMap, BINS, CELLS};
use lifegrid::ingest::synthetic::{synthesize, ACTIVITIES, LOCATIONS, OCR_PHRASES, TAXONOMY};
use lifegrid::ingest::{ConceptKey, Frame, LifelogStore, SensorSample, SyntheticSpec};
use lifegrid::query::{
    Comparison, FilterContainer, HourMinute, Predicate, Query, RangeBound, SensorField, Weekday,
};
use lifegrid::segment::{SegmentMethod, SegmentTable};
use lifegrid::simsearch::{Metric, NeighborResult, SegmentDescriptor};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub fn store(seed: u64, days: usize, frames_per_day: usize) -> LifelogStore {
    synthesize(&SyntheticSpec::new(seed, days, frames_per_day)).to_store().unwrap()
}

// ---- query oracle -------------------------------------------------------

fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn is_same_or_descendant(store: &LifelogStore, mut key: ConceptKey, ancestor: &str) -> bool {
    loop {
        if store.taxonomy().id(key) == ancestor {
            return true;
        }
        match store.taxonomy().parent(key) {
            Some(p) => key = p,
            None => return false,
        }
    }
}

fn field(s: &SensorSample, f: SensorField) -> Option<f64> {
    match f {
        SensorField::Speed => s.speed_kmh,
        SensorField::HeartRate => s.heart_rate_bpm.map(f64::from),
        SensorField::Steps => s.steps.map(f64::from),
        SensorField::Calories => s.calories,
    }
}

fn naive_holds(store: &LifelogStore, frame: &Frame, p: &Predicate) -> bool {
    let local = DateTime::from_timestamp(frame.timestamp_utc + i64::from(frame.tz_offset_min) * 60, 0)
        .unwrap()
        .naive_utc();
    let sensor = frame.sensor.map(|i| &store.sensors()[i as usize]);
    match p {
        Predicate::Weekday { days } => {
            days.iter().any(|d| *d == Weekday::ALL[local.weekday().num_days_from_monday() as usize])
        }
        Predicate::TimeRange { start, end } => {
            let m = local.hour() * 60 + local.minute();
            let s = u32::from(start.hour()) * 60 + u32::from(start.minute());
            let e = u32::from(end.hour()) * 60 + u32::from(end.minute());
            if s <= e {
                (s..=e).contains(&m)
            } else {
                m >= s || m <= e
            }
        }
        Predicate::NamedLocation { name } => sensor
            .and_then(|s| s.location_name.as_deref())
            .is_some_and(|l| l.to_lowercase() == name.to_lowercase()),
        Predicate::GeoBox { lat_min, lat_max, lon_min, lon_max } => sensor.and_then(|s| s.geo).is_some_and(|g| {
            g.lat >= *lat_min && g.lat <= *lat_max && g.lon >= *lon_min && g.lon <= *lon_max
        }),
        Predicate::Range { field: f, bound } => match sensor.and_then(|s| field(s, *f)) {
            None => false,
            Some(v) => match *bound {
                RangeBound::Between { min, max } => v >= min && v <= max,
                RangeBound::Compare { op: Comparison::Lt, value } => v < value,
                RangeBound::Compare { op: Comparison::Le, value } => v <= value,
                RangeBound::Compare { op: Comparison::Eq, value } => v == value,
                RangeBound::Compare { op: Comparison::Ge, value } => v >= value,
                RangeBound::Compare { op: Comparison::Gt, value } => v > value,
            },
        },
        Predicate::Activity { name } => sensor
            .and_then(|s| s.activity.as_deref())
            .is_some_and(|a| a.to_lowercase() == name.to_lowercase()),
        Predicate::Concept { id, min_conf } => frame
            .detections
            .iter()
            .any(|d| d.confidence >= *min_conf && is_same_or_descendant(store, d.concept, id)),
        Predicate::OcrText { tokens } => {
            let have: Vec<String> = frame.ocr.iter().flat_map(|t| words(t)).collect();
            tokens.iter().all(|t| have.contains(t))
        }
    }
}

/// Every segment checked frame by frame against every container.
pub fn naive_evaluate(store: &LifelogStore, table: &SegmentTable, q: &Query) -> Result<Vec<(u64, Vec<u32>)>, String> {
    for c in &q.containers {
        for p in &c.predicates {
            if let Predicate::Concept { id, .. } = p {
                if !store.taxonomy().contains(id) {
                    return Err(format!("unknown concept {id}"));
                }
            }
        }
    }
    let mut segs: Vec<_> = table.segments().iter().collect();
    segs.sort_by(|a, b| (a.day_id.as_str(), a.start).cmp(&(b.day_id.as_str(), b.start)));
    let mut out = Vec::new();
    for seg in segs {
        let day = &store.days()[store.day_index(&seg.day_id).unwrap() as usize];
        let mut hits = Vec::new();
        for i in seg.start..=seg.end {
            let frame = &day.frames[i as usize];
            if q.containers.iter().any(|c| c.predicates.iter().all(|p| naive_holds(store, frame, p))) {
                hits.push(i);
            }
        }
        if !hits.is_empty() {
            out.push((seg.segment_id, hits));
        }
    }
    Ok(out)
}

/// A predicate whose constants are drawn from the store itself, so
/// boundary values actually occur.
pub fn random_predicate(rng: &mut impl Rng, store: &LifelogStore) -> Predicate {
    let sensors = store.sensors();
    let pick_sensor = |rng: &mut dyn rand::RngCore| &sensors[rng.random_range(0..sensors.len())];
    let hm = |rng: &mut dyn rand::RngCore| HourMinute::new(rng.random_range(4..11), rng.random_range(0..60)).unwrap();
    match rng.random_range(0..9) {
        0 => {
            let n = rng.random_range(1..=3);
            Predicate::Weekday { days: (0..n).map(|_| Weekday::ALL[rng.random_range(0..7)]).collect::<BTreeSet<_>>() }
        }
        1 => {
            let (a, b) = (hm(rng), hm(rng));
            if rng.random_bool(0.1) {
                Predicate::TimeRange { start: HourMinute::new(23, 0).unwrap(), end: b }
            } else {
                Predicate::TimeRange { start: a.min(b), end: a.max(b) }
            }
        }
        2 => {
            let name = LOCATIONS.choose(rng).unwrap().0;
            let name = if rng.random_bool(0.3) { name.to_uppercase() } else { name.to_string() };
            Predicate::NamedLocation { name }
        }
        3 => {
            let (_, lat, lon) = *LOCATIONS.choose(rng).unwrap();
            let (dl, dn) = (rng.random_range(0.0005..0.01), rng.random_range(0.0005..0.01));
            Predicate::GeoBox { lat_min: lat - dl, lat_max: lat + dl, lon_min: lon - dn, lon_max: lon + dn }
        }
        4 | 5 => {
            let f = SensorField::ALL[rng.random_range(0..4)];
            let mut vals: Vec<f64> = (0..2).filter_map(|_| field(pick_sensor(rng), f)).collect();
            if vals.is_empty() {
                vals.push(10.0);
            }
            let bound = if vals.len() == 2 && rng.random_bool(0.4) {
                RangeBound::Between { min: vals[0].min(vals[1]), max: vals[0].max(vals[1]) }
            } else {
                let op = [Comparison::Lt, Comparison::Le, Comparison::Eq, Comparison::Ge, Comparison::Gt][rng.random_range(0..5)];
                RangeBound::Compare { op, value: vals[0] }
            };
            Predicate::Range { field: f, bound }
        }
        6 => Predicate::Activity { name: ACTIVITIES.choose(rng).unwrap().to_string() },
        7 => {
            let id = TAXONOMY.choose(rng).unwrap().0.to_string();
            let min_conf = if rng.random_bool(0.5) { 0.0 } else { f64::from(rng.random_range(0..=100u32)) / 100.0 };
            Predicate::Concept { id, min_conf }
        }
        _ => {
            let words = words(OCR_PHRASES.choose(rng).unwrap());
            let n = rng.random_range(0..=words.len().min(2));
            Predicate::OcrText { tokens: words.into_iter().take(n.max(1)).collect() }
        }
    }
}

pub fn random_query(rng: &mut impl Rng, store: &LifelogStore) -> Query {
    let containers = (0..rng.random_range(1..=3))
        .map(|_| FilterContainer::new((0..rng.random_range(1..=3)).map(|_| random_predicate(rng, store)).collect()))
        .collect();
    let method = if rng.random_bool(0.5) { SegmentMethod::Shot } else { SegmentMethod::Uniform };
    Query::new(containers).with_method(method)
}

// ---- similarity oracle --------------------------------------------------

/// Mean total-variation distance over the selected cells.
pub fn masked_tv(a: &HistMap, b: &HistMap, mask: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for (cell, &on) in mask.iter().enumerate() {
        if on {
            let l1: f64 = a.cell(cell).iter().zip(b.cell(cell)).map(|(x, y)| (x - y).abs()).sum();
            total += l1 / 2.0;
            n += 1;
        }
    }
    total / n as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Full sort of `(score, id)` by the metric's direction, ties by id.
fn full_sort(mut scored: Vec<(f64, u64)>, higher_first: bool, k: usize) -> Vec<(u64, f64)> {
    scored.sort_by(|a, b| {
        let o = a.0.partial_cmp(&b.0).unwrap();
        let o = if higher_first { o.reverse() } else { o };
        o.then(a.1.cmp(&b.1))
    });
    scored.into_iter().take(k).map(|(s, id)| (id, s)).collect()
}

pub fn brute_knn(entries: &[SegmentDescriptor], query: u64, k: usize, metric: Metric) -> Vec<(u64, f64)> {
    let q = entries.iter().find(|e| e.segment_id == query).unwrap();
    let mut scored = Vec::new();
    for e in entries {
        if e.segment_id == query {
            continue;
        }
        match metric {
            Metric::CosineDeep => {
                if let (Some(a), Some(b)) = (&q.vector, &e.vector) {
                    scored.push((dot(a.values(), b.values()), e.segment_id));
                }
            }
            Metric::HistMapL1 => {
                scored.push((masked_tv(&q.histmap, &e.histmap, &[true; CELLS]), e.segment_id))
            }
        }
    }
    full_sort(scored, metric == Metric::CosineDeep, k)
}

pub fn random_histmap(rng: &mut impl Rng) -> HistMap {
    let mut cells = [[0.0; BINS]; CELLS];
    for cell in &mut cells {
        if rng.random_bool(0.5) {
            cell[rng.random_range(0..BINS)] = 1.0;
        } else {
            for v in cell.iter_mut() {
                *v = if rng.random_bool(0.3) { rng.random_range(0.0..1.0) } else { 0.0 };
            }
            cell[rng.random_range(0..BINS)] += 0.1;
        }
    }
    HistMap::from_cells(cells).unwrap()
}

/// Random descriptors with a share of exact duplicates so ties occur.
pub fn random_entries(rng: &mut impl Rng, n: usize, dim: usize, with_vector: f64) -> Vec<SegmentDescriptor> {
    let mut out: Vec<SegmentDescriptor> = Vec::with_capacity(n);
    let mut ids: Vec<u64> = (0..n as u64 * 3).collect();
    ids.shuffle(rng);
    for &id in ids.iter().take(n) {
        if !out.is_empty() && rng.random_bool(0.1) {
            let twin = out[rng.random_range(0..out.len())].clone();
            out.push(SegmentDescriptor { segment_id: id, ..twin });
            continue;
        }
        let vector = rng.random_bool(with_vector).then(|| {
            let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            normalize_vector(&raw).unwrap()
        });
        out.push(SegmentDescriptor { segment_id: id, histmap: random_histmap(rng), vector });
    }
    out
}

pub fn random_sketch(rng: &mut impl Rng) -> SketchHistMap {
    let mut canvas = [None; CELLS];
    let painted = rng.random_range(1..=CELLS);
    for c in rand::seq::index::sample(rng, CELLS, painted) {
        canvas[c] = Some(rng.random_range(0..BINS));
    }
    sketch_to_histmap(&canvas).unwrap()
}

/// Compares a result list with the brute-force ranking; positions may only
/// differ where the scores tie. `all` holds the brute-force score of every
/// candidate.
pub fn agrees(got: &[NeighborResult], want: &[(u64, f64)], all: &HashMap<u64, f64>) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} results, expected {}", got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        let rank = i + 1;
        if g.rank != rank {
            return Err(format!("rank field {} at position {rank}", g.rank));
        }
        if (g.score - w.1).abs() >= 1e-9 {
            return Err(format!("rank {rank}: score {} vs {}", g.score, w.1));
        }
        if all.get(&g.segment_id).is_none_or(|s| (s - g.score).abs() >= 1e-9) {
            return Err(format!("rank {rank}: segment {} reported with wrong score", g.segment_id));
        }
        if g.segment_id != w.0 && (all[&w.0] - g.score).abs() >= 1e-9 {
            return Err(format!("rank {rank}: segment {} vs {}", g.segment_id, w.0));
        }
    }
    Ok(())
}

pub fn score_table(v: &[(u64, f64)]) -> HashMap<u64, f64> {
    v.iter().copied().collect()
}

pub fn brute_sketch(entries: &[SegmentDescriptor], sk: &SketchHistMap, k: usize) -> Vec<(u64, f64)> {
    let mask: Vec<bool> = (0..CELLS).map(|c| sk.mask.is_set(c)).collect();
    let scored = entries.iter().map(|e| (masked_tv(&sk.histmap, &e.histmap, &mask), e.segment_id)).collect();
    full_sort(scored, false, k)
}

// ---- segmentation -------------------------------------------------------

#[derive(Debug, Default, Clone, Copy)]
pub struct BoundaryTally {
    pub days: usize,
    pub planted: usize,
    pub recovered: usize,
    pub spurious: usize,
    /// Days where some method failed to cover every frame exactly once.
    pub bad_partitions: usize,
}

impl BoundaryTally {
    pub fn recall(&self) -> f64 {
        if self.planted == 0 {
            1.0
        } else {
            self.recovered as f64 / self.planted as f64
        }
    }
}

/// Spans must tile `0..n` in order with no gap or overlap.
pub fn tiles(spans: &[(u32, u32)], n: usize) -> bool {
    let mut next = 0u32;
    for &(s, e) in spans {
        if s != next || e < s {
            return false;
        }
        next = e + 1;
    }
    next as usize == n
}

/// Synthesizes `days` single-day stores with random lengths and scene
/// counts, segments them and compares shot starts with the planted ones.
pub fn segmentation_trial(seed: u64, days: usize, noise: u8) -> BoundaryTally {
    use lifegrid::segment::{Segmentation, SegmentationConfig};
    use rand::SeedableRng;
    use rayon::prelude::*;

    let tallies: Vec<BoundaryTally> = (0..days)
        .into_par_iter()
        .map(|d| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let n = rng.random_range(1..=300);
            let changes = rng.random_range(0..=n / 8);
            let spec = SyntheticSpec::new(rng.random(), 1, n)
                .with_scene_changes(changes)
                .with_noise(noise)
                .with_size(16, 12)
                .with_vector_dim(0);
            let data = synthesize(&spec);
            let store = data.to_store().unwrap();
            let seg = Segmentation::build(&store, &SegmentationConfig::default()).unwrap();
            let mut t = BoundaryTally { days: 1, ..Default::default() };
            for table in [&seg.shot, &seg.uniform] {
                let spans: Vec<(u32, u32)> = table.segments().iter().map(|s| (s.start, s.end)).collect();
                if !tiles(&spans, n) {
                    t.bad_partitions = 1;
                }
            }
            let planted: BTreeSet<u32> = data.boundaries.iter().map(|b| b.1).collect();
            let found: BTreeSet<u32> = seg.shot.segments().iter().map(|s| s.start).filter(|&s| s > 0).collect();
            t.planted = planted.len();
            t.recovered = planted.intersection(&found).count();
            t.spurious = found.difference(&planted).count();
            t
        })
        .collect();
    tallies.iter().fold(BoundaryTally::default(), |a, t| BoundaryTally {
        days: a.days + t.days,
        planted: a.planted + t.planted,
        recovered: a.recovered + t.recovered,
        spurious: a.spurious + t.spurious,
        bad_partitions: a.bad_partitions + t.bad_partitions,
    })
}

// ---- dsl ----------------------------------------------------------------

/// `(line number, input, expected)` triples from the golden corpus. An
/// expectation is either the canonical print or `ERROR@<byte offset>`.
pub fn dsl_corpus() -> Vec<(usize, String, String)> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/dsl_corpus.txt");
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l))
        .collect();
    assert_eq!(lines.len() % 2, 0, "corpus must alternate input and expectation");
    lines.chunks(2).map(|p| (p[0].0, p[0].1.replace("\\n", "\n"), p[1].1.to_string())).collect()
}

/// Checks one corpus case.
pub fn check_corpus_case(input: &str, expected: &str) -> Result<(), String> {
    use lifegrid::dsl::{parse, print};
    match (parse(input), expected.strip_prefix("ERROR@")) {
        (Ok(q), None) => {
            let printed = print(&q);
            if printed != expected {
                return Err(format!("printed `{printed}`"));
            }
            match parse(&printed) {
                Ok(back) if back == q => Ok(()),
                Ok(_) => Err(format!("reparse of `{printed}` differs")),
                Err(e) => Err(format!("reparse of `{printed}` failed: {e}")),
            }
        }
        (Err(e), Some(offset)) if e.offset.to_string() == offset => Ok(()),
        (Err(e), Some(_)) => Err(format!("error at {}: {e}", e.offset)),
        (Ok(q), Some(_)) => Err(format!("parsed as `{}`", print(&q))),
        (Err(e), None) => Err(format!("failed: {e}")),
    }
}
