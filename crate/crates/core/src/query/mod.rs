//! Combinable filter queries over frames and segments.
//!
//! Predicates inside a [`FilterContainer`] must all hold on one frame;
//! a [`Query`] matches a segment when any container matches any of its
//! frames. Absent sensor data makes a sensor predicate false.

mod index;
mod model;

use std::collections::BTreeSet;

pub use index::{evaluate, evaluate_scan, QueryIndex, ResultEntry, ResultList};
pub use model::{
    Comparison, FilterContainer, HourMinute, Predicate, Query, RangeBound, SensorField, Weekday,
};

use crate::ingest::{ConceptKey, ConceptTaxonomy, Frame, FrameRef, LifelogStore, SensorSample};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// `concept` and all of its descendants.
pub fn expand_concept(tax: &ConceptTaxonomy, concept: &str) -> Result<BTreeSet<String>, QueryError> {
    let key = tax.key(concept).ok_or_else(|| QueryError::UnknownConcept(concept.to_string()))?;
    Ok(tax.subtree(key).into_iter().map(|k| tax.id(k).to_string()).collect())
}

const SECONDS_PER_DAY: i64 = 86_400;

/// Weekday of a local timestamp (1970-01-01 was a Thursday).
pub fn local_weekday(local_s: i64) -> Weekday {
    Weekday::from_index((local_s.div_euclid(SECONDS_PER_DAY) + 3).rem_euclid(7) as usize)
}

/// Minutes since local midnight.
pub fn local_minute_of_day(local_s: i64) -> u16 {
    (local_s.rem_euclid(SECONDS_PER_DAY) / 60) as u16
}

pub(crate) fn sensor_value(s: &SensorSample, field: SensorField) -> Option<f64> {
    match field {
        SensorField::Speed => s.speed_kmh,
        SensorField::HeartRate => s.heart_rate_bpm.map(f64::from),
        SensorField::Steps => s.steps.map(f64::from),
        SensorField::Calories => s.calories,
    }
}

/// A predicate with concept ids resolved against the taxonomy.
#[derive(Debug, Clone)]
pub(crate) enum Compiled<'q> {
    Plain(&'q Predicate),
    Concept { subtree: Vec<ConceptKey>, min_conf: f64 },
    Ocr { tokens: &'q [String] },
    Location(String),
    Activity(String),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledContainer<'q> {
    pub(crate) predicates: Vec<Compiled<'q>>,
}

impl<'q> CompiledContainer<'q> {
    pub(crate) fn new(c: &'q FilterContainer, tax: &ConceptTaxonomy) -> Result<Self, QueryError> {
        if c.predicates.is_empty() {
            return Err(QueryError::InvalidQuery("container has no predicates".into()));
        }
        let predicates = c
            .predicates
            .iter()
            .map(|p| {
                p.check().map_err(QueryError::InvalidQuery)?;
                Ok(match p {
                    Predicate::Concept { id, min_conf } => {
                        let key = tax.key(id).ok_or_else(|| QueryError::UnknownConcept(id.clone()))?;
                        Compiled::Concept { subtree: tax.subtree(key), min_conf: *min_conf }
                    }
                    Predicate::OcrText { tokens } => Compiled::Ocr { tokens },
                    Predicate::NamedLocation { name } => Compiled::Location(name.to_lowercase()),
                    Predicate::Activity { name } => Compiled::Activity(name.to_lowercase()),
                    other => Compiled::Plain(other),
                })
            })
            .collect::<Result<_, QueryError>>()?;
        Ok(Self { predicates })
    }

    pub(crate) fn matches(&self, store: &LifelogStore, frame: &Frame) -> bool {
        let sensor = store.sensor_of(frame);
        self.predicates.iter().all(|p| compiled_holds(p, frame, sensor))
    }
}

fn compiled_holds(p: &Compiled<'_>, frame: &Frame, sensor: Option<&SensorSample>) -> bool {
    match p {
        Compiled::Concept { subtree, min_conf } => frame
            .detections
            .iter()
            .any(|d| d.confidence >= *min_conf && subtree.binary_search(&d.concept).is_ok()),
        Compiled::Ocr { tokens } => {
            let have: BTreeSet<String> = frame.ocr.iter().flat_map(|t| tokenize(t)).collect();
            tokens.iter().all(|t| have.contains(t))
        }
        Compiled::Location(name) => {
            sensor.and_then(|s| s.location_name.as_ref()).is_some_and(|l| l.to_lowercase() == *name)
        }
        Compiled::Activity(name) => {
            sensor.and_then(|s| s.activity.as_ref()).is_some_and(|a| a.to_lowercase() == *name)
        }
        Compiled::Plain(p) => match p {
            Predicate::Weekday { days } => days.contains(&local_weekday(frame.local_time())),
            Predicate::TimeRange { start, end } => {
                let m = local_minute_of_day(frame.local_time());
                let (s, e) = (start.minute_of_day(), end.minute_of_day());
                if s <= e {
                    s <= m && m <= e
                } else {
                    m >= s || m <= e
                }
            }
            Predicate::GeoBox { lat_min, lat_max, lon_min, lon_max } => sensor.and_then(|s| s.geo).is_some_and(|g| {
                *lat_min <= g.lat && g.lat <= *lat_max && *lon_min <= g.lon && g.lon <= *lon_max
            }),
            Predicate::Range { field, bound } => {
                sensor.and_then(|s| sensor_value(s, *field)).is_some_and(|v| bound.holds(v))
            }
            // resolved during compilation
            Predicate::Concept { .. }
            | Predicate::OcrText { .. }
            | Predicate::NamedLocation { .. }
            | Predicate::Activity { .. } => unreachable!("compiled separately"),
        },
    }
}

/// Whether every predicate of `container` holds on the frame.
pub fn frame_matches(store: &LifelogStore, at: FrameRef, container: &FilterContainer) -> Result<bool, QueryError> {
    let compiled = CompiledContainer::new(container, store.taxonomy())?;
    Ok(compiled.matches(store, store.frame(at)))
}
