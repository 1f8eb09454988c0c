use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::segment::SegmentMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] =
        [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri, Weekday::Sat, Weekday::Sun];

    /// Monday = 0.
    pub fn from_index(i: usize) -> Weekday {
        Self::ALL[i % 7]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Mon => "mon",
            Weekday::Tue => "tue",
            Weekday::Wed => "wed",
            Weekday::Thu => "thu",
            Weekday::Fri => "fri",
            Weekday::Sat => "sat",
            Weekday::Sun => "sun",
        }
    }

    pub fn parse(s: &str) -> Option<Weekday> {
        Self::ALL.into_iter().find(|d| d.as_str().eq_ignore_ascii_case(s))
    }
}

/// Local wall-clock time with minute resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HourMinute {
    hour: u8,
    minute: u8,
}

impl HourMinute {
    pub fn new(hour: u8, minute: u8) -> Option<Self> {
        (hour < 24 && minute < 60).then_some(Self { hour, minute })
    }

    pub fn hour(self) -> u8 {
        self.hour
    }

    pub fn minute(self) -> u8 {
        self.minute
    }

    pub fn minute_of_day(self) -> u16 {
        u16::from(self.hour) * 60 + u16::from(self.minute)
    }
}

impl fmt::Display for HourMinute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour, self.minute)
    }
}

impl FromStr for HourMinute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected HH:MM, got `{s}`");
        let (h, m) = s.split_once(':').ok_or_else(bad)?;
        if h.is_empty() || h.len() > 2 || m.len() != 2 || !h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        HourMinute::new(h.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?).ok_or_else(bad)
    }
}

impl Serialize for HourMinute {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HourMinute {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensorField {
    #[serde(rename = "speed_kmh")]
    Speed,
    #[serde(rename = "heart_rate_bpm")]
    HeartRate,
    #[serde(rename = "steps")]
    Steps,
    #[serde(rename = "calories")]
    Calories,
}

impl SensorField {
    pub const ALL: [SensorField; 4] = [SensorField::Speed, SensorField::HeartRate, SensorField::Steps, SensorField::Calories];

    pub fn column(self) -> &'static str {
        match self {
            SensorField::Speed => "speed_kmh",
            SensorField::HeartRate => "heart_rate_bpm",
            SensorField::Steps => "steps",
            SensorField::Calories => "calories",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
        }
    }
}

/// Either a one-sided comparison or an inclusive interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeBound {
    Compare { op: Comparison, value: f64 },
    Between { min: f64, max: f64 },
}

impl RangeBound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            RangeBound::Compare { op, value } => op.holds(v, value),
            RangeBound::Between { min, max } => min <= v && v <= max,
        }
    }
}

/// One typed filter. All bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    Weekday { days: BTreeSet<Weekday> },
    /// `start > end` wraps midnight.
    TimeRange { start: HourMinute, end: HourMinute },
    NamedLocation { name: String },
    GeoBox { lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64 },
    Range { field: SensorField, bound: RangeBound },
    Activity { name: String },
    Concept {
        id: String,
        #[serde(default)]
        min_conf: f64,
    },
    OcrText { tokens: Vec<String> },
}

impl Predicate {
    /// Fixed key order used for canonical containers.
    pub fn sort_key(&self) -> u8 {
        match self {
            Predicate::Weekday { .. } => 0,
            Predicate::TimeRange { .. } => 1,
            Predicate::NamedLocation { .. } => 2,
            Predicate::GeoBox { .. } => 3,
            Predicate::Range { field, .. } => 4 + *field as u8,
            Predicate::Activity { .. } => 8,
            Predicate::Concept { .. } => 9,
            Predicate::OcrText { .. } => 10,
        }
    }

    /// Builds an OCR predicate from free text.
    pub fn ocr(text: &str) -> Predicate {
        Predicate::OcrText { tokens: super::tokenize(text) }
    }

    /// Time range that crosses 00:00.
    pub fn wraps_midnight(&self) -> bool {
        matches!(self, Predicate::TimeRange { start, end } if start > end)
    }

    /// Shape checks that do not need the store.
    pub fn check(&self) -> Result<(), String> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            Predicate::Weekday { days } if days.is_empty() => Err("weekday set is empty".into()),
            Predicate::GeoBox { lat_min, lat_max, lon_min, lon_max } => {
                if !finite(&[*lat_min, *lat_max, *lon_min, *lon_max]) {
                    Err("geo bounds must be finite".into())
                } else if lat_min > lat_max || lon_min > lon_max {
                    Err("geo bounds are not ordered (lat_min,lat_max,lon_min,lon_max)".into())
                } else {
                    Ok(())
                }
            }
            Predicate::Range { bound: RangeBound::Compare { value, .. }, .. } if !value.is_finite() => {
                Err("range value must be finite".into())
            }
            Predicate::Range { bound: RangeBound::Between { min, max }, .. } => {
                if !finite(&[*min, *max]) {
                    Err("range bounds must be finite".into())
                } else if min > max {
                    Err("interval lower bound exceeds upper bound".into())
                } else {
                    Ok(())
                }
            }
            Predicate::Concept { min_conf, .. } if !(0.0..=1.0).contains(min_conf) => {
                Err("concept confidence must lie in [0, 1]".into())
            }
            Predicate::Concept { id, .. } if id.is_empty() => Err("concept id is empty".into()),
            Predicate::OcrText { tokens } if tokens.is_empty() => Err("OCR filter has no words".into()),
            _ => Ok(()),
        }
    }
}

/// A conjunction of predicates, all evaluated on the same frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterContainer {
    pub predicates: Vec<Predicate>,
}

impl FilterContainer {
    pub fn new(predicates: Vec<Predicate>) -> Self {
        Self { predicates }
    }

    /// Predicates stably sorted by key; semantics are order-independent.
    pub fn canonical(mut self) -> Self {
        self.predicates.sort_by_key(Predicate::sort_key);
        self
    }
}

fn default_method() -> SegmentMethod {
    SegmentMethod::Shot
}

/// A disjunction of containers, evaluated over one segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub containers: Vec<FilterContainer>,
    #[serde(default = "default_method")]
    pub method: SegmentMethod,
}

impl Query {
    pub fn new(containers: Vec<FilterContainer>) -> Self {
        Self { containers, method: SegmentMethod::Shot }
    }

    pub fn with_method(mut self, method: SegmentMethod) -> Self {
        self.method = method;
        self
    }

    pub fn canonical(mut self) -> Self {
        self.containers = self.containers.into_iter().map(FilterContainer::canonical).collect();
        self
    }
}
