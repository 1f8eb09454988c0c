//! Text syntax for filter queries.
//!
//! ```text
//! weekday:mon,tue AND time:10:00-14:30 AND loc:"The Helix"
//! concept:beer@0.5 OR (concept:wine AND speed:<5)
//! ```
//!
//! `AND` binds tighter than `OR`; keywords are case-insensitive. [`print`]
//! emits the canonical form, which [`parse`] reads back unchanged.

mod parser;

use std::fmt::Write;

pub use parser::{parse, ParseError};

use crate::query::{Predicate, Query, RangeBound, SensorField};

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || !s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn word(s: &str) -> String {
    if needs_quotes(s) {
        quote(s)
    } else {
        s.to_string()
    }
}

fn field_key(f: SensorField) -> &'static str {
    match f {
        SensorField::Speed => "speed",
        SensorField::HeartRate => "hr",
        SensorField::Steps => "steps",
        SensorField::Calories => "cal",
    }
}

/// Canonical text of one predicate.
pub fn print_predicate(p: &Predicate) -> String {
    match p {
        Predicate::Weekday { days } => {
            let days: Vec<&str> = days.iter().map(|d| d.as_str()).collect();
            format!("weekday:{}", days.join(","))
        }
        Predicate::TimeRange { start, end } => format!("time:{start}-{end}"),
        Predicate::NamedLocation { name } => format!("loc:{}", quote(name)),
        Predicate::GeoBox { lat_min, lat_max, lon_min, lon_max } => {
            format!("geo:[{lat_min},{lat_max},{lon_min},{lon_max}]")
        }
        Predicate::Range { field, bound } => match bound {
            RangeBound::Compare { op, value } => format!("{}:{}{value}", field_key(*field), op.symbol()),
            RangeBound::Between { min, max } => format!("{}:{min}-{max}", field_key(*field)),
        },
        Predicate::Activity { name } => format!("activity:{}", word(name)),
        Predicate::Concept { id, min_conf } if *min_conf == 0.0 => format!("concept:{}", word(id)),
        Predicate::Concept { id, min_conf } => format!("concept:{}@{min_conf}", word(id)),
        Predicate::OcrText { tokens } => format!("ocr:{}", quote(&tokens.join(" "))),
    }
}

/// Canonical text of a query. The segmentation method is not part of the
/// text form.
pub fn print(q: &Query) -> String {
    q.containers
        .iter()
        .map(|c| c.predicates.iter().map(print_predicate).collect::<Vec<_>>().join(" AND "))
        .collect::<Vec<_>>()
        .join(" OR ")
}

fn describe(p: &Predicate) -> String {
    match p {
        Predicate::Weekday { days } => {
            let days: Vec<&str> = days.iter().map(|d| d.as_str()).collect();
            format!("weekday in {{{}}}", days.join(", "))
        }
        Predicate::TimeRange { start, end } if p.wraps_midnight() => {
            format!("local time in [{start}, 24:00) or [00:00, {end}]")
        }
        Predicate::TimeRange { start, end } => format!("local time in [{start}, {end}]"),
        Predicate::NamedLocation { name } => format!("location named {}", quote(name)),
        Predicate::GeoBox { lat_min, lat_max, lon_min, lon_max } => {
            format!("lat in [{lat_min}, {lat_max}] and lon in [{lon_min}, {lon_max}]")
        }
        Predicate::Range { field, bound: RangeBound::Compare { op, value } } => {
            format!("{} {} {value}", field.column(), op.symbol())
        }
        Predicate::Range { field, bound: RangeBound::Between { min, max } } => {
            format!("{} in [{min}, {max}]", field.column())
        }
        Predicate::Activity { name } => format!("activity is {}", quote(name)),
        Predicate::Concept { id, min_conf } => {
            format!("detects {id} or a descendant with confidence >= {min_conf}")
        }
        Predicate::OcrText { tokens } => format!("OCR text contains all of [{}]", tokens.join(", ")),
    }
}

/// Human-readable tree of the parse, in source order with byte spans.
pub fn explain(text: &str) -> Result<String, ParseError> {
    let containers = parser::Parser::new(text).parse_query()?;
    let mut out = String::new();
    let plural = if containers.len() == 1 { "" } else { "s" };
    let _ = writeln!(out, "any of {} container{plural}:", containers.len());
    for (i, c) in containers.iter().enumerate() {
        let _ = writeln!(out, "  container {} [{}..{}], all on one frame:", i + 1, c.span.start, c.span.end);
        for p in &c.node {
            let _ = writeln!(out, "    {} [{}..{}]", describe(&p.node), p.span.start, p.span.end);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        let src = r#"loc:"The Helix" and WEEKDAY:fri,mon AND time:9:00-14:30"#;
        let q = parse(src).unwrap();
        let text = print(&q);
        assert_eq!(text, r#"weekday:mon,fri AND time:09:00-14:30 AND loc:"The Helix""#);
        assert_eq!(parse(&text).unwrap(), q);
    }

    #[test]
    fn quoting_is_minimal() {
        let p = Predicate::Activity { name: "in vehicle".into() };
        assert_eq!(print_predicate(&p), r#"activity:"in vehicle""#);
        let p = Predicate::Activity { name: "walking".into() };
        assert_eq!(print_predicate(&p), "activity:walking");
        let p = Predicate::NamedLocation { name: r#"Bob's "Pub""#.into() };
        let text = print_predicate(&p);
        assert_eq!(text, r#"loc:"Bob's ""Pub""""#);
        assert_eq!(parse(&text).unwrap().containers[0].predicates[0], p);
    }

    #[test]
    fn numbers_round_trip() {
        for src in ["speed:>-0.5", "cal:0.1-0.30000000000000004", "hr:<=1000000", "steps:-3--1"] {
            let q = parse(src).unwrap();
            assert_eq!(parse(&print(&q)).unwrap(), q, "{src}");
        }
        assert_eq!(print(&parse("concept:dog@0").unwrap()), "concept:dog");
        assert_eq!(print(&parse("concept:dog@0.50").unwrap()), "concept:dog@0.5");
    }

    #[test]
    fn explain_mentions_every_predicate() {
        let text = explain("time:23:00-01:00 AND concept:beer OR ocr:\"Gate 12\"").unwrap();
        assert!(text.starts_with("any of 2 containers:"));
        assert!(text.contains("[23:00, 24:00) or [00:00, 01:00]"));
        assert!(text.contains("detects beer"));
        assert!(text.contains("[gate, 12]"));
        assert!(text.contains("[0..16]"));
        assert!(explain("bogus").is_err());
    }
}
