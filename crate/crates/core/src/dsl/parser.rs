use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use crate::query::{
    tokenize, Comparison, FilterContainer, HourMinute, Predicate, Query, RangeBound, SensorField, Weekday,
};

/// Where and why parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

const MAX_DEPTH: usize = 64;

pub(crate) const PREDICATE_KEYS: [&str; 11] =
    ["weekday:", "time:", "loc:", "geo:", "speed", "hr", "steps", "cal", "activity:", "concept:", "ocr:"];

/// A parsed predicate with its source span.
#[derive(Debug, Clone)]
pub(crate) struct Spanned<T> {
    pub(crate) node: T,
    pub(crate) span: Range<usize>,
}

pub(crate) type ParsedContainer = Spanned<Vec<Spanned<Predicate>>>;

pub(crate) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    depth: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Self { src, pos: 0, depth: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let before = &self.src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        ParseError {
            offset,
            line,
            column: self.src[line_start..offset].chars().count() + 1,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        self.error_at(self.pos, message, expected)
    }

    fn describe_here(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(c) => format!("`{c}`"),
        }
    }

    fn expect_char(&mut self, want: char) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.bump();
            Ok(())
        } else {
            let what = self.describe_here();
            Err(self.error(format!("unexpected {what}"), &[&format!("`{want}`")]))
        }
    }

    /// Case-insensitive keyword not followed by a word character.
    fn at_keyword(&self, kw: &str) -> bool {
        let rest = self.rest();
        rest.len() >= kw.len()
            && rest.is_char_boundary(kw.len())
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && !rest[kw.len()..].chars().next().is_some_and(is_word_char)
    }

    pub(crate) fn parse_query(&mut self) -> Result<Vec<ParsedContainer>, ParseError> {
        let mut containers = vec![self.container()?];
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(containers);
            }
            if self.at_keyword("OR") {
                self.pos += 2;
                containers.push(self.container()?);
            } else {
                let what = self.describe_here();
                return Err(self.error(format!("unexpected {what}"), &["AND", "OR", "end of input"]));
            }
        }
    }

    fn container(&mut self) -> Result<ParsedContainer, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('(') {
            if self.depth >= MAX_DEPTH {
                return Err(self.error("parentheses nested too deeply", &[]));
            }
            self.bump();
            self.depth += 1;
            let inner = self.container()?;
            self.skip_ws();
            self.expect_char(')')?;
            self.depth -= 1;
            return Ok(Spanned { node: inner.node, span: start..self.pos });
        }
        let mut preds = vec![self.predicate()?];
        loop {
            let save = self.pos;
            self.skip_ws();
            if self.at_keyword("AND") {
                self.pos += 3;
                preds.push(self.predicate()?);
            } else {
                self.pos = save;
                break;
            }
        }
        Ok(Spanned { node: preds, span: start..self.pos })
    }

    fn predicate(&mut self) -> Result<Spanned<Predicate>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let key_len = self.rest().chars().take_while(char::is_ascii_alphabetic).count();
        let key = self.rest()[..key_len].to_ascii_lowercase();
        let node = match key.as_str() {
            "weekday" | "time" | "loc" | "geo" | "activity" | "concept" | "ocr" => {
                self.pos += key_len;
                if self.peek() != Some(':') {
                    return Err(self.error(format!("`{key}` must be followed directly by `:`"), &["`:`"]));
                }
                self.bump();
                self.skip_ws();
                match key.as_str() {
                    "weekday" => self.weekdays()?,
                    "time" => {
                        let a = self.hhmm()?;
                        self.skip_ws();
                        self.expect_char('-')?;
                        self.skip_ws();
                        let b = self.hhmm()?;
                        Predicate::TimeRange { start: a, end: b }
                    }
                    "loc" => Predicate::NamedLocation { name: self.quoted()? },
                    "geo" => self.geo()?,
                    "activity" => Predicate::Activity { name: self.word_or_quoted()? },
                    "concept" => {
                        let id = self.word_or_quoted()?;
                        let save = self.pos;
                        self.skip_ws();
                        let min_conf = if self.peek() == Some('@') {
                            self.bump();
                            self.skip_ws();
                            let at = self.pos;
                            let v = self.number()?;
                            if !(0.0..=1.0).contains(&v) {
                                return Err(self.error_at(at, "confidence must lie in [0, 1]", &[]));
                            }
                            v
                        } else {
                            self.pos = save;
                            0.0
                        };
                        Predicate::Concept { id, min_conf }
                    }
                    "ocr" => Predicate::OcrText { tokens: tokenize(&self.quoted()?) },
                    _ => unreachable!(),
                }
            }
            "speed" | "hr" | "steps" | "cal" => {
                self.pos += key_len;
                let field = match key.as_str() {
                    "speed" => SensorField::Speed,
                    "hr" => SensorField::HeartRate,
                    "steps" => SensorField::Steps,
                    _ => SensorField::Calories,
                };
                self.skip_ws();
                Predicate::Range { field, bound: self.range_bound()? }
            }
            _ => {
                let what = if key_len == 0 { self.describe_here() } else { format!("`{key}`") };
                return Err(self.error_at(start, format!("expected a predicate, found {what}"), &PREDICATE_KEYS));
            }
        };
        if let Err(msg) = node.check() {
            return Err(self.error_at(start, msg, &[]));
        }
        Ok(Spanned { node, span: start..self.pos })
    }

    fn range_bound(&mut self) -> Result<RangeBound, ParseError> {
        const CMPS: [&str; 6] = [":<", ":<=", ":=", ":>=", ":>", ":"];
        if self.peek() != Some(':') {
            return Err(self.error("expected a comparison or `:`", &CMPS));
        }
        self.bump();
        let op = match self.peek() {
            Some('<') => {
                self.bump();
                Some(if self.peek() == Some('=') {
                    self.bump();
                    Comparison::Le
                } else {
                    Comparison::Lt
                })
            }
            Some('>') => {
                self.bump();
                Some(if self.peek() == Some('=') {
                    self.bump();
                    Comparison::Ge
                } else {
                    Comparison::Gt
                })
            }
            Some('=') => {
                self.bump();
                Some(Comparison::Eq)
            }
            _ => None,
        };
        self.skip_ws();
        let first = self.number()?;
        Ok(match op {
            Some(op) => RangeBound::Compare { op, value: first },
            None => {
                self.skip_ws();
                self.expect_char('-')?;
                self.skip_ws();
                let second = self.number()?;
                RangeBound::Between { min: first, max: second }
            }
        })
    }

    fn weekdays(&mut self) -> Result<Predicate, ParseError> {
        let mut days = BTreeSet::new();
        loop {
            let at = self.pos;
            let len = self.rest().chars().take_while(char::is_ascii_alphabetic).count();
            let day = Weekday::parse(&self.rest()[..len])
                .ok_or_else(|| self.error_at(at, "expected a weekday", &["mon", "tue", "wed", "thu", "fri", "sat", "sun"]))?;
            self.pos += len;
            days.insert(day);
            let save = self.pos;
            self.skip_ws();
            if self.peek() == Some(',') {
                self.bump();
                self.skip_ws();
            } else {
                self.pos = save;
                return Ok(Predicate::Weekday { days });
            }
        }
    }

    fn hhmm(&mut self) -> Result<HourMinute, ParseError> {
        let at = self.pos;
        let rest = self.rest();
        let h = rest.bytes().take_while(u8::is_ascii_digit).count();
        let valid_shape = (1..=2).contains(&h)
            && rest.as_bytes().get(h) == Some(&b':')
            && rest.as_bytes().get(h + 1).is_some_and(u8::is_ascii_digit)
            && rest.as_bytes().get(h + 2).is_some_and(u8::is_ascii_digit)
            && !rest.as_bytes().get(h + 3).is_some_and(u8::is_ascii_digit);
        if !valid_shape {
            return Err(self.error_at(at, "expected a time", &["HH:MM"]));
        }
        let text = &rest[..h + 3];
        let t = text.parse().map_err(|e: String| self.error_at(at, e, &["HH:MM"]))?;
        self.pos += h + 3;
        Ok(t)
    }

    fn geo(&mut self) -> Result<Predicate, ParseError> {
        self.expect_char('[')?;
        let mut v = [0.0; 4];
        for (i, slot) in v.iter_mut().enumerate() {
            self.skip_ws();
            *slot = self.number()?;
            self.skip_ws();
            self.expect_char(if i == 3 { ']' } else { ',' })?;
        }
        Ok(Predicate::GeoBox { lat_min: v[0], lat_max: v[1], lon_min: v[2], lon_max: v[3] })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let at = self.pos;
        let b = self.rest().as_bytes();
        let mut i = usize::from(b.first() == Some(&b'-'));
        let int_digits = b[i..].iter().take_while(|c| c.is_ascii_digit()).count();
        i += int_digits;
        if int_digits == 0 {
            return Err(self.error_at(at, "expected a number", &["number"]));
        }
        if b.get(i) == Some(&b'.') {
            let frac = b[i + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
            if frac == 0 {
                return Err(self.error_at(i + at + 1, "expected digits after `.`", &["digit"]));
            }
            i += 1 + frac;
        }
        let v: f64 = self.rest()[..i].parse().map_err(|_| self.error_at(at, "number out of range", &[]))?;
        if !v.is_finite() {
            return Err(self.error_at(at, "number out of range", &[]));
        }
        self.pos += i;
        Ok(v)
    }

    fn word(&mut self) -> Result<String, ParseError> {
        let len: usize = self.rest().chars().take_while(|&c| is_word_char(c)).map(char::len_utf8).sum();
        if len == 0 {
            return Err(self.error("expected a word", &["word"]));
        }
        let w = self.rest()[..len].to_string();
        self.pos += len;
        Ok(w)
    }

    fn word_or_quoted(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some('"') {
            self.quoted()
        } else {
            self.word()
        }
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        let open = self.pos;
        if self.peek() != Some('"') {
            return Err(self.error("expected a quoted string", &["`\"`"]));
        }
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error_at(open, "unterminated string", &["`\"`"])),
                Some('"') if self.peek() == Some('"') => {
                    self.bump();
                    out.push('"');
                }
                Some('"') => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }
}

/// Parses query text. Predicates inside each container come back in
/// canonical key order; the segmentation method defaults to shots.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let containers = Parser::new(text).parse_query()?;
    Ok(Query::new(
        containers
            .into_iter()
            .map(|c| FilterContainer::new(c.node.into_iter().map(|p| p.node).collect()).canonical())
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_query() {
        let q = parse(r#"weekday:mon,tue,wed,thu,fri AND time:10:00-14:30 AND loc:"The Helix""#).unwrap();
        assert_eq!(q.containers.len(), 1);
        let preds = &q.containers[0].predicates;
        assert_eq!(preds.len(), 3);
        assert_eq!(
            preds[1],
            Predicate::TimeRange { start: HourMinute::new(10, 0).unwrap(), end: HourMinute::new(14, 30).unwrap() }
        );
        assert_eq!(preds[2], Predicate::NamedLocation { name: "The Helix".into() });
        match &preds[0] {
            Predicate::Weekday { days } => assert_eq!(days.len(), 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_input_fails_at_zero() {
        let e = parse("").unwrap_err();
        assert_eq!((e.offset, e.line, e.column), (0, 1, 1));
        assert!(e.expected.iter().any(|x| x == "weekday:"));
    }

    #[test]
    fn concept_disjunction() {
        let q = parse("concept:beer@0.5 OR concept:wine").unwrap();
        assert_eq!(q.containers.len(), 2);
        assert_eq!(q.containers[0].predicates, [Predicate::Concept { id: "beer".into(), min_conf: 0.5 }]);
        assert_eq!(q.containers[1].predicates, [Predicate::Concept { id: "wine".into(), min_conf: 0.0 }]);
    }

    #[test]
    fn ranges_and_geo() {
        let q = parse("speed:>30 AND hr :<= 120 AND steps:10-20 AND cal:=2.5").unwrap();
        let p = &q.containers[0].predicates;
        assert_eq!(p[0], Predicate::Range { field: SensorField::Speed, bound: RangeBound::Compare { op: Comparison::Gt, value: 30.0 } });
        assert_eq!(p[1], Predicate::Range { field: SensorField::HeartRate, bound: RangeBound::Compare { op: Comparison::Le, value: 120.0 } });
        assert_eq!(p[2], Predicate::Range { field: SensorField::Steps, bound: RangeBound::Between { min: 10.0, max: 20.0 } });
        assert_eq!(p[3], Predicate::Range { field: SensorField::Calories, bound: RangeBound::Compare { op: Comparison::Eq, value: 2.5 } });
        let q = parse("geo:[53.0, 53.5,-6.5,-6.0]").unwrap();
        assert_eq!(q.containers[0].predicates[0], Predicate::GeoBox { lat_min: 53.0, lat_max: 53.5, lon_min: -6.5, lon_max: -6.0 });
    }

    #[test]
    fn keywords_case_insensitive_and_parens() {
        let q = parse("(CONCEPT:dog and OCR:\"Gate 12\") or ((Weekday:SAT))").unwrap();
        assert_eq!(q.containers.len(), 2);
        assert_eq!(q.containers[0].predicates[0], Predicate::Concept { id: "dog".into(), min_conf: 0.0 });
        assert_eq!(q.containers[0].predicates[1], Predicate::OcrText { tokens: vec!["gate".into(), "12".into()] });
    }

    #[test]
    fn predicates_come_back_in_key_order() {
        let q = parse("concept:x AND weekday:sun").unwrap();
        assert!(matches!(q.containers[0].predicates[0], Predicate::Weekday { .. }));
    }

    #[test]
    fn error_positions() {
        let cases = [
            ("weekday:funday", 8),
            ("time:25:00-10:00", 5),
            ("loc:\"open", 4),
            ("speed>3", 5),
            ("concept:beer AND", 16),
            ("concept:beer AND OR x", 17),
            ("geo:[1,2,3]", 10),
            ("concept:a@1.5", 10),
            ("steps:20-10", 0),
            ("concept:a concept:b", 10),
            ("(concept:a", 10),
            ("concept:a)", 9),
            ("colour:red", 0),
        ];
        for (src, offset) in cases {
            let e = parse(src).unwrap_err();
            assert_eq!(e.offset, offset, "{src}: {e}");
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = "(".repeat(10_000) + "concept:a" + &")".repeat(10_000);
        assert!(parse(&src).is_err());
        let ok = "(".repeat(10) + "concept:a" + &")".repeat(10);
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn line_and_column() {
        let e = parse("concept:a\nAND\n  bogus:1").unwrap_err();
        assert_eq!((e.line, e.column), (3, 3));
    }
}
