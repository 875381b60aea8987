//! Event-stream ingestion: parsing, keyword filtering and UTC day bucketing.
//!
//! Input is line-delimited JSON or CSV with a header row. Lines that fail to
//! decode or violate the record invariants are skipped and counted; the
//! stream is rejected outright only when more than half of it is malformed.

use std::fmt;
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read event stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("{malformed} of {lines} lines are malformed (more than half)")]
    Schema { malformed: usize, lines: usize },
    #[error("event {event_id} at {timestamp} precedes study start {study_start}")]
    BeforeStart {
        event_id: String,
        timestamp: i64,
        study_start: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityKind {
    Post,
    Retweet,
    Reply,
    Quote,
}

impl ActivityKind {
    pub const ALL: [ActivityKind; 4] = [
        ActivityKind::Post,
        ActivityKind::Retweet,
        ActivityKind::Reply,
        ActivityKind::Quote,
    ];

    /// Retweets, replies and quotes reference another user and create edges.
    pub fn is_communication(self) -> bool {
        !matches!(self, ActivityKind::Post)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityKind::Post => "post",
            ActivityKind::Retweet => "retweet",
            ActivityKind::Reply => "reply",
            ActivityKind::Quote => "quote",
        }
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One user action. Field names on the wire follow the input schema
/// (`ts`, `location`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: String,
    pub user_id: String,
    pub kind: ActivityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_user_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_event_id: Option<String>,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(rename = "location", default, skip_serializing_if = "Option::is_none")]
    pub profile_location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl EventRecord {
    fn normalize_empty(mut self) -> Self {
        for field in [
            &mut self.target_user_id,
            &mut self.target_event_id,
            &mut self.profile_location,
            &mut self.text,
        ] {
            if field.as_deref().is_some_and(|s| s.is_empty()) {
                *field = None;
            }
        }
        self
    }

    /// Checks the kind/target invariants and, if given, the study window.
    pub fn validate(&self, window: Option<StudyWindow>) -> Result<(), &'static str> {
        if self.event_id.is_empty() || self.user_id.is_empty() {
            return Err("empty identifier");
        }
        if self.kind.is_communication() {
            if self.target_user_id.is_none() {
                return Err("communication event without target_user_id");
            }
        } else if self.target_user_id.is_some() || self.target_event_id.is_some() {
            return Err("post carries a target");
        }
        if let Some(w) = window {
            if !w.contains(self.timestamp) {
                return Err("timestamp outside study window");
            }
        }
        Ok(())
    }
}

/// Half-open `[start, end)` interval of UTC epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyWindow {
    pub start: i64,
    pub end: i64,
}

impl StudyWindow {
    pub fn from_days(start: i64, days: usize) -> Self {
        Self {
            start,
            end: start + days as i64 * SECONDS_PER_DAY,
        }
    }

    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start && ts < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub events: Vec<EventRecord>,
    /// Non-blank records seen (valid + malformed).
    pub lines: usize,
    pub malformed: usize,
}

impl ParseOutcome {
    fn finish(self) -> Result<Self, IngestError> {
        if self.lines > 0 && self.malformed * 2 > self.lines {
            return Err(IngestError::Schema {
                malformed: self.malformed,
                lines: self.lines,
            });
        }
        Ok(self)
    }

    fn accept(&mut self, record: Option<EventRecord>, window: Option<StudyWindow>) {
        self.lines += 1;
        match record.map(EventRecord::normalize_empty) {
            Some(ev) if ev.validate(window).is_ok() => self.events.push(ev),
            _ => self.malformed += 1,
        }
    }
}

pub fn parse_events<R: BufRead>(
    reader: R,
    format: InputFormat,
    window: Option<StudyWindow>,
) -> Result<ParseOutcome, IngestError> {
    match format {
        InputFormat::Jsonl => parse_jsonl(reader, window),
        InputFormat::Csv => parse_csv(reader, window),
    }
}

fn parse_jsonl<R: BufRead>(
    mut reader: R,
    window: Option<StudyWindow>,
) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        out.accept(serde_json::from_str::<EventRecord>(trimmed).ok(), window);
    }
    out.finish()
}

fn parse_csv<R: Read>(reader: R, window: Option<StudyWindow>) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_to_io(e)),
    };
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                if record.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                out.accept(
                    record.deserialize::<EventRecord>(Some(&headers)).ok(),
                    window,
                );
            }
            Err(e) if e.is_io_error() => return Err(csv_to_io(e)),
            Err(_) => {
                out.lines += 1;
                out.malformed += 1;
            }
        }
    }
    out.finish()
}

fn csv_to_io(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{other:?}"),
        )),
    }
}

/// Keeps events whose lowercased text contains at least one keyword.
/// Keywords are expected lowercase; events without text are dropped.
pub fn filter_by_keywords(events: Vec<EventRecord>, keywords: &[String]) -> Vec<EventRecord> {
    events
        .into_iter()
        .filter(|ev| {
            ev.text.as_deref().is_some_and(|text| {
                let lower = text.to_lowercase();
                keywords.iter().any(|k| lower.contains(k.as_str()))
            })
        })
        .collect()
}

/// Reads a keyword list: one per line, blank lines and `#` comments ignored.
pub fn read_keywords<R: BufRead>(reader: R) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let k = line.trim();
        if !k.is_empty() && !k.starts_with('#') {
            out.push(k.to_lowercase());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DayBucket {
    pub day_index: usize,
    pub events: Vec<EventRecord>,
}

/// Buckets events by whole UTC days since `study_start`. Buckets are
/// contiguous from day 0 through the last occupied day; each bucket is
/// sorted by timestamp (ties keep input order).
pub fn day_partition(
    events: Vec<EventRecord>,
    study_start: i64,
) -> Result<Vec<DayBucket>, IngestError> {
    let mut buckets: Vec<DayBucket> = Vec::new();
    for ev in events {
        if ev.timestamp < study_start {
            return Err(IngestError::BeforeStart {
                event_id: ev.event_id,
                timestamp: ev.timestamp,
                study_start,
            });
        }
        let day = ((ev.timestamp - study_start) / SECONDS_PER_DAY) as usize;
        while buckets.len() <= day {
            let day_index = buckets.len();
            buckets.push(DayBucket {
                day_index,
                events: Vec::new(),
            });
        }
        buckets[day].events.push(ev);
    }
    for b in &mut buckets {
        b.events.sort_by_key(|e| e.timestamp);
    }
    Ok(buckets)
}

/// Appends empty buckets until there are at least `days` of them.
pub fn pad_days(buckets: &mut Vec<DayBucket>, days: usize) {
    while buckets.len() < days {
        let day_index = buckets.len();
        buckets.push(DayBucket {
            day_index,
            events: Vec::new(),
        });
    }
}

/// UTC midnight at or before `ts`.
pub fn utc_midnight(ts: i64) -> i64 {
    ts.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY
}

/// Parses an ISO 8601 instant (`2017-08-25T00:00:00Z`), a bare date
/// (`2017-08-25`, taken as UTC midnight) or raw epoch seconds.
pub fn parse_instant(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

pub fn write_jsonl<W: std::io::Write>(mut w: W, events: &[EventRecord]) -> std::io::Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jsonl(s: &str) -> ParseOutcome {
        parse_events(s.as_bytes(), InputFormat::Jsonl, None).unwrap()
    }

    #[test]
    fn parses_minimal_post() {
        let out = jsonl(r#"{"event_id":"1","user_id":"a","kind":"post","ts":0}"#);
        assert_eq!(out.events.len(), 1);
        let ev = &out.events[0];
        assert_eq!(ev.kind, ActivityKind::Post);
        assert_eq!(ev.user_id, "a");
        assert_eq!(ev.timestamp, 0);
        assert_eq!(out.malformed, 0);
    }

    #[test]
    fn retweet_without_target_is_skipped() {
        let input = concat!(
            r#"{"event_id":"1","user_id":"a","kind":"post","ts":0}"#,
            "\n",
            r#"{"event_id":"2","user_id":"a","kind":"post","ts":1}"#,
            "\n",
            r#"{"event_id":"3","user_id":"b","kind":"retweet","ts":5}"#,
            "\n"
        );
        let out = jsonl(input);
        assert_eq!(out.events.len(), 2);
        assert_eq!(out.malformed, 1);
        assert_eq!(out.lines, 3);
    }

    #[test]
    fn post_with_target_is_malformed() {
        let input = concat!(
            r#"{"event_id":"1","user_id":"a","kind":"post","ts":0,"target_user_id":"b"}"#,
            "\n",
            r#"{"event_id":"2","user_id":"a","kind":"post","ts":1}"#,
            "\n"
        );
        let out = jsonl(input);
        assert_eq!((out.events.len(), out.malformed), (1, 1));
    }

    #[test]
    fn majority_malformed_is_fatal() {
        let input = "garbage\n{\"nope\":1}\n{\"event_id\":\"1\",\"user_id\":\"a\",\"kind\":\"post\",\"ts\":0}\n";
        let err = parse_events(input.as_bytes(), InputFormat::Jsonl, None).unwrap_err();
        assert!(matches!(
            err,
            IngestError::Schema {
                malformed: 2,
                lines: 3
            }
        ));
    }

    #[test]
    fn exactly_half_malformed_is_tolerated() {
        let input = "garbage\n{\"event_id\":\"1\",\"user_id\":\"a\",\"kind\":\"post\",\"ts\":0}\n";
        let out = jsonl(input);
        assert_eq!((out.events.len(), out.malformed), (1, 1));
    }

    #[test]
    fn window_violations_count_as_malformed() {
        let input = concat!(
            r#"{"event_id":"1","user_id":"a","kind":"post","ts":10}"#,
            "\n",
            r#"{"event_id":"2","user_id":"a","kind":"post","ts":86400}"#,
            "\n"
        );
        let w = StudyWindow::from_days(0, 1);
        let out = parse_events(input.as_bytes(), InputFormat::Jsonl, Some(w)).unwrap();
        assert_eq!((out.events.len(), out.malformed), (1, 1));
    }

    #[test]
    fn csv_matches_jsonl_schema() {
        let input = "event_id,user_id,kind,target_user_id,target_event_id,ts,location,text\n\
                     1,a,post,,,0,\"Houston, TX\",harvey rain\n\
                     2,b,retweet,a,1,60,,harvey rain\n\
                     3,c,reply,,,70,,\n";
        let out = parse_events(input.as_bytes(), InputFormat::Csv, None).unwrap();
        assert_eq!(out.events.len(), 2);
        assert_eq!(out.malformed, 1);
        assert_eq!(
            out.events[0].profile_location.as_deref(),
            Some("Houston, TX")
        );
        assert_eq!(out.events[1].target_user_id.as_deref(), Some("a"));
        assert_eq!(out.events[1].profile_location, None);
    }

    fn with_text(id: &str, text: Option<&str>) -> EventRecord {
        EventRecord {
            event_id: id.into(),
            user_id: "u".into(),
            kind: ActivityKind::Post,
            target_user_id: None,
            target_event_id: None,
            timestamp: 0,
            profile_location: None,
            text: text.map(Into::into),
        }
    }

    #[test]
    fn keyword_filter_is_case_insensitive_substring() {
        let kws = vec!["harvey".to_string()];
        let evs = vec![
            with_text("1", Some("Harvey flooding downtown")),
            with_text("2", Some("sunny day")),
            with_text("3", None),
            with_text("4", Some("#HARVEYstrong")),
        ];
        let kept: Vec<_> = filter_by_keywords(evs, &kws)
            .into_iter()
            .map(|e| e.event_id)
            .collect();
        assert_eq!(kept, ["1", "4"]);
    }

    #[test]
    fn day_boundaries() {
        let mut a = with_text("a", None);
        a.timestamp = 1000;
        let mut b = with_text("b", None);
        b.timestamp = 1000 + SECONDS_PER_DAY;
        let mut c = with_text("c", None);
        c.timestamp = 1000 + 3 * SECONDS_PER_DAY - 1;
        let buckets = day_partition(vec![c, b, a], 1000).unwrap();
        assert_eq!(buckets.len(), 3);
        assert_eq!(buckets[0].events[0].event_id, "a");
        assert_eq!(buckets[1].events[0].event_id, "b");
        assert_eq!(buckets[2].events[0].event_id, "c");
    }

    #[test]
    fn empty_days_yield_empty_buckets() {
        let mut a = with_text("a", None);
        a.timestamp = 3 * SECONDS_PER_DAY;
        let buckets = day_partition(vec![a], 0).unwrap();
        assert_eq!(buckets.len(), 4);
        assert!(buckets[..3].iter().all(|b| b.events.is_empty()));
    }

    #[test]
    fn event_before_start_is_fatal() {
        let mut a = with_text("a", None);
        a.timestamp = -1;
        assert!(matches!(
            day_partition(vec![a], 0),
            Err(IngestError::BeforeStart { .. })
        ));
    }

    #[test]
    fn instants() {
        assert_eq!(parse_instant("1970-01-02"), Some(86_400));
        assert_eq!(parse_instant("1970-01-01T00:01:00Z"), Some(60));
        assert_eq!(parse_instant("120"), Some(120));
        assert_eq!(parse_instant("not a date"), None);
        assert_eq!(utc_midnight(86_400 + 5), 86_400);
        assert_eq!(utc_midnight(-5), -86_400);
    }
}
