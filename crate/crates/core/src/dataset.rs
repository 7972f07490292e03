//! Labeled activity datasets: windowing, textual encodings, log export,
//! and corpus statistics.
//!
//! Events are grouped into activity windows by schedule spans (truncated to
//! the first 100 triggers), labeled through a static activity-to-label
//! mapping with an `"Other"` fallback, rendered as natural-language
//! sentences, and exported as tab-separated line-per-event logs that parse
//! back exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::{SensorEvent, SensorSuite, SensorValue};
use crate::time::Timestamp;

/// One scheduled activity occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySpan {
    pub activity_name: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub room: String,
}

/// Where a window came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceMeta {
    pub persona: String,
    pub home: String,
    pub day: String,
}

/// The fallback label for activities absent from a mapping.
pub const OTHER_LABEL: &str = "Other";

/// Open-vocabulary activity names mapped onto a target label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub dataset: String,
    /// Normalized activity name to target label.
    pub entries: BTreeMap<String, String>,
}

fn normalize_activity(name: &str) -> String {
    name.trim().to_lowercase().replace(' ', "_")
}

impl LabelMapping {
    pub fn empty(dataset: &str) -> LabelMapping {
        LabelMapping {
            dataset: dataset.to_string(),
            entries: BTreeMap::new(),
        }
    }

    pub fn from_json(json: &str) -> Result<LabelMapping, DatasetError> {
        let mut mapping: LabelMapping =
            serde_json::from_str(json).map_err(|e| DatasetError::Mapping(e.to_string()))?;
        mapping.entries = mapping
            .entries
            .into_iter()
            .map(|(k, v)| (normalize_activity(&k), v))
            .collect();
        Ok(mapping)
    }

    /// Exact-match lookup after lowercase/underscore normalization;
    /// anything unmapped becomes `"Other"`.
    pub fn map_label(&self, activity_name: &str) -> String {
        self.entries
            .get(&normalize_activity(activity_name))
            .cloned()
            .unwrap_or_else(|| OTHER_LABEL.to_string())
    }

    /// The target label set plus the fallback.
    pub fn label_set(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.values().cloned().collect();
        labels.push(OTHER_LABEL.to_string());
        labels.sort();
        labels.dedup();
        labels
    }
}

pub fn map_label(activity_name: &str, mapping: &LabelMapping) -> String {
    mapping.map_label(activity_name)
}

/// Chooses a target label for an activity given its routine text and the
/// candidate label set. An external labeling service can implement this; the
/// static [`LabelMapping`] is the default and the tested path. `None` falls
/// back to `"Other"`.
pub trait LabelProvider {
    fn choose_label(
        &self,
        activity_name: &str,
        routine: &str,
        label_set: &[String],
    ) -> Option<String>;
}

impl LabelProvider for LabelMapping {
    fn choose_label(
        &self,
        activity_name: &str,
        _routine: &str,
        _label_set: &[String],
    ) -> Option<String> {
        Some(self.map_label(activity_name))
    }
}

/// Resolve a label through a provider with the `"Other"` fallback.
pub fn resolve_label(
    provider: &dyn LabelProvider,
    activity_name: &str,
    routine: &str,
    label_set: &[String],
) -> String {
    provider
        .choose_label(activity_name, routine, label_set)
        .filter(|l| label_set.iter().any(|candidate| candidate == l))
        .unwrap_or_else(|| OTHER_LABEL.to_string())
}

/// A window never holds more than this many events.
pub const MAX_WINDOW_EVENTS: usize = 100;

/// A labeled, chronological slice of at most 100 sensor events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityWindow {
    pub label: String,
    pub span: ActivitySpan,
    pub source: SourceMeta,
    pub events: Vec<SensorEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TdostVariant {
    Basic,
    Temporal,
}

impl FromStr for TdostVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "basic" => Ok(TdostVariant::Basic),
            "temporal" => Ok(TdostVariant::Temporal),
            other => Err(format!("unknown variant {other:?} (basic|temporal)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("span {name:?} does not end after it starts")]
    InvalidSpan { name: String },
    #[error("spans {a:?} and {b:?} overlap")]
    OverlappingSpans { a: String, b: String },
    #[error("events are not chronological")]
    UnsortedEvents,
    #[error("label mapping: {0}")]
    Mapping(String),
    #[error("log line {line}: {message}")]
    Casas { line: usize, message: String },
    #[error("unknown sensor id {0:?}")]
    UnknownSensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("jsonl line {line}: {message}")]
    Jsonl { line: usize, message: String },
}

/// Span indices ordered by start time, with overlap validation.
fn sorted_span_order(spans: &[ActivitySpan]) -> Result<Vec<usize>, DatasetError> {
    for span in spans {
        if span.start >= span.end {
            return Err(DatasetError::InvalidSpan {
                name: span.activity_name.clone(),
            });
        }
    }
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| (spans[i].start, spans[i].end));
    for pair in order.windows(2) {
        let (a, b) = (&spans[pair[0]], &spans[pair[1]]);
        if b.start < a.end {
            return Err(DatasetError::OverlappingSpans {
                a: a.activity_name.clone(),
                b: b.activity_name.clone(),
            });
        }
    }
    Ok(order)
}

fn check_chronological(events: &[SensorEvent]) -> Result<(), DatasetError> {
    if events.windows(2).any(|p| p[1].timestamp < p[0].timestamp) {
        return Err(DatasetError::UnsortedEvents);
    }
    Ok(())
}

/// Inclusive `[first, last]` event index range per span, in the given span
/// order. A single forward cursor assigns each event to at most one span, so
/// an event on a shared boundary goes to the earlier span.
fn span_event_ranges(
    events: &[SensorEvent],
    spans: &[ActivitySpan],
    order: &[usize],
) -> Vec<Option<(usize, usize)>> {
    let mut ranges = vec![None; spans.len()];
    let mut cursor = 0usize;
    for &si in order {
        let span = &spans[si];
        while cursor < events.len() && events[cursor].timestamp < span.start {
            cursor += 1;
        }
        let first = cursor;
        while cursor < events.len() && events[cursor].timestamp <= span.end {
            cursor += 1;
        }
        if cursor > first {
            ranges[si] = Some((first, cursor - 1));
        }
    }
    ranges
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutcome {
    pub windows: Vec<ActivityWindow>,
    /// Spans that collected zero events.
    pub dropped_spans: usize,
}

/// Collect each span's events (truncated to the first 100) into a labeled
/// window; spans with no events are dropped and counted.
pub fn segment_windows(
    events: &[SensorEvent],
    spans: &[ActivitySpan],
    mapping: &LabelMapping,
    source: &SourceMeta,
) -> Result<SegmentOutcome, DatasetError> {
    check_chronological(events)?;
    let order = sorted_span_order(spans)?;
    let ranges = span_event_ranges(events, spans, &order);
    let mut outcome = SegmentOutcome {
        windows: Vec::new(),
        dropped_spans: 0,
    };
    for &si in &order {
        match ranges[si] {
            Some((first, last)) => {
                let take = (last - first + 1).min(MAX_WINDOW_EVENTS);
                outcome.windows.push(ActivityWindow {
                    label: mapping.map_label(&spans[si].activity_name),
                    span: spans[si].clone(),
                    source: source.clone(),
                    events: events[first..first + take].to_vec(),
                });
            }
            None => outcome.dropped_spans += 1,
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// TDOST sentence rendering
// ---------------------------------------------------------------------------

/// `<Kind> sensor in <room> fired with value <VALUE>`.
pub fn tdost_basic(event: &SensorEvent) -> String {
    format!(
        "{} sensor in {} fired with value {}",
        event.kind.name(),
        event.room.to_lowercase(),
        event.value.name()
    )
}

const UNITS: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];
const TENS: [&str; 4] = ["twenty", "thirty", "forty", "fifty"];

/// 0-59 in English words; compounds are space-separated ("forty five").
fn number_words(n: u32) -> String {
    if (n as usize) < UNITS.len() {
        UNITS[n as usize].to_string()
    } else {
        let tens = TENS[(n / 10 - 2) as usize];
        match n % 10 {
            0 => tens.to_string(),
            rest => format!("{tens} {}", UNITS[rest as usize]),
        }
    }
}

/// Hour in 12-hour words: both midnight and noon are "twelve".
fn hour_words(hour24: u32) -> &'static str {
    match hour24 % 12 {
        0 => "twelve",
        h => UNITS[h as usize],
    }
}

/// Basic sentence plus a spoken-form clock time, e.g.
/// `... at twelve hours six minutes PM`.
pub fn tdost_temporal(event: &SensorEvent) -> String {
    let (hour, minute) = event.timestamp.hour_minute();
    let meridiem = if hour < 12 { "AM" } else { "PM" };
    format!(
        "{} at {} hours {} minutes {}",
        tdost_basic(event),
        hour_words(hour),
        number_words(minute),
        meridiem
    )
}

pub fn tdost(event: &SensorEvent, variant: TdostVariant) -> String {
    match variant {
        TdostVariant::Basic => tdost_basic(event),
        TdostVariant::Temporal => tdost_temporal(event),
    }
}

// ---------------------------------------------------------------------------
// Log export and the bundled reader
// ---------------------------------------------------------------------------

/// Render the event log: one `timestamp<TAB>sensor<TAB>value` line per
/// event, with `label<TAB>begin` appended on each span's first event and
/// `label<TAB>end` on its last (begin before end when they coincide).
pub fn render_casas(
    events: &[SensorEvent],
    spans: &[ActivitySpan],
    mapping: &LabelMapping,
) -> Result<String, DatasetError> {
    check_chronological(events)?;
    let order = sorted_span_order(spans)?;
    let ranges = span_event_ranges(events, spans, &order);
    let mut begins: BTreeMap<usize, String> = BTreeMap::new();
    let mut ends: BTreeMap<usize, String> = BTreeMap::new();
    for (si, range) in ranges.iter().enumerate() {
        if let Some((first, last)) = range {
            let label = mapping.map_label(&spans[si].activity_name);
            begins.insert(*first, label.clone());
            ends.insert(*last, label);
        }
    }
    let mut out = String::new();
    for (i, event) in events.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}",
            event.timestamp,
            event.sensor_id,
            event.value.name()
        ));
        if let Some(label) = begins.get(&i) {
            out.push_str(&format!("\t{label}\tbegin"));
        }
        if let Some(label) = ends.get(&i) {
            out.push_str(&format!("\t{label}\tend"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write the rendered log to a file.
pub fn export_casas(
    events: &[SensorEvent],
    spans: &[ActivitySpan],
    mapping: &LabelMapping,
    path: &Path,
) -> Result<(), DatasetError> {
    let rendered = render_casas(events, spans, mapping)?;
    std::fs::write(path, rendered)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationEdge {
    Begin,
    End,
}

/// One parsed log line.
#[derive(Debug, Clone, PartialEq)]
pub struct CasasEntry {
    pub timestamp: Timestamp,
    pub sensor_id: String,
    pub value: SensorValue,
    pub annotations: Vec<(String, AnnotationEdge)>,
}

/// A `label begin ... label end` stretch recovered from a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSegment {
    pub label: String,
    pub begin: Timestamp,
    pub end: Timestamp,
}

/// Parse an exported log back into entries.
pub fn parse_casas(text: &str) -> Result<Vec<CasasEntry>, DatasetError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(DatasetError::Casas {
                line: line_no,
                message: "expected at least 3 tab-separated fields".into(),
            });
        }
        let timestamp: Timestamp = fields[0].parse().map_err(|e| DatasetError::Casas {
            line: line_no,
            message: format!("bad timestamp: {e}"),
        })?;
        let value = SensorValue::parse(fields[2]).ok_or_else(|| DatasetError::Casas {
            line: line_no,
            message: format!("bad value {:?}", fields[2]),
        })?;
        let rest = &fields[3..];
        if !rest.len().is_multiple_of(2) {
            return Err(DatasetError::Casas {
                line: line_no,
                message: "dangling annotation field".into(),
            });
        }
        let mut annotations = Vec::new();
        for pair in rest.chunks(2) {
            let edge = match pair[1] {
                "begin" => AnnotationEdge::Begin,
                "end" => AnnotationEdge::End,
                other => {
                    return Err(DatasetError::Casas {
                        line: line_no,
                        message: format!("bad annotation edge {other:?}"),
                    })
                }
            };
            annotations.push((pair[0].to_string(), edge));
        }
        entries.push(CasasEntry {
            timestamp,
            sensor_id: fields[1].to_string(),
            value,
            annotations,
        });
    }
    Ok(entries)
}

/// Rebuild full sensor events and labeled segments from parsed log entries,
/// resolving kind/room/class through the sensor suite.
pub fn reconstruct_events(
    entries: &[CasasEntry],
    suite: &SensorSuite,
) -> Result<(Vec<SensorEvent>, Vec<LabeledSegment>), DatasetError> {
    let mut events = Vec::with_capacity(entries.len());
    let mut segments = Vec::new();
    let mut open: Option<(String, Timestamp)> = None;
    for (i, entry) in entries.iter().enumerate() {
        let line = i + 1;
        let event = if let Some(m) = suite.motion.iter().find(|m| m.id == entry.sensor_id) {
            SensorEvent::motion(
                entry.timestamp,
                &m.id,
                &m.room,
                entry.value == SensorValue::On,
            )
        } else if let Some(d) = suite.doors.iter().find(|d| d.id == entry.sensor_id) {
            SensorEvent::door(
                entry.timestamp,
                &d.id,
                &d.room,
                &d.object_class,
                entry.value == SensorValue::Open,
            )
        } else if let Some(d) = suite.devices.iter().find(|d| d.id == entry.sensor_id) {
            SensorEvent::device(
                entry.timestamp,
                &d.id,
                &d.room,
                &d.object_class,
                entry.value == SensorValue::On,
            )
        } else {
            return Err(DatasetError::UnknownSensor(entry.sensor_id.clone()));
        };
        events.push(event);
        for (label, edge) in &entry.annotations {
            match edge {
                AnnotationEdge::Begin => {
                    if open.is_some() {
                        return Err(DatasetError::Casas {
                            line,
                            message: "begin inside an open segment".into(),
                        });
                    }
                    open = Some((label.clone(), entry.timestamp));
                }
                AnnotationEdge::End => match open.take() {
                    Some((open_label, begin)) if &open_label == label => {
                        segments.push(LabeledSegment {
                            label: open_label,
                            begin,
                            end: entry.timestamp,
                        });
                    }
                    _ => {
                        return Err(DatasetError::Casas {
                            line,
                            message: format!("end {label:?} without matching begin"),
                        })
                    }
                },
            }
        }
    }
    if open.is_some() {
        return Err(DatasetError::Casas {
            line: entries.len(),
            message: "unterminated segment".into(),
        });
    }
    Ok((events, segments))
}

// ---------------------------------------------------------------------------
// Windows JSONL
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WindowRecord {
    #[serde(flatten)]
    window: ActivityWindow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<String>>,
}

/// Serialize windows one JSON object per line, optionally with rendered
/// sentences for the given variant.
pub fn render_windows_jsonl(windows: &[ActivityWindow], variant: Option<TdostVariant>) -> String {
    let mut out = String::new();
    for window in windows {
        let record = WindowRecord {
            sentences: variant.map(|v| window.events.iter().map(|e| tdost(e, v)).collect()),
            window: window.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("window serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_windows_jsonl(text: &str) -> Result<Vec<ActivityWindow>, DatasetError> {
    let mut windows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: WindowRecord = serde_json::from_str(line).map_err(|e| DatasetError::Jsonl {
            line: i + 1,
            message: e.to_string(),
        })?;
        windows.push(record.window);
    }
    Ok(windows)
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub window_count: usize,
    pub triggers_total: usize,
    pub triggers_min: usize,
    pub triggers_max: usize,
    pub triggers_mean: f64,
    pub per_label: BTreeMap<String, usize>,
    pub per_kind: BTreeMap<String, usize>,
}

pub fn compute_stats(windows: &[ActivityWindow]) -> DatasetStats {
    let mut stats = DatasetStats {
        window_count: windows.len(),
        triggers_total: 0,
        triggers_min: 0,
        triggers_max: 0,
        triggers_mean: 0.0,
        per_label: BTreeMap::new(),
        per_kind: BTreeMap::new(),
    };
    if windows.is_empty() {
        return stats;
    }
    stats.triggers_min = usize::MAX;
    for window in windows {
        let n = window.events.len();
        stats.triggers_total += n;
        stats.triggers_min = stats.triggers_min.min(n);
        stats.triggers_max = stats.triggers_max.max(n);
        *stats.per_label.entry(window.label.clone()).or_insert(0) += 1;
        for event in &window.events {
            *stats
                .per_kind
                .entry(event.kind.name().to_string())
                .or_insert(0) += 1;
        }
    }
    stats.triggers_mean = stats.triggers_total as f64 / stats.window_count as f64;
    stats
}
