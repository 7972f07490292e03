//! The constrained low-level action language that scripts agents.
//!
//! One command per line:
//!
//! ```text
//! [verb] <object> <object2> (HH:MM - HH:MM) (room)
//! ```
//!
//! Verbs take zero, one, or two object slots. Parsing is whitespace-tolerant
//! and accepts both `7:20` and `07:20` as well as hyphen or en-dash between
//! the times; rendering is canonical (zero-padded, single spaces) so that
//! `parse_line(render_step(s)) == s` for every valid step.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed set of simulator verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionVerb {
    Walk,
    Run,
    WalkForward,
    TurnLeft,
    TurnRight,
    Sit,
    StandUp,
    Grab,
    Open,
    Close,
    Put,
    SwitchOn,
    SwitchOff,
    Drink,
    Touch,
    LookAt,
}

pub const ALL_VERBS: [ActionVerb; 16] = [
    ActionVerb::Walk,
    ActionVerb::Run,
    ActionVerb::WalkForward,
    ActionVerb::TurnLeft,
    ActionVerb::TurnRight,
    ActionVerb::Sit,
    ActionVerb::StandUp,
    ActionVerb::Grab,
    ActionVerb::Open,
    ActionVerb::Close,
    ActionVerb::Put,
    ActionVerb::SwitchOn,
    ActionVerb::SwitchOff,
    ActionVerb::Drink,
    ActionVerb::Touch,
    ActionVerb::LookAt,
];

impl ActionVerb {
    pub fn from_token(token: &str) -> Option<ActionVerb> {
        let lower = token.to_ascii_lowercase();
        ALL_VERBS.iter().copied().find(|v| v.as_str() == lower)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionVerb::Walk => "walk",
            ActionVerb::Run => "run",
            ActionVerb::WalkForward => "walkforward",
            ActionVerb::TurnLeft => "turnleft",
            ActionVerb::TurnRight => "turnright",
            ActionVerb::Sit => "sit",
            ActionVerb::StandUp => "standup",
            ActionVerb::Grab => "grab",
            ActionVerb::Open => "open",
            ActionVerb::Close => "close",
            ActionVerb::Put => "put",
            ActionVerb::SwitchOn => "switchon",
            ActionVerb::SwitchOff => "switchoff",
            ActionVerb::Drink => "drink",
            ActionVerb::Touch => "touch",
            ActionVerb::LookAt => "lookat",
        }
    }

    /// Number of object slots the verb takes.
    pub fn arity(&self) -> usize {
        match self {
            ActionVerb::WalkForward
            | ActionVerb::TurnLeft
            | ActionVerb::TurnRight
            | ActionVerb::StandUp => 0,
            ActionVerb::Put => 2,
            _ => 1,
        }
    }
}

/// Wall-clock time with minute resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeOfDay {
    pub hour: u8,
    pub minute: u8,
}

impl TimeOfDay {
    pub fn new(hour: u8, minute: u8) -> Option<TimeOfDay> {
        (hour <= 23 && minute <= 59).then_some(TimeOfDay { hour, minute })
    }

    pub fn minutes(&self) -> u32 {
        self.hour as u32 * 60 + self.minute as u32
    }

    fn parse(s: &str) -> Option<TimeOfDay> {
        let (h, m) = s.split_once(':')?;
        if h.is_empty() || h.len() > 2 || m.len() != 2 {
            return None;
        }
        if !h.bytes().all(|b| b.is_ascii_digit()) || !m.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        TimeOfDay::new(h.parse().ok()?, m.parse().ok()?)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour, self.minute)
    }
}

/// One grammar-conformant simulator command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStep {
    pub verb: ActionVerb,
    pub objects: Vec<String>,
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub room: String,
}

/// Canonical rendering: `[verb] <obj> <obj2> (HH:MM - HH:MM) (room)`.
pub fn render_step(step: &ActionStep) -> String {
    let mut out = format!("[{}]", step.verb.as_str());
    for obj in &step.objects {
        out.push_str(" <");
        out.push_str(obj);
        out.push('>');
    }
    out.push_str(&format!(" ({} - {}) ({})", step.start, step.end, step.room));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptMetadata {
    pub persona: String,
    pub day: String,
    pub activity: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_candidates: Vec<String>,
}

/// An ordered, validated command sequence with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub metadata: ScriptMetadata,
    pub steps: Vec<ActionStep>,
}

/// A time decrease of at least this much between consecutive step starts is
/// read as crossing midnight; smaller decreases are ordering violations.
const DAY_WRAP_THRESHOLD_MINUTES: u32 = 12 * 60;
const MINUTES_PER_DAY: u32 = 24 * 60;

impl Script {
    /// Per-step `[start, end]` windows in absolute minutes from midnight of
    /// the script's first day, with inferred midnight crossings applied.
    pub fn minute_windows(&self) -> Vec<(u32, u32)> {
        let mut windows = Vec::with_capacity(self.steps.len());
        let mut day = 0u32;
        let mut prev_raw: Option<u32> = None;
        for step in &self.steps {
            let raw = step.start.minutes();
            if let Some(prev) = prev_raw {
                if raw < prev && prev - raw >= DAY_WRAP_THRESHOLD_MINUTES {
                    day += 1;
                }
            }
            prev_raw = Some(raw);
            let base = day * MINUTES_PER_DAY;
            windows.push((base + raw, base + step.end.minutes()));
        }
        windows
    }
}

/// What went wrong on a single line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    MalformedBracketing(String),
    UnknownVerb(String),
    ArityMismatch {
        verb: ActionVerb,
        expected: usize,
        got: usize,
    },
    UnparsableTime(String),
    StartAfterEnd,
}

impl fmt::Display for LineErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineErrorKind::MalformedBracketing(what) => write!(f, "malformed bracketing: {what}"),
            LineErrorKind::UnknownVerb(v) => write!(f, "unknown verb {v:?}"),
            LineErrorKind::ArityMismatch {
                verb,
                expected,
                got,
            } => write!(
                f,
                "verb [{}] takes {expected} object(s), found {got}",
                verb.as_str()
            ),
            LineErrorKind::UnparsableTime(t) => write!(f, "unparsable time {t:?}"),
            LineErrorKind::StartAfterEnd => write!(f, "start time is after end time"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {kind}")]
pub struct LineError {
    pub kind: LineErrorKind,
    /// 1-based character position.
    pub column: usize,
}

/// A per-line problem recorded while parsing a whole script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) struct Scanner {
    chars: Vec<char>,
    pos: usize,
}

impl Scanner {
    pub(crate) fn new(text: &str) -> Scanner {
        Scanner {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    pub(crate) fn col(&self) -> usize {
        self.pos + 1
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    pub(crate) fn expect(&mut self, c: char, what: &str) -> Result<(), LineError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(LineError {
                kind: LineErrorKind::MalformedBracketing(format!("expected '{c}' {what}")),
                column: self.col(),
            })
        }
    }

    /// Read up to (not including) `stop`; errors if the line ends first.
    pub(crate) fn read_until(&mut self, stop: char) -> Result<String, LineError> {
        let start_col = self.col();
        let mut out = String::new();
        loop {
            match self.peek() {
                Some(c) if c == stop => return Ok(out),
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
                None => {
                    return Err(LineError {
                        kind: LineErrorKind::MalformedBracketing(format!(
                            "unterminated group, missing '{stop}'"
                        )),
                        column: start_col,
                    })
                }
            }
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }
}

/// Parse the time-range group body, e.g. `07:10 - 07:12`, `7:10-7:12`,
/// or with an en-dash. Returns the verbatim body on failure.
pub(crate) fn parse_time_range(
    body: &str,
    body_col: usize,
) -> Result<(TimeOfDay, TimeOfDay), LineError> {
    let fail = || LineError {
        kind: LineErrorKind::UnparsableTime(body.trim().to_string()),
        column: body_col,
    };
    let (left, right) = if let Some((l, r)) = body.split_once('\u{2013}') {
        (l, r)
    } else {
        let dash_start = body.find('-').ok_or_else(fail)?;
        let mut dash_end = dash_start;
        let bytes = body.as_bytes();
        while dash_end < bytes.len() && bytes[dash_end] == b'-' {
            dash_end += 1;
        }
        (&body[..dash_start], &body[dash_end..])
    };
    let start = TimeOfDay::parse(left.trim()).ok_or_else(fail)?;
    let end = TimeOfDay::parse(right.trim()).ok_or_else(fail)?;
    Ok((start, end))
}

/// Parse one command line into a validated step.
pub fn parse_line(text: &str) -> Result<ActionStep, LineError> {
    let mut s = Scanner::new(text);
    s.skip_ws();
    s.expect('[', "to open the verb")?;
    let verb_col = s.col();
    let verb_token = s.read_until(']')?;
    s.expect(']', "to close the verb")?;
    let verb = ActionVerb::from_token(verb_token.trim()).ok_or(LineError {
        kind: LineErrorKind::UnknownVerb(verb_token.trim().to_string()),
        column: verb_col,
    })?;

    let mut objects = Vec::new();
    loop {
        s.skip_ws();
        if s.peek() != Some('<') {
            break;
        }
        let obj_col = s.col();
        s.expect('<', "to open an object")?;
        let token = s.read_until('>')?;
        s.expect('>', "to close an object")?;
        let token = token.trim().to_string();
        if token.is_empty() {
            return Err(LineError {
                kind: LineErrorKind::MalformedBracketing("empty object token".into()),
                column: obj_col,
            });
        }
        objects.push(token);
    }
    if objects.len() != verb.arity() {
        return Err(LineError {
            kind: LineErrorKind::ArityMismatch {
                verb,
                expected: verb.arity(),
                got: objects.len(),
            },
            column: s.col(),
        });
    }

    s.skip_ws();
    s.expect('(', "to open the time range")?;
    let time_col = s.col();
    let time_body = s.read_until(')')?;
    s.expect(')', "to close the time range")?;
    let (start, end) = parse_time_range(&time_body, time_col)?;
    if start > end {
        return Err(LineError {
            kind: LineErrorKind::StartAfterEnd,
            column: time_col,
        });
    }

    s.skip_ws();
    s.expect('(', "to open the room")?;
    let room_col = s.col();
    let room = s.read_until(')')?;
    s.expect(')', "to close the room")?;
    let room = room.trim().to_string();
    if room.is_empty() {
        return Err(LineError {
            kind: LineErrorKind::MalformedBracketing("empty room".into()),
            column: room_col,
        });
    }

    s.skip_ws();
    if !s.at_end() {
        return Err(LineError {
            kind: LineErrorKind::MalformedBracketing("trailing content after room".into()),
            column: s.col(),
        });
    }

    Ok(ActionStep {
        verb,
        objects,
        start,
        end,
        room,
    })
}

fn is_comment(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

/// Parse a whole command block. Blank and `#` comment lines are skipped;
/// malformed lines become diagnostics and are dropped. Step starts must be
/// non-decreasing except at an inferred midnight crossing.
pub fn parse_script(text: &str, metadata: ScriptMetadata) -> (Script, Vec<Diagnostic>) {
    parse_numbered_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), metadata)
}

fn parse_numbered_lines<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    metadata: ScriptMetadata,
) -> (Script, Vec<Diagnostic>) {
    let mut steps: Vec<ActionStep> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut prev_raw: Option<u32> = None;
    for (line_no, line) in lines {
        if line.trim().is_empty() || is_comment(line) {
            continue;
        }
        match parse_line(line) {
            Ok(step) => {
                let raw = step.start.minutes();
                if let Some(prev) = prev_raw {
                    if raw < prev && prev - raw < DAY_WRAP_THRESHOLD_MINUTES {
                        diagnostics.push(Diagnostic {
                            line: line_no,
                            column: 1,
                            message: format!(
                                "step starts at {} before the previous step's {}; line dropped",
                                step.start,
                                minutes_to_time(prev)
                            ),
                        });
                        continue;
                    }
                }
                prev_raw = Some(raw);
                steps.push(step);
            }
            Err(err) => diagnostics.push(Diagnostic {
                line: line_no,
                column: err.column,
                message: err.kind.to_string(),
            }),
        }
    }
    (Script { metadata, steps }, diagnostics)
}

fn minutes_to_time(m: u32) -> TimeOfDay {
    TimeOfDay {
        hour: (m / 60 % 24) as u8,
        minute: (m % 60) as u8,
    }
}

/// A script file split into its header metadata and command body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptFileParts {
    pub metadata: ScriptMetadata,
    pub body: String,
    /// 1-based line number of the first body line in the original file.
    pub body_start_line: usize,
}

/// Split off the optional `---`-delimited metadata header (`key: value`
/// pairs: persona, day, activity, labels).
pub fn split_script_file(text: &str) -> ScriptFileParts {
    let mut metadata = ScriptMetadata::default();
    let mut body_start = 0usize; // 0-based line index of the first command line
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) == Some("---") {
        if let Some(close) = lines[1..].iter().position(|l| l.trim() == "---") {
            for header_line in &lines[1..close + 1] {
                if let Some((key, value)) = header_line.split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "persona" => metadata.persona = value.to_string(),
                        "day" => metadata.day = value.to_string(),
                        "activity" => metadata.activity = value.to_string(),
                        "labels" => {
                            metadata.label_candidates = value
                                .split(',')
                                .map(|s| s.trim().to_string())
                                .filter(|s| !s.is_empty())
                                .collect()
                        }
                        _ => {} // unknown header keys are ignored
                    }
                }
            }
            body_start = close + 2;
        }
    }
    ScriptFileParts {
        metadata,
        body: lines[body_start.min(lines.len())..].join("\n"),
        body_start_line: body_start + 1,
    }
}

/// Load a script file: the optional metadata header followed by one command
/// per line.
pub fn load_script_file(text: &str) -> (Script, Vec<Diagnostic>) {
    let parts = split_script_file(text);
    let offset = parts.body_start_line;
    parse_numbered_lines(
        parts.body.lines().enumerate().map(|(i, l)| (i + offset, l)),
        parts.metadata,
    )
}
