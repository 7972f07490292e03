//! Cleaning raw model output into candidate command lines.
//!
//! Raw decomposition text interleaves command lines with day labels,
//! activity headers, `Step N:` prefixes, numbering, and interval headers of
//! the form `HH:MM - HH:MM, room`. The cleaner strips all of that, keeps the
//! command payloads with their time annotations, and fills in a missing room
//! from the most recent interval header.

use crate::action_script::{parse_time_range, Scanner, TimeOfDay};

/// A leniently parsed command line: structure is enforced, tokens are not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCommand {
    pub verb_token: String,
    pub object_tokens: Vec<String>,
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub room: Option<String>,
}

impl RawCommand {
    /// Canonical textual form with zero-padded times.
    pub fn render(&self) -> String {
        let mut out = format!("[{}]", self.verb_token);
        for obj in &self.object_tokens {
            out.push_str(" <");
            out.push_str(obj);
            out.push('>');
        }
        out.push_str(&format!(" ({} - {})", self.start, self.end));
        if let Some(room) = &self.room {
            out.push_str(&format!(" ({room})"));
        }
        out
    }
}

/// Lenient parse: `[token]` then any number of `<token>` groups, a time
/// range, and an optional trailing room group. Unknown verbs and arbitrary
/// token counts are accepted here; grounding decides their fate.
pub fn parse_raw_command(line: &str) -> Option<RawCommand> {
    let mut s = Scanner::new(line);
    s.skip_ws();
    s.expect('[', "").ok()?;
    let verb_token = s.read_until(']').ok()?.trim().to_string();
    s.expect(']', "").ok()?;
    if verb_token.is_empty() {
        return None;
    }

    let mut object_tokens = Vec::new();
    loop {
        s.skip_ws();
        if s.peek() != Some('<') {
            break;
        }
        s.expect('<', "").ok()?;
        let token = s.read_until('>').ok()?.trim().to_string();
        s.expect('>', "").ok()?;
        if token.is_empty() {
            return None;
        }
        object_tokens.push(token);
    }

    s.skip_ws();
    s.expect('(', "").ok()?;
    let time_body = s.read_until(')').ok()?;
    s.expect(')', "").ok()?;
    let (start, end) = parse_time_range(&time_body, 1).ok()?;

    s.skip_ws();
    let room = if s.peek() == Some('(') {
        s.expect('(', "").ok()?;
        let body = s.read_until(')').ok()?.trim().to_string();
        s.expect(')', "").ok()?;
        if body.is_empty() {
            return None;
        }
        Some(body)
    } else {
        None
    };
    s.skip_ws();
    if !s.at_end() {
        return None;
    }

    Some(RawCommand {
        verb_token,
        object_tokens,
        start,
        end,
        room,
    })
}

/// An interval header `HH:MM - HH:MM, room` announcing the room for the
/// command lines that follow it.
fn parse_interval_header(line: &str) -> Option<String> {
    let (times, room) = line.rsplit_once(',')?;
    parse_time_range(times, 1).ok()?;
    let room = room.trim();
    (!room.is_empty()).then(|| room.to_string())
}

/// Strip `Step N:` / `Step N.` prefixes and bare `N.` / `N)` / `N:`
/// numbering from the front of a line.
fn strip_numbering(line: &str) -> &str {
    let trimmed = line.trim_start();
    let lower = trimmed.to_lowercase();
    let rest = if let Some(r) = lower.strip_prefix("step") {
        let skipped = trimmed.len() - r.len();
        &trimmed[skipped..]
    } else {
        trimmed
    };
    let rest_trim = rest.trim_start();
    let digits = rest_trim.bytes().take_while(|b| b.is_ascii_digit()).count();
    if digits > 0 {
        let after = &rest_trim[digits..];
        if let Some(stripped) = after
            .strip_prefix(':')
            .or_else(|| after.strip_prefix('.'))
            .or_else(|| after.strip_prefix(')'))
        {
            return stripped.trim_start();
        }
    }
    trimmed
}

/// One cleaned candidate command with its original line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanedLine {
    pub source_line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CleanOutcome {
    pub commands: Vec<CleanedLine>,
    /// Non-blank lines that were neither commands nor interval headers.
    pub dropped: usize,
}

/// Reduce raw decomposition text to candidate command lines. Command lines
/// without a room annotation inherit the room of the most recent interval
/// header; lines that cannot be recognized at all are dropped and counted.
pub fn clean_output(raw_text: &str) -> CleanOutcome {
    let mut outcome = CleanOutcome::default();
    let mut current_room: Option<String> = None;
    for (i, line) in raw_text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(room) = parse_interval_header(line) {
            current_room = Some(room);
            continue;
        }
        let stripped = strip_numbering(line);
        if stripped.starts_with('[') {
            if let Some(mut raw) = parse_raw_command(stripped) {
                if raw.room.is_none() {
                    raw.room = current_room.clone();
                }
                if raw.room.is_some() {
                    outcome.commands.push(CleanedLine {
                        source_line: line_no,
                        text: raw.render(),
                    });
                    continue;
                }
            }
        }
        outcome.dropped += 1;
    }
    outcome
}
