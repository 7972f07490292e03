//! Converting free-form model output into validated simulator commands.
//!
//! The five-step pipeline: clean the raw text, embed the simulator
//! vocabulary, retrieve nearest valid tokens by cosine similarity, accept or
//! flag each line against similarity thresholds (with optional repair), and
//! assemble validated commands.

mod clean;
mod index;
mod provider;

pub use clean::{clean_output, parse_raw_command, CleanOutcome, CleanedLine, RawCommand};
pub use index::{
    build_index, build_vocabulary_indices, cosine, nearest, nearest_embedding,
    vocabulary_from_layout, ObjectVocabEntry, VocabularyFile, VocabularyIndex, VocabularyKind,
};
pub use provider::{
    DeterministicProvider, EmbeddingProvider, EmbeddingVector, HttpEmbeddingClient, SynonymEntry,
    DEFAULT_EMBEDDING_DIM, DEFAULT_SYNONYM_COSINE, ENV_API_KEY, ENV_DIM, ENV_ENDPOINT,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_script::{ActionStep, ActionVerb, Script, ScriptMetadata};
use crate::env_model::HomeLayout;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("embedding has a non-finite component")]
    NonFiniteEmbedding,
    #[error("zero-norm vector has no direction")]
    ZeroNormVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate vocabulary token {0:?}")]
    DuplicateToken(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("empty candidate set{}", .room.as_deref().map(|r| format!(" for room {r:?}")).unwrap_or_default())]
    EmptyCandidates { room: Option<String> },
    #[error("room {0:?} has no vocabulary partition")]
    UnknownRoom(String),
    #[error("embedding provider: {0}")]
    Provider(String),
}

/// Acceptance thresholds for retrieved tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingThresholds {
    /// Minimum cosine similarity to accept an action substitution.
    pub tau_act: f64,
    /// Minimum cosine similarity to accept an object substitution.
    pub tau_obj: f64,
    /// Repair attempts per flagged line before it is discarded.
    pub max_retries: u32,
}

impl Default for GroundingThresholds {
    fn default() -> Self {
        GroundingThresholds {
            tau_act: 0.8,
            tau_obj: 0.6,
            max_retries: 3,
        }
    }
}

/// Regenerates a flagged line given its surrounding context. A null provider
/// always answers `None` and the line is discarded without repair attempts.
pub trait RepairProvider {
    fn repair(&self, flagged_line: &str, context: &[String]) -> Option<String>;
}

/// The always-`None` repair provider.
pub struct NullRepair;

impl RepairProvider for NullRepair {
    fn repair(&self, _flagged_line: &str, _context: &[String]) -> Option<String> {
        None
    }
}

/// One token replacement with its similarity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub raw: String,
    pub grounded: String,
    pub score: f64,
}

/// Everything needed to ground lines against one home.
pub struct GroundingContext<'a> {
    pub layout: &'a HomeLayout,
    pub action_index: &'a VocabularyIndex,
    pub object_index: &'a VocabularyIndex,
    pub thresholds: GroundingThresholds,
    pub provider: &'a dyn EmbeddingProvider,
}

/// Outcome of grounding a single line.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundedLine {
    Grounded {
        step: ActionStep,
        substitutions: Vec<Substitution>,
    },
    Flagged {
        /// The token that failed, when one did; `None` for structural flags.
        token: Option<String>,
        /// Best similarity the failing token achieved.
        best_score: Option<f64>,
        reason: String,
    },
}

fn flag(reason: impl Into<String>) -> GroundedLine {
    GroundedLine::Flagged {
        token: None,
        best_score: None,
        reason: reason.into(),
    }
}

/// Ground one raw command line: the verb against the action vocabulary with
/// `tau_act`, each object against the line's room subset with `tau_obj`.
/// Any sub-threshold token flags the whole line. Times and rooms are never
/// grounded; a malformed line or unknown room is flagged directly.
pub fn ground_step(
    raw_line: &str,
    ctx: &GroundingContext<'_>,
) -> Result<GroundedLine, GroundingError> {
    let raw = match parse_raw_command(raw_line) {
        Some(raw) => raw,
        None => return Ok(flag("line does not parse as a command")),
    };
    let room = match &raw.room {
        Some(room) => room.clone(),
        None => return Ok(flag("line carries no room annotation")),
    };
    if ctx.layout.room(&room).is_none() {
        return Ok(flag(format!("room {room:?} does not exist in the layout")));
    }
    if raw.start > raw.end {
        return Ok(flag("start time is after end time"));
    }

    let mut substitutions = Vec::new();

    let (verb_token, verb_score) =
        match nearest(ctx.action_index, ctx.provider, &raw.verb_token, None) {
            Ok(hit) => hit,
            Err(GroundingError::EmptyCandidates { .. }) => {
                return Ok(flag("action vocabulary is empty"))
            }
            Err(e) => return Err(e),
        };
    if verb_score < ctx.thresholds.tau_act {
        return Ok(GroundedLine::Flagged {
            token: Some(raw.verb_token.clone()),
            best_score: Some(verb_score),
            reason: format!(
                "verb {:?} best match {verb_token:?} scored {verb_score:.4} < tau_act {}",
                raw.verb_token, ctx.thresholds.tau_act
            ),
        });
    }
    let verb =
        ActionVerb::from_token(&verb_token).expect("action vocabulary contains only valid verbs");
    substitutions.push(Substitution {
        raw: raw.verb_token.clone(),
        grounded: verb_token,
        score: verb_score,
    });

    let mut objects = Vec::with_capacity(raw.object_tokens.len());
    for token in &raw.object_tokens {
        let (grounded, score) = match nearest(ctx.object_index, ctx.provider, token, Some(&room)) {
            Ok(hit) => hit,
            Err(GroundingError::UnknownRoom(_) | GroundingError::EmptyCandidates { .. }) => {
                return Ok(flag(format!("no object vocabulary for room {room:?}")))
            }
            Err(e) => return Err(e),
        };
        if score < ctx.thresholds.tau_obj {
            return Ok(GroundedLine::Flagged {
                token: Some(token.clone()),
                best_score: Some(score),
                reason: format!(
                    "object {token:?} best match {grounded:?} scored {score:.4} < tau_obj {}",
                    ctx.thresholds.tau_obj
                ),
            });
        }
        substitutions.push(Substitution {
            raw: token.clone(),
            grounded: grounded.clone(),
            score,
        });
        objects.push(grounded);
    }

    if objects.len() != verb.arity() {
        return Ok(flag(format!(
            "verb [{}] takes {} object(s), found {}",
            verb.as_str(),
            verb.arity(),
            objects.len()
        )));
    }

    Ok(GroundedLine::Grounded {
        step: ActionStep {
            verb,
            objects,
            start: raw.start,
            end: raw.end,
            room,
        },
        substitutions,
    })
}

/// Per-line outcome in a grounding report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LineOutcome {
    Accepted {
        substitutions: Vec<Substitution>,
    },
    Repaired {
        attempts: u32,
        substitutions: Vec<Substitution>,
    },
    Discarded {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineReport {
    /// Line number in the raw input text.
    pub source_line: usize,
    /// The cleaned command line that was grounded.
    pub raw: String,
    #[serde(flatten)]
    pub outcome: LineOutcome,
    /// Canonical rendering of the accepted step, when one was produced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rendered: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct GroundingReport {
    pub lines: Vec<LineReport>,
    /// Lines removed by the cleaner before grounding.
    pub dropped_in_cleaning: usize,
}

impl GroundingReport {
    pub fn accepted(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| matches!(l.outcome, LineOutcome::Accepted { .. }))
            .count()
    }

    pub fn repaired(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| matches!(l.outcome, LineOutcome::Repaired { .. }))
            .count()
    }

    pub fn discarded(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| matches!(l.outcome, LineOutcome::Discarded { .. }))
            .count()
    }
}

/// How many cleaned lines around a flagged one are offered to the repair
/// provider as context.
const REPAIR_CONTEXT_RADIUS: usize = 2;

/// Run the full conversion: clean, ground each line, send flagged lines to
/// the repair provider up to `max_retries` times, and assemble a validated
/// script plus a report covering every line.
pub fn ground_script(
    raw_text: &str,
    metadata: ScriptMetadata,
    ctx: &GroundingContext<'_>,
    repair: &dyn RepairProvider,
) -> Result<(Script, GroundingReport), GroundingError> {
    let cleaned = clean_output(raw_text);
    let mut report = GroundingReport {
        lines: Vec::with_capacity(cleaned.commands.len()),
        dropped_in_cleaning: cleaned.dropped,
    };
    let mut steps: Vec<ActionStep> = Vec::new();
    let mut prev_start: Option<u32> = None;

    let texts: Vec<String> = cleaned.commands.iter().map(|c| c.text.clone()).collect();
    for (i, line) in cleaned.commands.iter().enumerate() {
        let lo = i.saturating_sub(REPAIR_CONTEXT_RADIUS);
        let hi = (i + REPAIR_CONTEXT_RADIUS + 1).min(texts.len());
        let context: Vec<String> = texts[lo..hi]
            .iter()
            .enumerate()
            .filter(|(j, _)| lo + j != i)
            .map(|(_, t)| t.clone())
            .collect();

        let mut current = line.text.clone();
        let mut attempts = 0u32;
        let mut outcome = None;
        let mut last_reason;
        match ground_step(&current, ctx)? {
            GroundedLine::Grounded {
                step,
                substitutions,
            } => {
                outcome = Some((step, substitutions, attempts));
                last_reason = String::new();
            }
            GroundedLine::Flagged { reason, .. } => {
                last_reason = reason;
                while attempts < ctx.thresholds.max_retries {
                    let candidate = match repair.repair(&current, &context) {
                        Some(candidate) => candidate,
                        None => break,
                    };
                    attempts += 1;
                    current = candidate;
                    match ground_step(&current, ctx)? {
                        GroundedLine::Grounded {
                            step,
                            substitutions,
                        } => {
                            outcome = Some((step, substitutions, attempts));
                            break;
                        }
                        GroundedLine::Flagged { reason, .. } => last_reason = reason,
                    }
                }
            }
        }

        match outcome {
            Some((step, substitutions, attempts)) => {
                // The assembled script must keep non-decreasing start times.
                let start = step.start.minutes();
                let out_of_order = match prev_start {
                    Some(prev) => start < prev && prev - start < 12 * 60,
                    None => false,
                };
                if out_of_order {
                    report.lines.push(LineReport {
                        source_line: line.source_line,
                        raw: line.text.clone(),
                        outcome: LineOutcome::Discarded {
                            reason: "step starts before the previous step".into(),
                        },
                        rendered: None,
                    });
                    continue;
                }
                prev_start = Some(start);
                let rendered = crate::action_script::render_step(&step);
                let outcome = if attempts == 0 {
                    LineOutcome::Accepted { substitutions }
                } else {
                    LineOutcome::Repaired {
                        attempts,
                        substitutions,
                    }
                };
                report.lines.push(LineReport {
                    source_line: line.source_line,
                    raw: line.text.clone(),
                    outcome,
                    rendered: Some(rendered),
                });
                steps.push(step);
            }
            None => {
                report.lines.push(LineReport {
                    source_line: line.source_line,
                    raw: line.text.clone(),
                    outcome: LineOutcome::Discarded {
                        reason: last_reason,
                    },
                    rendered: None,
                });
            }
        }
    }

    Ok((Script { metadata, steps }, report))
}
