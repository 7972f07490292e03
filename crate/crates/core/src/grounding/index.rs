//! Vocabulary indices and nearest-neighbor retrieval.
//!
//! Two indices are built per home: one over the action verbs, one over the
//! object classes with a per-room partition. Retrieval is an exhaustive
//! argmax of cosine similarity — exact by construction, and small enough
//! here that no acceleration structure is warranted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::action_script::ALL_VERBS;
use crate::env_model::HomeLayout;

use super::provider::{EmbeddingProvider, EmbeddingVector};
use super::GroundingError;

/// Exact cosine similarity `u·v / (‖u‖‖v‖)`.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, GroundingError> {
    if u.dim() != v.dim() {
        return Err(GroundingError::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(GroundingError::ZeroNormVector);
    }
    let dot: f64 = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| a * b)
        .sum();
    Ok(dot / (nu * nv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabularyKind {
    Action,
    Object,
}

/// Embedded vocabulary with an optional room partition (Object kind).
#[derive(Debug, Clone)]
pub struct VocabularyIndex {
    kind: VocabularyKind,
    entries: Vec<(String, EmbeddingVector)>,
    room_partition: BTreeMap<String, Vec<usize>>,
    dimension: usize,
}

impl VocabularyIndex {
    pub fn kind(&self) -> VocabularyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.iter().any(|(t, _)| t == token)
    }

    /// Tokens available in a given room (Object kind).
    pub fn room_tokens(&self, room: &str) -> Option<Vec<&str>> {
        self.room_partition
            .get(room)
            .map(|ix| ix.iter().map(|&i| self.entries[i].0.as_str()).collect())
    }
}

/// Embed every token and build an index. For the Object kind,
/// `room_partition` maps room names to the token subset available there.
pub fn build_index(
    tokens: &[String],
    kind: VocabularyKind,
    room_partition: &BTreeMap<String, BTreeSet<String>>,
    provider: &dyn EmbeddingProvider,
) -> Result<VocabularyIndex, GroundingError> {
    if tokens.is_empty() {
        return Err(GroundingError::EmptyVocabulary);
    }
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(tokens.len());
    for token in tokens {
        if !seen.insert(token.clone()) {
            return Err(GroundingError::DuplicateToken(token.clone()));
        }
        let vector = provider
            .embed(token)
            .map_err(|e| GroundingError::Provider(format!("embedding {token:?}: {e}")))?;
        if vector.dim() != provider.dimension() {
            return Err(GroundingError::DimensionMismatch {
                expected: provider.dimension(),
                got: vector.dim(),
            });
        }
        entries.push((token.clone(), vector));
    }
    let mut partition = BTreeMap::new();
    if kind == VocabularyKind::Object {
        for (room, subset) in room_partition {
            let ix: Vec<usize> = entries
                .iter()
                .enumerate()
                .filter(|(_, (t, _))| subset.contains(t))
                .map(|(i, _)| i)
                .collect();
            partition.insert(room.clone(), ix);
        }
    }
    Ok(VocabularyIndex {
        kind,
        entries,
        room_partition: partition,
        dimension: provider.dimension(),
    })
}

/// Exhaustive argmax of cosine similarity between the query embedding and the
/// candidate set: the full vocabulary, or the room subset for objects when a
/// room is given. Equal scores break toward the lexicographically smaller
/// token.
pub fn nearest_embedding(
    index: &VocabularyIndex,
    query: &EmbeddingVector,
    room: Option<&str>,
) -> Result<(String, f64), GroundingError> {
    let candidate_indices: Vec<usize> = match (index.kind, room) {
        (VocabularyKind::Object, Some(room)) => index
            .room_partition
            .get(room)
            .ok_or_else(|| GroundingError::UnknownRoom(room.to_string()))?
            .clone(),
        _ => (0..index.entries.len()).collect(),
    };
    if candidate_indices.is_empty() {
        return Err(GroundingError::EmptyCandidates {
            room: room.map(str::to_string),
        });
    }
    let mut best: Option<(&str, f64)> = None;
    for i in candidate_indices {
        let (token, vector) = &index.entries[i];
        let score = cosine(query, vector)?;
        let better = match best {
            None => true,
            Some((bt, bs)) => score > bs || (score == bs && token.as_str() < bt),
        };
        if better {
            best = Some((token, score));
        }
    }
    let (token, score) = best.expect("candidate set is nonempty");
    Ok((token.to_string(), score))
}

/// Embed `query_token` and retrieve its nearest vocabulary token.
pub fn nearest(
    index: &VocabularyIndex,
    provider: &dyn EmbeddingProvider,
    query_token: &str,
    room: Option<&str>,
) -> Result<(String, f64), GroundingError> {
    let query = provider.embed(query_token)?;
    nearest_embedding(index, &query, room)
}

/// Wire schema of a vocabulary file:
/// `{"actions": [...], "objects": [{"class": ..., "rooms": [...]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyFile {
    pub actions: Vec<String>,
    pub objects: Vec<ObjectVocabEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectVocabEntry {
    pub class: String,
    pub rooms: Vec<String>,
}

impl VocabularyFile {
    pub fn from_json(json: &str) -> Result<VocabularyFile, GroundingError> {
        serde_json::from_str(json)
            .map_err(|e| GroundingError::Provider(format!("vocabulary file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocabulary serializes")
    }
}

/// Derive the grounding vocabulary from a layout: the 16 verbs, every object
/// class with the rooms that contain it, and every room name as a walkable
/// target available from any room.
pub fn vocabulary_from_layout(layout: &HomeLayout) -> VocabularyFile {
    let actions = ALL_VERBS.iter().map(|v| v.as_str().to_string()).collect();
    let all_rooms: Vec<String> = layout.rooms.iter().map(|r| r.name.clone()).collect();
    let mut objects: Vec<ObjectVocabEntry> = Vec::new();
    for obj in layout.graph.objects() {
        match objects.iter_mut().find(|e| e.class == obj.class_name) {
            Some(entry) => {
                if !entry.rooms.contains(&obj.room) {
                    entry.rooms.push(obj.room.clone());
                }
            }
            None => objects.push(ObjectVocabEntry {
                class: obj.class_name.clone(),
                rooms: vec![obj.room.clone()],
            }),
        }
    }
    for room in &all_rooms {
        if !objects.iter().any(|e| &e.class == room) {
            objects.push(ObjectVocabEntry {
                class: room.clone(),
                rooms: all_rooms.clone(),
            });
        }
    }
    VocabularyFile { actions, objects }
}

/// Build the action and object indices for a vocabulary.
pub fn build_vocabulary_indices(
    vocab: &VocabularyFile,
    provider: &dyn EmbeddingProvider,
) -> Result<(VocabularyIndex, VocabularyIndex), GroundingError> {
    let action_index = build_index(
        &vocab.actions,
        VocabularyKind::Action,
        &BTreeMap::new(),
        provider,
    )?;
    let mut tokens = Vec::new();
    let mut partition: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for entry in &vocab.objects {
        if !tokens.contains(&entry.class) {
            tokens.push(entry.class.clone());
        }
        for room in &entry.rooms {
            partition
                .entry(room.clone())
                .or_default()
                .insert(entry.class.clone());
        }
    }
    let object_index = build_index(&tokens, VocabularyKind::Object, &partition, provider)?;
    Ok((action_index, object_index))
}
