//! Embedding providers.
//!
//! Grounding only needs a map from text to a fixed-dimension vector. The
//! default provider is in-process and deterministic so the whole pipeline is
//! hermetic; an HTTP client with the same interface is available for real
//! embedding services.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rng::{fnv1a64, Rng};

use super::GroundingError;

/// A dense embedding with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<EmbeddingVector, GroundingError> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(GroundingError::NonFiniteEmbedding);
        }
        Ok(EmbeddingVector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

pub trait EmbeddingProvider {
    /// Embed one text. Must be deterministic per input within a session and
    /// always return `dimension()` components.
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GroundingError>;

    fn dimension(&self) -> usize;
}

/// Similarity used for synonym entries that do not choose their own.
pub const DEFAULT_SYNONYM_COSINE: f64 = 0.9;

fn default_synonym_cosine() -> f64 {
    DEFAULT_SYNONYM_COSINE
}

/// A near-miss token mapped onto a vocabulary token at a chosen similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymEntry {
    pub base: String,
    /// Target cosine similarity between this token and `base`.
    #[serde(default = "default_synonym_cosine")]
    pub cosine: f64,
}

/// Deterministic provider: each token maps to a seeded pseudorandom unit
/// vector keyed by the stable hash of its lowercase form. A synonym table
/// maps configured near-miss tokens to perturbed copies of their base
/// token's vector with a chosen cosine similarity, which is how threshold
/// behavior is exercised without a remote service.
#[derive(Debug, Clone)]
pub struct DeterministicProvider {
    dimension: usize,
    seed: u64,
    synonyms: BTreeMap<String, SynonymEntry>,
}

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

impl Default for DeterministicProvider {
    fn default() -> Self {
        DeterministicProvider::new(DEFAULT_EMBEDDING_DIM, 0)
    }
}

impl DeterministicProvider {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension >= 2, "embedding dimension must be at least 2");
        DeterministicProvider {
            dimension,
            seed,
            synonyms: BTreeMap::new(),
        }
    }

    pub fn with_synonyms(mut self, synonyms: BTreeMap<String, SynonymEntry>) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn add_synonym(&mut self, token: &str, base: &str, cosine: f64) {
        self.synonyms.insert(
            token.trim().to_lowercase(),
            SynonymEntry {
                base: base.to_string(),
                cosine,
            },
        );
    }

    fn raw_unit_vector(&self, key: &str, salt: u64) -> Vec<f64> {
        let mut rng = Rng::new(fnv1a64(key.as_bytes()) ^ self.seed ^ salt);
        loop {
            let mut v: Vec<f64> = (0..self.dimension)
                .map(|_| rng.range_f64(-1.0, 1.0))
                .collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for c in &mut v {
                    *c /= norm;
                }
                return v;
            }
        }
    }

    fn perturbed(&self, base_key: &str, token_key: &str, cosine: f64) -> Vec<f64> {
        let base = self.raw_unit_vector(base_key, 0);
        let c = cosine.clamp(-1.0, 1.0);
        // Gram-Schmidt: derive a direction orthogonal to the base vector from
        // the token's own pseudorandom vector, then mix to hit the target
        // cosine exactly.
        let mut salt = 0x5EED;
        loop {
            let raw = self.raw_unit_vector(token_key, salt);
            let dot: f64 = raw.iter().zip(&base).map(|(a, b)| a * b).sum();
            let mut orth: Vec<f64> = raw.iter().zip(&base).map(|(a, b)| a - dot * b).collect();
            let norm = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for x in &mut orth {
                    *x /= norm;
                }
                let s = (1.0 - c * c).max(0.0).sqrt();
                return base.iter().zip(&orth).map(|(b, o)| c * b + s * o).collect();
            }
            salt = salt.wrapping_add(1);
        }
    }
}

impl EmbeddingProvider for DeterministicProvider {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GroundingError> {
        let key = text.trim().to_lowercase();
        let components = match self.synonyms.get(&key) {
            Some(entry) => {
                let base_key = entry.base.trim().to_lowercase();
                self.perturbed(&base_key, &key, entry.cosine)
            }
            None => self.raw_unit_vector(&key, 0),
        };
        EmbeddingVector::new(components)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// JSON-over-HTTP embedding client: `POST {"input": [text]}` returning
/// `{"embeddings": [[...]]}`. Configured from the environment.
pub struct HttpEmbeddingClient {
    endpoint: String,
    api_key: Option<String>,
    dimension: usize,
}

pub const ENV_ENDPOINT: &str = "HOMESIM_EMBED_ENDPOINT";
pub const ENV_API_KEY: &str = "HOMESIM_EMBED_API_KEY";
pub const ENV_DIM: &str = "HOMESIM_EMBED_DIM";

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

impl HttpEmbeddingClient {
    pub fn new(endpoint: &str, api_key: Option<&str>, dimension: usize) -> Self {
        HttpEmbeddingClient {
            endpoint: endpoint.to_string(),
            api_key: api_key.map(str::to_string),
            dimension,
        }
    }

    /// Build from `HOMESIM_EMBED_ENDPOINT`, `HOMESIM_EMBED_API_KEY`
    /// (optional), and `HOMESIM_EMBED_DIM`.
    pub fn from_env() -> Result<Self, GroundingError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| GroundingError::Provider(format!("{ENV_ENDPOINT} is not set")))?;
        let dimension: usize = std::env::var(ENV_DIM)
            .map_err(|_| GroundingError::Provider(format!("{ENV_DIM} is not set")))?
            .parse()
            .map_err(|_| GroundingError::Provider(format!("{ENV_DIM} is not a number")))?;
        let api_key = std::env::var(ENV_API_KEY).ok();
        Ok(HttpEmbeddingClient::new(
            &endpoint,
            api_key.as_deref(),
            dimension,
        ))
    }
}

impl EmbeddingProvider for HttpEmbeddingClient {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, GroundingError> {
        let payload =
            serde_json::to_string(&EmbedRequest { input: vec![text] }).expect("request serializes");
        let mut request = ureq::post(&self.endpoint).header("content-type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send(&payload)
            .map_err(|e| GroundingError::Provider(format!("embedding request failed: {e}")))?;
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| GroundingError::Provider(format!("embedding response unreadable: {e}")))?;
        let parsed: EmbedResponse = serde_json::from_str(&body)
            .map_err(|e| GroundingError::Provider(format!("embedding response malformed: {e}")))?;
        let vector = parsed
            .embeddings
            .into_iter()
            .next()
            .ok_or_else(|| GroundingError::Provider("empty embeddings array".into()))?;
        if vector.len() != self.dimension {
            return Err(GroundingError::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        EmbeddingVector::new(vector)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
