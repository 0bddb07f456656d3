//! Fact embeddings and nearest-neighbor search by cosine similarity.
//!
//! Exact mode scans every entry and is authoritative. Approximate mode narrows the scan
//! with a random-projection forest and reranks the survivors exactly.

mod embed;
mod forest;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{mock_projection, EmbedMode, Embedder, EmbedderConfig};
pub use forest::ForestParams;
use forest::Forest;

use crate::scalar::{dot, normalize_in_place, Scalar};

pub const INDEX_VERSION: &str = "lkg-index/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("dimension mismatch: index has {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("index is empty")]
    EmptyIndex,
    #[error("duplicate node id `{0}` in index")]
    DuplicateNodeId(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedder configuration: {0}")]
    Config(String),
    #[error("index built with embedder `{found}`, expected `{expected}`")]
    StaleIndex { expected: String, found: String },
    #[error("invalid index file: {0}")]
    InvalidFile(String),
}

/// A unit-length vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EmbeddingVector<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> EmbeddingVector<S> {
    /// Scales `values` to unit length. The zero vector (and an empty one) maps to the
    /// first basis vector so that the norm invariant always holds.
    pub fn normalized(mut values: Vec<S>) -> Self {
        if values.is_empty() {
            values.push(S::one());
        } else if !normalize_in_place(&mut values) {
            values.iter_mut().for_each(|x| *x = S::zero());
            values[0] = S::one();
        }
        Self { values }
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Cosine similarity, clamped to [-1, 1].
    pub fn cosine(&self, other: &Self) -> S {
        cosine(&self.values, &other.values)
    }
}

fn cosine<S: Scalar>(a: &[S], b: &[S]) -> S {
    dot(a, b).max(-S::one()).min(S::one())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    #[default]
    Exact,
    Approximate,
}

/// Sorts by similarity descending, then node id ascending.
pub fn rank<S: Scalar>(hits: &mut [(String, S)]) {
    hits.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
}

#[derive(Debug, Clone)]
pub struct VectorIndex<S: Scalar> {
    ids: Vec<String>,
    vectors: Vec<EmbeddingVector<S>>,
    position: HashMap<String, u32>,
    mode: IndexMode,
    params: ForestParams,
    embedder_fingerprint: String,
    forest: Option<Forest<S>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct IndexFile<S: Scalar> {
    version: String,
    embedder: String,
    mode: IndexMode,
    params: ForestParams,
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<S>>,
}

impl<S: Scalar> VectorIndex<S> {
    /// Indexes precomputed vectors. `embedder_fingerprint` is stored for staleness checks.
    pub fn from_vectors(
        entries: Vec<(String, EmbeddingVector<S>)>,
        mode: IndexMode,
        params: ForestParams,
        embedder_fingerprint: impl Into<String>,
    ) -> Result<Self, IndexError> {
        let dim = entries.first().ok_or(IndexError::EmptyIndex)?.1.dim();
        let mut position = HashMap::with_capacity(entries.len());
        let mut ids = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for (i, (id, v)) in entries.into_iter().enumerate() {
            if v.dim() != dim {
                return Err(IndexError::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            if position.insert(id.clone(), i as u32).is_some() {
                return Err(IndexError::DuplicateNodeId(id));
            }
            ids.push(id);
            vectors.push(v);
        }
        let forest = (mode == IndexMode::Approximate).then(|| {
            let rows: Vec<&[S]> = vectors.iter().map(|v| v.values()).collect();
            Forest::build(&rows, &params)
        });
        Ok(Self {
            ids,
            vectors,
            position,
            mode,
            params,
            embedder_fingerprint: embedder_fingerprint.into(),
            forest,
        })
    }

    /// Embeds and indexes `(node_id, text)` pairs.
    pub fn build(
        facts: &[(String, String)],
        embedder: &Embedder,
        mode: IndexMode,
        params: ForestParams,
    ) -> Result<Self, IndexError> {
        if facts.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        let texts: Vec<&str> = facts.iter().map(|(_, t)| t.as_str()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        let entries = facts.iter().map(|(id, _)| id.clone()).zip(vectors).collect();
        Self::from_vectors(entries, mode, params, embedder.fingerprint())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, EmbeddingVector::dim)
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn embedder_fingerprint(&self) -> &str {
        &self.embedder_fingerprint
    }

    pub fn contains(&self, node_id: &str) -> bool {
        self.position.contains_key(node_id)
    }

    pub fn vector(&self, node_id: &str) -> Option<&EmbeddingVector<S>> {
        self.position.get(node_id).map(|&i| &self.vectors[i as usize])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &EmbeddingVector<S>)> {
        self.ids.iter().map(String::as_str).zip(self.vectors.iter())
    }

    /// Top `k` entries by cosine similarity to `vector`, skipping ids in `exclude`.
    pub fn query(
        &self,
        vector: &EmbeddingVector<S>,
        k: usize,
        exclude: &HashSet<String>,
    ) -> Result<Vec<(String, S)>, IndexError> {
        self.query_with(vector, k, exclude, self.mode)
    }

    /// As [`query`](Self::query) with an explicit mode. Approximate mode falls back to
    /// exact when the index was built without a forest.
    pub fn query_with(
        &self,
        vector: &EmbeddingVector<S>,
        k: usize,
        exclude: &HashSet<String>,
        mode: IndexMode,
    ) -> Result<Vec<(String, S)>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if self.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        if vector.dim() != self.dim() {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim(),
                actual: vector.dim(),
            });
        }
        let q = vector.values();
        let keep = |i: u32| !exclude.contains(&self.ids[i as usize]);
        let rows: Vec<u32> = match (&self.forest, mode) {
            (Some(f), IndexMode::Approximate) => {
                let mut c = f.candidates(q, k.saturating_mul(self.params.search_per_k.max(1)).max(self.params.min_candidates), keep);
                c.sort_unstable();
                c.dedup();
                c.retain(|&i| keep(i));
                c
            }
            _ => (0..self.len() as u32).filter(|&i| keep(i)).collect(),
        };
        let mut hits: Vec<(String, S)> = rows
            .into_iter()
            .map(|i| (self.ids[i as usize].clone(), cosine(q, self.vectors[i as usize].values())))
            .collect();
        rank(&mut hits);
        hits.truncate(k);
        Ok(hits)
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            version: INDEX_VERSION.into(),
            embedder: self.embedder_fingerprint.clone(),
            mode: self.mode,
            params: self.params,
            dim: self.dim(),
            ids: self.ids.clone(),
            vectors: self.vectors.iter().map(|v| v.values.clone()).collect(),
        };
        serde_json::to_string(&file).expect("index serializes")
    }

    /// Loads an index file, rejecting other versions and, when `expected_embedder` is
    /// given, indexes built by a different embedder configuration.
    pub fn from_json(json: &str, expected_embedder: Option<&str>) -> Result<Self, IndexError> {
        let file: IndexFile<S> = serde_json::from_str(json).map_err(|e| IndexError::InvalidFile(e.to_string()))?;
        if file.version != INDEX_VERSION {
            return Err(IndexError::InvalidFile(format!(
                "version `{}`, expected `{INDEX_VERSION}`",
                file.version
            )));
        }
        if let Some(want) = expected_embedder {
            if want != file.embedder {
                return Err(IndexError::StaleIndex {
                    expected: want.to_string(),
                    found: file.embedder,
                });
            }
        }
        if file.ids.len() != file.vectors.len() {
            return Err(IndexError::InvalidFile("ids and vectors differ in length".into()));
        }
        let entries = file
            .ids
            .into_iter()
            .zip(file.vectors)
            .map(|(id, v)| {
                if v.len() != file.dim {
                    return Err(IndexError::DimensionMismatch {
                        expected: file.dim,
                        actual: v.len(),
                    });
                }
                let norm = dot(&v, &v).sqrt().to_f64_lossy();
                if (norm - 1.0).abs() > 1e-4 {
                    return Err(IndexError::InvalidFile(format!("vector for `{id}` has norm {norm}")));
                }
                Ok((id, EmbeddingVector { values: v }))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_vectors(entries, file.mode, file.params, file.embedder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(texts: &[&str], mode: IndexMode) -> (Embedder, VectorIndex<f64>) {
        let e = Embedder::mock(256);
        let facts: Vec<(String, String)> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("f{i}"), t.to_string()))
            .collect();
        let ix = VectorIndex::build(&facts, &e, mode, ForestParams::default()).unwrap();
        (e, ix)
    }

    #[test]
    fn unit_norm_and_determinism() {
        let e = Embedder::mock(256);
        let a: EmbeddingVector<f32> = e.embed("The resident filed an audit request.").unwrap();
        let b: EmbeddingVector<f32> = e.embed("The resident filed an audit request.").unwrap();
        assert_eq!(a, b);
        assert!((a.cosine(&a) - 1.0).abs() < 1e-6);
        assert_eq!(e.embed::<f32>("  "), Err(IndexError::EmptyText));
    }

    #[test]
    fn self_exclusion_and_large_k() {
        let (e, ix) = idx(&["alpha beta", "alpha gamma", "delta"], IndexMode::Exact);
        let q = e.embed("alpha beta").unwrap();
        let ex: HashSet<String> = ["f0".to_string()].into();
        let hits = ix.query(&q, 5, &ex).unwrap();
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|(id, _)| id != "f0"));
        assert_eq!(ix.query(&q, 10, &HashSet::new()).unwrap().len(), 3);
        assert_eq!(ix.query(&q, 0, &ex), Err(IndexError::InvalidK));
    }

    #[test]
    fn duplicate_texts_both_present() {
        let (_, ix) = idx(&["same text", "same text"], IndexMode::Exact);
        assert_eq!(ix.len(), 2);
        assert_eq!(ix.vector("f0"), ix.vector("f1"));
    }

    #[test]
    fn dimension_checks() {
        let (_, ix) = idx(&["one fact"], IndexMode::Exact);
        assert_eq!(ix.len(), 1);
        let q = EmbeddingVector::normalized(vec![1.0f64; 3]);
        assert!(matches!(ix.query(&q, 1, &HashSet::new()), Err(IndexError::DimensionMismatch { .. })));
        let mixed = vec![
            ("a".to_string(), EmbeddingVector::normalized(vec![1.0f64, 0.0])),
            ("b".to_string(), EmbeddingVector::normalized(vec![1.0f64])),
        ];
        assert!(matches!(
            VectorIndex::from_vectors(mixed, IndexMode::Exact, ForestParams::default(), "x"),
            Err(IndexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn persistence_round_trip_and_staleness() {
        let (e, ix) = idx(&["a fact here", "another fact", "a third"], IndexMode::Approximate);
        let json = ix.to_json();
        let back = VectorIndex::<f64>::from_json(&json, Some(&e.fingerprint())).unwrap();
        let q = e.embed("a fact").unwrap();
        assert_eq!(back.query(&q, 3, &HashSet::new()), ix.query(&q, 3, &HashSet::new()));
        let other = Embedder::mock(128).fingerprint();
        assert!(matches!(
            VectorIndex::<f64>::from_json(&json, Some(&other)),
            Err(IndexError::StaleIndex { .. })
        ));
        assert!(VectorIndex::<f64>::from_json(&json.replace(INDEX_VERSION, "lkg-index/0"), None).is_err());
    }

    #[test]
    fn zero_vector_maps_to_first_axis() {
        let v = EmbeddingVector::normalized(vec![0.0f32; 4]);
        assert_eq!(v.values(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn embed_env_overrides() {
        let mut c = EmbedderConfig::default();
        c.apply_vars(|k| match k {
            "LKG_EMBED_MODE" => Some("remote".into()),
            "LKG_EMBED_ENDPOINT" => Some("http://127.0.0.1:9/embed".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.mode, EmbedMode::Remote);
        assert!(Embedder::new(c).is_ok());
        assert!(Embedder::new(EmbedderConfig { mode: EmbedMode::Remote, ..Default::default() }).is_err());
    }
}
