//! Word vectors in the plain-text "token f1 f2 … fD" format.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read embedding file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected {expected} dimensions, found {found}")]
    InconsistentDimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse {text:?}")]
    Unparseable { line: usize, text: String },
}

#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore, EmbeddingError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EmbeddingError::Io { path: path.display().to_string(), source })?;
    EmbeddingStore::parse(&text)
}

impl EmbeddingStore {
    /// An empty store; every lookup is out of vocabulary.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut store = EmbeddingStore::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default().to_lowercase();
            let vec: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vec = match vec {
                Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => v,
                _ => return Err(EmbeddingError::Unparseable { line: line_no, text: line.chars().take(40).collect() }),
            };
            if store.dim == 0 {
                store.dim = vec.len();
            } else if vec.len() != store.dim {
                return Err(EmbeddingError::InconsistentDimension {
                    line: line_no,
                    expected: store.dim,
                    found: vec.len(),
                });
            }
            store.vectors.insert(token, vec);
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// Cosine similarity of two stored tokens; `None` when either is missing or zero.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        cosine(self.vector(a)?, self.vector(b)?)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_identity_and_opposite() {
        let s = EmbeddingStore::parse("up 1 2 3\ndown -1 -2 -3\n").unwrap();
        assert!((s.cosine("up", "up").unwrap() - 1.0).abs() < 1e-12);
        assert!((s.cosine("up", "down").unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(s.cosine("up", "sideways"), None);
    }

    #[test]
    fn loading_errors_carry_line_numbers() {
        let e = EmbeddingStore::parse("a 1 2\nb 1 2 3\n").unwrap_err();
        assert!(matches!(e, EmbeddingError::InconsistentDimension { line: 2, expected: 2, found: 3 }));
        let e = EmbeddingStore::parse("a 1 2\n\nb 1 x\n").unwrap_err();
        assert!(matches!(e, EmbeddingError::Unparseable { line: 3, .. }));
    }

    #[test]
    fn zero_vector_has_no_cosine() {
        let s = EmbeddingStore::parse("z 0 0\na 1 0\n").unwrap();
        assert_eq!(s.cosine("z", "a"), None);
    }
}
