use std::hash::Hasher;

use super::RagError;

/// Turns text into a fixed-dimension unit vector.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>, RagError>;
}

/// Hashed bag of words: each lowercased alphanumeric token increments one
/// of `dimension` buckets, then the counts are L2-normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 512;

    pub fn new(dimension: usize) -> Result<Self, RagError> {
        if dimension == 0 {
            return Err(RagError::Config("embedding dimension must be positive".into()));
        }
        Ok(Self { dimension })
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self {
            dimension: Self::DEFAULT_DIMENSION,
        }
    }
}

pub(crate) fn normalize(vector: &mut [f64]) -> bool {
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    vector.iter_mut().for_each(|x| *x /= norm);
    true
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RagError> {
        let mut vector = vec![0.0; self.dimension];
        for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let mut h = fnv::FnvHasher::default();
            h.write(token.to_lowercase().as_bytes());
            vector[(h.finish() % self.dimension as u64) as usize] += 1.0;
        }
        if !normalize(&mut vector) {
            return Err(RagError::EmptyText);
        }
        Ok(vector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_and_case_do_not_matter() {
        let e = HashEmbedder::default();
        assert_eq!(e.embed("report report").unwrap(), e.embed("Report").unwrap());
        let v = e.embed("the list of missing products").unwrap();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v.len(), 512);
    }

    #[test]
    fn no_tokens_is_an_error() {
        assert!(HashEmbedder::default().embed("").is_err());
        assert!(HashEmbedder::default().embed(" -- ").is_err());
        assert!(HashEmbedder::new(0).is_err());
    }
}
