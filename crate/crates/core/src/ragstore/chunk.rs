use serde::{Deserialize, Serialize};

use super::RagError;

/// Index-wide chunk identifier, assigned in ingestion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChunkId(pub u64);

impl std::fmt::Display for ChunkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A window of a source document. `offset` and `length` count characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextChunk {
    pub id: ChunkId,
    pub document_id: u64,
    pub offset: u64,
    pub length: u64,
    pub text: String,
}

/// Identifier of a document, derived from its path.
pub fn document_id(path: &str) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(path.as_bytes());
    h.finish()
}

/// Fixed-size character windows with the given overlap.
///
/// Windows start every `chunk_size - overlap` characters. A trailing window
/// shorter than `overlap` is not emitted: the previous window already
/// reaches the end of the text. Chunk ids start at `first_id`.
pub fn chunk_document(
    document_id: u64,
    text: &str,
    chunk_size: usize,
    overlap: usize,
    first_id: u64,
) -> Result<Vec<ContextChunk>, RagError> {
    if chunk_size <= overlap {
        return Err(RagError::Config(format!(
            "chunk size {chunk_size} must exceed overlap {overlap}"
        )));
    }
    if text.is_empty() {
        return Err(RagError::EmptyText);
    }
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let stride = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut offset = 0;
    while offset < n {
        if offset == 0 || n - offset >= overlap {
            let end = (offset + chunk_size).min(n);
            chunks.push(ContextChunk {
                id: ChunkId(first_id + chunks.len() as u64),
                document_id,
                offset: offset as u64,
                length: (end - offset) as u64,
                text: chars[offset..end].iter().collect(),
            });
        }
        offset += stride;
    }
    Ok(chunks)
}
