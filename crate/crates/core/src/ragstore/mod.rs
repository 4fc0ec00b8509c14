//! Document index used to answer clarifying questions.
//!
//! Documents are cut into overlapping character windows, embedded, and
//! stored in an exact cosine-similarity index. A question is answered by
//! retrieving the closest chunks and asking a backend to answer from them
//! alone.

mod chunk;
mod embed;
mod index;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{chunk_document, document_id, ChunkId, ContextChunk};
pub use embed::{Embedder, HashEmbedder};
pub use index::{RetrievalResult, VectorIndex};

use crate::clarifier::{AnswerSource, ClarificationExchange, ClarifyingQuestion};
use crate::gateway::heuristic::NO_ANSWER;
use crate::gateway::{Backend, GatewayError};
use crate::prompting::PromptSpec;

pub const INSTRUCTION: &str = "Answer the question using only the provided context.";

pub const OUTPUT_FORMAT: &str =
    "Reply with the answer only, or NO_ANSWER if the context does not contain it.";

#[derive(Debug, Error)]
pub enum RagError {
    #[error("invalid retrieval configuration: {0}")]
    Config(String),
    #[error("text is empty or has no words")]
    EmptyText,
    #[error("vector has dimension {actual}, index expects {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("vector norm {0} is not 1")]
    NotNormalized(f64),
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Backend(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RagConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub k: usize,
    pub dimension: usize,
    pub index_path: Option<PathBuf>,
}

impl Default for RagConfig {
    fn default() -> Self {
        Self {
            chunk_size: 800,
            overlap: 200,
            k: 4,
            dimension: HashEmbedder::DEFAULT_DIMENSION,
            index_path: None,
        }
    }
}

impl RagConfig {
    pub fn validate(&self) -> Result<(), RagError> {
        if self.chunk_size <= self.overlap {
            return Err(RagError::Config(format!(
                "chunk_size {} must exceed overlap {}",
                self.chunk_size, self.overlap
            )));
        }
        if self.k == 0 {
            return Err(RagError::Config("k must be at least 1".into()));
        }
        if self.dimension == 0 {
            return Err(RagError::Config("dimension must be positive".into()));
        }
        Ok(())
    }
}

/// Embedder plus index.
pub struct RagStore {
    config: RagConfig,
    embedder: Arc<dyn Embedder>,
    index: VectorIndex,
}

impl std::fmt::Debug for RagStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RagStore")
            .field("config", &self.config)
            .field("chunks", &self.index.len())
            .finish()
    }
}

impl RagStore {
    /// An empty store using the bundled hash embedder.
    pub fn new(config: RagConfig) -> Result<Self, RagError> {
        config.validate()?;
        let embedder = Arc::new(HashEmbedder::new(config.dimension)?);
        Ok(Self::with_embedder(config, embedder))
    }

    pub fn with_embedder(config: RagConfig, embedder: Arc<dyn Embedder>) -> Self {
        let index = VectorIndex::new(embedder.dimension());
        Self {
            config,
            embedder,
            index,
        }
    }

    /// Opens a persisted index with the bundled embedder.
    pub fn open(config: RagConfig, path: &Path) -> Result<Self, RagError> {
        config.validate()?;
        let index = VectorIndex::load(path)?;
        if index.dimension() != config.dimension {
            return Err(RagError::Dimension {
                expected: config.dimension,
                actual: index.dimension(),
            });
        }
        Ok(Self {
            embedder: Arc::new(HashEmbedder::new(config.dimension)?),
            config,
            index,
        })
    }

    pub fn config(&self) -> &RagConfig {
        &self.config
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    /// Chunks, embeds and indexes one document.
    pub fn ingest(&self, name: &str, text: &str) -> Result<Vec<ChunkId>, RagError> {
        let chunks = chunk_document(
            document_id(name),
            text,
            self.config.chunk_size,
            self.config.overlap,
            0,
        )?;
        let mut batch = Vec::with_capacity(chunks.len());
        for chunk in chunks {
            match self.embedder.embed(&chunk.text) {
                Ok(vector) => batch.push((chunk, vector)),
                // windows of pure punctuation or whitespace carry nothing
                Err(RagError::EmptyText) => continue,
                Err(e) => return Err(e),
            }
        }
        self.index.insert_batch(batch)
    }

    pub fn ingest_file(&self, path: &Path) -> Result<Vec<ChunkId>, RagError> {
        let text = std::fs::read_to_string(path)?;
        self.ingest(&path.to_string_lossy(), &text)
    }

    pub fn save(&self, path: &Path) -> Result<(), RagError> {
        self.index.save(path)
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievalResult>, RagError> {
        if k == 0 {
            return Err(RagError::Config("k must be at least 1".into()));
        }
        if self.index.is_empty() {
            return Ok(Vec::new());
        }
        let vector = self.embedder.embed(query)?;
        self.index.search(&vector, k)
    }
}

/// Prompt context: each chunk under a `[chunk ID]` marker.
pub fn context_block(chunks: &[ContextChunk]) -> String {
    chunks
        .iter()
        .map(|c| format!("[chunk {}]\n{}", c.id, c.text.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn answer_prompt(question: &str, chunks: &[ContextChunk]) -> PromptSpec {
    PromptSpec::new(INSTRUCTION)
        .expect("non-empty instruction")
        .with_context(context_block(chunks))
        .with_input(question)
        .with_output_format(OUTPUT_FORMAT)
}

/// Answers `question` from the `k` closest chunks. The exchange comes back
/// unanswered when nothing is retrieved or the backend finds no answer.
pub fn answer_question(
    store: &RagStore,
    question: &ClarifyingQuestion,
    k: usize,
    backend: &dyn Backend,
) -> Result<ClarificationExchange, RagError> {
    let exchange = ClarificationExchange::open(question.clone());
    let hits = match store.retrieve(&question.text, k) {
        Ok(hits) => hits,
        Err(RagError::EmptyText) => return Ok(exchange),
        Err(e) => return Err(e),
    };
    if hits.is_empty() {
        return Ok(exchange);
    }
    let chunks: Vec<ContextChunk> = hits
        .iter()
        .filter_map(|h| store.index().chunk(h.chunk_id))
        .collect();
    let completion = backend.complete(&answer_prompt(&question.text, &chunks).render())?;
    let answer = completion.text.trim();
    if answer.is_empty() || answer.contains(NO_ANSWER) {
        return Ok(exchange);
    }
    let provenance = hits.iter().map(|h| h.chunk_id).collect();
    Ok(exchange
        .attach_answer(answer, AnswerSource::Rag, provenance)
        .expect("fresh exchange, non-empty answer, non-empty provenance"))
}
