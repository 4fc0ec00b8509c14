use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{ChunkId, ContextChunk, RagError};

const MAGIC: &[u8; 4] = b"RQIX";
const VERSION: u32 = 1;
const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk_id: ChunkId,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone)]
struct Entry {
    chunk: ContextChunk,
    vector: Vec<f64>,
}

/// Exact cosine-similarity index over unit vectors.
///
/// Reads run concurrently; inserts take the write lock for a whole batch.
#[derive(Debug)]
pub struct VectorIndex {
    dimension: usize,
    entries: RwLock<Vec<Entry>>,
}

/// Ranking key: higher score first, then lower chunk id.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    id: ChunkId,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    /// `Greater` means ranked earlier.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl VectorIndex {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            entries: RwLock::new(Vec::new()),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, vector: &[f64]) -> Result<(), RagError> {
        if vector.len() != self.dimension {
            return Err(RagError::Dimension {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        let norm = dot(vector, vector).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(RagError::NotNormalized(norm));
        }
        Ok(())
    }

    /// Adds a batch of chunks with their vectors. Chunk ids are replaced by
    /// consecutive ids following the current largest one.
    pub fn insert_batch(
        &self,
        batch: Vec<(ContextChunk, Vec<f64>)>,
    ) -> Result<Vec<ChunkId>, RagError> {
        for (_, vector) in &batch {
            self.check(vector)?;
        }
        let mut entries = self.entries.write().expect("index lock");
        let mut next = entries.last().map_or(0, |e| e.chunk.id.0 + 1);
        let mut ids = Vec::with_capacity(batch.len());
        for (mut chunk, vector) in batch {
            chunk.id = ChunkId(next);
            next += 1;
            ids.push(chunk.id);
            entries.push(Entry { chunk, vector });
        }
        Ok(ids)
    }

    pub fn chunk(&self, id: ChunkId) -> Option<ContextChunk> {
        let entries = self.entries.read().expect("index lock");
        entries
            .binary_search_by_key(&id, |e| e.chunk.id)
            .ok()
            .map(|i| entries[i].chunk.clone())
    }

    pub fn chunks(&self) -> Vec<ContextChunk> {
        let entries = self.entries.read().expect("index lock");
        entries.iter().map(|e| e.chunk.clone()).collect()
    }

    /// Exact top-`k` by dot product with `query`.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<RetrievalResult>, RagError> {
        if k == 0 {
            return Err(RagError::Config("k must be at least 1".into()));
        }
        if query.len() != self.dimension {
            return Err(RagError::Dimension {
                expected: self.dimension,
                actual: query.len(),
            });
        }
        let entries = self.entries.read().expect("index lock");
        let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
        for entry in entries.iter() {
            let candidate = Candidate {
                score: dot(query, &entry.vector),
                id: entry.chunk.id,
            };
            if heap.len() < k {
                heap.push(Reverse(candidate));
            } else if heap.peek().is_some_and(|worst| candidate > worst.0) {
                heap.pop();
                heap.push(Reverse(candidate));
            }
        }
        // ascending by Reverse = best first
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .enumerate()
            .map(|(i, Reverse(c))| RetrievalResult {
                chunk_id: c.id,
                score: c.score,
                rank: i + 1,
            })
            .collect())
    }

    /// Path of the chunk-text file stored next to `index_path`.
    pub fn sidecar_path(index_path: &Path) -> PathBuf {
        let mut name = index_path.as_os_str().to_owned();
        name.push(".chunks.jsonl");
        PathBuf::from(name)
    }

    /// Writes the binary index and its chunk-text sidecar.
    pub fn save(&self, path: &Path) -> Result<(), RagError> {
        let entries = self.entries.read().expect("index lock");
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(VERSION)?;
        out.write_u32::<LittleEndian>(self.dimension as u32)?;
        out.write_u64::<LittleEndian>(entries.len() as u64)?;
        for entry in entries.iter() {
            let c = &entry.chunk;
            out.write_u64::<LittleEndian>(c.id.0)?;
            out.write_u64::<LittleEndian>(c.document_id)?;
            out.write_u64::<LittleEndian>(c.offset)?;
            out.write_u64::<LittleEndian>(c.length)?;
            for x in &entry.vector {
                out.write_f64::<LittleEndian>(*x)?;
            }
        }
        out.flush()?;

        let mut side = BufWriter::new(File::create(Self::sidecar_path(path))?);
        for entry in entries.iter() {
            let line = serde_json::to_string(&SidecarLine {
                chunk_id: entry.chunk.id,
                text: entry.chunk.text.clone(),
            })
            .expect("serializable");
            writeln!(side, "{line}")?;
        }
        side.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RagError> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(RagError::Corrupt("not an index file".into()));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(RagError::Corrupt(format!("unsupported index version {version}")));
        }
        let dimension = input.read_u32::<LittleEndian>()? as usize;
        let count = input.read_u64::<LittleEndian>()?;

        let side = BufReader::new(File::open(Self::sidecar_path(path))?);
        let mut texts = side.lines();

        let index = Self::new(dimension);
        let mut entries = Vec::with_capacity(count.min(1 << 20) as usize);
        for _ in 0..count {
            let id = ChunkId(input.read_u64::<LittleEndian>()?);
            let document_id = input.read_u64::<LittleEndian>()?;
            let offset = input.read_u64::<LittleEndian>()?;
            let length = input.read_u64::<LittleEndian>()?;
            let mut vector = vec![0.0; dimension];
            input.read_f64_into::<LittleEndian>(&mut vector)?;
            index.check(&vector)?;
            let line = texts
                .next()
                .ok_or_else(|| RagError::Corrupt("chunk-text file is short".into()))??;
            let side: SidecarLine = serde_json::from_str(&line)
                .map_err(|e| RagError::Corrupt(format!("chunk-text line: {e}")))?;
            if side.chunk_id != id {
                return Err(RagError::Corrupt(format!(
                    "chunk-text line for {} where {} was expected",
                    side.chunk_id, id
                )));
            }
            if entries.last().is_some_and(|e: &Entry| e.chunk.id >= id) {
                return Err(RagError::Corrupt("chunk ids are not increasing".into()));
            }
            entries.push(Entry {
                chunk: ContextChunk {
                    id,
                    document_id,
                    offset,
                    length,
                    text: side.text,
                },
                vector,
            });
        }
        *index.entries.write().expect("index lock") = entries;
        Ok(index)
    }
}

#[derive(Serialize, Deserialize)]
struct SidecarLine {
    chunk_id: ChunkId,
    text: String,
}
