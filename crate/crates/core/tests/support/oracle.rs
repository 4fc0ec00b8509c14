//! Brute-force references for retrieval.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cosine similarity computed from raw, unnormalised vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Full scan, full sort: score descending, then position ascending.
pub fn top_k(corpus: &[Vec<f64>], query: &[f64], k: usize) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = corpus
        .iter()
        .enumerate()
        .map(|(i, v)| (i as u64, cosine(v, query)))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// `n` raw vectors of which roughly `dup_share` repeat an earlier vector
/// exactly, so equal scores occur and the tie-break is exercised.
pub fn corpus(rng: &mut ChaCha8Rng, n: usize, dim: usize, dup_share: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        if !out.is_empty() && rng.gen_bool(dup_share) {
            let i = rng.gen_range(0..out.len());
            out.push(out[i].clone());
        } else {
            out.push(random_vector(rng, dim));
        }
    }
    out
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().any(|x| x.abs() > 1e-3) {
            return v;
        }
    }
}

/// Queries: half fresh random vectors, half copies of corpus vectors
/// (whose duplicates then tie at the top).
pub fn queries(rng: &mut ChaCha8Rng, corpus: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                random_vector(rng, corpus[0].len())
            } else {
                corpus[rng.gen_range(0..corpus.len())].clone()
            }
        })
        .collect()
}
