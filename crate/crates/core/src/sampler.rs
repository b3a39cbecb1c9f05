//! Nearest-neighbor seed expansion (NN-Sample) and the random baseline.
//!
//! For each seed, in input order, the pool is walked in ascending
//! `(cosine distance, poolId)` order. The walk acts as a monotone cursor:
//! every step moves strictly past the previous neighbor, so equal distances
//! cannot stall it. Candidates already in the expanded set, in the seed set
//! or in a caller-supplied exclusion set are passed over.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{cosine_distance_unchecked, EmbeddingTable, Vector};
use crate::error::{Error, Result};

/// Exact neighbor index over pool document embeddings.
#[derive(Debug, Clone)]
pub struct NNIndex {
    ids: Vec<String>,
    vectors: Vec<Vector>,
    excluded: Vec<String>,
}

impl NNIndex {
    /// Zero or non-finite vectors are left out and listed in [`NNIndex::excluded`].
    pub fn from_vectors(entries: impl IntoIterator<Item = (String, Vector)>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut vectors: Vec<Vector> = Vec::new();
        let mut excluded = Vec::new();
        let mut seen = HashSet::new();
        for (id, v) in entries {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            if let Some(first) = vectors.first() {
                if first.dim() != v.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: first.dim(),
                        actual: v.dim(),
                    });
                }
            }
            if v.is_zero() || !v.is_finite() {
                excluded.push(id);
                continue;
            }
            ids.push(id);
            vectors.push(v);
        }
        if ids.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if !excluded.is_empty() {
            log::warn!("{} pool documents have no usable embedding and are not indexed", excluded.len());
        }
        Ok(NNIndex {
            ids,
            vectors,
            excluded,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &Vector {
        &self.vectors[i]
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// Pool positions sorted by `(distance to query, poolId)`.
    pub fn ranking(&self, query: &Vector) -> Vec<(f64, usize)> {
        let mut order: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (cosine_distance_unchecked(query, v), i))
            .collect();
        order.sort_unstable_by(|a, b| self.compare(*a, *b));
        order
    }

    fn compare(&self, a: (f64, usize), b: (f64, usize)) -> Ordering {
        a.0.total_cmp(&b.0).then_with(|| self.ids[a.1].cmp(&self.ids[b.1]))
    }

    /// The nearest `(distance, position)`, if any.
    pub fn nearest(&self, query: &Vector) -> Option<(f64, usize)> {
        self.vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (cosine_distance_unchecked(query, v), i))
            .min_by(|a, b| self.compare(*a, *b))
    }
}

pub fn build_index(pool: &Corpus, table: &EmbeddingTable) -> Result<NNIndex> {
    NNIndex::from_vectors(
        pool.iter()
            .map(|c| (c.id.clone(), table.doc_embedding(&c.tokens).vector)),
    )
}

/// A query point for the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub id: String,
    pub vector: Vector,
}

impl Seed {
    pub fn new(id: impl Into<String>, vector: Vector) -> Self {
        Seed {
            id: id.into(),
            vector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMember {
    #[serde(rename = "poolId")]
    pub pool_id: String,
    #[serde(rename = "seedId")]
    pub seed_id: String,
    pub distance: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleBatch {
    #[serde(rename = "seedSetName")]
    pub seed_set_name: String,
    pub members: Vec<BatchMember>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pool_ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|m| m.pool_id.as_str())
    }

    pub fn contains(&self, pool_id: &str) -> bool {
        self.members.iter().any(|m| m.pool_id == pool_id)
    }

    /// One JSON member per line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for m in &self.members {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, seed_set_name: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut members = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            members.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
        }
        Ok(SampleBatch {
            seed_set_name: seed_set_name.to_string(),
            members,
        })
    }
}

/// A seed that ran out of candidates before reaching `size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    #[serde(rename = "seedId")]
    pub seed_id: String,
    pub added: usize,
    pub requested: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub batch: SampleBatch,
    pub shortfalls: Vec<Shortfall>,
}

const SEED_CHUNK: usize = 64;

/// Expands `seeds` with up to `size` unseen pool neighbors each.
///
/// Pool items whose id appears in `exclude` are never sampled.
pub fn nn_sample(
    seed_set_name: &str,
    seeds: &[Seed],
    index: &NNIndex,
    size: usize,
    exclude: &HashSet<String>,
) -> Result<SampleOutcome> {
    for s in seeds {
        if s.vector.dim() != index.dim() {
            return Err(Error::DimensionMismatch {
                expected: index.dim(),
                actual: s.vector.dim(),
            });
        }
    }
    let mut blocked = vec![false; index.len()];
    let seed_ids: HashSet<&str> = seeds.iter().map(|s| s.id.as_str()).collect();
    for (i, id) in index.ids.iter().enumerate() {
        if seed_ids.contains(id.as_str()) || exclude.contains(id) {
            blocked[i] = true;
        }
    }

    let mut members = Vec::new();
    let mut shortfalls = Vec::new();
    if size == 0 {
        return Ok(SampleOutcome {
            batch: SampleBatch {
                seed_set_name: seed_set_name.to_string(),
                members,
            },
            shortfalls,
        });
    }
    for chunk in seeds.chunks(SEED_CHUNK) {
        let rankings: Vec<Vec<(f64, usize)>> =
            chunk.par_iter().map(|s| index.ranking(&s.vector)).collect();
        for (seed, ranking) in chunk.iter().zip(rankings) {
            let mut added = 0;
            for (distance, i) in ranking {
                if added == size {
                    break;
                }
                if blocked[i] {
                    continue;
                }
                blocked[i] = true;
                added += 1;
                members.push(BatchMember {
                    pool_id: index.ids[i].clone(),
                    seed_id: seed.id.clone(),
                    distance,
                    rank: added,
                });
            }
            if added < size {
                shortfalls.push(Shortfall {
                    seed_id: seed.id.clone(),
                    added,
                    requested: size,
                });
            }
        }
    }
    Ok(SampleOutcome {
        batch: SampleBatch {
            seed_set_name: seed_set_name.to_string(),
            members,
        },
        shortfalls,
    })
}

/// `n` pool comments drawn uniformly without replacement.
pub fn random_sample(pool: &Corpus, n: usize, seed: u64) -> Result<Corpus> {
    if n > pool.len() {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), n);
    let comments = picks
        .into_iter()
        .map(|i| pool.comments()[i].clone())
        .collect();
    Corpus::new(format!("random({})", pool.name()), comments)
}
