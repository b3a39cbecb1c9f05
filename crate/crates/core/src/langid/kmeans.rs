//! Lloyd's k-means with k-means++ seeding in Euclidean space.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::Vector;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vector>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

fn nearest(centroids: &[Vector], v: &Vector) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = c.squared_euclidean(v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn distinct_count(vectors: &[Vector], limit: usize) -> usize {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for v in vectors {
        // +0.0 and -0.0 are the same point
        seen.insert(v.iter().map(|x| (x + 0.0).to_bits()).collect());
        if seen.len() >= limit {
            break;
        }
    }
    seen.len()
}

/// Clusters `vectors` into `k` groups. Deterministic for a given seed.
pub fn kmeans(vectors: &[Vector], k: usize, seed: u64) -> Result<KMeansFit> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    let dim = vectors.first().map(Vector::dim).unwrap_or(0);
    if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    let distinct = distinct_count(vectors, k);
    if distinct < k {
        return Err(Error::TooFewDistinct { k, distinct });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut rng);
    let mut assignments = vec![0usize; vectors.len()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let nearest_all: Vec<(usize, f64)> =
            vectors.par_iter().map(|v| nearest(&centroids, v)).collect();
        for (a, (c, _)) in assignments.iter_mut().zip(&nearest_all) {
            *a = *c;
        }

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(v.iter()) {
                *s += x as f64;
            }
        }

        // An empty cluster takes the point farthest from its current centroid.
        let mut taken = HashSet::new();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = nearest_all
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken.contains(i) && counts[assignments[*i]] > 1)
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i);
            if let Some(i) = far {
                taken.insert(i);
                let old = assignments[i];
                counts[old] -= 1;
                for (s, &x) in sums[old].iter_mut().zip(vectors[i].iter()) {
                    *s -= x as f64;
                }
                assignments[i] = c;
                counts[c] = 1;
                sums[c] = vectors[i].iter().map(|&x| x as f64).collect();
            }
        }

        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated = Vector::new(
                sums[c]
                    .iter()
                    .map(|s| (s / counts[c] as f64) as f32)
                    .collect(),
            );
            shift = shift.max(updated.euclidean(&centroids[c]));
            centroids[c] = updated;
        }
        if shift < TOLERANCE {
            converged = true;
            break;
        }
    }

    for (a, v) in assignments.iter_mut().zip(vectors) {
        *a = nearest(&centroids, v).0;
    }
    Ok(KMeansFit {
        centroids,
        assignments,
        iterations,
        converged,
    })
}

fn plus_plus_init(vectors: &[Vector], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(vectors[rng.random_range(0..vectors.len())].clone());
    let mut d2: Vec<f64> = vectors
        .iter()
        .map(|v| v.squared_euclidean(&centroids[0]))
        .collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // all remaining mass is zero; distinctness was checked, so fall back
            // to the first point not yet chosen
            Err(_) => d2.iter().position(|&d| d > 0.0).unwrap_or(0),
        };
        let c = vectors[next].clone();
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(v.squared_euclidean(&c));
        }
        centroids.push(c);
    }
    centroids
}
