//! Skip-gram with negative sampling over words and their character n-grams.
//!
//! A word's input representation is the mean of its own row and the rows of
//! its n-grams. Training is single-threaded, so a fixed seed reproduces the
//! table bit for bit.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{char_ngrams, EmbeddingTable, Vector};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub negatives: usize,
    pub learning_rate: f32,
    pub min_ngram: usize,
    pub max_ngram: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            epochs: 5,
            min_count: 2,
            negatives: 5,
            learning_rate: 0.05,
            min_ngram: super::MIN_NGRAM,
            max_ngram: super::MAX_NGRAM,
            seed: 1,
        }
    }
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

fn build_vocab(corpus: &Corpus, min_count: usize) -> Vocab {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for c in corpus {
        for t in &c.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, n)| n as usize >= min_count.max(1))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let index = kept
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.to_string(), i))
        .collect();
    Vocab {
        words: kept.iter().map(|(w, _)| w.to_string()).collect(),
        counts: kept.iter().map(|&(_, n)| n).collect(),
        index,
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    if x > 8.0 {
        1.0
    } else if x < -8.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains word and subword vectors on the corpus token streams.
pub fn train_embeddings(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingTable> {
    if config.dim == 0 || config.window == 0 || config.epochs == 0 {
        return Err(Error::InvalidParameter(
            "dim, window and epochs must be positive".into(),
        ));
    }
    if config.min_ngram == 0 || config.min_ngram > config.max_ngram {
        return Err(Error::InvalidParameter("invalid n-gram range".into()));
    }
    let vocab = build_vocab(corpus, config.min_count);
    if vocab.words.is_empty() {
        return Err(Error::CorpusTooSmall(format!(
            "no token occurs at least {} times",
            config.min_count
        )));
    }

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|c| {
            c.tokens
                .iter()
                .filter_map(|t| vocab.index.get(t.as_str()).copied())
                .collect::<Vec<_>>()
        })
        .filter(|s| s.len() >= 2)
        .collect();
    if sentences.is_empty() {
        return Err(Error::CorpusTooSmall(
            "no comment has two in-vocabulary tokens".into(),
        ));
    }

    // Input rows: one per word, then one per distinct n-gram.
    let n_words = vocab.words.len();
    let mut ngram_names: Vec<String> = Vec::new();
    let mut ngram_index: HashMap<String, usize> = HashMap::new();
    let subwords: Vec<Vec<usize>> = vocab
        .words
        .iter()
        .enumerate()
        .map(|(wi, w)| {
            let mut rows = vec![wi];
            for g in char_ngrams(w, config.min_ngram, config.max_ngram) {
                let next = n_words + ngram_names.len();
                let row = *ngram_index.entry(g.clone()).or_insert_with(|| {
                    ngram_names.push(g);
                    next
                });
                if !rows.contains(&row) {
                    rows.push(row);
                }
            }
            rows
        })
        .collect();

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / dim as f32;
    let n_rows = n_words + ngram_names.len();
    let mut input: Vec<f32> = (0..n_rows * dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let mut output = vec![0.0f32; n_words * dim];

    let noise = WeightedIndex::new(vocab.counts.iter().map(|&c| (c as f64).powf(0.75)))
        .expect("positive counts");

    let total_tokens: usize = sentences.iter().map(Vec::len).sum::<usize>() * config.epochs;
    let mut processed = 0usize;
    let mut hidden = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];

    for _ in 0..config.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = processed as f32 / total_tokens as f32;
                let lr = config.learning_rate * (1.0 - progress).max(1e-4);
                processed += 1;

                let rows = &subwords[center];
                hidden.iter_mut().for_each(|h| *h = 0.0);
                for &r in rows {
                    for (h, x) in hidden.iter_mut().zip(&input[r * dim..(r + 1) * dim]) {
                        *h += x;
                    }
                }
                let scale = 1.0 / rows.len() as f32;
                hidden.iter_mut().for_each(|h| *h *= scale);
                grad.iter_mut().for_each(|g| *g = 0.0);

                let span = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(sentence.len() - 1);
                for (ctx_pos, &target) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    update(&hidden, &mut grad, &mut output, target, 1.0, lr, dim);
                    for _ in 0..config.negatives {
                        let neg = noise.sample(&mut rng);
                        if neg == target {
                            continue;
                        }
                        update(&hidden, &mut grad, &mut output, neg, 0.0, lr, dim);
                    }
                }
                for &r in rows {
                    for (x, g) in input[r * dim..(r + 1) * dim].iter_mut().zip(&grad) {
                        *x += g;
                    }
                }
            }
        }
    }

    let row = |r: usize| Vector::new(input[r * dim..(r + 1) * dim].to_vec());
    let entries = vocab
        .words
        .iter()
        .zip(&subwords)
        .map(|(w, rows)| {
            let composed = Vector::mean(rows.iter().map(|&r| row(r)).collect::<Vec<_>>().iter())
                .expect("every word has its own row");
            (w.clone(), composed)
        })
        .collect();
    let ngram_entries = ngram_names
        .into_iter()
        .enumerate()
        .map(|(i, g)| (g, row(n_words + i)))
        .collect();
    EmbeddingTable::new(dim, entries)?.with_subwords(ngram_entries)
}

#[inline]
fn update(
    hidden: &[f32],
    grad: &mut [f32],
    output: &mut [f32],
    target: usize,
    label: f32,
    lr: f32,
    dim: usize,
) {
    let out = &mut output[target * dim..(target + 1) * dim];
    let score = sigmoid(dot(hidden, out));
    let g = lr * (label - score);
    for ((gr, o), h) in grad.iter_mut().zip(out.iter_mut()).zip(hidden) {
        *gr += g * *o;
        *o += g * h;
    }
}
