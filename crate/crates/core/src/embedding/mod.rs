//! Dense token vectors with character n-gram back-off, mean-pooled document
//! vectors and cosine distance. Every geometric operation downstream
//! (clustering, language assignment, neighbor search) works in this space.

mod io;
mod train;

use std::collections::HashMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::{parse_row, write_vectors};
pub use io::{read_vectors, subword_path};
pub use train::{train_embeddings, TrainConfig};

pub const MIN_NGRAM: usize = 3;
pub const MAX_NGRAM: usize = 6;

/// A finite dense vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f32>);

impl Vector {
    pub fn new(components: Vec<f32>) -> Self {
        Vector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn squared_euclidean(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum()
    }

    pub fn euclidean(&self, other: &Vector) -> f64 {
        self.squared_euclidean(other).sqrt()
    }

    pub fn scaled(&self, factor: f32) -> Vector {
        Vector(self.0.iter().map(|x| x * factor).collect())
    }

    /// Component-wise mean, accumulated in `f64`. `None` for an empty input.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a Vector>) -> Option<Vector> {
        let mut iter = vectors.into_iter();
        let first = iter.next()?;
        let mut acc: Vec<f64> = first.0.iter().map(|&x| x as f64).collect();
        let mut n = 1usize;
        for v in iter {
            debug_assert_eq!(v.dim(), acc.len());
            for (a, &x) in acc.iter_mut().zip(&v.0) {
                *a += x as f64;
            }
            n += 1;
        }
        Some(Vector(acc.into_iter().map(|a| (a / n as f64) as f32).collect()))
    }
}

impl Deref for Vector {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

impl From<Vec<f32>> for Vector {
    fn from(v: Vec<f32>) -> Self {
        Vector(v)
    }
}

/// `1 - cos(u, v)`, with distance 1 whenever either vector has zero norm.
pub fn cosine_distance(u: &Vector, v: &Vector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    Ok(cosine_distance_unchecked(u, v))
}

pub(crate) fn cosine_distance_unchecked(u: &Vector, v: &Vector) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    (1.0 - u.dot(v) / (nu * nv)).clamp(0.0, 2.0)
}

/// Character n-grams of `<word>` with lengths in `min..=max`.
pub fn char_ngrams(word: &str, min: usize, max: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min..=max {
        if n > chars.len() {
            break;
        }
        for window in chars.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

/// How a token vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Exact,
    Subword,
    /// No entry and no known n-gram; the vector is zero.
    OutOfVocabulary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenVector {
    pub vector: Vector,
    pub resolution: Resolution,
}

impl TokenVector {
    pub fn is_oov(&self) -> bool {
        self.resolution == Resolution::OutOfVocabulary
    }
}

/// Mean-pooled document vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub vector: Vector,
    /// Number of tokens that contributed a vector.
    pub resolved: usize,
}

impl DocVector {
    /// True when no token resolved and the vector is zero.
    pub fn is_unresolved(&self) -> bool {
        self.resolved == 0
    }
}

/// Token and subword vectors of a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    word_index: HashMap<String, usize>,
    word_vectors: Vec<Vector>,
    ngrams: Vec<String>,
    ngram_index: HashMap<String, usize>,
    ngram_vectors: Vec<Vector>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, entries: Vec<(String, Vector)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if entries.is_empty() {
            return Err(Error::Empty("embedding vocabulary"));
        }
        let (words, word_vectors, word_index) = Self::index_entries(dim, entries)?;
        Ok(EmbeddingTable {
            dim,
            words,
            word_index,
            word_vectors,
            ngrams: Vec::new(),
            ngram_index: HashMap::new(),
            ngram_vectors: Vec::new(),
        })
    }

    /// Attaches character n-gram vectors used for out-of-vocabulary back-off.
    pub fn with_subwords(mut self, entries: Vec<(String, Vector)>) -> Result<Self> {
        let (ngrams, vectors, index) = Self::index_entries(self.dim, entries)?;
        self.ngrams = ngrams;
        self.ngram_vectors = vectors;
        self.ngram_index = index;
        Ok(self)
    }

    #[allow(clippy::type_complexity)]
    fn index_entries(
        dim: usize,
        entries: Vec<(String, Vector)>,
    ) -> Result<(Vec<String>, Vec<Vector>, HashMap<String, usize>)> {
        let mut keys = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (key, v) in entries {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite component in vector for {key:?}"
                )));
            }
            if index.insert(key.clone(), keys.len()).is_some() {
                return Err(Error::DuplicateId(key));
            }
            keys.push(key);
            vectors.push(v);
        }
        Ok((keys, vectors, index))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.word_index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&Vector> {
        self.word_index.get(token).map(|&i| &self.word_vectors[i])
    }

    /// Vocabulary entries in stored order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &Vector)> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.word_vectors.iter())
    }

    pub fn subword_entries(&self) -> impl Iterator<Item = (&str, &Vector)> {
        self.ngrams
            .iter()
            .map(String::as_str)
            .zip(self.ngram_vectors.iter())
    }

    pub fn subword_count(&self) -> usize {
        self.ngrams.len()
    }

    /// The stored vector, else the mean of known n-gram vectors, else zero.
    pub fn token_vector(&self, token: &str) -> TokenVector {
        if let Some(v) = self.get(token) {
            return TokenVector {
                vector: v.clone(),
                resolution: Resolution::Exact,
            };
        }
        let known: Vec<&Vector> = char_ngrams(token, MIN_NGRAM, MAX_NGRAM)
            .iter()
            .filter_map(|g| self.ngram_index.get(g.as_str()))
            .map(|&i| &self.ngram_vectors[i])
            .collect();
        match Vector::mean(known) {
            Some(vector) => TokenVector {
                vector,
                resolution: Resolution::Subword,
            },
            None => TokenVector {
                vector: Vector::zeros(self.dim),
                resolution: Resolution::OutOfVocabulary,
            },
        }
    }

    /// Unweighted mean of the resolvable token vectors.
    pub fn doc_embedding<S: AsRef<str>>(&self, tokens: &[S]) -> DocVector {
        let resolved: Vec<Vector> = tokens
            .iter()
            .map(|t| self.token_vector(t.as_ref()))
            .filter(|tv| !tv.is_oov())
            .map(|tv| tv.vector)
            .collect();
        match Vector::mean(&resolved) {
            Some(vector) => DocVector {
                vector,
                resolved: resolved.len(),
            },
            None => DocVector {
                vector: Vector::zeros(self.dim),
                resolved: 0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f32]) -> Vector {
        Vector::new(xs.to_vec())
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            3,
            vec![
                ("aman".into(), v(&[1.0, 0.0, 0.0])),
                ("war".into(), v(&[0.0, 1.0, 0.0])),
                ("neg".into(), v(&[-1.0, 0.0, 0.0])),
            ],
        )
        .unwrap()
        .with_subwords(
            char_ngrams("aman", MIN_NGRAM, MAX_NGRAM)
                .into_iter()
                .map(|g| (g, v(&[1.0, 0.2, 0.0])))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ngrams_of_short_word() {
        let grams = char_ngrams("ab", 3, 6);
        assert_eq!(grams, vec!["<ab", "ab>", "<ab>"]);
    }

    #[test]
    fn token_vector_resolution() {
        let t = table();
        let exact = t.token_vector("war");
        assert_eq!(exact.resolution, Resolution::Exact);
        assert_eq!(exact.vector, v(&[0.0, 1.0, 0.0]));

        let sub = t.token_vector("amaan");
        assert_eq!(sub.resolution, Resolution::Subword);
        assert!(sub.vector.norm() > 0.0);
        assert!(1.0 - cosine_distance(&sub.vector, t.get("aman").unwrap()).unwrap() > 0.0);

        let oov = t.token_vector("zzz");
        assert!(oov.is_oov());
        assert!(oov.vector.is_zero());
    }

    #[test]
    fn doc_embedding_examples() {
        let t = table();
        assert_eq!(t.doc_embedding(&["war"]).vector, v(&[0.0, 1.0, 0.0]));
        assert!(t.doc_embedding(&["aman", "neg"]).vector.is_zero());
        let empty: [&str; 0] = [];
        let d = t.doc_embedding(&empty);
        assert!(d.is_unresolved() && d.vector.is_zero());
        // OOV tokens do not dilute the mean
        assert_eq!(t.doc_embedding(&["war", "qqq"]).vector, v(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn cosine_examples() {
        let a = v(&[1.0, 2.0, 3.0]);
        assert!(cosine_distance(&a, &a).unwrap().abs() < 1e-12);
        assert!((cosine_distance(&a, &a.scaled(-1.0)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(cosine_distance(&Vector::zeros(3), &a).unwrap(), 1.0);
        assert!(cosine_distance(&a, &v(&[1.0])).is_err());
    }

    #[test]
    fn table_rejects_bad_entries() {
        assert!(EmbeddingTable::new(2, vec![]).is_err());
        assert!(EmbeddingTable::new(2, vec![("a".into(), v(&[1.0]))]).is_err());
        assert!(EmbeddingTable::new(1, vec![("a".into(), v(&[f32::NAN]))]).is_err());
    }

    fn vec3() -> impl Strategy<Value = Vector> {
        prop::collection::vec(-10.0f32..10.0, 3).prop_map(Vector::new)
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(u in vec3(), w in vec3(), c in 0.01f32..100.0) {
            let d1 = cosine_distance(&u, &w).unwrap();
            let d2 = cosine_distance(&w, &u).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&d1));
            if u.norm() > 1e-3 {
                prop_assert!(cosine_distance(&u, &u.scaled(c)).unwrap().abs() < 1e-6);
            }
        }

        #[test]
        fn doc_embedding_permutation_invariant(idx in prop::collection::vec(0usize..4, 0..12), seed in any::<u64>()) {
            let t = table();
            let vocab = ["aman", "war", "neg", "amaan"];
            let tokens: Vec<&str> = idx.iter().map(|&i| vocab[i]).collect();
            let mut shuffled = tokens.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = t.doc_embedding(&tokens).vector;
            let b = t.doc_embedding(&shuffled).vector;
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn token_vectors_finite(s in "[a-z<>]{0,10}") {
            prop_assert!(table().token_vector(&s).vector.is_finite());
        }
    }
}
