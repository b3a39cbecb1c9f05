//! Unsupervised language identification in document-embedding space.
//!
//! Document vectors are clustered with k-means and two clusters are named
//! `en` and `h_e` from small anchor word lists. A document takes the label
//! of its nearest named centroid. A token is treated as a one-word document,
//! except that it is labeled neutral when it sits roughly equidistant from
//! the two centroids:
//!
//! ```text
//! |dist(w, en) - dist(w, h_e)| / dist(en, h_e) <= epsilon
//! ```

mod kmeans;
mod model_io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, Corpus, Token};
use crate::embedding::{EmbeddingTable, Vector};
use crate::error::{Error, Result};

pub use kmeans::{kmeans, KMeansFit, MAX_ITERATIONS, TOLERANCE};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageLabel {
    #[serde(rename = "neutral")]
    Neutral,
    #[serde(rename = "en")]
    En,
    #[serde(rename = "h_e")]
    HindiEn,
}

impl LanguageLabel {
    pub const ALL: [LanguageLabel; 3] = [
        LanguageLabel::Neutral,
        LanguageLabel::En,
        LanguageLabel::HindiEn,
    ];

    /// Swaps `en` and `h_e`; neutral is fixed.
    pub fn swapped(self) -> Self {
        match self {
            LanguageLabel::En => LanguageLabel::HindiEn,
            LanguageLabel::HindiEn => LanguageLabel::En,
            LanguageLabel::Neutral => LanguageLabel::Neutral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LanguageLabel::Neutral => "neutral",
            LanguageLabel::En => "en",
            LanguageLabel::HindiEn => "h_e",
        }
    }
}

impl fmt::Display for LanguageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neutral" => Ok(LanguageLabel::Neutral),
            "en" => Ok(LanguageLabel::En),
            "h_e" | "he" => Ok(LanguageLabel::HindiEn),
            other => Err(Error::InvalidParameter(format!("unknown language label {other:?}"))),
        }
    }
}

/// Cluster indices of the two named languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelMap {
    pub en: usize,
    pub hindi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Vec<Vector>,
    label_map: Option<LabelMap>,
    epsilon: f64,
}

impl ClusterModel {
    pub fn new(centroids: Vec<Vector>, epsilon: f64) -> Result<Self> {
        if centroids.len() < 2 {
            return Err(Error::InvalidParameter("need at least two centroids".into()));
        }
        let dim = centroids[0].dim();
        if let Some(c) = centroids.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.dim(),
            });
        }
        check_epsilon(epsilon)?;
        Ok(ClusterModel {
            centroids,
            label_map: None,
            epsilon,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].dim()
    }

    pub fn centroids(&self) -> &[Vector] {
        &self.centroids
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn label_map(&self) -> Option<LabelMap> {
        self.label_map
    }

    pub fn with_label_map(mut self, map: LabelMap) -> Result<Self> {
        if map.en == map.hindi {
            return Err(Error::ClustersNotSeparated(map.en));
        }
        if map.en >= self.k() || map.hindi >= self.k() {
            return Err(Error::InvalidParameter("label map index out of range".into()));
        }
        self.label_map = Some(map);
        Ok(self)
    }

    /// The same model with `en` and `h_e` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        let map = self.anchored()?;
        Ok(ClusterModel {
            label_map: Some(LabelMap {
                en: map.hindi,
                hindi: map.en,
            }),
            ..self.clone()
        })
    }

    pub fn is_anchored(&self) -> bool {
        self.label_map.is_some()
    }

    fn anchored(&self) -> Result<LabelMap> {
        self.label_map.ok_or(Error::NotAnchored)
    }

    pub fn centroid_of(&self, label: LanguageLabel) -> Option<&Vector> {
        let map = self.label_map?;
        match label {
            LanguageLabel::En => Some(&self.centroids[map.en]),
            LanguageLabel::HindiEn => Some(&self.centroids[map.hindi]),
            LanguageLabel::Neutral => None,
        }
    }

    fn language_centroids(&self) -> (&Vector, &Vector) {
        let map = self.label_map.expect("model is anchored");
        (&self.centroids[map.en], &self.centroids[map.hindi])
    }

    /// Nearest named centroid by Euclidean distance, ties to `en`.
    pub fn assign_doc_language(&self, vector: &Vector) -> Result<LanguageLabel> {
        self.anchored()?;
        let (en, hi) = self.language_centroids();
        Ok(if vector.squared_euclidean(en) <= vector.squared_euclidean(hi) {
            LanguageLabel::En
        } else {
            LanguageLabel::HindiEn
        })
    }

    /// `|dist(v, en) - dist(v, h_e)| / dist(en, h_e)`.
    pub fn equidistance_ratio(&self, vector: &Vector) -> Result<f64> {
        self.anchored()?;
        let (en, hi) = self.language_centroids();
        let between = en.euclidean(hi);
        Ok((vector.euclidean(en) - vector.euclidean(hi)).abs() / between)
    }

    /// Labels a single token as a one-word document.
    pub fn assign_token_language(&self, table: &EmbeddingTable, token: &str) -> Result<LanguageLabel> {
        self.anchored()?;
        let tv = table.token_vector(token);
        if tv.is_oov() {
            return Ok(LanguageLabel::Neutral);
        }
        self.label_vector(&tv.vector)
    }

    /// The token rule applied to an arbitrary vector.
    pub fn label_vector(&self, vector: &Vector) -> Result<LanguageLabel> {
        if self.equidistance_ratio(vector)? <= self.epsilon {
            return Ok(LanguageLabel::Neutral);
        }
        self.assign_doc_language(vector)
    }

    pub fn label_comment(&self, table: &EmbeddingTable, comment: &Comment) -> Result<TokenLabeling> {
        let mut labeler = TokenLabeler::new(self, table)?;
        Ok(labeler.label_comment(comment))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Clusters document vectors into `k` groups; the result has no language names yet.
pub fn fit_clusters(vectors: &[Vector], k: usize, seed: u64) -> Result<ClusterModel> {
    let fit = kmeans(vectors, k, seed)?;
    ClusterModel::new(fit.centroids, DEFAULT_EPSILON)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchors {
    pub en: Vec<String>,
    pub hindi: Vec<String>,
}

impl Anchors {
    /// High-frequency function words for each language.
    pub fn default_function_words() -> Self {
        Anchors {
            en: ["the", "and", "is", "of", "to", "in", "that", "it", "for", "you"]
                .map(String::from)
                .to_vec(),
            hindi: ["hai", "nahi", "ka", "ki", "ke", "mein", "ko", "se", "aur", "bhi"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Names the `en` and `h_e` clusters after the centroids nearest to the mean
/// anchor vector of each language.
pub fn anchor_clusters(model: &ClusterModel, anchors: &Anchors, table: &EmbeddingTable) -> Result<ClusterModel> {
    let mean_anchor = |words: &[String], lang: &'static str| -> Result<Vector> {
        let found: Vec<&Vector> = words.iter().filter_map(|w| table.get(w)).collect();
        Vector::mean(found).ok_or(Error::AnchorsOutOfVocabulary(lang))
    };
    let en = mean_anchor(&anchors.en, "en")?;
    let hindi = mean_anchor(&anchors.hindi, "h_e")?;
    if en.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: en.dim(),
        });
    }
    let closest = |v: &Vector| -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in model.centroids.iter().enumerate() {
            let d = c.squared_euclidean(v);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    };
    let map = LabelMap {
        en: closest(&en),
        hindi: closest(&hindi),
    };
    model.clone().with_label_map(map)
}

/// Per-token labels for one comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLabeling {
    #[serde(rename = "commentId")]
    pub comment_id: String,
    pub labels: Vec<LanguageLabel>,
}

impl TokenLabeling {
    pub fn new(comment_id: impl Into<String>, labels: Vec<LanguageLabel>) -> Self {
        TokenLabeling {
            comment_id: comment_id.into(),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Token labeling with a per-surface cache; labels depend only on the surface
/// form, so repeated tokens across a corpus are computed once.
pub struct TokenLabeler<'a> {
    model: &'a ClusterModel,
    table: &'a EmbeddingTable,
    cache: HashMap<String, LanguageLabel>,
}

impl<'a> TokenLabeler<'a> {
    pub fn new(model: &'a ClusterModel, table: &'a EmbeddingTable) -> Result<Self> {
        model.anchored()?;
        if model.dim() != table.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: table.dim(),
            });
        }
        Ok(TokenLabeler {
            model,
            table,
            cache: HashMap::new(),
        })
    }

    pub fn label(&mut self, token: &str) -> LanguageLabel {
        if let Some(&l) = self.cache.get(token) {
            return l;
        }
        let l = self
            .model
            .assign_token_language(self.table, token)
            .expect("model anchored at construction");
        self.cache.insert(token.to_string(), l);
        l
    }

    pub fn label_tokens(&mut self, tokens: &[Token]) -> Vec<LanguageLabel> {
        tokens.iter().map(|t| self.label(t.as_str())).collect()
    }

    pub fn label_comment(&mut self, comment: &Comment) -> TokenLabeling {
        TokenLabeling::new(comment.id.clone(), self.label_tokens(&comment.tokens))
    }
}

/// Neutral-labeled corpus tokens ranked by frequency, ties broken
/// lexicographically, truncated to `top_n`.
pub fn neutral_lexicon(
    model: &ClusterModel,
    table: &EmbeddingTable,
    corpus: &Corpus,
    top_n: usize,
) -> Result<Vec<(String, usize)>> {
    let mut labeler = TokenLabeler::new(model, table)?;
    if top_n == 0 {
        return Ok(Vec::new());
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for c in corpus {
        for t in &c.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut neutral: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, _)| labeler.label(t) == LanguageLabel::Neutral)
        .map(|(t, n)| (t.to_string(), n))
        .collect();
    neutral.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    neutral.truncate(top_n);
    Ok(neutral)
}
