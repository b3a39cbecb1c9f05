//! Rare-class ("hope speech") scoring.
//!
//! Any [`HopeClassifier`] can drive the pipeline. [`HopeModel`] is the
//! reference implementation: an L2-regularized logistic model over
//! mean-pooled document embeddings, trained with seeded SGD.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, Corpus};
use crate::embedding::{EmbeddingTable, Vector};
use crate::error::{Error, Result};

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

/// A labeled training comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    #[serde(rename = "id")]
    pub comment_id: String,
    #[serde(with = "bool_as_int")]
    pub label: bool,
}

mod bool_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopePrediction {
    pub score: f64,
    pub positive: bool,
}

pub trait HopeClassifier {
    fn predict(&self, table: &EmbeddingTable, comment: &Comment) -> HopePrediction;
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopeModel {
    pub weights: Vector,
    pub bias: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopeTrainConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Weight positives by the class ratio so a rare class is not ignored.
    pub balance_classes: bool,
}

impl Default for HopeTrainConfig {
    fn default() -> Self {
        HopeTrainConfig {
            l2: 0.03,
            epochs: 30,
            learning_rate: 0.5,
            seed: 1,
            balance_classes: true,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl HopeModel {
    pub fn new(weights: Vector, bias: f64, threshold: f64) -> Result<Self> {
        if !weights.is_finite() || !bias.is_finite() {
            return Err(Error::InvalidParameter("non-finite model parameters".into()));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(HopeModel {
            weights,
            bias,
            threshold,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn score_vector(&self, v: &Vector) -> f64 {
        sigmoid(self.weights.dot(v) + self.bias)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    /// `dim`, `bias`, `threshold` lines followed by a `weights` row.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dim {}", self.weights.dim())?;
        writeln!(w, "bias {}", self.bias)?;
        writeln!(w, "threshold {}", self.threshold)?;
        w.write_all(b"weights")?;
        for x in self.weights.iter() {
            write!(w, " {x}")?;
        }
        w.write_all(b"\n")?;
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let lines: Vec<String> = reader
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::parse(0, e.to_string()))?;
        let field = |i: usize, name: &str| -> Result<&str> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(name))
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::parse(i + 1, format!("expected \"{name} ...\"")))
        };
        let dim: usize = field(0, "dim")?
            .parse()
            .map_err(|_| Error::parse(1, "bad dim"))?;
        let bias: f64 = field(1, "bias")?
            .parse()
            .map_err(|_| Error::parse(2, "bad bias"))?;
        let threshold: f64 = field(2, "threshold")?
            .parse()
            .map_err(|_| Error::parse(3, "bad threshold"))?;
        let weights: Vec<f32> = field(3, "weights")?
            .split(' ')
            .map(|p| p.parse::<f32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(4, "non-numeric weight"))?;
        if weights.len() != dim {
            return Err(Error::parse(
                4,
                format!("expected {dim} weights, found {}", weights.len()),
            ));
        }
        HopeModel::new(Vector::new(weights), bias, threshold)
    }
}

impl HopeClassifier for HopeModel {
    fn predict(&self, table: &EmbeddingTable, comment: &Comment) -> HopePrediction {
        let doc = table.doc_embedding(&comment.tokens);
        let score = self.score_vector(&doc.vector);
        HopePrediction {
            score,
            positive: score >= self.threshold,
        }
    }
}

/// Fits the logistic model on labeled comments resolved against `corpus`.
pub fn train_hope_classifier(
    table: &EmbeddingTable,
    corpus: &Corpus,
    train: &[LabeledDoc],
    config: &HopeTrainConfig,
) -> Result<HopeModel> {
    let mut examples = Vec::with_capacity(train.len());
    for doc in train {
        let comment = corpus
            .get(&doc.comment_id)
            .ok_or_else(|| Error::UnknownId(doc.comment_id.clone()))?;
        let v = table.doc_embedding(&comment.tokens).vector;
        examples.push((v, doc.label));
    }
    train_on_vectors(&examples, config)
}

pub fn train_on_vectors(examples: &[(Vector, bool)], config: &HopeTrainConfig) -> Result<HopeModel> {
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::SingleClass);
    }
    let dim = examples[0].0.dim();
    let pos_weight = if config.balance_classes {
        (examples.len() - positives) as f64 / positives as f64
    } else {
        1.0
    };

    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total_steps = (config.epochs * examples.len()).max(1);
    let mut step = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &examples[i];
            let lr = config.learning_rate / (1.0 + 10.0 * step as f64 / total_steps as f64);
            step += 1;
            let z: f64 = w.iter().zip(x.iter()).map(|(w, &x)| w * x as f64).sum::<f64>() + b;
            let target = if *y { 1.0 } else { 0.0 };
            let weight = if *y { pos_weight } else { 1.0 };
            let g = weight * (sigmoid(z) - target);
            for (wj, &xj) in w.iter_mut().zip(x.iter()) {
                *wj -= lr * (g * xj as f64 + config.l2 * *wj);
            }
            b -= lr * g;
        }
    }
    HopeModel::new(
        Vector::new(w.into_iter().map(|x| x as f32).collect()),
        b,
        DEFAULT_DECISION_THRESHOLD,
    )
}

/// Predicted positives of `corpus`, with their scores.
#[derive(Debug, Clone)]
pub struct HopeSelection {
    pub selected: Corpus,
    pub scores: HashMap<String, f64>,
}

pub fn filter_hope<C: HopeClassifier + ?Sized>(
    classifier: &C,
    table: &EmbeddingTable,
    corpus: &Corpus,
) -> HopeSelection {
    let mut scores = HashMap::new();
    let selected = corpus.filter("D_hope", |c| {
        let p = classifier.predict(table, c);
        if p.positive {
            scores.insert(c.id.clone(), p.score);
        }
        p.positive
    });
    HopeSelection { selected, scores }
}

/// Reads `{"id": .., "label": 0|1}` lines.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabeledDoc>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: LabeledDoc =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        out.push(doc);
    }
    Ok(out)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[LabeledDoc]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Subset;
    use proptest::prelude::*;

    fn v(xs: &[f32]) -> Vector {
        Vector::new(xs.to_vec())
    }

    fn separable(n: usize) -> Vec<(Vector, bool)> {
        // positives have x0 + x1 > 0.2, negatives < -0.2
        (0..n)
            .map(|i| {
                let t = i as f32 / n as f32;
                let pos = i % 3 == 0;
                let offset = if pos { 0.6 } else { -0.6 };
                (v(&[offset + (t - 0.5) * 0.4, (t * 7.0).sin() * 0.2, 0.1]), pos)
            })
            .collect()
    }

    #[test]
    fn separable_data_is_learned() {
        let data = separable(300);
        let m = train_on_vectors(&data, &HopeTrainConfig::default()).unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| (m.score_vector(x) >= 0.5) == *y)
            .count();
        assert!(correct as f64 / data.len() as f64 >= 0.99);
    }

    #[test]
    fn single_class_is_rejected() {
        let data: Vec<_> = separable(30).into_iter().map(|(x, _)| (x, true)).collect();
        assert!(matches!(
            train_on_vectors(&data, &HopeTrainConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn deterministic_training() {
        let data = separable(100);
        let cfg = HopeTrainConfig::default();
        assert_eq!(train_on_vectors(&data, &cfg).unwrap(), train_on_vectors(&data, &cfg).unwrap());
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            2,
            vec![("aman".into(), v(&[1.0, 0.0])), ("jang".into(), v(&[-1.0, 0.0]))],
        )
        .unwrap()
    }

    #[test]
    fn zero_model_scores_half() {
        let m = HopeModel::new(Vector::zeros(2), 0.0, 0.5).unwrap();
        let c = Comment::new("a", "aman jang", Subset::HindiEn);
        let p = m.predict(&table(), &c);
        assert_eq!(p.score, 0.5);
        assert!(p.positive);
    }

    #[test]
    fn unresolvable_comment_scores_bias() {
        let m = HopeModel::new(v(&[3.0, 1.0]), -0.7, 0.5).unwrap();
        let c = Comment::new("a", "qqq zzz", Subset::HindiEn);
        assert!((m.predict(&table(), &c).score - sigmoid(-0.7)).abs() < 1e-15);
    }

    #[test]
    fn filter_thresholds() {
        let corpus = Corpus::new(
            "d",
            vec![
                Comment::new("a", "aman", Subset::HindiEn),
                Comment::new("b", "jang", Subset::HindiEn),
                Comment::new("c", "aman aman jang", Subset::HindiEn),
            ],
        )
        .unwrap();
        let m = HopeModel::new(v(&[2.0, 0.0]), 0.0, 0.5).unwrap();
        let t = table();
        let all = filter_hope(&m.clone().with_threshold(0.0).unwrap(), &t, &corpus);
        assert_eq!(all.selected.len(), 3);
        let none = filter_hope(&m.clone().with_threshold(1.0).unwrap(), &t, &corpus);
        assert!(none.selected.is_empty());
        let some = filter_hope(&m, &t, &corpus);
        assert_eq!(
            some.selected.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
            vec!["a", "c"]
        );
        assert!(some.scores.values().all(|&s| s >= 0.5));
    }

    #[test]
    fn model_file_roundtrip() {
        let m = HopeModel::new(v(&[0.25, -1.0 / 3.0]), -0.125, 0.6).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(HopeModel::read_from(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn labels_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.jsonl");
        let labels = vec![
            LabeledDoc { comment_id: "c1".into(), label: true },
            LabeledDoc { comment_id: "c2".into(), label: false },
        ];
        write_labels(&p, &labels).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{\"id\":\"c1\",\"label\":1}\n{\"id\":\"c2\",\"label\":0}\n");
        assert_eq!(read_labels(&p).unwrap(), labels);
    }

    proptest! {
        #[test]
        fn raising_threshold_never_adds(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, w0 in -3.0f32..3.0, b in -1.0f64..1.0) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let corpus = Corpus::new("d", vec![
                Comment::new("a", "aman", Subset::HindiEn),
                Comment::new("b", "jang", Subset::HindiEn),
                Comment::new("c", "aman jang aman", Subset::HindiEn),
                Comment::new("d", "zzz", Subset::HindiEn),
            ]).unwrap();
            let t = table();
            let base = HopeModel::new(v(&[w0, 0.0]), b, lo).unwrap();
            let low = filter_hope(&base, &t, &corpus);
            let high = filter_hope(&base.clone().with_threshold(hi).unwrap(), &t, &corpus);
            for c in high.selected.iter() {
                prop_assert!(low.selected.contains(&c.id));
            }
        }
    }
}
