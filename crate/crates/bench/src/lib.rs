//! Shared fixtures for the benchmarks.

use codebridge::classifier::{train_hope_classifier, HopeModel, HopeTrainConfig, LabeledDoc};
use codebridge::embedding::{train_embeddings, EmbeddingTable, TrainConfig, Vector};
use codebridge::langid::{anchor_clusters, fit_clusters, Anchors, ClusterModel};
use codebridge::synth::{Generator, SynthConfig, SynthCorpus};

/// A generated corpus with a trained table, anchored model and classifier.
pub struct Fixture {
    pub data: SynthCorpus,
    pub table: EmbeddingTable,
    pub model: ClusterModel,
    pub hope: HopeModel,
}

pub fn corpus(n: usize, seed: u64) -> SynthCorpus {
    Generator::new(SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .corpus("bench", n)
}

pub fn train_config(dim: usize) -> TrainConfig {
    TrainConfig {
        dim,
        ..TrainConfig::default()
    }
}

pub fn doc_vectors(data: &SynthCorpus, table: &EmbeddingTable) -> Vec<Vector> {
    data.corpus
        .iter()
        .map(|c| table.doc_embedding(&c.tokens).vector)
        .collect()
}

pub fn fixture(n: usize, dim: usize) -> Fixture {
    let mut generator = Generator::new(SynthConfig::default());
    let data = generator.corpus("bench", n);
    let table = train_embeddings(&data.corpus, &train_config(dim)).expect("training");
    let raw = fit_clusters(&doc_vectors(&data, &table), 2, 1).expect("clustering");
    let model = anchor_clusters(&raw, &Anchors::default_function_words(), &table).expect("anchoring");
    let train = generator.english_training_set(2000, 0.23);
    let labels: Vec<LabeledDoc> = train
        .corpus
        .iter()
        .map(|c| LabeledDoc {
            comment_id: c.id.clone(),
            label: train.gold(&c.id).expect("generated").positive,
        })
        .collect();
    let hope = train_hope_classifier(&table, &train.corpus, &labels, &HopeTrainConfig::default()).expect("classifier");
    Fixture {
        data,
        table,
        model,
        hope,
    }
}
