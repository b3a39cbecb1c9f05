#![allow(dead_code)]

use codebridge::classifier::{train_hope_classifier, HopeModel, HopeTrainConfig, LabeledDoc};
use codebridge::corpus::Corpus;
use codebridge::embedding::{train_embeddings, EmbeddingTable, TrainConfig};
use codebridge::langid::{anchor_clusters, fit_clusters, Anchors, ClusterModel};
use codebridge::synth::{Generator, SynthConfig, SynthCorpus};

/// A generated corpus with everything trained on it.
pub struct World {
    pub data: SynthCorpus,
    pub table: EmbeddingTable,
    pub model: ClusterModel,
    pub hope: HopeModel,
    pub hope_train: SynthCorpus,
    pub generator: Generator,
}

pub fn train_table(corpus: &Corpus, dim: usize, seed: u64) -> EmbeddingTable {
    train_embeddings(
        corpus,
        &TrainConfig {
            dim,
            seed,
            ..TrainConfig::default()
        },
    )
    .expect("training succeeds on generated data")
}

pub fn fit_model(corpus: &Corpus, table: &EmbeddingTable, seed: u64) -> ClusterModel {
    let vectors: Vec<_> = corpus
        .iter()
        .map(|c| table.doc_embedding(&c.tokens).vector)
        .collect();
    let raw = fit_clusters(&vectors, 2, seed).expect("two clusters");
    anchor_clusters(&raw, &Anchors::default_function_words(), table).expect("anchors resolve")
}

pub fn labeled(set: &SynthCorpus) -> Vec<LabeledDoc> {
    set.corpus
        .iter()
        .map(|c| LabeledDoc {
            comment_id: c.id.clone(),
            label: set.gold(&c.id).unwrap().positive,
        })
        .collect()
}

pub fn build_world(config: SynthConfig, n: usize, dim: usize) -> World {
    let seed = config.seed;
    let mut generator = Generator::new(config);
    let data = generator.corpus("D", n);
    let table = train_table(&data.corpus, dim, seed);
    let model = fit_model(&data.corpus, &table, seed);
    let hope_train = generator.english_training_set(3000, 0.23);
    let hope = train_hope_classifier(
        &table,
        &hope_train.corpus,
        &labeled(&hope_train),
        &HopeTrainConfig {
            seed,
            ..HopeTrainConfig::default()
        },
    )
    .expect("both classes present");
    World {
        data,
        table,
        model,
        hope,
        hope_train,
        generator,
    }
}
