use std::hint::black_box;

use codebridge::embedding::train_embeddings;
use codebridge_bench::{corpus, train_config};
use criterion::{criterion_group, criterion_main, Criterion};

fn training(c: &mut Criterion) {
    let data = corpus(2000, 1);
    let mut group = c.benchmark_group("train_embeddings");
    group.sample_size(10);
    for dim in [32, 100] {
        group.bench_function(format!("2k comments dim {dim}"), |b| {
            b.iter(|| train_embeddings(black_box(&data.corpus), &train_config(dim)).unwrap())
        });
    }
    group.finish();
}

fn lookup(c: &mut Criterion) {
    let data = corpus(2000, 1);
    let table = train_embeddings(&data.corpus, &train_config(100)).unwrap();
    let comments = data.corpus.comments();
    c.bench_function("doc_embedding 2k comments", |b| {
        b.iter(|| {
            for comment in comments {
                black_box(table.doc_embedding(&comment.tokens));
            }
        })
    });
    c.bench_function("token_vector out of vocabulary", |b| {
        b.iter(|| black_box(table.token_vector(black_box("amaanjiii"))))
    });
}

criterion_group!(benches, training, lookup);
criterion_main!(benches);
