//! Behaviour of the trained stack on generated bilingual corpora.

mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use codebridge::bridge::{mean_batch_cmi, run_pipeline, PipelineConfig};
use codebridge::classifier::{filter_hope, HopeClassifier};
use codebridge::cmi::{estimate_cmi, rmse_cmi, select_code_mixed};
use codebridge::corpus::{ingest, Comment, Corpus, IngestOptions, Subset, Token};
use codebridge::embedding::cosine_distance;
use codebridge::langid::{anchor_clusters, neutral_lexicon, Anchors, LabelMap, LanguageLabel};
use codebridge::synth::{DocKind, Generator, SynthConfig, NEUTRAL_WORDS};
use codebridge::Error;
use common::{build_world, train_table, World};

fn world() -> &'static World {
    static WORLD: OnceLock<World> = OnceLock::new();
    WORLD.get_or_init(|| build_world(SynthConfig::default(), 8000, 32))
}

fn generator() -> Generator {
    Generator::new(SynthConfig::default())
}

fn mean_similarity(w: &World, a: &[String], b: &[String]) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for x in a {
        for y in b {
            if x == y {
                continue;
            }
            let (Some(u), Some(v)) = (w.table.get(x), w.table.get(y)) else { continue };
            total += 1.0 - cosine_distance(u, v).unwrap();
            n += 1;
        }
    }
    total / n as f64
}

#[test]
fn languages_separate_in_embedding_space() {
    let w = world();
    let g = generator();
    let en: Vec<String> = g.content_words(LanguageLabel::En)[..40].to_vec();
    let hi: Vec<String> = g.content_words(LanguageLabel::HindiEn)[..40].to_vec();
    let intra = (mean_similarity(w, &en, &en) + mean_similarity(w, &hi, &hi)) / 2.0;
    let cross = mean_similarity(w, &en, &hi);
    assert!(intra > cross, "intra {intra} cross {cross}");
}

#[test]
fn spelling_variant_backs_off_to_subwords() {
    let w = world();
    // retrain without the variant so it is out of vocabulary
    let renamed: Vec<Comment> = w
        .data
        .corpus
        .iter()
        .map(|c| {
            let tokens = c
                .tokens
                .iter()
                .map(|t| if t.as_str() == "amaan" { Token::new("aman").unwrap() } else { t.clone() })
                .collect();
            Comment::from_tokens(c.id.clone(), tokens, c.subset)
        })
        .collect();
    let corpus = Corpus::new("renamed", renamed).unwrap();
    let table = train_table(&corpus, 32, 3);
    assert!(!table.contains("amaan"));
    let oov = table.token_vector("amaan");
    assert!(oov.vector.norm() > 0.0);
    let sim = 1.0 - cosine_distance(&oov.vector, table.get("aman").unwrap()).unwrap();
    assert!(sim > 0.0, "similarity {sim}");
    assert!(table.token_vector("qqqxz").vector.is_zero());
}

#[test]
fn anchors_name_clusters_injectively() {
    let w = world();
    let anchors = Anchors {
        en: vec!["the".into(), "and".into()],
        hindi: vec!["hai".into(), "nahi".into()],
    };
    let model = anchor_clusters(&w.model, &anchors, &w.table).unwrap();
    let map = model.label_map().unwrap();
    assert_ne!(map.en, map.hindi);
    let swapped = Anchors {
        en: anchors.hindi.clone(),
        hindi: anchors.en.clone(),
    };
    let flipped = anchor_clusters(&w.model, &swapped, &w.table).unwrap();
    assert_eq!(
        flipped.label_map().unwrap(),
        LabelMap {
            en: map.hindi,
            hindi: map.en
        }
    );
    let oov = Anchors {
        en: vec!["zzzq".into()],
        hindi: vec!["hai".into()],
    };
    assert!(matches!(
        anchor_clusters(&w.model, &oov, &w.table),
        Err(Error::AnchorsOutOfVocabulary(_))
    ));
}

#[test]
fn shared_entity_words_are_neutral() {
    let w = world();
    for word in ["modi", "pakistan", "video", "1"] {
        assert_eq!(
            w.model.assign_token_language(&w.table, word).unwrap(),
            LanguageLabel::Neutral,
            "{word}"
        );
    }
}

#[test]
fn english_comment_labels_english() {
    let w = world();
    let mut g = generator();
    for _ in 0..20 {
        let (c, _) = g.mixed_with_counts(12, 0, 0, false);
        let labeling = w.model.label_comment(&w.table, &c).unwrap();
        assert!(labeling.labels.iter().all(|&l| l == LanguageLabel::En), "{:?}", c.text);
    }
}

#[test]
fn planted_shared_tokens_lead_the_neutral_lexicon() {
    let w = world();
    let top = neutral_lexicon(&w.model, &w.table, &w.data.corpus, 10).unwrap();
    assert_eq!(top.len(), 10);
    for (token, _) in &top {
        assert!(NEUTRAL_WORDS.contains(&token.as_str()), "{token}");
    }
}

#[test]
fn balanced_comment_estimates_near_half() {
    let w = world();
    let mut g = generator();
    for _ in 0..20 {
        let (c, _) = g.mixed_with_counts(8, 8, 0, false);
        let r = estimate_cmi(&w.model, &w.table, &c).unwrap();
        assert!((r.cmi - 0.5).abs() <= 0.1, "{} -> {}", c.text, r.cmi);
    }
}

#[test]
fn planted_code_mixed_selection() {
    let w = world();
    let mut g = generator();
    let mut comments = Vec::new();
    for _ in 0..100 {
        // 11 + 9 non-neutral tokens: true CMI 0.45
        let (en, hi) = if comments.len() % 2 == 0 { (11, 9) } else { (9, 11) };
        comments.push(g.mixed_with_counts(en, hi, 0, false).0);
    }
    for i in 0..900 {
        let label = if i % 2 == 0 { LanguageLabel::En } else { LanguageLabel::HindiEn };
        comments.push(g.monolingual(label, false).0);
    }
    let corpus = Corpus::new("planted", comments).unwrap();
    let selected = select_code_mixed(&corpus, &w.model, &w.table, 0.4).unwrap().selected;
    assert!((90..=110).contains(&selected.len()), "{}", selected.len());
    let all = select_code_mixed(&corpus, &w.model, &w.table, 0.0).unwrap().selected;
    assert_eq!(all.len(), corpus.len());
}

#[test]
fn estimated_cmi_tracks_gold() {
    let w = world();
    let pairs: Vec<(f64, f64)> = w
        .data
        .corpus
        .iter()
        .map(|c| {
            let gold = w.data.gold(&c.id).unwrap().cmi();
            (gold, estimate_cmi(&w.model, &w.table, c).unwrap().cmi)
        })
        .collect();
    assert!(rmse_cmi(&pairs).unwrap() <= 0.1);
}

#[test]
fn classifier_finds_held_out_positives() {
    let w = world();
    // a fresh generator draws comments the classifier has not seen
    let mut g = generator();
    let held_out = g.english_training_set(2000, 0.25);
    let positives: Vec<&Comment> = held_out
        .corpus
        .iter()
        .filter(|c| held_out.gold(&c.id).unwrap().positive)
        .collect();
    let hits = positives
        .iter()
        .filter(|c| w.hope.predict(&w.table, c).positive)
        .count();
    assert!(hits * 2 > positives.len(), "{hits} of {}", positives.len());
}

#[test]
fn planted_code_mixed_positives_are_recalled() {
    let w = world();
    let mut g = generator();
    let items: Vec<_> = (0..500).map(|i| g.mixed(i % 10 == 0)).collect();
    let planted: HashSet<String> = items
        .iter()
        .filter(|(_, gold)| gold.positive)
        .map(|(c, _)| c.id.clone())
        .collect();
    let corpus = Corpus::new("D_cm", items.into_iter().map(|(c, _)| c).collect()).unwrap();
    let found = filter_hope(&w.hope, &w.table, &corpus);
    let recalled = planted.iter().filter(|id| found.selected.contains(id)).count();
    assert!(recalled as f64 >= 0.8 * planted.len() as f64, "{recalled} of {}", planted.len());
    assert!(found.scores.values().all(|&s| s >= w.hope.threshold));
}

#[test]
fn pipeline_stages_shrink_and_stay_contained() {
    let w = world();
    let corpus = &w.data.corpus;
    let run = run_pipeline(corpus, &w.model, &w.table, &w.hope, &PipelineConfig::default()).unwrap();
    assert!(!run.batch.is_empty());
    let sizes: Vec<usize> = run.stages.iter().map(|s| s.out_count).collect();
    assert!(corpus.len() > sizes[0] && sizes[0] > sizes[1], "{sizes:?}");
    for c in run.code_mixed.iter() {
        assert!(corpus.contains(&c.id));
    }
    for c in run.positives.iter() {
        assert!(run.code_mixed.contains(&c.id));
    }
    let pool = corpus.subset(Subset::HindiEn);
    for id in run.batch.pool_ids() {
        assert!(pool.contains(id));
        assert!(!run.positives.contains(id));
    }
}

#[test]
fn unreachable_threshold_empties_the_positive_stage() {
    let w = world();
    let strict = w.hope.clone().with_threshold(1.0).unwrap();
    let err = run_pipeline(&w.data.corpus, &w.model, &w.table, &strict, &PipelineConfig::default()).unwrap_err();
    assert!(matches!(err, Error::EmptyStage("D_hope")), "{err}");
}

#[test]
fn extracted_seeds_reach_lower_mixing() {
    let w = world();
    let corpus = &w.data.corpus;
    let pool = corpus.subset(Subset::HindiEn);
    let run = |extract| {
        let config = PipelineConfig {
            extract,
            ..PipelineConfig::default()
        };
        run_pipeline(corpus, &w.model, &w.table, &w.hope, &config).unwrap().batch
    };
    let (raw, extracted) = (run(false), run(true));
    assert_ne!(raw.members, extracted.members);
    let raw_cmi = mean_batch_cmi(&raw, &pool, &w.model, &w.table).unwrap();
    let ext_cmi = mean_batch_cmi(&extracted, &pool, &w.model, &w.table).unwrap();
    assert!(ext_cmi < raw_cmi, "extracted {ext_cmi} raw {raw_cmi}");
}

#[test]
fn monolingual_documents_take_their_cluster() {
    let w = world();
    let mut right = 0;
    let mut total = 0;
    for c in w.data.corpus.iter() {
        let want = match w.data.gold(&c.id).unwrap().kind {
            DocKind::MonoEn => LanguageLabel::En,
            DocKind::MonoHindi => LanguageLabel::HindiEn,
            DocKind::Mixed => continue,
        };
        total += 1;
        let v = w.table.doc_embedding(&c.tokens).vector;
        if w.model.assign_doc_language(&v).unwrap() == want {
            right += 1;
        }
    }
    assert!(right as f64 / total as f64 >= 0.98);
}

#[test]
fn corpus_survives_a_serialization_round_trip() {
    let w = world();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    w.data.corpus.write_jsonl(&path).unwrap();
    let back = ingest(&path, IngestOptions::default()).unwrap();
    assert!(back.malformed.is_empty());
    assert_eq!(back.corpus.len(), w.data.corpus.len());
    for (a, b) in w.data.corpus.iter().zip(back.corpus.iter()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.text, b.text);
        assert_eq!(a.tokens, b.tokens);
        assert_eq!(a.subset, b.subset);
    }
}
