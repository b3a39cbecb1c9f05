//! End-to-end bridge: code-mixed selection, rare-class filtering, target
//! language extraction and nearest-neighbor expansion into the target pool.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{filter_hope, HopeClassifier};
use crate::cmi::{compute_cmi, select_code_mixed, DEFAULT_THRESHOLD};
use crate::corpus::{Comment, Corpus, Subset, Token};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::langid::{ClusterModel, LanguageLabel, TokenLabeler, TokenLabeling};
use crate::sampler::{build_index, nn_sample, NNIndex, SampleBatch, Seed, Shortfall};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedComment {
    #[serde(rename = "sourceId")]
    pub source_id: String,
    #[serde(rename = "keptTokens")]
    pub kept_tokens: Vec<Token>,
    #[serde(rename = "droppedCount")]
    pub dropped_count: usize,
}

impl ExtractedComment {
    pub fn is_empty(&self) -> bool {
        self.kept_tokens.is_empty()
    }
}

/// Keeps the tokens labeled `target`, in order.
pub fn extract_language_subpart(
    labeling: &TokenLabeling,
    comment: &Comment,
    target: LanguageLabel,
) -> Result<ExtractedComment> {
    if labeling.comment_id != comment.id || labeling.len() != comment.len() {
        return Err(Error::LabelingMismatch {
            labeling: labeling.comment_id.clone(),
            comment: comment.id.clone(),
            labels: labeling.len(),
            tokens: comment.len(),
        });
    }
    let kept_tokens: Vec<Token> = comment
        .tokens
        .iter()
        .zip(&labeling.labels)
        .filter(|(_, &l)| l == target)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(ExtractedComment {
        source_id: comment.id.clone(),
        dropped_count: comment.len() - kept_tokens.len(),
        kept_tokens,
    })
}

/// How seed comments are turned into query vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedVariant {
    /// The whole comment.
    Raw,
    /// Only the tokens labeled with the pool language.
    Extracted,
}

impl FromStr for SeedVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(SeedVariant::Raw),
            "extracted" => Ok(SeedVariant::Extracted),
            other => Err(Error::InvalidParameter(format!("unknown seed variant {other:?}"))),
        }
    }
}

impl fmt::Display for SeedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedVariant::Raw => "raw",
            SeedVariant::Extracted => "extracted",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SeedSet {
    pub seeds: Vec<Seed>,
    /// Ids of comments that produced no usable query vector.
    pub skipped: Vec<String>,
}

/// Query vectors for `comments`, in input order.
///
/// Extracted seeds are embedded from their kept tokens only.
pub fn build_seeds<'a>(
    comments: impl IntoIterator<Item = &'a Comment>,
    variant: SeedVariant,
    model: &ClusterModel,
    table: &EmbeddingTable,
    target: LanguageLabel,
) -> Result<SeedSet> {
    let mut labeler = TokenLabeler::new(model, table)?;
    let mut out = SeedSet::default();
    for c in comments {
        let doc = match variant {
            SeedVariant::Raw => table.doc_embedding(&c.tokens),
            SeedVariant::Extracted => {
                let labeling = labeler.label_comment(c);
                let extracted = extract_language_subpart(&labeling, c, target)?;
                table.doc_embedding(&extracted.kept_tokens)
            }
        };
        if doc.is_unresolved() || doc.vector.is_zero() {
            out.skipped.push(c.id.clone());
        } else {
            out.seeds.push(Seed::new(c.id.clone(), doc.vector));
        }
    }
    if !out.skipped.is_empty() {
        log::info!("{} {variant} seeds have no usable embedding and were skipped", out.skipped.len());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub cmi_threshold: f64,
    pub extract: bool,
    pub size: usize,
    pub pool: Subset,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cmi_threshold: DEFAULT_THRESHOLD,
            extract: true,
            size: 5,
            pool: Subset::HindiEn,
        }
    }
}

impl PipelineConfig {
    pub fn variant(&self) -> SeedVariant {
        if self.extract {
            SeedVariant::Extracted
        } else {
            SeedVariant::Raw
        }
    }

    fn target(&self) -> LanguageLabel {
        match self.pool {
            Subset::En => LanguageLabel::En,
            _ => LanguageLabel::HindiEn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    #[serde(rename = "inCount")]
    pub in_count: usize,
    #[serde(rename = "outCount")]
    pub out_count: usize,
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.name, self.in_count, self.out_count)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub batch: SampleBatch,
    pub stages: Vec<StageReport>,
    pub code_mixed: Corpus,
    pub positives: Corpus,
    pub skipped_seeds: Vec<String>,
    pub shortfalls: Vec<Shortfall>,
}

/// Runs selection, filtering, optional extraction and sampling.
pub fn run_pipeline<C: HopeClassifier + Sync + ?Sized>(
    corpus: &Corpus,
    model: &ClusterModel,
    table: &EmbeddingTable,
    hope: &C,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let pool = corpus.subset(config.pool);
    if pool.is_empty() {
        return Err(Error::EmptyStage("pool"));
    }
    let index = build_index(&pool, table)?;
    run_pipeline_with_index(corpus, &index, model, table, hope, config)
}

/// As [`run_pipeline`], reusing a prebuilt pool index.
pub fn run_pipeline_with_index<C: HopeClassifier + Sync + ?Sized>(
    corpus: &Corpus,
    index: &NNIndex,
    model: &ClusterModel,
    table: &EmbeddingTable,
    hope: &C,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let code_mixed = select_code_mixed(corpus, model, table, config.cmi_threshold)?.selected;
    let mut stages = vec![StageReport {
        name: "D_cm".into(),
        in_count: corpus.len(),
        out_count: code_mixed.len(),
    }];
    if code_mixed.is_empty() {
        return Err(Error::EmptyStage("D_cm"));
    }

    let positives = filter_hope(hope, table, &code_mixed).selected;
    stages.push(StageReport {
        name: "D_hope".into(),
        in_count: code_mixed.len(),
        out_count: positives.len(),
    });
    if positives.is_empty() {
        return Err(Error::EmptyStage("D_hope"));
    }

    let seeds = build_seeds(&positives, config.variant(), model, table, config.target())?;
    if seeds.seeds.is_empty() {
        return Err(Error::EmptyStage("seeds"));
    }
    let name = match config.variant() {
        SeedVariant::Raw => "D_hope".to_string(),
        SeedVariant::Extracted => format!("D_hope^{}", config.pool),
    };
    let outcome = nn_sample(&name, &seeds.seeds, index, config.size, &HashSet::new())?;
    stages.push(StageReport {
        name: "E".into(),
        in_count: seeds.seeds.len(),
        out_count: outcome.batch.len(),
    });
    Ok(PipelineRun {
        batch: outcome.batch,
        stages,
        code_mixed,
        positives,
        skipped_seeds: seeds.skipped,
        shortfalls: outcome.shortfalls,
    })
}

/// Mean estimated CMI of the batch members, looked up in `pool`.
pub fn mean_batch_cmi(
    batch: &SampleBatch,
    pool: &Corpus,
    model: &ClusterModel,
    table: &EmbeddingTable,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let comments: Vec<&Comment> = batch
        .pool_ids()
        .map(|id| pool.get(id).ok_or_else(|| Error::UnknownId(id.to_string())))
        .collect::<Result<_>>()?;
    TokenLabeler::new(model, table)?;
    let total: f64 = comments
        .par_iter()
        .map(|c| compute_cmi(&model.label_comment(table, c).expect("anchored")).cmi)
        .sum();
    Ok(total / comments.len() as f64)
}
