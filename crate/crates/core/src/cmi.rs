//! Code Mixing Index.
//!
//! For a document with `n` tokens of which `u` are neutral, and `N(l)` tokens
//! labeled with language `l`:
//!
//! ```text
//! CMI = (sum_l N(l) - max_l N(l)) / (n - u),   and 0 when n = u
//! ```
//!
//! With two languages the index is at most 0.5.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, Corpus};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::langid::{ClusterModel, LanguageLabel, TokenLabeler, TokenLabeling};

pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiReport {
    #[serde(rename = "commentId")]
    pub comment_id: String,
    pub cmi: f64,
    /// `n - u`.
    #[serde(rename = "nonNeutral")]
    pub non_neutral: usize,
    pub neutral: usize,
    /// `N(l)` for every language present.
    pub counts: BTreeMap<LanguageLabel, usize>,
}

/// CMI of a bare label sequence.
pub fn cmi_of_labels(labels: &[LanguageLabel]) -> f64 {
    let (cmi, _, _, _) = tally(labels);
    cmi
}

fn tally(labels: &[LanguageLabel]) -> (f64, usize, usize, BTreeMap<LanguageLabel, usize>) {
    let mut counts: BTreeMap<LanguageLabel, usize> = BTreeMap::new();
    let mut neutral = 0;
    for &l in labels {
        if l == LanguageLabel::Neutral {
            neutral += 1;
        } else {
            *counts.entry(l).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    let max = counts.values().copied().max().unwrap_or(0);
    let cmi = if total == 0 {
        0.0
    } else {
        (total - max) as f64 / total as f64
    };
    (cmi, total, neutral, counts)
}

pub fn compute_cmi(labeling: &TokenLabeling) -> CmiReport {
    let (cmi, non_neutral, neutral, counts) = tally(&labeling.labels);
    CmiReport {
        comment_id: labeling.comment_id.clone(),
        cmi,
        non_neutral,
        neutral,
        counts,
    }
}

/// CMI over labels predicted by the cluster model.
pub fn estimate_cmi(model: &ClusterModel, table: &EmbeddingTable, comment: &Comment) -> Result<CmiReport> {
    Ok(compute_cmi(&model.label_comment(table, comment)?))
}

/// Estimated CMI for every comment, in corpus order.
pub fn score_corpus(model: &ClusterModel, table: &EmbeddingTable, corpus: &Corpus) -> Result<Vec<CmiReport>> {
    // fail early on an unanchored model
    TokenLabeler::new(model, table)?;
    let chunk = 512;
    let reports = corpus
        .comments()
        .par_chunks(chunk)
        .map(|part| {
            let mut labeler = TokenLabeler::new(model, table).expect("checked above");
            part.iter()
                .map(|c| compute_cmi(&labeler.label_comment(c)))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(reports)
}

/// The code-mixed subset and the per-comment reports it was selected from.
#[derive(Debug, Clone)]
pub struct CodeMixedSelection {
    pub selected: Corpus,
    pub reports: Vec<CmiReport>,
}

/// Comments whose estimated CMI is at least `threshold`.
pub fn select_code_mixed(
    corpus: &Corpus,
    model: &ClusterModel,
    table: &EmbeddingTable,
    threshold: f64,
) -> Result<CodeMixedSelection> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "CMI threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let reports = score_corpus(model, table, corpus)?;
    let mut keep = reports.iter().map(|r| r.cmi >= threshold);
    let selected = corpus.filter("D_cm", |_| keep.next().unwrap_or(false));
    Ok(CodeMixedSelection { selected, reports })
}

/// Root mean squared difference between true and estimated CMI.
pub fn rmse_cmi(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("CMI pairs"));
    }
    let sq: f64 = pairs.iter().map(|(t, e)| (t - e).powi(2)).sum();
    Ok((sq / pairs.len() as f64).sqrt())
}

/// Writes one JSON report per line.
pub fn write_reports(path: impl AsRef<Path>, reports: &[CmiReport]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
