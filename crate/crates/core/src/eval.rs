//! Measurements: token confusion, sampling yield, Fleiss' kappa and a 2-D
//! PCA projection for plotting.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::embedding::Vector;
use crate::error::{Error, Result};
use crate::langid::LanguageLabel;
use crate::sampler::SampleBatch;

/// Rows are gold labels, columns predictions, both in [`LanguageLabel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

fn index_of(label: LanguageLabel) -> usize {
    match label {
        LanguageLabel::Neutral => 0,
        LanguageLabel::En => 1,
        LanguageLabel::HindiEn => 2,
    }
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn add(&mut self, gold: LanguageLabel, predicted: LanguageLabel) {
        self.counts[index_of(gold)][index_of(predicted)] += 1;
    }

    pub fn get(&self, gold: LanguageLabel, predicted: LanguageLabel) -> u64 {
        self.counts[index_of(gold)][index_of(predicted)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, gold: LanguageLabel) -> u64 {
        self.counts[index_of(gold)].iter().sum()
    }

    /// Zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    /// Fraction of gold `label` tokens predicted as `label`.
    pub fn recall(&self, label: LanguageLabel) -> Option<f64> {
        match self.support(label) {
            0 => None,
            s => Some(self.get(label, label) as f64 / s as f64),
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>10} {:>10} {:>10}", "gold\\pred", "neutral", "en", "h_e")?;
        for gold in LanguageLabel::ALL {
            write!(f, "{:>10}", gold.as_str())?;
            for pred in LanguageLabel::ALL {
                write!(f, " {:>10}", self.get(gold, pred))?;
            }
            writeln!(f)?;
        }
        write!(f, "accuracy {:.4}", self.accuracy())
    }
}

pub fn confusion_matrix(gold: &[LanguageLabel], predicted: &[LanguageLabel]) -> Result<ConfusionMatrix> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Empty("label sequences"));
    }
    let mut m = ConfusionMatrix::default();
    for (&g, &p) in gold.iter().zip(predicted) {
        m.add(g, p);
    }
    Ok(m)
}

/// Positives over batch size. Every member must be labeled.
pub fn sampling_yield(batch: &SampleBatch, labels: &HashMap<String, bool>) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let missing: Vec<String> = batch
        .pool_ids()
        .filter(|id| !labels.contains_key(*id))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Unlabeled(missing));
    }
    let positives = batch.pool_ids().filter(|id| labels[*id]).count();
    Ok(positives as f64 / batch.len() as f64)
}

/// Fleiss' kappa over an items x categories matrix of rater counts.
///
/// When every rating falls in one category the chance agreement is 1 and
/// the statistic is undefined; 1.0 is returned.
pub fn fleiss_kappa(ratings: &[Vec<u32>]) -> Result<f64> {
    let first = ratings.first().ok_or(Error::Empty("ratings"))?;
    let raters: u32 = first.iter().sum();
    let categories = first.len();
    if raters < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 raters per item, found {raters}"
        )));
    }
    for (item, row) in ratings.iter().enumerate() {
        if row.len() != categories {
            return Err(Error::LengthMismatch {
                left: categories,
                right: row.len(),
            });
        }
        let found: u32 = row.iter().sum();
        if found != raters {
            return Err(Error::UnequalRaters {
                item,
                expected: raters,
                found,
            });
        }
    }
    let n = raters as f64;
    let items = ratings.len() as f64;
    let p_bar = ratings
        .iter()
        .map(|row| {
            let agree: f64 = row.iter().map(|&c| (c as f64) * (c as f64 - 1.0)).sum();
            agree / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..categories)
        .map(|j| {
            let pj = ratings.iter().map(|row| row[j] as f64).sum::<f64>() / (items * n);
            pj * pj
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        log::warn!("all ratings fall in one category; kappa is undefined, reporting 1.0");
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Centered projection onto the top two principal components.
///
/// Each component's sign is chosen so that its largest-magnitude loading is
/// positive.
pub fn project_2d(vectors: &[Vector]) -> Result<Vec<(f64, f64)>> {
    if vectors.len() < 2 {
        return Err(Error::Empty("projection needs at least 2 vectors"));
    }
    let dim = vectors[0].dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.dim(),
        });
    }
    let n = vectors.len();
    let mut x = DMatrix::<f64>::from_fn(n, dim, |i, j| vectors[i][j] as f64);
    for j in 0..dim {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / (n as f64 - 1.0).max(1.0);
    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(2);
    for &c in order.iter().take(2) {
        let mut axis = eigen.eigenvectors.column(c).clone_owned();
        let pivot = axis
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, v)| v)
            .unwrap_or(0.0);
        if pivot < 0.0 {
            axis.neg_mut();
        }
        components.push(&x * axis);
    }
    let ys = components.get(1);
    Ok((0..n)
        .map(|i| (components[0][i], ys.map_or(0.0, |c| c[i])))
        .collect())
}
