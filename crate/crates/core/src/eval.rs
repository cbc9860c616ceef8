//! 1-nearest-neighbour classification and agreement metrics.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Brute-force Euclidean 1-NN over a fixed training set.
#[derive(Clone, Debug)]
pub struct NearestNeighbor {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u16>,
}

impl NearestNeighbor {
    pub fn new<F: AsRef<[f64]>>(features: &[F], labels: &[u16]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "training labels",
                expected: features.len(),
                found: labels.len(),
            });
        }
        let dim = features[0].as_ref().len();
        let mut flat = Vec::with_capacity(dim * features.len());
        for f in features {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "training feature length",
                    expected: dim,
                    found: f.len(),
                });
            }
            flat.extend_from_slice(f);
        }
        Ok(Self {
            dim,
            features: flat,
            labels: labels.to_vec(),
        })
    }

    /// Label of the nearest training vector; ties go to the lowest index.
    pub fn classify(&self, query: &[f64]) -> Result<u16> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "query feature length",
                expected: self.dim,
                found: query.len(),
            });
        }
        let mut best = (f64::INFINITY, 0usize);
        for (idx, row) in self.features.chunks_exact(self.dim.max(1)).enumerate() {
            let dist: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist < best.0 {
                best = (dist, idx);
            }
        }
        Ok(self.labels[best.1])
    }

    /// Classifies many queries in parallel; output order matches input.
    pub fn classify_batch<F: AsRef<[f64]> + Sync>(&self, queries: &[F]) -> Result<Vec<u16>> {
        queries.par_iter().map(|q| self.classify(q.as_ref())).collect()
    }
}

/// One-shot 1-NN on borrowed data.
pub fn knn_classify<F: AsRef<[f64]>>(train: &[F], labels: &[u16], query: &[f64]) -> Result<u16> {
    NearestNeighbor::new(train, labels)?.classify(query)
}

/// Counts indexed `[truth][prediction]` over a fixed, sorted class list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<u16>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[u16], truth: &[u16], pred: &[u16]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::DimensionMismatch {
                context: "prediction count",
                expected: truth.len(),
                found: pred.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::Empty("label lists"));
        }
        let mut classes = classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let index: HashMap<u16, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let k = classes.len();
        let mut counts = vec![0u64; k * k];
        for (&t, &p) in truth.iter().zip(pred) {
            let lookup = |label: u16| {
                index
                    .get(&label)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown class label {label}")))
            };
            counts[lookup(t)? * k + lookup(p)?] += 1;
        }
        Ok(Self { classes, counts })
    }

    /// Builds a matrix from explicit counts (row-major, rows = truth).
    pub fn from_counts(classes: Vec<u16>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes.len() * classes.len() {
            return Err(Error::DimensionMismatch {
                context: "confusion counts",
                expected: classes.len() * classes.len(),
                found: counts.len(),
            });
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }

    /// Row-major counts, rows = truth, columns = prediction.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes.len() + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.get(i, i)).sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        (0..self.classes.len()).map(|j| self.get(i, j)).sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes.len()).map(|i| self.get(i, j)).sum()
    }

    /// Expected chance agreement `Σ_k row_k · col_k / total²`.
    pub fn chance_agreement(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Empty("confusion matrix"));
        }
        let (num, den) = self.chance_parts();
        Ok(num as f64 / den as f64)
    }

    fn chance_parts(&self) -> (u128, u128) {
        let total = self.total() as u128;
        let num = (0..self.classes.len())
            .map(|k| self.row_sum(k) as u128 * self.col_sum(k) as u128)
            .sum();
        (num, total * total)
    }

    /// Diagonal over row sum per class; `None` for classes without samples.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.classes.len())
            .map(|i| {
                let row = self.row_sum(i);
                (row > 0).then(|| self.get(i, i) as f64 / row as f64)
            })
            .collect()
    }
}

/// Fraction of correctly classified samples.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Cohen's κ, `(p_o - p_e) / (1 - p_e)`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let p_o = overall_accuracy(cm)?;
    let (num, den) = cm.chance_parts();
    if num == den {
        return Err(Error::UndefinedKappa);
    }
    let p_e = num as f64 / den as f64;
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Feature extractor feeding the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extractor {
    Raw,
    Pca,
    Tpca,
}

impl Extractor {
    pub fn name(&self) -> &'static str {
        match self {
            Extractor::Raw => "raw",
            Extractor::Pca => "pca",
            Extractor::Tpca => "tpca",
        }
    }
}

impl std::fmt::Display for Extractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Extractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Extractor::Raw),
            "pca" => Ok(Extractor::Pca),
            "tpca" => Ok(Extractor::Tpca),
            other => Err(Error::InvalidArgument(format!(
                "unknown extractor `{other}` (expected raw, pca or tpca)"
            ))),
        }
    }
}

/// Metrics of one classification run, serialized as the JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub oa: f64,
    pub kappa: f64,
    pub per_class: Vec<Option<f64>>,
    pub classes: Vec<u16>,
    /// Row-major counts, rows = truth.
    pub confusion: Vec<u64>,
    pub seed: u64,
    pub extractor: Extractor,
    pub d: usize,
    pub classifier: String,
}

impl EvalReport {
    pub fn new(cm: &ConfusionMatrix, seed: u64, extractor: Extractor, d: usize) -> Result<Self> {
        Ok(Self {
            oa: overall_accuracy(cm)?,
            kappa: kappa(cm)?,
            per_class: cm.per_class_accuracy(),
            classes: cm.classes().to_vec(),
            confusion: cm.counts().to_vec(),
            seed,
            extractor,
            d,
            classifier: "1nn".into(),
        })
    }
}

/// One point on an accuracy-versus-dimension curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub extractor: Extractor,
    pub d: usize,
    pub oa: f64,
    pub kappa: f64,
}

pub const SWEEP_HEADER: &str = "extractor,d,oa,kappa";

/// Renders rows as CSV sorted by `(extractor, d)`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.extractor, r.d));
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!("{},{},{},{}\n", r.extractor, r.d, r.oa, r.kappa));
    }
    out
}
