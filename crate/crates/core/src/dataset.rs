//! Dense numeric training data.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major feature matrix with class-index labels `0..n_classes`.
///
/// Categorical inputs are expected to be one-hot encoded before they reach
/// this type.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// Builds a dataset, checking shapes, finiteness and label range.
    ///
    /// `n_classes` must be at least 2. Classes need not all be present, so
    /// subsets and single-class toy problems are representable.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::NoFeatures);
        }
        if n_classes < 2 {
            return Err(Error::TooFewClasses {
                required: 2,
                found: n_classes,
            });
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::LengthMismatch {
                what: "feature matrix",
                expected: labels.len() * n_features,
                actual: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: "all feature values must be finite",
            });
        }
        if labels.iter().any(|&l| l >= n_classes) {
            return Err(Error::InvalidLabel);
        }
        Ok(Self {
            features,
            n_features,
            labels,
            n_classes,
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidParameter {
                name: "rows",
                reason: "all rows must have the same length",
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        let features = rows.iter().flatten().copied().collect();
        Self::new(features, n_features, labels, n_classes)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Copies the given rows into a new dataset with the same class count.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels,
            n_classes: self.n_classes,
        }
    }

    /// Number of rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Checks that `weights` is a usable sample distribution over `len` rows.
pub(crate) fn validate_weights(weights: &[f64], len: usize) -> Result<f64> {
    if weights.len() != len {
        return Err(Error::LengthMismatch {
            what: "sample weights",
            expected: len,
            actual: weights.len(),
        });
    }
    let mut total = 0.0;
    for &w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeights);
        }
        total += w;
    }
    if total > 0.0 && total.is_finite() {
        Ok(total)
    } else {
        Err(Error::InvalidWeights)
    }
}
