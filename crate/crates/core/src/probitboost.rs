//! Forward-stagewise additive probit models.
//!
//! Each step computes the Newton working response and Hessian weight for
//! every row, multiplies the weight by the row's sample weight, fits a
//! weighted simple regression on every feature and keeps the feature with
//! the smallest weighted squared error. The accumulated model is linear in
//! the features, one intercept plus at most one new coefficient per step.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::validate_weights;
use crate::numerics::{probit_loss, working_response_and_weight, WlsFit, WlsResponse};
use crate::{Dataset, Error, Result};

/// `intercept + coefficients·x`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearScore {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearScore {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            intercept: 0.0,
            coefficients: vec![0.0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of features with a nonzero coefficient.
    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c != 0.0).count()
    }

    /// Score without a dimension check; `x` must have `n_features` entries.
    #[inline]
    pub(crate) fn margin_unchecked(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(x)
            .fold(self.intercept, |acc, (c, v)| acc + c * v)
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                actual: x.len(),
            });
        }
        Ok(self.margin_unchecked(x))
    }

    fn add_step(&mut self, feature: usize, fit: &WlsFit) {
        self.intercept += fit.intercept;
        self.coefficients[feature] += fit.slope;
    }
}

/// Score of `x` under `score`.
pub fn predict_margin(score: &LinearScore, x: &[f64]) -> Result<f64> {
    score.margin(x)
}

/// Per-step record of a ProbitBoost fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbitBoostTrace {
    /// Weighted empirical probit risk; `risks[0]` is the risk of the zero
    /// model and `risks[t]` the risk after step `t`.
    pub risks: Vec<f64>,
    /// Feature chosen at each step.
    pub selected_features: Vec<usize>,
}

impl ProbitBoostTrace {
    pub fn final_risk(&self) -> f64 {
        *self
            .risks
            .last()
            .expect("trace always holds the initial risk")
    }
}

/// Fits `iterations` ProbitBoost steps on `rows` of `data`.
///
/// `targets[k]` is the ±1 label of `rows[k]` and `sample_weights[k]` its
/// sample weight; weights are normalized internally, and rows with zero
/// weight do not influence the fit. Ties in the feature search go to the
/// lowest feature index.
pub fn fit_probitboost(
    data: &Dataset,
    rows: &[usize],
    targets: &[f64],
    sample_weights: &[f64],
    iterations: usize,
) -> Result<(LinearScore, ProbitBoostTrace)> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    if targets.len() != rows.len() {
        return Err(Error::LengthMismatch {
            what: "targets",
            expected: rows.len(),
            actual: targets.len(),
        });
    }
    if targets.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidLabel);
    }
    let total = validate_weights(sample_weights, rows.len())?;

    let active: Vec<usize> = (0..rows.len())
        .filter(|&k| sample_weights[k] > 0.0)
        .collect();
    let n = active.len();
    let p = data.n_features();
    let y: Vec<f64> = active.iter().map(|&k| targets[k]).collect();
    let s: Vec<f64> = active.iter().map(|&k| sample_weights[k] / total).collect();
    let mut columns = vec![0.0; n * p];
    for (i, &k) in active.iter().enumerate() {
        let row = data.row(rows[k]);
        for j in 0..p {
            columns[j * n + i] = row[j];
        }
    }

    let mut score = LinearScore::zeros(p);
    let mut f = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut trace = ProbitBoostTrace {
        risks: Vec::with_capacity(iterations + 1),
        selected_features: Vec::with_capacity(iterations),
    };
    trace.risks.push(weighted_risk(&y, &f, &s));

    for _ in 0..iterations {
        for i in 0..n {
            let (zi, hi) = working_response_and_weight(y[i], f[i]);
            z[i] = zi;
            w[i] = hi * s[i];
        }
        let response = WlsResponse::new(&z, &w);
        let mut best: Option<(usize, WlsFit)> = None;
        for j in 0..p {
            let fit = response.fit(&columns[j * n..(j + 1) * n], &z, &w);
            if best.is_none_or(|(_, b)| fit.weighted_sse < b.weighted_sse) {
                best = Some((j, fit));
            }
        }
        let (j, fit) = best.expect("at least one feature");
        score.add_step(j, &fit);
        let col = &columns[j * n..(j + 1) * n];
        for i in 0..n {
            f[i] += fit.slope * col[i] + fit.intercept;
        }
        trace.selected_features.push(j);
        trace.risks.push(weighted_risk(&y, &f, &s));
    }
    Ok((score, trace))
}

fn weighted_risk(y: &[f64], f: &[f64], s: &[f64]) -> f64 {
    y.iter()
        .zip(f)
        .zip(s)
        .map(|((&yi, &fi), &si)| si * probit_loss(yi * fi))
        .sum()
}

/// Binary fit on a whole two-class dataset; class 1 is the positive class.
pub fn fit_binary(
    data: &Dataset,
    sample_weights: &[f64],
    iterations: usize,
) -> Result<(LinearScore, ProbitBoostTrace)> {
    if data.n_classes() != 2 {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "binary ProbitBoost needs exactly two classes",
        });
    }
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let targets: Vec<f64> = data.labels().iter().map(|&l| class_sign(l, 1)).collect();
    fit_probitboost(data, &rows, &targets, sample_weights, iterations)
}

/// One-versus-all fits on `rows`: score `j` separates class `j` from the
/// rest.
pub fn fit_probitboost_ova(
    data: &Dataset,
    rows: &[usize],
    sample_weights: &[f64],
    iterations: usize,
) -> Result<(Vec<LinearScore>, Vec<ProbitBoostTrace>)> {
    let classes = data.n_classes();
    if classes < 2 {
        return Err(Error::TooFewClasses {
            required: 2,
            found: classes,
        });
    }
    let mut scores = Vec::with_capacity(classes);
    let mut traces = Vec::with_capacity(classes);
    let mut targets = vec![0.0; rows.len()];
    for class in 0..classes {
        for (t, &r) in targets.iter_mut().zip(rows) {
            *t = class_sign(data.label(r), class);
        }
        let (score, trace) = fit_probitboost(data, rows, &targets, sample_weights, iterations)?;
        scores.push(score);
        traces.push(trace);
    }
    Ok((scores, traces))
}

#[inline]
pub(crate) fn class_sign(label: usize, positive: usize) -> f64 {
    if label == positive {
        1.0
    } else {
        -1.0
    }
}
