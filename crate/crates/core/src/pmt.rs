//! Probit model trees: a CART partition with a ProbitBoost model per leaf.

use alloc::vec;
use alloc::vec::Vec;

use crate::cart::{build_tree, Tree};
use crate::dataset::validate_weights;
use crate::probitboost::{class_sign, fit_probitboost, LinearScore};
use crate::{Dataset, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PmtConfig {
    pub max_depth: usize,
    pub min_leaf_size: usize,
    pub probit_iters: usize,
}

/// Model attached to one leaf.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LeafModel {
    /// Two classes; a positive margin means class 1.
    Binary(LinearScore),
    /// One score per class, class `j` against the rest.
    OneVsAll(Vec<LinearScore>),
}

impl LeafModel {
    #[inline]
    fn decide(&self, x: &[f64]) -> usize {
        match self {
            LeafModel::Binary(score) => usize::from(score.margin_unchecked(x) > 0.0),
            LeafModel::OneVsAll(scores) => {
                let mut best = 0;
                let mut best_margin = f64::NEG_INFINITY;
                for (j, s) in scores.iter().enumerate() {
                    let m = s.margin_unchecked(x);
                    if m > best_margin {
                        best = j;
                        best_margin = m;
                    }
                }
                best
            }
        }
    }

    fn scores(&self) -> &[LinearScore] {
        match self {
            LeafModel::Binary(s) => core::slice::from_ref(s),
            LeafModel::OneVsAll(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PmtModel {
    pub tree: Tree,
    /// Indexed by leaf id.
    pub leaves: Vec<LeafModel>,
    pub n_classes: usize,
}

impl PmtModel {
    pub fn n_features(&self) -> usize {
        self.tree.n_features()
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        self.leaves[self.tree.route_unchecked(x)].decide(x)
    }

    /// Predicted class of `x`. Binary ties (zero margin) give class 0;
    /// multi-class ties give the smallest class.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    /// Checks internal consistency of a model from an external source.
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        let bad = |reason| {
            Err(Error::InvalidParameter {
                name: "pmt",
                reason,
            })
        };
        if self.n_classes < 2 {
            return bad("model needs at least two classes");
        }
        if self.leaves.len() != self.tree.n_leaves() {
            return bad("leaf model count differs from tree leaf count");
        }
        for leaf in &self.leaves {
            let ok_shape = match leaf {
                LeafModel::Binary(_) => self.n_classes == 2,
                LeafModel::OneVsAll(s) => s.len() == self.n_classes,
            };
            if !ok_shape {
                return bad("leaf model does not match the class count");
            }
            if leaf
                .scores()
                .iter()
                .any(|s| s.n_features() != self.n_features())
            {
                return bad("leaf model has the wrong number of coefficients");
            }
        }
        Ok(())
    }
}

pub fn predict_pmt(model: &PmtModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

/// A fitted tree with its training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PmtFit {
    pub model: PmtModel,
    /// Share of the sample weight that fell in each leaf.
    pub leaf_mass: Vec<f64>,
    /// Final weighted probit risk of each leaf score, leaf weights
    /// renormalized. One entry per binary leaf, `J` per one-vs-all leaf.
    pub leaf_risks: Vec<Vec<f64>>,
    /// `Σ_a leaf_mass[a] · risk_a`, averaging the one-vs-all risks of a
    /// leaf in the multi-class case.
    pub probit_risk: f64,
}

/// Fits a probit model tree on `rows` of `data`; `weights[k]` belongs to
/// `rows[k]`.
pub fn fit_pmt(
    data: &Dataset,
    rows: &[usize],
    weights: &[f64],
    config: &PmtConfig,
) -> Result<PmtFit> {
    let total = validate_weights(weights, rows.len())?;
    let built = build_tree(data, rows, weights, config.max_depth, config.min_leaf_size)?;
    let binary = data.n_classes() == 2;
    let n_leaves = built.leaf_members.len();
    let mut leaves = Vec::with_capacity(n_leaves);
    let mut leaf_mass = Vec::with_capacity(n_leaves);
    let mut leaf_risks = Vec::with_capacity(n_leaves);
    let mut probit_risk = 0.0;

    for members in &built.leaf_members {
        let leaf_rows: Vec<usize> = members.iter().map(|&k| rows[k]).collect();
        let mut leaf_w: Vec<f64> = members.iter().map(|&k| weights[k]).collect();
        let mass: f64 = leaf_w.iter().sum();
        if mass > 0.0 {
            leaf_w.iter_mut().for_each(|w| *w /= mass);
        } else {
            // A leaf holding only zero-weight rows; fit it unweighted.
            let u = 1.0 / leaf_w.len() as f64;
            leaf_w.iter_mut().for_each(|w| *w = u);
        }
        let share = mass / total;
        let classes: Vec<usize> = if binary {
            vec![1]
        } else {
            (0..data.n_classes()).collect()
        };
        let mut scores = Vec::with_capacity(classes.len());
        let mut risks = Vec::with_capacity(classes.len());
        let mut targets = vec![0.0; leaf_rows.len()];
        for &class in &classes {
            for (t, &r) in targets.iter_mut().zip(&leaf_rows) {
                *t = class_sign(data.label(r), class);
            }
            let (score, trace) =
                fit_probitboost(data, &leaf_rows, &targets, &leaf_w, config.probit_iters)?;
            scores.push(score);
            risks.push(trace.final_risk());
        }
        probit_risk += share * risks.iter().sum::<f64>() / risks.len() as f64;
        leaves.push(if binary {
            LeafModel::Binary(scores.pop().expect("one score"))
        } else {
            LeafModel::OneVsAll(scores)
        });
        leaf_mass.push(share);
        leaf_risks.push(risks);
    }

    Ok(PmtFit {
        model: PmtModel {
            tree: built.tree,
            leaves,
            n_classes: data.n_classes(),
        },
        leaf_mass,
        leaf_risks,
        probit_risk,
    })
}
