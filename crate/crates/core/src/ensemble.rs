//! Boosting over probit model trees and the subagging layer.
//!
//! Two classes use discrete AdaBoost, more use SAMME. Both start from
//! uniform weights on the member's rows, multiply the weight of each
//! misclassified row by `exp(alpha)` and renormalize.

use alloc::vec;
use alloc::vec::Vec;

use libm::log;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::validate_weights;
use crate::pmt::{fit_pmt, PmtConfig, PmtModel};
use crate::{Dataset, Error, Result};

/// Lower clamp for stage errors.
pub const ERR_FLOOR: f64 = 1e-10;

/// Stage weight `½ ln((1-err)/err) + ln(J-1)` for an already clamped error.
pub fn stage_alpha(err: f64, n_classes: usize) -> f64 {
    0.5 * log((1.0 - err) / err) + log((n_classes - 1) as f64)
}

/// Clamps a raw stage error into `[ERR_FLOOR, 1 - 1/J - ERR_FLOOR]`.
pub fn clamp_error(err: f64, n_classes: usize) -> f64 {
    let ceiling = 1.0 - 1.0 / n_classes as f64 - ERR_FLOOR;
    err.clamp(ERR_FLOOR, ceiling)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stage {
    pub alpha: f64,
    pub model: PmtModel,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoostedPmt {
    pub stages: Vec<Stage>,
    pub n_classes: usize,
}

impl BoostedPmt {
    pub fn n_features(&self) -> usize {
        self.stages[0].model.n_features()
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        if self.n_classes == 2 {
            let mut sum = 0.0;
            for s in &self.stages {
                let g = if s.model.predict_unchecked(x) == 1 {
                    1.0
                } else {
                    -1.0
                };
                sum += s.alpha * g;
            }
            usize::from(sum > 0.0)
        } else {
            let mut votes = vec![0.0; self.n_classes];
            for s in &self.stages {
                votes[s.model.predict_unchecked(x)] += s.alpha;
            }
            argmax_low(&votes)
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        check_dim(self.n_features(), x)?;
        Ok(self.predict_unchecked(x))
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidParameter {
                name: "boosted model",
                reason: "needs at least one stage",
            });
        }
        let p = self.n_features();
        for s in &self.stages {
            s.model.validate()?;
            if s.model.n_classes != self.n_classes
                || s.model.n_features() != p
                || !s.alpha.is_finite()
            {
                return Err(Error::InvalidParameter {
                    name: "boosted model",
                    reason: "stages disagree on shape or have a non-finite weight",
                });
            }
        }
        Ok(())
    }
}

pub fn predict_boosted(model: &BoostedPmt, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

/// Diagnostics of one boosting round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageReport {
    /// Weighted training error of the stage tree.
    pub raw_error: f64,
    /// Error used for `alpha`.
    pub clamped_error: f64,
    pub alpha: f64,
    /// Weighted probit risk of the stage tree.
    pub probit_risk: f64,
    /// Share of the stage weights in each leaf.
    pub leaf_mass: Vec<f64>,
    /// Final probit risk of each leaf score.
    pub leaf_risks: Vec<Vec<f64>>,
    /// Whether the stage is part of the model.
    pub kept: bool,
    /// Sum of the renormalized weights handed to the next round.
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostFit {
    pub model: BoostedPmt,
    /// One entry per fitted round, including a discarded final one.
    pub stages: Vec<StageReport>,
    /// Unweighted training error of the boosted classifier on its rows.
    pub training_error: f64,
}

impl BoostFit {
    /// Clamped errors of the kept stages.
    pub fn kept_errors(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| s.kept)
            .map(|s| s.clamped_error)
            .collect()
    }

    /// Probit risks of the kept stages.
    pub fn kept_probit_risks(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| s.kept)
            .map(|s| s.probit_risk)
            .collect()
    }
}

/// AdaBoost on `rows` of a two-class dataset.
pub fn fit_adaboost(
    data: &Dataset,
    rows: &[usize],
    rounds: usize,
    config: &PmtConfig,
) -> Result<BoostFit> {
    if data.n_classes() != 2 {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "AdaBoost needs exactly two classes",
        });
    }
    boost(data, rows, rounds, config, 0.5)
}

/// SAMME on `rows`; a stage is kept only while its error is below
/// `1 - 1/J`.
pub fn fit_samme(
    data: &Dataset,
    rows: &[usize],
    rounds: usize,
    config: &PmtConfig,
) -> Result<BoostFit> {
    let j = data.n_classes() as f64;
    boost(data, rows, rounds, config, 1.0 - 1.0 / j - ERR_FLOOR)
}

/// AdaBoost for two classes, SAMME otherwise.
pub fn fit_boosted(
    data: &Dataset,
    rows: &[usize],
    rounds: usize,
    config: &PmtConfig,
) -> Result<BoostFit> {
    if data.n_classes() == 2 {
        fit_adaboost(data, rows, rounds, config)
    } else {
        fit_samme(data, rows, rounds, config)
    }
}

fn boost(
    data: &Dataset,
    rows: &[usize],
    rounds: usize,
    config: &PmtConfig,
    stop_at: f64,
) -> Result<BoostFit> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "must be at least 1",
        });
    }
    let j = data.n_classes();
    let n = rows.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::with_capacity(rounds);
    let mut reports = Vec::with_capacity(rounds);
    let mut miss = vec![false; n];

    for t in 0..rounds {
        let fit = fit_pmt(data, rows, &w, config)?;
        let mut raw = 0.0;
        for (k, &r) in rows.iter().enumerate() {
            miss[k] = fit.model.predict_unchecked(data.row(r)) != data.label(r);
            if miss[k] {
                raw += w[k];
            }
        }
        let clamped = clamp_error(raw, j);
        let alpha = stage_alpha(clamped, j);
        let stop = raw >= stop_at;
        let kept = !stop || t == 0;
        let mut weight_sum = 1.0;
        let crate::pmt::PmtFit {
            model: tree,
            leaf_mass,
            leaf_risks,
            probit_risk,
        } = fit;
        if kept {
            stages.push(Stage { alpha, model: tree });
        }
        if !stop {
            let boost = libm::exp(alpha);
            for (wk, &m) in w.iter_mut().zip(&miss) {
                if m {
                    *wk *= boost;
                }
            }
            let total = validate_weights(&w, n)?;
            w.iter_mut().for_each(|wk| *wk /= total);
            weight_sum = w.iter().sum();
        }
        reports.push(StageReport {
            raw_error: raw,
            clamped_error: clamped,
            alpha,
            probit_risk,
            leaf_mass,
            leaf_risks,
            kept,
            weight_sum,
        });
        if stop {
            break;
        }
    }

    let model = BoostedPmt {
        stages,
        n_classes: j,
    };
    let wrong = rows
        .iter()
        .filter(|&&r| model.predict_unchecked(data.row(r)) != data.label(r))
        .count();
    Ok(BoostFit {
        model,
        stages: reports,
        training_error: wrong as f64 / n as f64,
    })
}

/// The subsets used by the members of a subagged ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Design {
    pub n: usize,
    pub m: usize,
    /// Sorted row indices, one subset per member.
    pub subsets: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Subset size `⌊ratio·n⌋`, guarding against `0.7·10 = 6.999…`.
pub fn subset_size(n: usize, ratio: f64) -> usize {
    libm::floor(ratio * n as f64 + 1e-9) as usize
}

/// Draws `members` subsets of size `⌊ratio·n⌋`, each without replacement
/// and independently of the others.
pub fn draw_design(n: usize, ratio: f64, members: usize, seed: u64) -> Result<Design> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "subsample ratio",
            reason: "must lie in (0, 1]",
        });
    }
    if members == 0 {
        return Err(Error::InvalidParameter {
            name: "members",
            reason: "must be at least 1",
        });
    }
    let m = subset_size(n, ratio).min(n);
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "subsample ratio",
            reason: "subset would be empty",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets = (0..members)
        .map(|_| {
            let mut s = sample(&mut rng, n, m).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    Ok(Design {
        n,
        m,
        subsets,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SbpmtConfig {
    /// Number of subagged members `M`.
    pub members: usize,
    /// Boosting rounds `T` per member.
    pub rounds: usize,
    /// ProbitBoost iterations `B` per leaf.
    pub probit_iters: usize,
    /// Subset size ratio `α`.
    pub subsample_ratio: f64,
    pub max_depth: usize,
    pub min_leaf_size: usize,
    pub seed: u64,
}

impl SbpmtConfig {
    /// Real-data preset: M=21, T=5, B=100, α=0.7, depth 6, min leaf 20.
    pub fn paper_default() -> Self {
        Self {
            members: 21,
            rounds: 5,
            probit_iters: 100,
            subsample_ratio: 0.7,
            max_depth: 6,
            min_leaf_size: 20,
            seed: 0,
        }
    }

    /// Simulation preset: M=T=B=5, α=0.7, depth 3, min leaf 20.
    pub fn benchmark() -> Self {
        Self {
            members: 5,
            rounds: 5,
            probit_iters: 5,
            subsample_ratio: 0.7,
            max_depth: 3,
            min_leaf_size: 20,
            seed: 0,
        }
    }

    pub fn pmt(&self) -> PmtConfig {
        PmtConfig {
            max_depth: self.max_depth,
            min_leaf_size: self.min_leaf_size,
            probit_iters: self.probit_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.members == 0 {
            return bad("members", "must be at least 1");
        }
        if self.rounds == 0 {
            return bad("rounds", "must be at least 1");
        }
        if self.min_leaf_size == 0 {
            return bad("min_leaf_size", "must be at least 1");
        }
        if !(self.subsample_ratio > 0.0 && self.subsample_ratio <= 1.0) {
            return bad("subsample ratio", "must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SbpmtModel {
    pub members: Vec<BoostedPmt>,
    pub design: Design,
    pub config: SbpmtConfig,
    pub n_classes: usize,
    pub n_features: usize,
}

impl SbpmtModel {
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        if self.n_classes == 2 {
            let mut sum = 0i64;
            for m in &self.members {
                sum += if m.predict_unchecked(x) == 1 { 1 } else { -1 };
            }
            usize::from(sum > 0)
        } else {
            let mut votes = vec![0usize; self.n_classes];
            for m in &self.members {
                votes[m.predict_unchecked(x)] += 1;
            }
            let mut best = 0;
            for (j, &v) in votes.iter().enumerate() {
                if v > votes[best] {
                    best = j;
                }
            }
            best
        }
    }

    /// Majority vote of the members; ties give the smallest class.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        check_dim(self.n_features, x)?;
        Ok(self.predict_unchecked(x))
    }

    /// Predictions of every member for `x`.
    pub fn member_votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.n_features, x)?;
        Ok(self
            .members
            .iter()
            .map(|m| m.predict_unchecked(x))
            .collect())
    }

    /// Fraction of the given rows that are misclassified.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64> {
        check_dim(self.n_features, data.row(0))?;
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let wrong = (0..data.n_rows())
            .filter(|&i| self.predict_unchecked(data.row(i)) != data.label(i))
            .count();
        Ok(wrong as f64 / data.n_rows() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let bad = |reason| {
            Err(Error::InvalidParameter {
                name: "model",
                reason,
            })
        };
        if self.members.is_empty() || self.members.len() != self.design.subsets.len() {
            return bad("member count differs from the design");
        }
        for m in &self.members {
            m.validate()?;
            if m.n_classes != self.n_classes || m.n_features() != self.n_features {
                return bad("member shape differs from the model");
            }
        }
        Ok(())
    }
}

pub fn predict_sbpmt(model: &SbpmtModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

/// A fitted ensemble plus the boosting diagnostics of every member.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpmtFit {
    pub model: SbpmtModel,
    pub member_fits: Vec<MemberReport>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MemberReport {
    pub stages: Vec<StageReport>,
    pub training_error: f64,
}

/// Fits the member trained on subset `k` of `design`.
pub fn fit_member(
    data: &Dataset,
    design: &Design,
    k: usize,
    config: &SbpmtConfig,
) -> Result<BoostFit> {
    fit_boosted(data, &design.subsets[k], config.rounds, &config.pmt())
}

/// Draws the design for `data` under `config`.
pub fn plan(data: &Dataset, config: &SbpmtConfig) -> Result<Design> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    draw_design(
        data.n_rows(),
        config.subsample_ratio,
        config.members,
        config.seed,
    )
}

/// Combines member fits produced in design order.
pub fn assemble(
    data: &Dataset,
    design: Design,
    config: SbpmtConfig,
    fits: Vec<BoostFit>,
) -> SbpmtFit {
    let mut members = Vec::with_capacity(fits.len());
    let mut member_fits = Vec::with_capacity(fits.len());
    for f in fits {
        member_fits.push(MemberReport {
            stages: f.stages,
            training_error: f.training_error,
        });
        members.push(f.model);
    }
    SbpmtFit {
        model: SbpmtModel {
            members,
            design,
            config,
            n_classes: data.n_classes(),
            n_features: data.n_features(),
        },
        member_fits,
    }
}

/// Fits all members one after another.
pub fn fit_sbpmt(data: &Dataset, config: &SbpmtConfig) -> Result<SbpmtFit> {
    let design = plan(data, config)?;
    let fits = (0..design.subsets.len())
        .map(|k| fit_member(data, &design, k, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(data, design, *config, fits))
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        })
    }
}

fn argmax_low(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    best
}
