//! Cross-validation and simulation sweeps.

use rayon::prelude::*;
use sbpmt_core::ensemble::SbpmtConfig;
use sbpmt_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::data::{self, simulate, stratified_kfold, summarize_cv, DataError, SimConfig};
use crate::train::{fit_parallel, predict_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub config: SbpmtConfig,
    pub folds: usize,
    pub fold_seed: u64,
    /// Test accuracy per fold, in percent.
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Stratified `k`-fold cross-validation of `config` on `data`.
pub fn cross_validate(
    data: &Dataset,
    config: &SbpmtConfig,
    k: usize,
    fold_seed: u64,
) -> data::Result<CvReport> {
    let folds = stratified_kfold(data.labels(), data.n_classes(), k, fold_seed)?;
    let fold_accuracies = folds
        .iter()
        .map(|(train, test)| {
            let fit = fit_parallel(&data.select(train), config)?;
            let test = data.select(test);
            let preds = predict_rows(&fit.model, test.features())?;
            data::accuracy(&preds, test.labels())
        })
        .collect::<data::Result<Vec<_>>>()?;
    let (mean, sd) = summarize_cv(&fold_accuracies)?;
    Ok(CvReport {
        config: *config,
        folds: k,
        fold_seed,
        fold_accuracies,
        mean,
        sd,
    })
}

/// Hyperparameter varied by a simulation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "M")]
    Members,
    #[serde(rename = "T")]
    Rounds,
    #[serde(rename = "B")]
    ProbitIters,
    #[serde(rename = "alpha")]
    Ratio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Members => "M",
            SweepParam::Rounds => "T",
            SweepParam::ProbitIters => "B",
            SweepParam::Ratio => "alpha",
        }
    }

    pub fn apply(self, base: &SbpmtConfig, value: f64) -> data::Result<SbpmtConfig> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(DataError::Invalid(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        let mut c = *base;
        match self {
            SweepParam::Members => c.members = count()?,
            SweepParam::Rounds => c.rounds = count()?,
            SweepParam::ProbitIters => c.probit_iters = if value == 0.0 { 0 } else { count()? },
            SweepParam::Ratio => c.subsample_ratio = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// `M=1,10,100` style sweep specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, list) = s.split_once('=').ok_or("expected NAME=v1,v2,...")?;
        let param = match name.trim() {
            "M" => SweepParam::Members,
            "T" => SweepParam::Rounds,
            "B" => SweepParam::ProbitIters,
            "alpha" => SweepParam::Ratio,
            other => {
                return Err(format!(
                    "unknown sweep parameter '{other}' (use M, T, B or alpha)"
                ))
            }
        };
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad value '{v}': {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        Ok(Sweep { param, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub seed: u64,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub mean_test_error: f64,
    pub sd_test_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sim: SimConfig,
    pub base: SbpmtConfig,
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

/// Runs the sweep for every seed; the seed drives both the simulated data
/// and the design.
pub fn run_sweep(
    sim: &SimConfig,
    base: &SbpmtConfig,
    sweep: &Sweep,
    seeds: &[u64],
) -> data::Result<SweepReport> {
    if seeds.is_empty() {
        return Err(DataError::Invalid("need at least one seed".into()));
    }
    let configs = sweep
        .values
        .iter()
        .map(|&v| sweep.param.apply(base, v))
        .collect::<data::Result<Vec<_>>>()?;
    let sets = seeds
        .par_iter()
        .map(|&seed| simulate(&SimConfig { seed, ..*sim }))
        .collect::<data::Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|v| (0..seeds.len()).map(move |s| (v, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, s)| {
            let (train, test) = &sets[s];
            let cfg = SbpmtConfig {
                seed: seeds[s],
                ..configs[v]
            };
            let fit = fit_parallel(train, &cfg)?;
            let preds = predict_rows(&fit.model, test.features())?;
            let acc = data::accuracy(&preds, test.labels())?;
            Ok(SweepRow {
                param: sweep.param,
                value: sweep.values[v],
                seed: seeds[s],
                test_error: 1.0 - acc / 100.0,
            })
        })
        .collect::<data::Result<Vec<_>>>()?;
    let points = sweep
        .values
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let errs: Vec<f64> = rows[v * seeds.len()..(v + 1) * seeds.len()]
                .iter()
                .map(|r| r.test_error)
                .collect();
            let (mean, sd) = summarize_cv(&errs)?;
            Ok(SweepPoint {
                value,
                mean_test_error: mean,
                sd_test_error: sd,
            })
        })
        .collect::<data::Result<Vec<_>>>()?;
    Ok(SweepReport {
        sim: *sim,
        base: *base,
        param: sweep.param,
        rows,
        points,
    })
}
