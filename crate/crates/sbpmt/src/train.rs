//! Parallel ensemble fitting and training reports.

use rayon::prelude::*;
use sbpmt_core::bounds::theorem5_bound;
use sbpmt_core::ensemble::{
    assemble, fit_member, plan, SbpmtConfig, SbpmtFit, SbpmtModel, StageReport,
};
use sbpmt_core::Dataset;
use serde::{Deserialize, Serialize};

/// Fits the members concurrently; the result equals the sequential fit.
pub fn fit_parallel(data: &Dataset, config: &SbpmtConfig) -> sbpmt_core::Result<SbpmtFit> {
    let design = plan(data, config)?;
    let fits = (0..design.subsets.len())
        .into_par_iter()
        .map(|k| fit_member(data, &design, k, config))
        .collect::<sbpmt_core::Result<Vec<_>>>()?;
    Ok(assemble(data, design, *config, fits))
}

/// Predicts every row of a row-major feature block.
pub fn predict_rows(model: &SbpmtModel, features: &[f64]) -> sbpmt_core::Result<Vec<usize>> {
    let p = model.n_features;
    features.par_chunks(p).map(|x| model.predict(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub subset_size: usize,
    pub stages: Vec<StageReport>,
    /// Unweighted training error on the member's subset.
    pub training_error: f64,
    /// `2^T Π sqrt(err_t (1-err_t))` over the kept stages.
    pub theorem5_bound: f64,
}

impl MemberSummary {
    pub fn kept_errors(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| s.kept)
            .map(|s| s.clamped_error)
            .collect()
    }

    pub fn kept_probit_risks(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| s.kept)
            .map(|s| s.probit_risk)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: SbpmtConfig,
    pub n_rows: usize,
    pub n_features: usize,
    pub class_names: Vec<String>,
    /// Percentage of training rows the ensemble classifies correctly.
    pub training_accuracy: f64,
    pub members: Vec<MemberSummary>,
}

pub fn training_report(
    fit: &SbpmtFit,
    data: &Dataset,
    class_names: Vec<String>,
) -> sbpmt_core::Result<TrainingReport> {
    let members = fit
        .member_fits
        .iter()
        .zip(&fit.model.design.subsets)
        .map(|(m, subset)| {
            let kept: Vec<f64> = m
                .stages
                .iter()
                .filter(|s| s.kept)
                .map(|s| s.clamped_error)
                .collect();
            Ok(MemberSummary {
                subset_size: subset.len(),
                stages: m.stages.clone(),
                training_error: m.training_error,
                theorem5_bound: theorem5_bound(&kept, 0.0)?,
            })
        })
        .collect::<sbpmt_core::Result<Vec<_>>>()?;
    Ok(TrainingReport {
        config: fit.model.config,
        n_rows: data.n_rows(),
        n_features: data.n_features(),
        class_names,
        training_accuracy: 100.0 * (1.0 - fit.model.error_rate(data)?),
        members,
    })
}

impl TrainingReport {
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "config: M={} T={} B={} alpha={} depth={} min_leaf={} seed={}",
            c.members,
            c.rounds,
            c.probit_iters,
            c.subsample_ratio,
            c.max_depth,
            c.min_leaf_size,
            c.seed
        );
        let _ = writeln!(
            s,
            "data: {} rows, {} features, classes [{}]",
            self.n_rows,
            self.n_features,
            self.class_names.join(", ")
        );
        let _ = writeln!(s, "training accuracy: {:.2}%", self.training_accuracy);
        for (k, m) in self.members.iter().enumerate() {
            let errs: Vec<String> = m
                .stages
                .iter()
                .map(|st| {
                    format!(
                        "{:.4}{}",
                        st.raw_error,
                        if st.kept { "" } else { "(dropped)" }
                    )
                })
                .collect();
            let _ = writeln!(
                s,
                "member {k}: m={} train_err={:.4} bound={:.4} stage_errs=[{}]",
                m.subset_size,
                m.training_error,
                m.theorem5_bound,
                errs.join(" ")
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sbpmt_core::ensemble::fit_sbpmt;

    fn toy(n: usize) -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a = (i * 37 % 101) as f64 / 101.0;
            let b = (i * 53 % 97) as f64 / 97.0;
            x.extend([a, b]);
            y.push(usize::from(a + 0.3 * b > 0.6) ^ usize::from(i % 13 == 0));
        }
        Dataset::new(x, 2, y, 2).unwrap()
    }

    #[test]
    fn parallel_equals_sequential() {
        let d = toy(300);
        let cfg = SbpmtConfig {
            members: 6,
            seed: 11,
            ..SbpmtConfig::benchmark()
        };
        assert_eq!(
            fit_parallel(&d, &cfg).unwrap(),
            fit_sbpmt(&d, &cfg).unwrap()
        );
    }

    #[test]
    fn report_embeds_config_and_bounds() {
        let d = toy(200);
        let cfg = SbpmtConfig::benchmark();
        let fit = fit_parallel(&d, &cfg).unwrap();
        let r = training_report(&fit, &d, vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(r.config, cfg);
        assert_eq!(r.members.len(), 5);
        for m in &r.members {
            assert!(m.training_error <= m.theorem5_bound + 1e-12);
            assert_eq!(m.subset_size, 140);
        }
        let preds = predict_rows(&fit.model, d.features()).unwrap();
        let acc = crate::data::accuracy(&preds, d.labels()).unwrap();
        assert_eq!(acc, r.training_accuracy);
        assert!(r.to_text().contains("M=5 T=5 B=5"));
    }
}
