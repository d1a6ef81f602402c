//! Command-line surface. Exit codes: 0 success, 2 usage, 1 runtime.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sbpmt_core::bounds::{
    design_stats, estimate_p_sub, theorem3_bound, theorem4_bound, theorem5_bound, theorem6_bound,
    BoundInputs,
};
use sbpmt_core::ensemble::SbpmtConfig;
use serde_json::json;

use crate::data::{load_csv, load_features, LabelColumn, SimConfig};
use crate::experiments::{cross_validate, run_sweep, Sweep};
use crate::model_file::ModelFile;
use crate::train::{fit_parallel, predict_rows, training_report, TrainingReport};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "sbpmt", version, about = "Subagged boosted probit model trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an ensemble and write a model file.
    Train(TrainArgs),
    /// Classify the rows of a CSV file.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Test error on simulated data while sweeping one hyperparameter.
    Simulate(SimulateArgs),
    /// Evaluate a generalization or training-error bound.
    Bound(BoundArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    PaperDefault,
    Benchmark,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Starting hyperparameters; the flags below override single values.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of subagged members.
    #[arg(long = "M")]
    pub members: Option<usize>,
    /// Boosting rounds per member.
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    /// ProbitBoost iterations per leaf.
    #[arg(long = "B")]
    pub probit_iters: Option<usize>,
    /// Subset size ratio.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long = "min-leaf")]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl HyperArgs {
    fn resolve(&self, default: Preset) -> Result<SbpmtConfig, CliError> {
        let mut c = match self.preset.unwrap_or(default) {
            Preset::PaperDefault => SbpmtConfig::paper_default(),
            Preset::Benchmark => SbpmtConfig::benchmark(),
        };
        if let Some(v) = self.members {
            c.members = v;
        }
        if let Some(v) = self.rounds {
            c.rounds = v;
        }
        if let Some(v) = self.probit_iters {
            c.probit_iters = v;
        }
        if let Some(v) = self.alpha {
            c.subsample_ratio = v;
        }
        if let Some(v) = self.depth {
            c.max_depth = v;
        }
        if let Some(v) = self.min_leaf {
            c.min_leaf_size = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: header name, zero-based index or `last`.
    #[arg(long, default_value = "last")]
    pub label: LabelColumn,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the training report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub no_header: bool,
    /// Predictions CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Seed of the fold assignment.
    #[arg(long, default_value_t = 0)]
    pub fold_seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Total dimension.
    #[arg(long = "d", default_value_t = 10)]
    pub dim: usize,
    /// Number of informative coordinates.
    #[arg(long = "E", default_value_t = 5)]
    pub effective_dim: usize,
    /// Bayes error.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long, default_value_t = 2000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 10000)]
    pub n_test: usize,
    /// Number of repetitions; repetition `r` uses seed `seed + r`.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    /// Parameter and values, e.g. `M=1,10,100`.
    #[arg(long)]
    pub sweep: Sweep,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=6))]
    pub theorem: u8,
    #[arg(long)]
    pub n: Option<usize>,
    /// Subset size.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of members.
    #[arg(long = "M")]
    pub members: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub p_sub: Option<f64>,
    #[arg(long)]
    pub sigma1_sq: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Take n, m, M from this model and estimate p_sub on --data.
    #[arg(long)]
    pub from_model: Option<PathBuf>,
    /// Training data of --from-model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub no_header: bool,
    /// Boosting rounds.
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    /// VC dimension of the base classifiers.
    #[arg(long)]
    pub d_vc: Option<usize>,
    #[arg(long)]
    pub empirical_error: Option<f64>,
    /// Stage errors, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub errors: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Stage probit risks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub risks: Option<Vec<f64>>,
    /// Take stage errors / risks from this training report.
    #[arg(long)]
    pub from_report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub member: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Cv(a) => cv(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Bound(a) => bound(a, out),
    }
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.hyper.resolve(Preset::PaperDefault)?;
    let input = load_csv(&a.input.data, &a.input.label, !a.input.no_header)?;
    let fit = fit_parallel(&input.data, &config)?;
    let report = training_report(&fit, &input.data, input.schema.class_names.clone())?;
    write_file(&a.out, &ModelFile::new(input.schema, fit.model).to_json())?;
    if let Some(path) = &a.report {
        write_file(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    write!(out, "{}", report.to_text())?;
    writeln!(out, "model written to {}", a.out.display())?;
    Ok(())
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ModelFile::from_json(&read_to_string(&a.model)?)
        .with_context(|| format!("cannot load model {}", a.model.display()))?;
    let rows = load_features(&a.data, &file.schema, !a.no_header)?;
    let preds = predict_rows(&file.model, &rows.features)?;
    if let Some(labels) = &rows.labels {
        if !preds.is_empty() {
            log::info!("accuracy {:.2}%", crate::data::accuracy(&preds, labels)?);
        }
    }
    let mut text = String::from("prediction\n");
    for p in preds {
        text.push_str(&file.schema.class_names[p]);
        text.push('\n');
    }
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cv(a: CvArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.hyper.resolve(Preset::PaperDefault)?;
    let input = load_csv(&a.input.data, &a.input.label, !a.input.no_header)?;
    if a.k < 2 || a.k > input.data.n_rows() {
        return usage(format!("--k must lie in [2, {}]", input.data.n_rows()));
    }
    let report = cross_validate(&input.data, &config, a.k, a.fold_seed)?;
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Text => {
            let c = &report.config;
            writeln!(
                out,
                "config: M={} T={} B={} alpha={} depth={} min_leaf={} seed={} folds={} fold_seed={}",
                c.members, c.rounds, c.probit_iters, c.subsample_ratio, c.max_depth, c.min_leaf_size, c.seed, report.folds, report.fold_seed
            )?;
            for (i, acc) in report.fold_accuracies.iter().enumerate() {
                writeln!(out, "fold {i}: {acc:.2}%")?;
            }
            writeln!(out, "accuracy: {:.2} ± {:.2}", report.mean, report.sd)?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let base = a.hyper.resolve(Preset::Benchmark)?;
    if a.repeats == 0 {
        return usage("--repeats must be at least 1");
    }
    let sim = SimConfig {
        dim: a.dim,
        effective_dim: a.effective_dim,
        bayes_error: a.q,
        n_train: a.n_train,
        n_test: a.n_test,
        seed: base.seed,
    };
    if sim.effective_dim == 0
        || sim.effective_dim > sim.dim
        || !(0.0..0.5).contains(&sim.bayes_error)
    {
        return usage("need 1 <= E <= d and 0 <= q < 0.5");
    }
    for &v in &a.sweep.values {
        a.sweep
            .param
            .apply(&base, v)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seeds: Vec<u64> = (0..a.repeats).map(|r| base.seed + r).collect();
    let report = run_sweep(&sim, &base, &a.sweep, &seeds)?;
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Text => {
            let c = &base;
            writeln!(
                out,
                "sim: d={} E={} q={} n_train={} n_test={} | base: M={} T={} B={} alpha={} depth={} min_leaf={} seeds={}..{}",
                sim.dim, sim.effective_dim, sim.bayes_error, sim.n_train, sim.n_test,
                c.members, c.rounds, c.probit_iters, c.subsample_ratio, c.max_depth, c.min_leaf_size,
                seeds[0], seeds[seeds.len() - 1]
            )?;
            writeln!(out, "{}\tmean_test_error\tsd", report.param.name())?;
            for p in &report.points {
                writeln!(
                    out,
                    "{}\t{:.4}\t{:.4}",
                    p.value, p.mean_test_error, p.sd_test_error
                )?;
            }
        }
    }
    Ok(())
}

fn load_report(path: &Path, member: usize) -> Result<(TrainingReport, usize), CliError> {
    let report: TrainingReport = serde_json::from_str(&read_to_string(path)?)
        .with_context(|| format!("{} is not a training report", path.display()))?;
    if member >= report.members.len() {
        return usage(format!("--member must be below {}", report.members.len()));
    }
    Ok((report, member))
}

fn need<T>(v: Option<T>, flag: &str, why: &str) -> Result<T, CliError> {
    v.map_or_else(|| usage(format!("{flag} is required {why}")), Ok)
}

fn emit(
    out: &mut dyn Write,
    format: Format,
    lines: &[String],
    value: serde_json::Value,
) -> Result<(), CliError> {
    match format {
        Format::Text => {
            for l in lines {
                writeln!(out, "{l}")?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?,
    }
    Ok(())
}

fn bound(a: BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    match a.theorem {
        3 => bound3(a, out),
        4 => {
            let d_vc = need(a.d_vc, "--d-vc", "for theorem 4")?;
            let (n, rounds, err) = match &a.from_report {
                Some(p) => {
                    let (r, k) = load_report(p, a.member)?;
                    let m = &r.members[k];
                    (m.subset_size, m.kept_errors().len(), m.training_error)
                }
                None => (
                    need(a.n, "--n", "for theorem 4")?,
                    need(a.rounds, "--T", "for theorem 4")?,
                    need(a.empirical_error, "--empirical-error", "for theorem 4")?,
                ),
            };
            let v = theorem4_bound(n, rounds, d_vc, a.delta, err)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            emit(
                out,
                a.format,
                &[
                    format!(
                        "inputs: n={n} T={rounds} d_vc={d_vc} delta={} empirical_error={err}",
                        a.delta
                    ),
                    format!("bound: {v:.10}"),
                ],
                json!({"theorem": 4, "n": n, "T": rounds, "d_vc": d_vc, "delta": a.delta, "empirical_error": err, "bound": v}),
            )
        }
        5 => {
            let errors = match (&a.errors, &a.from_report) {
                (Some(e), _) => e.clone(),
                (None, Some(p)) => {
                    let (r, k) = load_report(p, a.member)?;
                    r.members[k].kept_errors()
                }
                (None, None) => return usage("theorem 5 needs --errors or --from-report"),
            };
            let v = theorem5_bound(&errors, a.theta).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(
                out,
                a.format,
                &[
                    format!(
                        "inputs: T={} theta={} errors={errors:?}",
                        errors.len(),
                        a.theta
                    ),
                    format!("bound: {v:.10}"),
                ],
                json!({"theorem": 5, "theta": a.theta, "errors": errors, "bound": v}),
            )
        }
        6 => {
            let d_vc = need(a.d_vc, "--d-vc", "for theorem 6")?;
            let (risks, n) = match (&a.risks, &a.from_report) {
                (Some(r), _) => (r.clone(), need(a.n, "--n", "with --risks")?),
                (None, Some(p)) => {
                    let (r, k) = load_report(p, a.member)?;
                    (r.members[k].kept_probit_risks(), r.members[k].subset_size)
                }
                (None, None) => return usage("theorem 6 needs --risks or --from-report"),
            };
            let rounds = a.rounds.unwrap_or(risks.len());
            let r = theorem6_bound(&risks, n, rounds, d_vc, a.delta)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut lines = vec![
                format!(
                    "inputs: n={n} T={rounds} d_vc={d_vc} delta={} risks={risks:?}",
                    a.delta
                ),
                format!("first term: {:.10}", r.first_term),
                format!("complexity term: {:.10}", r.complexity),
                format!("bound: {:.10}", r.value),
            ];
            if !r.hypothesis_ok {
                lines
                    .push("warning: some risk/ln2 is outside [0, 1/2); first term set to 1".into());
            }
            emit(
                out,
                a.format,
                &lines,
                json!({"theorem": 6, "n": n, "T": rounds, "d_vc": d_vc, "delta": a.delta, "risks": risks,
                       "first_term": r.first_term, "complexity": r.complexity, "bound": r.value,
                       "hypothesis_ok": r.hypothesis_ok}),
            )
        }
        _ => unreachable!("clap restricts the theorem number"),
    }
}

fn bound3(a: BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    const WHY: &str =
        "for theorem 3: the kernel moments cannot be estimated from the data and have no default";
    let sigma1_sq = need(a.sigma1_sq, "--sigma1-sq", WHY)?;
    let beta = need(a.beta, "--beta", WHY)?;
    let gamma = need(a.gamma, "--gamma", WHY)?;
    let mut extra = Vec::new();
    let mut extra_json = serde_json::Map::new();
    let (n, m, members, p_sub) = match &a.from_model {
        Some(path) => {
            let file = ModelFile::from_json(&read_to_string(path)?)
                .with_context(|| format!("cannot load model {}", path.display()))?;
            let data_path = need(a.data.as_ref(), "--data", "with --from-model")?;
            let input = load_csv(
                data_path,
                &LabelColumn::Name(file.schema.label.clone()),
                !a.no_header,
            )?;
            let design = &file.model.design;
            let stats = design_stats(design)?;
            extra.push(format!(
                "design: A={:.6} B={:.6} C={:.6}",
                stats.a, stats.b, stats.c
            ));
            extra_json.insert(
                "design".into(),
                json!({"A": stats.a, "B": stats.b, "C": stats.c}),
            );
            let p_sub = match a.p_sub {
                Some(p) => p,
                None => {
                    let est = estimate_p_sub(&file.model, &input.data)?;
                    if est.fallback {
                        log::warn!(
                            "every member saw all rows; p_sub falls back to the training error"
                        );
                        extra.push(
                            "warning: p_sub estimated by training error (no held-out rows)".into(),
                        );
                    }
                    extra_json.insert("p_sub_fallback".into(), json!(est.fallback));
                    est.value
                }
            };
            (design.n, design.m, design.subsets.len(), p_sub)
        }
        None => (
            need(a.n, "--n", "for theorem 3")?,
            need(a.m, "--m", "for theorem 3")?,
            need(a.members, "--M", "for theorem 3")?,
            need(a.p_sub, "--p-sub", "for theorem 3")?,
        ),
    };
    let inputs = BoundInputs {
        n,
        m,
        members,
        delta: a.delta,
        p_sub,
        sigma1_sq,
        beta,
        gamma,
    };
    let r = theorem3_bound(&inputs).map_err(|e| CliError::Usage(e.to_string()))?;
    let ln_n = (n as f64).ln();
    let threshold = ln_n * ln_n;
    let mut lines = vec![
        format!(
            "inputs: n={n} m={m} M={members} delta={} p_sub={p_sub} sigma1_sq={sigma1_sq} beta={beta} gamma={gamma}",
            a.delta
        ),
        format!("Q_A={:.10} Q_B={:.10} Q_C={:.10} t={:.10}", r.q_a, r.q_b, r.q_c, r.t),
        format!("bound: {:.10}", r.rhs),
        format!(
            "hypothesis M > ln^2 n = {threshold:.2}: {}",
            if (members as f64) > threshold { "ok" } else { "violated" }
        ),
        format!("hypothesis p_sub < 1/2: {}", if p_sub < 0.5 { "ok" } else { "violated" }),
    ];
    if r.degenerate {
        lines.push("warning: t <= 0, bound is vacuous".into());
    }
    lines.extend(extra);
    let mut value = json!({"theorem": 3, "n": n, "m": m, "M": members, "delta": a.delta, "p_sub": p_sub,
        "sigma1_sq": sigma1_sq, "beta": beta, "gamma": gamma, "Q_A": r.q_a, "Q_B": r.q_b, "Q_C": r.q_c,
        "t": r.t, "bound": r.rhs, "ln2_n": threshold, "hypothesis_ok": r.hypothesis_ok, "degenerate": r.degenerate});
    value.as_object_mut().expect("object").extend(extra_json);
    emit(out, a.format, &lines, value)
}
