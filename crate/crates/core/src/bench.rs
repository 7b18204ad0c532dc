//! Benchmark harness: baselines, seeded runs, reports and the MMD
//! diagnostic.
//!
//! Run `i` of a cell uses seed `base + i` for every stochastic stage:
//! permutation, sampling, cuckoo search, k-means and random maps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{benchmark_sample, find_task, load_dataset, permute, LabeledDomain, TaskSpec};
use crate::gfk::{default_dim, gfk_embed, gfk_kernel, principal_components};
use crate::lmm::{apply_lmm, LmmPair};
use crate::mlkit::{accuracy, kmeans2, mean_std, mmd2_test, svm_predict, svm_train, zscore, Labels, MmdResult, SvmParams};
use crate::optim::{fit_glg, GlgConfig, Terminal};
use crate::{derive_seed, Error, RealMatrix, Result};

const STREAM_PERM_S: u64 = 10;
const STREAM_PERM_T: u64 = 11;
const STREAM_SAMPLE_S: u64 = 12;
const STREAM_SAMPLE_T: u64 = 13;
const STREAM_MAPS: u64 = 14;
const STREAM_KMEANS: u64 = 15;
const STREAM_MMD: u64 = 16;

/// Models compared by the benchmark, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    /// Labels every target instance `+1`.
    A1,
    /// Per-domain PCA to the smaller dimension, then GFK.
    DG,
    /// k-means on the target with a random cluster labelling.
    CM,
    /// Random Gaussian linear maps, then GFK.
    RMG,
    /// Random positive maps, then GFK.
    RLG,
    /// Fitted positive maps, then GFK.
    GLG,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [Self::A1, Self::DG, Self::CM, Self::RMG, Self::RLG, Self::GLG];

    pub fn name(self) -> &'static str {
        match self {
            Self::A1 => "A1",
            Self::DG => "DG",
            Self::CM => "CM",
            Self::RMG => "RMG",
            Self::RLG => "RLG",
            Self::GLG => "GLG",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown model {s:?}")))
    }
}

/// Settings for a set of benchmark cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tasks: Vec<String>,
    pub models: Vec<ModelKind>,
    pub runs: usize,
    pub seed: u64,
    pub glg: GlgConfig,
    /// `None` selects `max(1, ⌊r/2⌋)`.
    pub gfk_dim: Option<usize>,
    pub data_dir: PathBuf,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tasks: Vec::new(),
            models: Vec::new(),
            runs: 50,
            seed: 0,
            glg: GlgConfig::default(),
            gfk_dim: None,
            data_dir: PathBuf::from("data"),
            out: PathBuf::from("reports"),
        }
    }
}

impl RunConfig {
    fn validate_runs(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Invalid("runs must be at least 1".into()));
        }
        self.glg.validate()
    }

    fn validate(&self) -> Result<()> {
        self.validate_runs()?;
        if self.models.is_empty() {
            return Err(Error::Invalid("no models requested".into()));
        }
        Ok(())
    }
}

/// The configuration fields that affect results, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub base_seed: u64,
    pub gfk_dim: Option<usize>,
    pub glg: GlgConfig,
}

/// Accuracies of one (task, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub model: ModelKind,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Fractions in `[0, 1]`.
    pub accuracies: Vec<f64>,
    pub avg: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub max: f64,
    pub min: f64,
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
}

impl TaskReport {
    fn new(task: &TaskSpec, model: ModelKind, cfg: &RunConfig, accuracies: Vec<f64>, warnings: Vec<String>) -> Self {
        let (avg, std) = mean_std(&accuracies);
        Self {
            task: task.code.to_string(),
            model,
            runs: accuracies.len(),
            seeds: (0..accuracies.len() as u64).map(|i| cfg.seed + i).collect(),
            max: accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: accuracies.iter().copied().fold(f64::INFINITY, f64::min),
            avg,
            std,
            accuracies,
            config: ConfigEcho {
                base_seed: cfg.seed,
                gfk_dim: cfg.gfk_dim,
                glg: cfg.glg.clone(),
            },
            warnings,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Zscored common-dimension images of both domains.
fn homogeneous(
    kind: ModelKind,
    xs: &RealMatrix,
    xt: &RealMatrix,
    seed: u64,
    glg: &GlgConfig,
    warnings: &mut Vec<String>,
) -> Result<(RealMatrix, RealMatrix)> {
    let (m, n) = (xs.ncols(), xt.ncols());
    let r = m.min(n);
    let (hs, ht) = match kind {
        ModelKind::DG => {
            let ps = principal_components(xs)?;
            let pt = principal_components(xt)?;
            (xs * ps.columns(0, r), xt * pt.columns(0, r))
        }
        ModelKind::RMG => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_MAPS));
            let mut draw = |rows, cols| {
                DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
            };
            let us: RealMatrix = draw(r, m);
            let ut: RealMatrix = draw(r, n);
            (apply_lmm(xs, &us)?, apply_lmm(xt, &ut)?)
        }
        ModelKind::RLG => {
            let maps = LmmPair::random(m, n, derive_seed(seed, STREAM_MAPS));
            (apply_lmm(xs, maps.us())?, apply_lmm(xt, maps.ut())?)
        }
        ModelKind::GLG => {
            let cfg = GlgConfig { seed, ..glg.clone() };
            let (maps, trace) = fit_glg(xs, xt, &cfg)?;
            if trace.reinitialized {
                warnings.push(format!("seed {seed}: first descent step failed, search restarted"));
            }
            if trace.terminal == Terminal::MaxIter {
                warnings.push(format!("seed {seed}: descent hit the iteration limit"));
            }
            (apply_lmm(xs, maps.us())?, apply_lmm(xt, maps.ut())?)
        }
        ModelKind::A1 | ModelKind::CM => {
            return Err(Error::Invalid(format!("{} builds no representation", kind.name())))
        }
    };
    Ok((zscore(&hs), zscore(&ht)))
}

fn align(hs: &RealMatrix, ht: &RealMatrix, d: Option<usize>) -> Result<(RealMatrix, RealMatrix)> {
    let d = d.unwrap_or_else(|| default_dim(hs.ncols()));
    let kern = gfk_kernel(hs, ht, d)?;
    Ok((gfk_embed(hs, &kern)?, gfk_embed(ht, &kern)?))
}

/// Adapts zscored inputs with one of the map-then-GFK baselines.
pub fn adapt_baseline(
    kind: ModelKind,
    xs: &RealMatrix,
    xt: &RealMatrix,
    seed: u64,
    gfk_dim: Option<usize>,
) -> Result<(RealMatrix, RealMatrix)> {
    if !matches!(kind, ModelKind::DG | ModelKind::RMG | ModelKind::RLG) {
        return Err(Error::Invalid(format!("{} is not a mapping baseline", kind.name())));
    }
    let (hs, ht) = homogeneous(kind, xs, xt, seed, &GlgConfig::default(), &mut Vec::new())?;
    align(&hs, &ht, gfk_dim)
}

/// Target predictions of the baselines that ignore the source.
pub fn predict_nontransfer(kind: ModelKind, xt: &RealMatrix, seed: u64) -> Result<Labels> {
    match kind {
        ModelKind::A1 => Ok(vec![1; xt.nrows()]),
        ModelKind::CM => Ok(kmeans2(xt, derive_seed(seed, STREAM_KMEANS)).labels),
        _ => Err(Error::Invalid(format!("{} needs a source domain", kind.name()))),
    }
}

/// Permuted, sampled and zscored domains for one run.
fn prepare_run(
    task: &TaskSpec,
    src: &LabeledDomain,
    tgt: &LabeledDomain,
    seed: u64,
) -> Result<(RealMatrix, Labels, RealMatrix, Labels)> {
    let s = permute(src, derive_seed(seed, STREAM_PERM_S));
    let t = permute(tgt, derive_seed(seed, STREAM_PERM_T));
    let s = benchmark_sample(&s, task.field, derive_seed(seed, STREAM_SAMPLE_S))?;
    let t = benchmark_sample(&t, task.field, derive_seed(seed, STREAM_SAMPLE_T))?;
    Ok((zscore(&s.x), s.labels()?.clone(), zscore(&t.x), t.labels()?.clone()))
}

/// Accuracy of one seeded run.
pub fn run_once(
    task: &TaskSpec,
    model: ModelKind,
    src: &LabeledDomain,
    tgt: &LabeledDomain,
    seed: u64,
    cfg: &RunConfig,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let (xs, ys, xt, yt) = prepare_run(task, src, tgt, seed)?;
    let pred = match model {
        ModelKind::A1 | ModelKind::CM => predict_nontransfer(model, &xt, seed)?,
        _ => {
            let (hs, ht) = homogeneous(model, &xs, &xt, seed, &cfg.glg, warnings)?;
            let (a, b) = align(&hs, &ht, cfg.gfk_dim)?;
            let svm = svm_train(&a, &ys, &SvmParams::default())?;
            svm_predict(&svm, &b)?
        }
    };
    accuracy(&pred, &yt)
}

fn load_pair(task: &TaskSpec, dir: &Path) -> Result<(LabeledDomain, LabeledDomain)> {
    Ok((load_dataset(dir, task.source_key)?, load_dataset(dir, task.target_key)?))
}

/// Runs one cell on already loaded domains.
pub fn run_task_on(
    task: &TaskSpec,
    model: ModelKind,
    src: &LabeledDomain,
    tgt: &LabeledDomain,
    cfg: &RunConfig,
) -> Result<TaskReport> {
    cfg.validate_runs()?;
    let results: Vec<(f64, Vec<String>)> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut w = Vec::new();
            run_once(task, model, src, tgt, cfg.seed + i, cfg, &mut w).map(|a| (a, w))
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut accs = Vec::with_capacity(results.len());
    for (a, w) in results {
        accs.push(a);
        warnings.extend(w);
    }
    if task.field == crate::datasets::Field::Text {
        let n = 1500.min(2 * tgt.count(1).min(tgt.count(-1)));
        warnings.push(format!("target sampled to {n} balanced instances"));
    }
    Ok(TaskReport::new(task, model, cfg, accs, warnings))
}

/// Runs one cell, loading its datasets from `cfg.data_dir`.
pub fn run_task(task: &TaskSpec, model: ModelKind, cfg: &RunConfig) -> Result<TaskReport> {
    let (src, tgt) = load_pair(task, &cfg.data_dir)?;
    run_task_on(task, model, &src, &tgt, cfg)
}

/// A cell that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellError {
    pub task: String,
    pub model: ModelKind,
    pub error: String,
}

/// Reports written by [`run_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunAllOutcome {
    pub reports: Vec<TaskReport>,
    pub failures: Vec<CellError>,
    pub files: Vec<PathBuf>,
}

impl RunAllOutcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// File name of a cell report.
pub fn report_file_name(task: &str, model: ModelKind) -> String {
    format!("{task}_{}.json", model.name())
}

/// Runs every requested (task, model) cell and writes one JSON report per
/// cell plus `summary.txt` (and `errors.json` when cells failed).
pub fn run_all(cfg: &RunConfig) -> Result<RunAllOutcome> {
    cfg.validate()?;
    let tasks = ordered_tasks(&cfg.tasks)?;
    let mut models = cfg.models.clone();
    models.sort();
    models.dedup();
    fs::create_dir_all(&cfg.out)?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut files = Vec::new();
    for task in &tasks {
        let pair = load_pair(task, &cfg.data_dir);
        for &model in &models {
            let result = match &pair {
                Ok((s, t)) => run_task_on(task, model, s, t, cfg),
                Err(e) => Err(Error::MissingData(e.to_string())),
            };
            match result {
                Ok(rep) => {
                    let path = cfg.out.join(report_file_name(task.code, model));
                    fs::write(&path, rep.to_json()?)?;
                    files.push(path);
                    reports.push(rep);
                }
                Err(e) => failures.push(CellError {
                    task: task.code.to_string(),
                    model,
                    error: e.to_string(),
                }),
            }
        }
    }
    let summary = cfg.out.join("summary.txt");
    fs::write(&summary, summary_table(&reports, &failures))?;
    files.push(summary);
    if !failures.is_empty() {
        let path = cfg.out.join("errors.json");
        fs::write(&path, serde_json::to_string_pretty(&failures)? + "\n")?;
        files.push(path);
    }
    Ok(RunAllOutcome {
        reports,
        failures,
        files,
    })
}

/// Requested task codes in registry order; empty means all tasks.
fn ordered_tasks(codes: &[String]) -> Result<Vec<TaskSpec>> {
    for c in codes {
        find_task(c)?;
    }
    Ok(crate::datasets::task_registry()
        .into_iter()
        .filter(|t| codes.is_empty() || codes.iter().any(|c| c.eq_ignore_ascii_case(t.code)))
        .collect())
}

/// Plain-text table: tasks in registry order, models as columns.
pub fn summary_table(reports: &[TaskReport], failures: &[CellError]) -> String {
    let mut models: Vec<ModelKind> = reports
        .iter()
        .map(|r| r.model)
        .chain(failures.iter().map(|f| f.model))
        .collect();
    models.sort();
    models.dedup();
    let tasks: Vec<&str> = crate::datasets::task_registry()
        .into_iter()
        .map(|t| t.code)
        .filter(|c| {
            reports.iter().any(|r| r.task == *c) || failures.iter().any(|f| f.task == *c)
        })
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "Task");
    for m in &models {
        let _ = write!(out, "{:<20}", m.name());
    }
    out.push('\n');
    for t in tasks {
        let _ = write!(out, "{t:<10}");
        for &m in &models {
            let cell = match reports.iter().find(|r| r.task == t && r.model == m) {
                Some(r) => format!("{:.2}% ± {:.2}%", 100.0 * r.avg, 100.0 * r.std),
                None if failures.iter().any(|f| f.task == t && f.model == m) => "failed".into(),
                None => "-".into(),
            };
            let _ = write!(out, "{cell:<20}");
        }
        let trimmed = out.trim_end().len();
        out.truncate(trimmed);
        out.push('\n');
    }
    out
}

/// MMD verdicts for one run: mapped (homogeneous) and adapted domains.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdDiagnostic {
    pub task: String,
    pub model: ModelKind,
    pub seed: u64,
    pub accuracy: f64,
    pub homogeneous: MmdResult,
    pub adapted: MmdResult,
}

impl MmdDiagnostic {
    /// Table with "Yes" meaning the two domains pass as one distribution.
    pub fn table(&self) -> String {
        let yn = |r: &MmdResult| if r.same_distribution { "Yes" } else { "No" };
        format!(
            "{:<12}{:<20}{:<28}{}\n{:<12}{:<20}{:<28}{}\n{:<12}{:<20}{:<28.6}{:.6}\n{:<12}{:<20}{:<28.4}{:.4}\n",
            "Model",
            "Task/Accuracy",
            "Homogeneous representations",
            "Adapted domains",
            self.model.name(),
            format!("{}/{:.2}%", self.task, 100.0 * self.accuracy),
            yn(&self.homogeneous),
            yn(&self.adapted),
            "",
            "MMD²",
            self.homogeneous.statistic,
            self.adapted.statistic,
            "",
            "p-value",
            self.homogeneous.p_value,
            self.adapted.p_value,
        )
    }
}

/// Two-sample tests on the homogeneous representations and the adapted
/// domains of one seeded run, with 1000 permutations at level 0.05 and
/// RBF width `1/r`.
pub fn mmd_diagnostic(task: &TaskSpec, model: ModelKind, seed: u64, cfg: &RunConfig) -> Result<MmdDiagnostic> {
    let (src, tgt) = load_pair(task, &cfg.data_dir)?;
    mmd_diagnostic_on(task, model, &src, &tgt, seed, cfg)
}

pub fn mmd_diagnostic_on(
    task: &TaskSpec,
    model: ModelKind,
    src: &LabeledDomain,
    tgt: &LabeledDomain,
    seed: u64,
    cfg: &RunConfig,
) -> Result<MmdDiagnostic> {
    let (xs, ys, xt, yt) = prepare_run(task, src, tgt, seed)?;
    let (hs, ht) = homogeneous(model, &xs, &xt, seed, &cfg.glg, &mut Vec::new())?;
    let (a, b) = align(&hs, &ht, cfg.gfk_dim)?;
    let svm = svm_train(&a, &ys, &SvmParams::default())?;
    let acc = accuracy(&svm_predict(&svm, &b)?, &yt)?;
    let gamma = 1.0 / hs.ncols() as f64;
    let mseed = derive_seed(seed, STREAM_MMD);
    Ok(MmdDiagnostic {
        task: task.code.to_string(),
        model,
        seed,
        accuracy: acc,
        homogeneous: mmd2_test(&hs, &ht, gamma, 1000, 0.05, mseed)?,
        adapted: mmd2_test(&a, &b, gamma, 1000, 0.05, mseed)?,
    })
}
